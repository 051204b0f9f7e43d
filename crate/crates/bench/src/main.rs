use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mobo_bench::{append_csv, run_campaign, write_json, Format, RunConfig, RunRecord};
use mobo_core::problems::registry;

#[derive(Parser)]
#[command(name = "mobo-bench", about = "Multi-objective Bayesian optimization benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign of replications.
    Run(RunArgs),
    /// List the registered problems.
    Problems,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    problem: String,
    #[arg(long)]
    method: String,
    #[arg(long, default_value_t = 1)]
    q: usize,
    #[arg(long)]
    budget: usize,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Replication k uses seed + k.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 128)]
    mc_samples: usize,
    /// Noise standard deviation as a fraction of each outcome's range, or
    /// `default` for the problem's level.
    #[arg(long, default_value = "default")]
    noise_std: String,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    out: PathBuf,
    /// Initial design size; 2(d + 1) by default.
    #[arg(long)]
    n_init: Option<usize>,
    #[arg(long, default_value_t = 512)]
    raw_candidates: usize,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 0, help = "worker threads; 0 uses every core")]
    threads: usize,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, String> {
        let seeds = (0..self.reps as u64).map(|k| self.seed.wrapping_add(k)).collect();
        let mut c = RunConfig::new(&self.problem, &self.method, self.q, self.budget, seeds);
        c.mc_samples = self.mc_samples;
        c.n_init = self.n_init;
        c.raw_candidates = self.raw_candidates;
        c.restarts = self.restarts;
        c.noise_fraction = match self.noise_std.as_str() {
            "default" => None,
            s => Some(s.parse::<f64>().map_err(|_| format!("invalid --noise-std '{s}'"))?),
        };
        c.format = self.format.parse::<Format>().map_err(|e| e.to_string())?;
        c.output = Some(self.out.clone());
        c.resolve().map_err(|e| e.to_string())?;
        Ok(c)
    }
}

fn run(args: RunArgs) -> ExitCode {
    let config = match args.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    let (spec, _) = config.resolve().expect("validated");
    if let Some(last) = config.truncated_last_batch(&spec) {
        eprintln!("note: q does not divide the remaining budget; the last batch has {last} points");
    }
    let out = args.out.clone();
    if config.format == Format::Csv {
        if let Err(e) = std::fs::write(&out, "") {
            eprintln!("{}: {e}", out.display());
            return ExitCode::from(1);
        }
    }
    let threads = if args.threads == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        args.threads
    };
    let append = |o: &mobo_bench::ReplicationOutcome| {
        if config.format == Format::Csv {
            if let Err(e) = append_csv(&o.records, &out) {
                eprintln!("{e}");
            }
        }
        match &o.error {
            Some(e) => eprintln!("replication {} failed: {e}", o.rep),
            None => {
                if let Some(r) = o.final_record() {
                    eprintln!("replication {} done: hv {:.6} log gap {:.4}", o.rep, r.hv, r.log_hv_diff);
                }
            }
        }
    };
    let outcomes = match run_campaign(&config, threads, &append) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    let errors: Vec<String> = outcomes
        .iter()
        .filter_map(|o| o.error.as_ref().map(|e| format!("replication {}: {e}", o.rep)))
        .collect();
    if config.format == Format::Json {
        let records: Vec<RunRecord> = outcomes.iter().flat_map(|o| o.records.clone()).collect();
        if let Err(e) = write_json(&records, &errors, &out, &config) {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    }
    if errors.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run(args),
        Command::Problems => {
            println!("{:<26} {:>2} {:>2} {:>2}  {:<40} {:>14}", "id", "d", "M", "V", "reference point", "true HV");
            for p in registry() {
                let r: Vec<String> = p.reference_point.iter().map(|v| format!("{v}")).collect();
                println!(
                    "{:<26} {:>2} {:>2} {:>2}  {:<40} {:>14.6}",
                    p.id,
                    p.dim,
                    p.num_objectives,
                    p.num_constraints,
                    format!("[{}]", r.join(", ")),
                    p.true_hypervolume
                );
            }
            ExitCode::SUCCESS
        }
    }
}
