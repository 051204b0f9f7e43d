use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use mobo_core::acquisition::{AcquisitionConfig, ObjectiveSpec};
use mobo_core::hypervolume::hypervolume_of_points;
use mobo_core::optimize::{derive_seed, scrambled_sobol, select_batch_sequential_greedy, OptimizerConfig};
use mobo_core::problems::ProblemSpec;
use mobo_core::surrogate::{FitOptions, GaussianProcessSurrogate, KernelHyperparams, NoiseMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{MethodId, RunConfig};
use crate::BenchError;

const DESIGN_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;
const FIT_STREAM: u64 = 3;
const ACQUISITION_STREAM: u64 = 4;

/// Floor of the hypervolume gap before taking `log10`.
pub const LOG_HV_FLOOR: f64 = 1e-10;

/// One metric row. Iteration 0 is the initial design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub rep: usize,
    pub iter: usize,
    pub n_evals: usize,
    pub method: String,
    pub problem: String,
    pub q: usize,
    pub hv: f64,
    pub log_hv_diff: f64,
    pub fit_s: f64,
    pub acq_s: f64,
    pub eval_s: f64,
}

/// The records of one replication; a failure ends it with a row whose
/// metrics are NaN and the error message set.
#[derive(Clone, Debug)]
pub struct ReplicationOutcome {
    pub rep: usize,
    pub seed: u64,
    pub records: Vec<RunRecord>,
    pub error: Option<String>,
    /// Noiseless points queried, with constraint slacks, in order.
    pub queried: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)>,
}

impl ReplicationOutcome {
    pub fn final_record(&self) -> Option<&RunRecord> {
        self.records.iter().rev().find(|r| r.hv.is_finite())
    }

    /// Noiseless objective vectors of the queried points on the final
    /// feasible front.
    pub fn final_front(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        let feasible: Vec<&(Vec<f64>, Vec<f64>, Vec<f64>)> =
            self.queried.iter().filter(|(_, _, c)| c.iter().all(|v| *v >= 0.0)).collect();
        let rows: Vec<Vec<f64>> = feasible.iter().map(|p| p.1.clone()).collect();
        let mask = mobo_core::pareto::non_dominated_mask(&rows);
        feasible
            .into_iter()
            .zip(mask)
            .filter(|(_, keep)| *keep)
            .map(|(p, _)| (p.1.clone(), p.2.clone()))
            .collect()
    }
}

/// `log10(max(hv_true − HV(front, r), 1e-10))`.
pub fn log_hv_difference(hv_true: f64, front: &[Vec<f64>], r: &[f64]) -> Result<f64, BenchError> {
    let hv = hypervolume_of_points(front, r).map_err(BenchError::Core)?;
    Ok(log_hv_gap(hv_true, hv))
}

pub fn log_hv_gap(hv_true: f64, hv: f64) -> f64 {
    (hv_true - hv).max(LOG_HV_FLOOR).log10()
}

/// Hypervolume of the feasible points among noiseless outcomes.
pub fn in_sample_hypervolume(spec: &ProblemSpec, f: &[Vec<f64>], c: &[Vec<f64>]) -> Result<f64, BenchError> {
    let rows: Vec<Vec<f64>> = f
        .iter()
        .zip(c)
        .filter(|(_, ci)| spec.is_feasible(ci))
        .map(|(fi, _)| fi.clone())
        .collect();
    hypervolume_of_points(&rows, &spec.reference_point).map_err(BenchError::Core)
}

struct Loop<'a> {
    config: &'a RunConfig,
    spec: ProblemSpec,
    method: MethodId,
    rep: usize,
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    f: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    records: Vec<RunRecord>,
    warm: Option<Vec<KernelHyperparams>>,
}

impl Loop<'_> {
    fn record(&mut self, iter: usize, fit_s: f64, acq_s: f64, eval_s: f64) -> Result<(), BenchError> {
        let hv = in_sample_hypervolume(&self.spec, &self.f, &self.c)?;
        self.records.push(RunRecord {
            rep: self.rep,
            iter,
            n_evals: self.x.len(),
            method: self.method.to_string(),
            problem: self.spec.id.clone(),
            q: self.config.q,
            hv,
            log_hv_diff: log_hv_gap(self.spec.true_hypervolume, hv),
            fit_s,
            acq_s,
            eval_s,
        });
        Ok(())
    }

    fn modeled_outputs(&self) -> usize {
        if self.method.constrained {
            self.spec.num_outcomes()
        } else {
            self.spec.num_objectives
        }
    }

    fn fit(&mut self, noise_var: &[f64], seed: u64) -> Result<GaussianProcessSurrogate, BenchError> {
        let k = self.modeled_outputs();
        let targets: Vec<Vec<f64>> = self.y.iter().map(|r| r[..k].to_vec()).collect();
        let options = FitOptions {
            restarts: if self.warm.is_some() { self.config.fit_restarts } else { FitOptions::default().restarts },
            seed,
            warm_start: self.warm.clone(),
            ..FitOptions::default()
        };
        let model = GaussianProcessSurrogate::fit_map_with(&self.x, &targets, NoiseMode::Known(noise_var[..k].to_vec()), &options)
            .map_err(BenchError::Core)?;
        self.warm = Some(model.hyperparams());
        Ok(model)
    }

    fn evaluate(&mut self, x: Vec<f64>, noise_std: &[f64], rng: &mut ChaCha8Rng) -> Result<(), BenchError> {
        let (f, c) = self.spec.evaluate_true(&x).map_err(BenchError::Core)?;
        let (yf, yc) = self.spec.observe_noisy(&x, noise_std, rng).map_err(BenchError::Core)?;
        self.y.push(yf.into_iter().chain(yc).collect());
        self.f.push(f);
        self.c.push(c);
        self.x.push(x);
        Ok(())
    }
}

/// Runs one BO replication: a scrambled Sobol initial design, then batches of
/// `q` chosen by the configured method until the budget is spent. Metrics use
/// the noiseless outcomes at the queried points.
pub fn run_replication(config: &RunConfig, rep: usize, seed: u64) -> Result<ReplicationOutcome, BenchError> {
    let (spec, method) = config.resolve()?;
    let n_init = config.initial_count(&spec);
    let fraction = config.noise_fraction.unwrap_or(spec.noise_fraction);
    let noise_std = spec.noise_std(fraction);
    let noise_var: Vec<f64> = noise_std.iter().map(|s| s * s).collect();
    let design = scrambled_sobol(config.budget, spec.dim, derive_seed(seed, DESIGN_STREAM)).map_err(BenchError::Core)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, NOISE_STREAM));
    let mut lp = Loop {
        config,
        spec,
        method,
        rep,
        x: Vec::new(),
        y: Vec::new(),
        f: Vec::new(),
        c: Vec::new(),
        records: Vec::new(),
        warm: None,
    };
    let mut error = None;
    let t = Instant::now();
    let init = (|| {
        for x in &design[..n_init] {
            lp.evaluate(x.clone(), &noise_std, &mut rng)?;
        }
        lp.record(0, 0.0, 0.0, t.elapsed().as_secs_f64())
    })();
    if let Err(e) = init {
        error = Some(e.to_string());
    }
    let opt_config = OptimizerConfig {
        raw_candidates: config.raw_candidates,
        restarts: config.restarts,
        max_iterations: config.max_iterations,
        ..OptimizerConfig::default()
    };
    let mut iter = 0;
    while error.is_none() && lp.x.len() < config.budget {
        iter += 1;
        let b = config.q.min(config.budget - lp.x.len());
        let step = (|| {
            let mut fit_s = 0.0;
            let t = Instant::now();
            let batch = match method.method.acquisition_mode() {
                None => design[lp.x.len()..lp.x.len() + b].to_vec(),
                Some(mode) => {
                    let model = lp.fit(&noise_var, derive_seed(derive_seed(seed, FIT_STREAM), iter as u64))?;
                    fit_s = t.elapsed().as_secs_f64();
                    let model = Arc::new(model);
                    let spec = ObjectiveSpec::from_raw(&model, &lp.spec.reference_point).map_err(BenchError::Core)?;
                    let acq = AcquisitionConfig {
                        num_samples: config.mc_samples,
                        mode,
                        ..AcquisitionConfig::default()
                    };
                    let acq_seed = derive_seed(derive_seed(seed, ACQUISITION_STREAM), iter as u64);
                    select_batch_sequential_greedy(model, &spec, b, &acq, &opt_config, acq_seed)
                        .map_err(BenchError::Core)?
                        .points
                }
            };
            let acq_s = t.elapsed().as_secs_f64() - fit_s;
            let t = Instant::now();
            for x in batch {
                lp.evaluate(x, &noise_std, &mut rng)?;
            }
            let eval_s = t.elapsed().as_secs_f64();
            lp.record(iter, fit_s, acq_s, eval_s)
        })();
        if let Err(e) = step {
            error = Some(e.to_string());
        }
    }
    if let Some(msg) = &error {
        lp.records.push(RunRecord {
            rep,
            iter,
            n_evals: lp.x.len(),
            method: method.to_string(),
            problem: lp.spec.id.clone(),
            q: config.q,
            hv: f64::NAN,
            log_hv_diff: f64::NAN,
            fit_s: f64::NAN,
            acq_s: f64::NAN,
            eval_s: f64::NAN,
        });
        log::warn!("replication {rep} (seed {seed}) failed: {msg}");
    }
    let queried = lp
        .x
        .iter()
        .zip(&lp.f)
        .zip(&lp.c)
        .map(|((x, f), c)| (x.clone(), f.clone(), c.clone()))
        .collect();
    Ok(ReplicationOutcome {
        rep,
        seed,
        records: lp.records,
        error,
        queried,
    })
}

/// Runs every replication of a campaign on `threads` workers. Each
/// replication owns its random streams, so results do not depend on the
/// thread count. `on_done` is called once per finished replication, one call
/// at a time. Outcomes are returned in replication order.
pub fn run_campaign(
    config: &RunConfig,
    threads: usize,
    on_done: &(dyn Fn(&ReplicationOutcome) + Sync),
) -> Result<Vec<ReplicationOutcome>, BenchError> {
    config.resolve()?;
    let n = config.seeds.len();
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<ReplicationOutcome>>> = Mutex::new(vec![None; n]);
    let callback = Mutex::new(());
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, n) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= n {
                    break;
                }
                let outcome = run_replication(config, k, config.seeds[k]).expect("config resolved above");
                {
                    let _guard = callback.lock().unwrap();
                    on_done(&outcome);
                }
                slots.lock().unwrap()[k] = Some(outcome);
            });
        }
    });
    Ok(slots.into_inner().unwrap().into_iter().map(|o| o.expect("every slot filled")).collect())
}
