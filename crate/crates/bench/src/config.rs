use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use mobo_core::acquisition::AcquisitionMode;
use mobo_core::problems::{problem, ProblemSpec};
use serde::{Deserialize, Serialize};

use crate::BenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Sobol,
    Qehvi,
    QehviPm,
    Qnehvi,
    Qnehvi1,
    TsTch,
}

/// A method id such as `qnehvi` or `qnehvi-constrained`. The constrained
/// variants model the constraint slacks and weight the acquisition by
/// feasibility; plain variants ignore the constraints when selecting points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MethodId {
    pub method: Method,
    pub constrained: bool,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Sobol => "sobol",
            Method::Qehvi => "qehvi",
            Method::QehviPm => "qehvi-pm",
            Method::Qnehvi => "qnehvi",
            Method::Qnehvi1 => "qnehvi-1",
            Method::TsTch => "ts-tch",
        }
    }

    /// Acquisition mode, or `None` for the quasi-random baseline.
    pub fn acquisition_mode(self) -> Option<AcquisitionMode> {
        match self {
            Method::Sobol => None,
            Method::Qehvi => Some(AcquisitionMode::QEhvi),
            Method::QehviPm => Some(AcquisitionMode::QEhviPm),
            Method::Qnehvi => Some(AcquisitionMode::QNehvi),
            Method::Qnehvi1 => Some(AcquisitionMode::QNehvi1),
            Method::TsTch => Some(AcquisitionMode::TsTch),
        }
    }
}

impl FromStr for MethodId {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (base, constrained) = match s.strip_suffix("-constrained") {
            Some(b) => (b, true),
            None => (s, false),
        };
        let method = [
            Method::Sobol,
            Method::Qehvi,
            Method::QehviPm,
            Method::Qnehvi,
            Method::Qnehvi1,
            Method::TsTch,
        ]
        .into_iter()
        .find(|m| m.name() == base)
        .ok_or_else(|| BenchError::Config(format!("unknown method '{s}'")))?;
        Ok(Self { method, constrained })
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.method.name())?;
        if self.constrained {
            f.write_str("-constrained")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(BenchError::Config(format!("unknown format '{s}'"))),
        }
    }
}

/// One campaign: a method on a problem over several replications.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: String,
    pub method: String,
    pub q: usize,
    /// Total number of evaluations including the initial design.
    pub budget: usize,
    /// Initial design size; `2(d + 1)` when absent.
    pub n_init: Option<usize>,
    pub mc_samples: usize,
    pub seeds: Vec<u64>,
    /// Noise standard deviation as a fraction of each outcome's range;
    /// the problem default when absent.
    pub noise_fraction: Option<f64>,
    pub raw_candidates: usize,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Hyperparameter fitting restarts after the first iteration, which is
    /// warm-started from the previous fit.
    pub fit_restarts: usize,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn new(problem: &str, method: &str, q: usize, budget: usize, seeds: Vec<u64>) -> Self {
        Self {
            problem: problem.to_string(),
            method: method.to_string(),
            q,
            budget,
            n_init: None,
            mc_samples: 128,
            seeds,
            noise_fraction: None,
            raw_candidates: 512,
            restarts: 10,
            max_iterations: 200,
            fit_restarts: 2,
            output: None,
            format: Format::Csv,
        }
    }

    /// Checks the configuration and resolves the problem and method.
    pub fn resolve(&self) -> Result<(ProblemSpec, MethodId), BenchError> {
        let spec = problem(&self.problem).map_err(|e| BenchError::Config(e.to_string()))?;
        let method: MethodId = self.method.parse()?;
        if method.constrained && spec.num_constraints == 0 {
            return Err(BenchError::Config(format!("{} has no constraints", spec.id)));
        }
        if self.q == 0 {
            return Err(BenchError::Config("q must be at least 1".into()));
        }
        if self.mc_samples == 0 {
            return Err(BenchError::Config("need at least one MC sample".into()));
        }
        if self.raw_candidates == 0 || self.restarts == 0 || self.restarts > self.raw_candidates || self.fit_restarts == 0 {
            return Err(BenchError::Config("invalid optimizer settings".into()));
        }
        if let Some(f) = self.noise_fraction {
            if !(f >= 0.0) || !f.is_finite() {
                return Err(BenchError::Config("noise fraction must be finite and nonnegative".into()));
            }
        }
        let n_init = self.initial_count(&spec);
        if n_init < 2 {
            return Err(BenchError::Config("need at least two initial points".into()));
        }
        if self.budget < n_init {
            return Err(BenchError::Config(format!("budget {} below the initial design of {n_init}", self.budget)));
        }
        if self.seeds.is_empty() {
            return Err(BenchError::Config("no replication seeds".into()));
        }
        Ok((spec, method))
    }

    pub fn initial_count(&self, spec: &ProblemSpec) -> usize {
        self.n_init.unwrap_or(2 * (spec.dim + 1))
    }

    /// Size of the final batch when `q` does not divide the remaining budget.
    pub fn truncated_last_batch(&self, spec: &ProblemSpec) -> Option<usize> {
        let rest = self.budget.saturating_sub(self.initial_count(spec));
        (rest % self.q != 0).then_some(rest % self.q)
    }
}
