//! Hypervolume-improvement acquisition functions.
//!
//! All values are computed in model space (standardized outputs). The first
//! `M` model outputs are objectives; any further outputs are constraints with
//! raw feasibility `c ≥ 0`.

mod cached;
mod iep;
mod path;

use std::sync::Arc;

pub use cached::CachedAcquisitionState;
pub use iep::qnehvi_iep_value;
pub use path::{
    ts_tch_scalarization, ExactConditionalPath, QNehvi1State, SamplePath, TsTchState, TCH_AUGMENTATION,
};

use crate::pareto::pareto_front_unchecked;
use crate::surrogate::{BaseSampler, GaussianProcessSurrogate, SampleArray};
use crate::{Error, Result};

/// Default number of quasi-MC samples.
pub const DEFAULT_NUM_SAMPLES: usize = 128;
/// Default sigmoid temperature on the standardized constraint scale.
pub const DEFAULT_CONSTRAINT_TAU: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AcquisitionMode {
    QNehvi,
    QEhvi,
    QEhviPm,
    QNehvi1,
    TsTch,
}

#[derive(Clone, Debug)]
pub struct AcquisitionConfig {
    pub num_samples: usize,
    pub prune: bool,
    pub constraint_tau: f64,
    pub mode: AcquisitionMode,
    pub sampler: BaseSampler,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            num_samples: DEFAULT_NUM_SAMPLES,
            prune: true,
            constraint_tau: DEFAULT_CONSTRAINT_TAU,
            mode: AcquisitionMode::QNehvi,
            sampler: BaseSampler::ScrambledSobol,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples == 0 {
            return Err(Error::InvalidInput("need at least one MC sample".into()));
        }
        if !(self.constraint_tau > 0.0) {
            return Err(Error::InvalidInput("constraint_tau must be positive".into()));
        }
        Ok(())
    }
}

/// Objective count and reference point, both in model space.
#[derive(Clone, Debug)]
pub struct ObjectiveSpec {
    pub reference_point: Vec<f64>,
}

impl ObjectiveSpec {
    /// Maps a raw-space reference point through the model's standardization.
    pub fn from_raw(model: &GaussianProcessSurrogate, raw_reference: &[f64]) -> Result<Self> {
        let s = model.standardization();
        if raw_reference.len() > s.len() {
            return Err(Error::DimensionMismatch("reference point longer than outputs".into()));
        }
        Ok(Self {
            reference_point: raw_reference.iter().zip(&s).map(|(r, st)| st.standardize(*r)).collect(),
        })
    }

    pub fn num_objectives(&self) -> usize {
        self.reference_point.len()
    }
}

/// Model-space thresholds `z₀` such that a constraint output is feasible iff
/// `z ≥ z₀`.
pub fn feasibility_thresholds(model: &GaussianProcessSurrogate, num_objectives: usize) -> Vec<f64> {
    model
        .standardization()
        .iter()
        .skip(num_objectives)
        .map(|s| s.standardize(0.0))
        .collect()
}

/// Positions (into the sampled points) that lie on the feasible Pareto front
/// of at least one sample; points dominated or infeasible in every sample are
/// dropped.
pub fn prune_observed(samples: &SampleArray, num_objectives: usize, thresholds: &[f64]) -> Vec<usize> {
    let n = samples.num_points;
    let mut keep = vec![false; n];
    for t in 0..samples.num_samples {
        let mut rows = Vec::with_capacity(n);
        let mut ids = Vec::with_capacity(n);
        for i in 0..n {
            let row = samples.point(t, i);
            if row[num_objectives..].iter().zip(thresholds).all(|(c, z0)| c >= z0) {
                rows.push(row[..num_objectives].to_vec());
                ids.push(i);
            }
        }
        for &k in pareto_front_unchecked(&rows, num_objectives).indices() {
            keep[ids[k]] = true;
        }
    }
    (0..n).filter(|&i| keep[i]).collect()
}

/// Builds the fixed-sample state for `QNehvi`, `QEhvi` or `QEhviPm`.
///
/// qNEHVI samples every observed point, optionally pruning points that are
/// dominated in all samples. qEHVI uses the front of the observed
/// (standardized) targets; qEHVI-PM uses the posterior mean at the observed
/// inputs. Constrained fronts keep only feasible points.
pub fn build_cached_state(
    model: Arc<GaussianProcessSurrogate>,
    spec: &ObjectiveSpec,
    config: &AcquisitionConfig,
    seed: u64,
) -> Result<CachedAcquisitionState> {
    config.validate()?;
    let m = spec.num_objectives();
    let thresholds = feasibility_thresholds(&model, m);
    match config.mode {
        AcquisitionMode::QNehvi => {
            let all: Vec<usize> = (0..model.num_train()).collect();
            if !config.prune || all.len() <= 1 {
                return CachedAcquisitionState::with_observed(model, spec, config, seed, all);
            }
            let full = CachedAcquisitionState::with_observed(model.clone(), spec, config, seed, all)?;
            let kept = prune_observed(&full.sampled_values(), m, &thresholds);
            if kept.len() == model.num_train() {
                return Ok(full);
            }
            CachedAcquisitionState::with_observed(model, spec, config, seed, kept)
        }
        AcquisitionMode::QEhvi | AcquisitionMode::QEhviPm => {
            let rows: Vec<Vec<f64>> = if config.mode == AcquisitionMode::QEhvi {
                model.train_targets()
            } else {
                model
                    .train_inputs()
                    .iter()
                    .map(|x| model.mean_var(x).into_iter().map(|(mu, _)| mu).collect())
                    .collect()
            };
            let front: Vec<Vec<f64>> = rows
                .iter()
                .filter(|r| r[m..].iter().zip(&thresholds).all(|(c, z0)| c >= z0))
                .map(|r| r[..m].to_vec())
                .collect();
            CachedAcquisitionState::with_fixed_front(model, spec, config, seed, &front)
        }
        AcquisitionMode::QNehvi1 | AcquisitionMode::TsTch => Err(Error::InvalidInput(
            "path-based acquisitions do not use a cached sample state".into(),
        )),
    }
}

/// Acquisition value at `x`, including the banked improvement of the
/// already-selected batch.
pub fn qnehvi_value(x: &[f64], state: &CachedAcquisitionState) -> f64 {
    state.value(x)
}

/// Value and gradient at `x`.
pub fn qnehvi_gradient(x: &[f64], state: &CachedAcquisitionState) -> (f64, Vec<f64>) {
    let mut g = vec![0.0; x.len()];
    let v = state.value_and_gradient(x, &mut g);
    (v, g)
}

/// The same evaluation on a fixed-front state built in `QEhvi` or `QEhviPm`
/// mode.
pub fn qehvi_value(x: &[f64], state: &CachedAcquisitionState) -> f64 {
    state.value(x)
}

/// Feasibility-weighted value; the state's model carries the constraint
/// outputs and its config the temperature.
pub fn constrained_qnehvi_value(x: &[f64], state: &CachedAcquisitionState) -> f64 {
    state.value(x)
}

pub fn condition_state_on_selected(state: &CachedAcquisitionState, x: &[f64]) -> Result<CachedAcquisitionState> {
    state.condition_on(x)
}

/// Standard normal samples `N × q × outputs` for a batch: point `j` uses the
/// candidate samples of greedy step `j`, matching sequential conditioning.
pub fn batch_base_samples(
    sampler: BaseSampler,
    num_samples: usize, q: usize, num_outputs: usize, seed: u64, num_observed: usize) -> SampleArray {
    let mut out = SampleArray::zeros(num_samples, q, num_outputs);
    for j in 0..q {
        let step = cached::candidate_base(sampler, num_samples, num_outputs, seed, j, num_observed);
        for t in 0..num_samples {
            for o in 0..num_outputs {
                out.set(t, j, o, step.get(t, 0, o));
            }
        }
    }
    out
}
