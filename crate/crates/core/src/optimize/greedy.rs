//! Sequential greedy batch construction.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};

use super::multistart::{multistart_maximize, Objective, OptimizerConfig};
use super::sobol::derive_seed;
use crate::acquisition::{
    build_cached_state, feasibility_thresholds, AcquisitionConfig, AcquisitionMode, CachedAcquisitionState,
    ObjectiveSpec, QNehvi1State, TsTchState, TCH_AUGMENTATION,
};
use crate::hypervolume::hvi_flat;
use crate::partitioning::BoxDecomposition;
use crate::surrogate::{draw_rff_path, GaussianProcessSurrogate, SampleArray, DEFAULT_BASIS_COUNT};
use crate::{Error, Result};

/// Seed stream of the multistart run for greedy step `i` is `OPTIMIZER_STREAM + i`.
pub const OPTIMIZER_STREAM: u64 = 100;
const PATH_STREAM: u64 = 200;
const WEIGHT_STREAM: u64 = 300;

impl Objective for CachedAcquisitionState {
    fn dim(&self) -> usize {
        self.model().dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        CachedAcquisitionState::value(self, x)
    }
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        CachedAcquisitionState::value_and_gradient(self, x, grad)
    }
}

struct PathObjective<'a, F, G> {
    dim: usize,
    value: &'a F,
    grad: &'a G,
}

impl<F: Fn(&[f64]) -> f64, G: Fn(&[f64], &mut [f64]) -> f64> Objective for PathObjective<'_, F, G> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        (self.grad)(x, grad)
    }
}

/// A selected batch with the maximized value and banked constant at each step.
#[derive(Clone, Debug)]
pub struct BatchSelection {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub constant_terms: Vec<f64>,
    /// True when any step fell back to its best raw candidate.
    pub fell_back_to_raw: bool,
}

/// Picks `q` points one at a time, each maximizing the acquisition given the
/// points already chosen.
///
/// Cached-sample modes build one state, maximize it, and condition it on the
/// winner, which also redraws the candidate base samples. qNEHVI-1 and TS-TCH
/// draw a fresh sample path (and, for TS-TCH, fresh simplex weights) per step.
pub fn select_batch_sequential_greedy(
    model: Arc<GaussianProcessSurrogate>,
    spec: &ObjectiveSpec,
    q: usize,
    acq_config: &AcquisitionConfig,
    opt_config: &OptimizerConfig,
    seed: u64,
) -> Result<BatchSelection> {
    if q == 0 {
        return Err(Error::InvalidInput("q must be at least 1".into()));
    }
    acq_config.validate()?;
    let mut out = BatchSelection {
        points: Vec::with_capacity(q),
        values: Vec::with_capacity(q),
        constant_terms: Vec::with_capacity(q),
        fell_back_to_raw: false,
    };
    match acq_config.mode {
        AcquisitionMode::QNehvi | AcquisitionMode::QEhvi | AcquisitionMode::QEhviPm => {
            let mut state = build_cached_state(model, spec, acq_config, seed)?;
            for i in 0..q {
                let res = multistart_maximize(&state, opt_config, derive_seed(seed, OPTIMIZER_STREAM + i as u64))?;
                out.fell_back_to_raw |= res.fell_back_to_raw;
                out.values.push(res.value);
                state = state.condition_on(&res.x)?;
                out.constant_terms.push(state.constant_term());
                out.points.push(res.x);
            }
        }
        AcquisitionMode::QNehvi1 | AcquisitionMode::TsTch => {
            let m = spec.num_objectives();
            let thresholds = feasibility_thresholds(&model, m);
            let dim = model.dim();
            for i in 0..q {
                let path = draw_rff_path(&model, DEFAULT_BASIS_COUNT, derive_seed(seed, PATH_STREAM + i as u64))?;
                let opt_seed = derive_seed(seed, OPTIMIZER_STREAM + i as u64);
                let (res, constant) = if acq_config.mode == AcquisitionMode::QNehvi1 {
                    let st = QNehvi1State::new(
                        path,
                        model.train_inputs(),
                        &out.points,
                        spec,
                        thresholds.clone(),
                        acq_config.constraint_tau,
                    )?;
                    let res = maximize_path(dim, |x| st.value(x), |x, g| st.value_and_gradient(x, g), opt_config, opt_seed)?;
                    (res, st.constant_term())
                } else {
                    let weights = simplex_weights(m, derive_seed(seed, WEIGHT_STREAM + i as u64));
                    let st = TsTchState::new(
                        path,
                        model.train_inputs(),
                        weights,
                        thresholds.clone(),
                        acq_config.constraint_tau,
                        TCH_AUGMENTATION,
                    )?;
                    let res = maximize_path(dim, |x| st.value(x), |x, g| st.value_and_gradient(x, g), opt_config, opt_seed)?;
                    (res, 0.0)
                };
                out.fell_back_to_raw |= res.fell_back_to_raw;
                out.values.push(res.value);
                out.constant_terms.push(constant);
                out.points.push(res.x);
            }
        }
    }
    Ok(out)
}

fn maximize_path<F, G>(
    dim: usize,
    value: F,
    grad: G,
    config: &OptimizerConfig,
    seed: u64,
) -> Result<super::multistart::MultistartResult>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]) -> f64,
{
    let obj = PathObjective {
        dim,
        value: &value,
        grad: &grad,
    };
    multistart_maximize(&obj, config, seed)
}

/// Uniform draw from the probability simplex.
pub fn simplex_weights(m: usize, seed: u64) -> Vec<f64> {
    if m == 1 {
        return vec![1.0];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Dirichlet::new_with_size(1.0, m).expect("m ≥ 2").sample(&mut rng)
}

/// Greedy batch over a discrete candidate set with fixed joint samples:
/// `samples` is `N × C × M`, `decomps[t]` the box decomposition of sample
/// `t`'s front. Returns the chosen candidate indices and the mean joint HVI.
pub fn greedy_discrete_batch(samples: &SampleArray, decomps: &[BoxDecomposition], q: usize) -> Result<(Vec<usize>, f64)> {
    let n = samples.num_samples;
    let c = samples.num_points;
    let m = samples.num_outputs;
    if decomps.len() != n {
        return Err(Error::DimensionMismatch("one decomposition per sample".into()));
    }
    if q == 0 || q > c {
        return Err(Error::InvalidInput("need 1 ≤ q ≤ candidate count".into()));
    }
    let mut decomps = decomps.to_vec();
    let mut chosen = Vec::with_capacity(q);
    let mut total = 0.0;
    for _ in 0..q {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for j in (0..c).filter(|j| !chosen.contains(j)) {
            let gain: f64 = (0..n)
                .map(|t| hvi_flat(samples.point(t, j), decomps[t].lowers(), decomps[t].uppers(), m))
                .sum::<f64>()
                / n as f64;
            if gain > best.1 {
                best = (j, gain);
            }
        }
        let j = best.0;
        chosen.push(j);
        total += best.1;
        for (t, d) in decomps.iter_mut().enumerate() {
            let y = samples.point(t, j);
            if hvi_flat(y, d.lowers(), d.uppers(), m) > 0.0 {
                *d = d.with_point(y);
            }
        }
    }
    Ok((chosen, total))
}
