use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::lbfgsb::{maximize, LbfgsConfig};
use super::sobol::{derive_seed, scrambled_sobol};
use crate::{Error, Result};

/// A deterministic function on the unit cube with an exact gradient.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// Returns the value and writes the gradient into `grad`.
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

/// Adapts a pair of closures to [`Objective`].
pub struct FnObjective<V, G> {
    pub dim: usize,
    pub value: V,
    pub value_and_gradient: G,
}

impl<V, G> Objective for FnObjective<V, G>
where
    V: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]) -> f64,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        (self.value_and_gradient)(x, grad)
    }
}

#[derive(Clone, Debug)]
pub struct OptimizerConfig {
    pub raw_candidates: usize,
    pub restarts: usize,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Boltzmann temperature on standardized raw values.
    pub temperature: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            raw_candidates: 512,
            restarts: 10,
            max_iterations: 200,
            gradient_tolerance: 1e-7,
            temperature: 1.0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.raw_candidates == 0 || self.restarts == 0 || self.restarts > self.raw_candidates {
            return Err(Error::InvalidInput(format!(
                "need 1 ≤ restarts ({}) ≤ raw candidates ({})",
                self.restarts, self.raw_candidates
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MultistartResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// Set when every restart failed and the best raw candidate was returned.
    pub fell_back_to_raw: bool,
}

/// Multi-start bounded quasi-Newton maximization over `[0, 1]^d`.
///
/// Raw Sobol candidates are scored, starts are drawn by Boltzmann sampling on
/// standardized scores (the best raw candidate is always a start), and the
/// best terminal point wins, ties going to the lowest restart index.
pub fn multistart_maximize(
    objective: &dyn Objective,
    config: &OptimizerConfig,
    seed: u64,
) -> Result<MultistartResult> {
    config.validate()?;
    let d = objective.dim();
    let raw = scrambled_sobol(config.raw_candidates, d, derive_seed(seed, 1))?;
    let values: Vec<f64> = raw.iter().map(|x| objective.value(x)).collect();
    let starts = select_starts(&values, config, seed);
    let lower = vec![0.0; d];
    let upper = vec![1.0; d];
    let lbfgs = LbfgsConfig {
        max_iterations: config.max_iterations,
        gradient_tolerance: config.gradient_tolerance,
        ..Default::default()
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for &s in &starts {
        let res = maximize(
            |x, g| objective.value_and_gradient(x, g),
            &raw[s],
            &lower,
            &upper,
            &lbfgs,
        );
        if !res.value.is_finite() {
            continue;
        }
        // Start value is a floor: the line search only accepts ascent.
        let value = res.value.max(values[s]);
        let x = if res.value >= values[s] { res.x } else { raw[s].clone() };
        if best.as_ref().map_or(true, |(_, b)| value > *b) {
            best = Some((x, value));
        }
    }
    match best {
        Some((x, value)) => Ok(MultistartResult {
            x,
            value,
            fell_back_to_raw: false,
        }),
        None => {
            log::warn!("all restarts failed; returning the best raw candidate");
            let i = argmax(&values);
            Ok(MultistartResult {
                x: raw[i].clone(),
                value: values[i],
                fell_back_to_raw: true,
            })
        }
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if v > &values[best] || (values[best].is_nan() && !v.is_nan()) {
            best = i;
        }
    }
    best
}

fn select_starts(values: &[f64], config: &OptimizerConfig, seed: u64) -> Vec<usize> {
    let best = argmax(values);
    let mut starts = vec![best];
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let n = finite.len().max(1) as f64;
    let mean = finite.iter().sum::<f64>() / n;
    let std = (finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut weights: Vec<f64> = values
        .iter()
        .map(|v| {
            if !v.is_finite() {
                0.0
            } else if std > 0.0 {
                ((v - mean) / std / config.temperature).exp()
            } else {
                1.0
            }
        })
        .collect();
    weights[best] = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
    while starts.len() < config.restarts {
        let Ok(dist) = WeightedIndex::new(&weights) else {
            break;
        };
        let i = dist.sample(&mut rng);
        weights[i] = 0.0;
        starts.push(i);
    }
    starts
}
