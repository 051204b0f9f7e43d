//! Acquisitions over a single sampled function: qNEHVI-1 and TS-TCH.

use super::cached::CachedAcquisitionState;
use super::ObjectiveSpec;
use crate::hypervolume::{hvi_flat, hvi_flat_with_grad, sigmoid};
use crate::pareto::pareto_front_unchecked;
use crate::partitioning::{decompose_nondominated, BoxDecomposition};
use crate::surrogate::RffSamplePath;
use crate::{Error, Result};

/// Augmentation coefficient of the Chebyshev scalarization.
pub const TCH_AUGMENTATION: f64 = 0.05;

/// A deterministic function of `x` standing in for a posterior draw of every
/// output.
pub trait SamplePath {
    fn num_outputs(&self) -> usize;
    fn evaluate(&self, x: &[f64]) -> Vec<f64>;
    /// Values and the input gradient of each output.
    fn evaluate_with_jacobian(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>);
}

impl SamplePath for RffSamplePath {
    fn num_outputs(&self) -> usize {
        self.components.len()
    }

    fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        RffSamplePath::evaluate(self, x)
    }

    fn evaluate_with_jacobian(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut values = Vec::with_capacity(self.components.len());
        let mut jac = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let mut g = vec![0.0; x.len()];
            values.push(c.value_and_add_grad(x, 1.0, &mut g));
            jac.push(g);
        }
        (values, jac)
    }
}

/// The exact conditional sample of a one-sample cached state, viewed as a
/// function of the candidate.
#[derive(Clone, Debug)]
pub struct ExactConditionalPath {
    state: CachedAcquisitionState,
}

impl ExactConditionalPath {
    pub fn new(state: CachedAcquisitionState) -> Result<Self> {
        if state.num_samples() != 1 {
            return Err(Error::InvalidInput("exact path needs a single-sample state".into()));
        }
        Ok(Self { state })
    }
}

impl SamplePath for ExactConditionalPath {
    fn num_outputs(&self) -> usize {
        self.state.model().num_outputs()
    }

    fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        self.state.candidate_samples(x).1.swap_remove(0)
    }

    fn evaluate_with_jacobian(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let (parts, mut samples) = self.state.candidate_samples(x);
        let jac = parts
            .iter()
            .enumerate()
            .map(|(o, p)| {
                let mut g = vec![0.0; x.len()];
                self.state.backprop_output(o, x, p, &[1.0], &mut g);
                g
            })
            .collect();
        (samples.swap_remove(0), jac)
    }
}

fn feasible(c: &[f64], thresholds: &[f64]) -> bool {
    c.iter().zip(thresholds).all(|(v, z0)| v >= z0)
}

/// qNEHVI with a single sampled function: the front over the path at the
/// observed points, with previously selected batch points folded in.
pub struct QNehvi1State<P: SamplePath> {
    path: P,
    num_objectives: usize,
    thresholds: Vec<f64>,
    tau: f64,
    decomp: BoxDecomposition,
    constant: f64,
}

impl<P: SamplePath> QNehvi1State<P> {
    pub fn new(
        path: P,
        observed_x: &[Vec<f64>],
        batch_x: &[Vec<f64>],
        spec: &ObjectiveSpec,
        thresholds: Vec<f64>,
        tau: f64,
    ) -> Result<Self> {
        let m = spec.num_objectives();
        if path.num_outputs() != m + thresholds.len() {
            return Err(Error::DimensionMismatch("path outputs vs objectives and constraints".into()));
        }
        if !(tau > 0.0) {
            return Err(Error::InvalidInput("tau must be positive".into()));
        }
        let rows: Vec<Vec<f64>> = observed_x
            .iter()
            .map(|x| path.evaluate(x))
            .filter(|y| feasible(&y[m..], &thresholds))
            .map(|y| y[..m].to_vec())
            .collect();
        let mut decomp = decompose_nondominated(&pareto_front_unchecked(&rows, m), &spec.reference_point)?;
        let mut constant = 0.0;
        for b in batch_x {
            let y = path.evaluate(b);
            if feasible(&y[m..], &thresholds) {
                let gain = hvi_flat(&y[..m], decomp.lowers(), decomp.uppers(), m);
                if gain > 0.0 {
                    constant += gain;
                    decomp = decomp.with_point(&y[..m]);
                }
            }
        }
        Ok(Self {
            path,
            num_objectives: m,
            thresholds,
            tau,
            decomp,
            constant,
        })
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn decomposition(&self) -> &BoxDecomposition {
        &self.decomp
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let y = self.path.evaluate(x);
        let m = self.num_objectives;
        let w = weight(&y[m..], &self.thresholds, self.tau);
        self.constant + w * hvi_flat(&y[..m], self.decomp.lowers(), self.decomp.uppers(), m)
    }

    pub fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (y, jac) = self.path.evaluate_with_jacobian(x);
        let m = self.num_objectives;
        let mut hg = vec![0.0; m];
        let h = hvi_flat_with_grad(&y[..m], self.decomp.lowers(), self.decomp.uppers(), m, &mut hg);
        let sig: Vec<f64> = y[m..]
            .iter()
            .zip(&self.thresholds)
            .map(|(v, z0)| sigmoid((v - z0) / self.tau))
            .collect();
        let w: f64 = sig.iter().product();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut adj = vec![0.0; y.len()];
        for j in 0..m {
            adj[j] = w * hg[j];
        }
        for (k, s) in sig.iter().enumerate() {
            adj[m + k] = h * w * (1.0 - s) / self.tau;
        }
        accumulate(&adj, &jac, grad);
        self.constant + w * h
    }
}

fn weight(c: &[f64], thresholds: &[f64], tau: f64) -> f64 {
    c.iter()
        .zip(thresholds)
        .map(|(v, z0)| sigmoid((v - z0) / tau))
        .product()
}

fn accumulate(adj: &[f64], jac: &[Vec<f64>], grad: &mut [f64]) {
    for (a, j) in adj.iter().zip(jac) {
        if *a != 0.0 {
            for (g, d) in grad.iter_mut().zip(j) {
                *g += a * d;
            }
        }
    }
}

/// `−(max_m w_m (z_m − f_m) + ρ Σ_m w_m (z_m − f_m))`.
pub fn ts_tch_scalarization(f: &[f64], weights: &[f64], ideal: &[f64], augmentation: f64) -> f64 {
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for ((fm, w), z) in f.iter().zip(weights).zip(ideal) {
        let d = w * (z - fm);
        max = max.max(d);
        sum += d;
    }
    -(max + augmentation * sum)
}

/// Thompson sampling on a random augmented Chebyshev scalarization of one
/// sampled function.
pub struct TsTchState<P: SamplePath> {
    path: P,
    weights: Vec<f64>,
    ideal: Vec<f64>,
    augmentation: f64,
    thresholds: Vec<f64>,
    tau: f64,
    floor: f64,
}

impl<P: SamplePath> TsTchState<P> {
    /// The ideal point is the component-wise best path value over the
    /// observed points (feasible ones when any are). With constraints the
    /// value is `(s − floor) · Π σ + floor`, where `floor` lies below the
    /// scalarization of every observed point.
    pub fn new(
        path: P,
        observed_x: &[Vec<f64>],
        weights: Vec<f64>,
        thresholds: Vec<f64>,
        tau: f64,
        augmentation: f64,
    ) -> Result<Self> {
        let m = weights.len();
        if m == 0 || path.num_outputs() != m + thresholds.len() {
            return Err(Error::DimensionMismatch("path outputs vs weights and constraints".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput("weights must lie on the simplex".into()));
        }
        if observed_x.is_empty() {
            return Err(Error::InvalidInput("need observed points for the ideal estimate".into()));
        }
        let values: Vec<Vec<f64>> = observed_x.iter().map(|x| path.evaluate(x)).collect();
        let feasible_rows: Vec<&Vec<f64>> = values.iter().filter(|y| feasible(&y[m..], &thresholds)).collect();
        let pool: Vec<&Vec<f64>> = if feasible_rows.is_empty() {
            values.iter().collect()
        } else {
            feasible_rows
        };
        let ideal: Vec<f64> = (0..m)
            .map(|j| pool.iter().map(|y| y[j]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let floor = values
            .iter()
            .map(|y| ts_tch_scalarization(&y[..m], &weights, &ideal, augmentation))
            .fold(f64::INFINITY, f64::min)
            - 1.0;
        Ok(Self {
            path,
            weights,
            ideal,
            augmentation,
            thresholds,
            tau,
            floor,
        })
    }

    pub fn ideal(&self) -> &[f64] {
        &self.ideal
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let y = self.path.evaluate(x);
        let m = self.weights.len();
        let s = ts_tch_scalarization(&y[..m], &self.weights, &self.ideal, self.augmentation);
        if self.thresholds.is_empty() {
            return s;
        }
        (s - self.floor) * weight(&y[m..], &self.thresholds, self.tau) + self.floor
    }

    pub fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (y, jac) = self.path.evaluate_with_jacobian(x);
        let m = self.weights.len();
        let mut arg = 0;
        let mut max = f64::NEG_INFINITY;
        for j in 0..m {
            let d = self.weights[j] * (self.ideal[j] - y[j]);
            if d > max {
                max = d;
                arg = j;
            }
        }
        let s = ts_tch_scalarization(&y[..m], &self.weights, &self.ideal, self.augmentation);
        let mut adj = vec![0.0; y.len()];
        for j in 0..m {
            adj[j] = self.augmentation * self.weights[j];
        }
        adj[arg] += self.weights[arg];
        let value = if self.thresholds.is_empty() {
            s
        } else {
            let sig: Vec<f64> = y[m..]
                .iter()
                .zip(&self.thresholds)
                .map(|(v, z0)| sigmoid((v - z0) / self.tau))
                .collect();
            let w: f64 = sig.iter().product();
            for a in adj.iter_mut().take(m) {
                *a *= w;
            }
            for (k, sk) in sig.iter().enumerate() {
                adj[m + k] = (s - self.floor) * w * (1.0 - sk) / self.tau;
            }
            (s - self.floor) * w + self.floor
        };
        grad.iter_mut().for_each(|g| *g = 0.0);
        accumulate(&adj, &jac, grad);
        value
    }
}
