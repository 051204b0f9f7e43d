//! Approximate posterior sample paths from random Fourier features.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::fit::NOISE_FLOOR;
use super::gp::GaussianProcessSurrogate;
use crate::linalg::cholesky_with_jitter;
use crate::optimize::sobol::derive_seed;
use crate::Result;

/// Default number of basis functions.
pub const DEFAULT_BASIS_COUNT: usize = 500;

/// One output's path `f(x) = c + Σ_b w_b √(2s/B) cos(ω_bᵀx + φ_b)`.
#[derive(Clone, Debug)]
pub struct RffComponent {
    /// `B × d`, row-major.
    pub frequencies: Vec<f64>,
    pub phases: Vec<f64>,
    pub weights: Vec<f64>,
    pub amplitude: f64,
    pub mean_constant: f64,
}

/// A deterministic function approximating a joint posterior draw of every
/// output (model space).
#[derive(Clone, Debug)]
pub struct RffSamplePath {
    pub components: Vec<RffComponent>,
    pub basis_count: usize,
    pub dim: usize,
}

impl RffComponent {
    fn features(&self, x: &[f64], d: usize) -> impl Iterator<Item = f64> + '_ {
        let x = x.to_vec();
        self.frequencies
            .chunks_exact(d)
            .zip(&self.phases)
            .map(move |(w, b)| self.amplitude * (w.iter().zip(&x).map(|(a, c)| a * c).sum::<f64>() + b).cos())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let d = x.len();
        let mut s = self.mean_constant;
        for (w, (omega, b)) in self.weights.iter().zip(self.frequencies.chunks_exact(d).zip(&self.phases)) {
            let arg = omega.iter().zip(x).map(|(a, c)| a * c).sum::<f64>() + b;
            s += w * self.amplitude * arg.cos();
        }
        s
    }

    /// Value, with the input gradient accumulated as `grad += scale · ∇f`.
    pub fn value_and_add_grad(&self, x: &[f64], scale: f64, grad: &mut [f64]) -> f64 {
        let d = x.len();
        let mut s = self.mean_constant;
        for (w, (omega, b)) in self.weights.iter().zip(self.frequencies.chunks_exact(d).zip(&self.phases)) {
            let arg = omega.iter().zip(x).map(|(a, c)| a * c).sum::<f64>() + b;
            let c = w * self.amplitude;
            s += c * arg.cos();
            let ds = -scale * c * arg.sin();
            for (g, o) in grad.iter_mut().zip(omega) {
                *g += ds * o;
            }
        }
        s
    }
}

impl RffSamplePath {
    /// Path values of every output at `x`.
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.value(x)).collect()
    }

    pub fn num_outputs(&self) -> usize {
        self.components.len()
    }
}

/// Draws frequencies from the Matérn 5/2 spectral measure: a multivariate
/// Student-t with 5 degrees of freedom scaled by the inverse lengthscales.
pub(crate) fn sample_frequencies(lengthscales: &[f64], basis_count: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let chi = ChiSquared::new(5.0).unwrap();
    let mut out = Vec::with_capacity(basis_count * lengthscales.len());
    for _ in 0..basis_count {
        let u: f64 = chi.sample(rng);
        let scale = (5.0 / u).sqrt();
        for l in lengthscales {
            let z: f64 = StandardNormal.sample(rng);
            out.push(z * scale / l);
        }
    }
    out
}

/// Draws a path per output: weights are a Bayesian-linear-model posterior
/// sample given the training data (pathwise update of a prior draw).
pub fn draw_rff_path(model: &GaussianProcessSurrogate, basis_count: usize, seed: u64) -> Result<RffSamplePath> {
    let basis_count = basis_count.max(1);
    let d = model.dim();
    let x = model.train_inputs();
    let n = x.len();
    let mut components = Vec::with_capacity(model.num_outputs());
    for o in 0..model.num_outputs() {
        let out = model.output(o);
        let h = out.hyperparams();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, o as u64));
        let frequencies = sample_frequencies(&h.lengthscales, basis_count, &mut rng);
        let phases: Vec<f64> = (0..basis_count)
            .map(|_| rng.gen_range(0.0..2.0 * std::f64::consts::PI))
            .collect();
        let prior_w: Vec<f64> = (0..basis_count).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut comp = RffComponent {
            frequencies,
            phases,
            weights: prior_w.clone(),
            amplitude: (2.0 * h.outputscale / basis_count as f64).sqrt(),
            mean_constant: h.mean_constant,
        };
        if n > 0 {
            let noise = h.noise_variance.max(NOISE_FLOOR);
            let phi = DMatrix::from_fn(n, basis_count, |_, _| 0.0);
            let mut phi = phi;
            for (i, xi) in x.iter().enumerate() {
                for (b, f) in comp.features(xi, d).enumerate() {
                    phi[(i, b)] = f;
                }
            }
            let eps: Vec<f64> = (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    noise.sqrt() * z
                })
                .collect();
            let z = DVector::from_vec(prior_w);
            let prior_at_x = &phi * &z;
            let resid = DVector::from_iterator(
                n,
                (0..n).map(|i| out.targets[i] - h.mean_constant - prior_at_x[i] - eps[i]),
            );
            let mut gram = &phi * phi.transpose();
            for i in 0..n {
                gram[(i, i)] += noise;
            }
            let (l, _) = cholesky_with_jitter(&gram)?;
            let mut sol: Vec<f64> = resid.iter().copied().collect();
            crate::linalg::forward_solve_in_place(&l, &mut sol);
            crate::linalg::back_solve_transpose_in_place(&l, &mut sol);
            let update = phi.transpose() * DVector::from_vec(sol);
            comp.weights = (z + update).iter().copied().collect();
        }
        components.push(comp);
    }
    Ok(RffSamplePath {
        components,
        basis_count,
        dim: d,
    })
}
