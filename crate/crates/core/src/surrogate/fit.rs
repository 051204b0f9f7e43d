//! MAP estimation of kernel hyperparameters on standardized targets.

use nalgebra::{Cholesky, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use super::kernel::{matern52_radial_factor, KernelHyperparams};
use crate::linalg::JITTER_LADDER;
use crate::optimize::lbfgsb::{minimize, LbfgsConfig};

/// Gamma priors as `(shape, rate)`.
pub const LENGTHSCALE_PRIOR: (f64, f64) = (3.0, 6.0);
pub const OUTPUTSCALE_PRIOR: (f64, f64) = (2.0, 0.15);
pub const NOISE_PRIOR: (f64, f64) = (1.1, 0.05);
pub const NOISE_FLOOR: f64 = 1e-6;

const LOG_LENGTHSCALE_BOUNDS: (f64, f64) = (-6.0, 4.0);
const LOG_OUTPUTSCALE_BOUNDS: (f64, f64) = (-7.0, 7.0);
const LOG_NOISE_UPPER: f64 = 1.5;
const MEAN_BOUNDS: (f64, f64) = (-5.0, 5.0);

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub seed: u64,
    /// Optional starting point per output (model space); used as the first
    /// restart instead of the default start.
    pub warm_start: Option<Vec<KernelHyperparams>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_iterations: 200,
            gradient_tolerance: 1e-6,
            seed: 0,
            warm_start: None,
        }
    }
}

fn log_gamma_prior(theta_log: f64, (a, b): (f64, f64)) -> (f64, f64) {
    let v = theta_log.exp();
    ((a - 1.0) * theta_log - b * v, (a - 1.0) - b * v)
}

struct Problem<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    d: usize,
    known_noise: Option<f64>,
}

impl Problem<'_> {
    fn unpack(&self, theta: &[f64]) -> KernelHyperparams {
        let d = self.d;
        let noise = match self.known_noise {
            Some(n) => n,
            None => theta[d + 1].exp(),
        };
        KernelHyperparams {
            lengthscales: theta[..d].iter().map(|v| v.exp()).collect(),
            outputscale: theta[d].exp(),
            noise_variance: noise,
            mean_constant: *theta.last().unwrap(),
        }
    }

    fn pack(&self, h: &KernelHyperparams) -> Vec<f64> {
        let mut t: Vec<f64> = h.lengthscales.iter().map(|l| l.ln()).collect();
        t.push(h.outputscale.ln());
        if self.known_noise.is_none() {
            t.push(h.noise_variance.max(NOISE_FLOOR).ln());
        }
        t.push(h.mean_constant);
        t
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![LOG_LENGTHSCALE_BOUNDS.0; self.d];
        let mut hi = vec![LOG_LENGTHSCALE_BOUNDS.1; self.d];
        lo.push(LOG_OUTPUTSCALE_BOUNDS.0);
        hi.push(LOG_OUTPUTSCALE_BOUNDS.1);
        if self.known_noise.is_none() {
            lo.push(NOISE_FLOOR.ln());
            hi.push(LOG_NOISE_UPPER);
        }
        lo.push(MEAN_BOUNDS.0);
        hi.push(MEAN_BOUNDS.1);
        (lo, hi)
    }

    /// Negative log marginal likelihood minus log prior, and its gradient
    /// with respect to the packed parameters.
    fn objective(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let h = self.unpack(theta);
        let n = self.y.len();
        let d = self.d;
        let mut kmat = DMatrix::zeros(n, n);
        for a in 0..n {
            kmat[(a, a)] = h.outputscale;
            for b in 0..a {
                let v = h.k(&self.x[a], &self.x[b]);
                kmat[(a, b)] = v;
                kmat[(b, a)] = v;
            }
        }
        let mut amat = kmat.clone();
        for a in 0..n {
            amat[(a, a)] += h.noise_variance;
        }
        let Some(chol) = factor(amat) else {
            grad.iter_mut().for_each(|g| *g = 0.0);
            return f64::INFINITY;
        };
        let resid: Vec<f64> = self.y.iter().map(|v| v - h.mean_constant).collect();
        let alpha = chol.solve(&nalgebra::DVector::from_vec(resid.clone()));
        let l = chol.l_dirty();
        let log_det: f64 = (0..n).map(|i| l[(i, i)].ln()).sum::<f64>();
        let fit: f64 = resid.iter().zip(alpha.iter()).map(|(r, a)| r * a).sum();
        let mut value = 0.5 * fit + log_det + 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

        // W = A⁻¹ − ααᵀ; the NLL gradient is ½ tr(W ∂A).
        let ainv = chol.inverse();
        let mut w = ainv;
        for a in 0..n {
            for b in 0..n {
                w[(a, b)] -= alpha[a] * alpha[b];
            }
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut g_scale = 0.0;
        for a in 0..n {
            g_scale += 0.5 * w[(a, a)] * h.outputscale;
            for b in 0..a {
                let wab = w[(a, b)];
                g_scale += wab * kmat[(a, b)];
                let r = h.distance(&self.x[a], &self.x[b]);
                let f = matern52_radial_factor(r, h.outputscale);
                for i in 0..d {
                    let t = (self.x[a][i] - self.x[b][i]) / h.lengthscales[i];
                    grad[i] += wab * f * t * t;
                }
            }
        }
        grad[d] = g_scale;
        let mut next = d + 1;
        if self.known_noise.is_none() {
            let trace: f64 = (0..n).map(|a| w[(a, a)]).sum();
            grad[next] = 0.5 * trace * h.noise_variance;
            next += 1;
        }
        grad[next] = -alpha.iter().sum::<f64>();

        for i in 0..d {
            let (p, dp) = log_gamma_prior(theta[i], LENGTHSCALE_PRIOR);
            value -= p;
            grad[i] -= dp;
        }
        let (p, dp) = log_gamma_prior(theta[d], OUTPUTSCALE_PRIOR);
        value -= p;
        grad[d] -= dp;
        if self.known_noise.is_none() {
            let (p, dp) = log_gamma_prior(theta[d + 1], NOISE_PRIOR);
            value -= p;
            grad[d + 1] -= dp;
        }
        value
    }
}

fn factor(a: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    if let Some(c) = Cholesky::new(a.clone()) {
        return Some(c);
    }
    let n = a.nrows();
    let scale = (0..n).map(|i| a[(i, i)]).sum::<f64>() / n as f64;
    for rel in JITTER_LADDER {
        let mut s = a.clone();
        for i in 0..n {
            s[(i, i)] += rel * scale;
        }
        if let Some(c) = Cholesky::new(s) {
            return Some(c);
        }
    }
    None
}

fn default_start(d: usize, known_noise: Option<f64>) -> KernelHyperparams {
    KernelHyperparams {
        lengthscales: vec![0.5; d],
        outputscale: 1.0,
        noise_variance: known_noise.unwrap_or(0.05),
        mean_constant: 0.0,
    }
}

fn random_start(d: usize, known_noise: Option<f64>, rng: &mut ChaCha8Rng) -> KernelHyperparams {
    let gamma = Gamma::new(LENGTHSCALE_PRIOR.0, 1.0 / LENGTHSCALE_PRIOR.1).unwrap();
    KernelHyperparams {
        lengthscales: (0..d).map(|_| gamma.sample(rng).clamp(0.01, 5.0)).collect(),
        outputscale: rng.gen_range(-1.2f64..1.2).exp(),
        noise_variance: known_noise.unwrap_or_else(|| rng.gen_range(-9.0f64..-1.0).exp()),
        mean_constant: rng.gen_range(-0.5..0.5),
    }
}

/// MAP hyperparameters for one output. `known_noise` is a model-space noise
/// variance; `None` infers it.
pub(crate) fn fit_output(
    x: &[Vec<f64>],
    y: &[f64],
    known_noise: Option<f64>,
    options: &FitOptions,
    warm: Option<&KernelHyperparams>,
    stream: u64,
) -> Option<KernelHyperparams> {
    let d = x[0].len();
    let problem = Problem {
        x,
        y,
        d,
        known_noise,
    };
    let (lo, hi) = problem.bounds();
    let config = LbfgsConfig {
        max_iterations: options.max_iterations,
        gradient_tolerance: options.gradient_tolerance,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(crate::optimize::sobol::derive_seed(options.seed, stream));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for restart in 0..options.restarts.max(1) {
        let start = match (restart, warm) {
            (0, Some(h)) if h.lengthscales.len() == d => {
                let mut h = h.clone();
                if let Some(n) = known_noise {
                    h.noise_variance = n;
                }
                h
            }
            (0, _) => default_start(d, known_noise),
            _ => random_start(d, known_noise, &mut rng),
        };
        let mut theta0 = problem.pack(&start);
        for ((t, l), h) in theta0.iter_mut().zip(&lo).zip(&hi) {
            *t = t.clamp(*l, *h);
        }
        let res = minimize(|t, g| problem.objective(t, g), &theta0, &lo, &hi, &config);
        if res.value.is_finite() && best.as_ref().map_or(true, |(v, _)| res.value < *v) {
            best = Some((res.value, res.x));
        }
    }
    best.map(|(_, t)| problem.unpack(&t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_gradient_matches_finite_differences() {
        let x: Vec<Vec<f64>> = (0..9)
            .map(|i| vec![(i as f64 * 0.37).fract(), (i as f64 * 0.61).fract()])
            .collect();
        let y: Vec<f64> = x.iter().map(|p| (4.0 * p[0]).sin() + p[1]).collect();
        for known in [None, Some(0.01)] {
            let problem = Problem {
                x: &x,
                y: &y,
                d: 2,
                known_noise: known,
            };
            let theta = problem.pack(&KernelHyperparams::new(vec![0.4, 0.9], 1.3, 0.02, 0.1));
            let mut g = vec![0.0; theta.len()];
            problem.objective(&theta, &mut g);
            let mut scratch = g.clone();
            for i in 0..theta.len() {
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[i] += 1e-6;
                tm[i] -= 1e-6;
                let fd = (problem.objective(&tp, &mut scratch) - problem.objective(&tm, &mut scratch)) / 2e-6;
                assert!((fd - g[i]).abs() < 1e-5 * (1.0 + fd.abs()), "param {i}: {fd} vs {}", g[i]);
            }
        }
    }
}
