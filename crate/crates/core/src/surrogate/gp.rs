use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fit::{fit_output, FitOptions, NOISE_FLOOR};
use super::kernel::KernelHyperparams;
use super::samples::SampleArray;
use crate::linalg::{
    back_solve_transpose_in_place, cholesky_with_jitter, forward_solve_in_place, lower_triangular_inverse,
};
use crate::{Error, Result};

/// Observation-noise handling for [`GaussianProcessSurrogate::fit_map`].
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseMode {
    /// Known noise variance per output, in raw units.
    Known(Vec<f64>),
    /// Noise variance estimated per output.
    Inferred,
}

/// Per-output `(mean, std)` used to map raw targets to model space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Standardization {
    pub mean: f64,
    pub std: f64,
}

impl Standardization {
    pub fn identity() -> Self {
        Self { mean: 0.0, std: 1.0 }
    }

    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n < 2 {
            return Self {
                mean: values.first().copied().unwrap_or(0.0),
                std: 1.0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std = var.sqrt();
        Self {
            mean,
            std: if std > 1e-12 * mean.abs().max(1.0) { std } else { 1.0 },
        }
    }

    #[inline]
    pub fn standardize(&self, y: f64) -> f64 {
        (y - self.mean) / self.std
    }

    #[inline]
    pub fn unstandardize(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// One independent output of the surrogate, everything in model space.
#[derive(Clone, Debug)]
pub struct OutputModel {
    pub(crate) hyper: KernelHyperparams,
    pub(crate) standardization: Standardization,
    pub(crate) targets: Vec<f64>,
    /// Lower factor of `K + σ²I` (σ² includes any jitter).
    pub(crate) chol: DMatrix<f64>,
    pub(crate) chol_inv: DMatrix<f64>,
    pub(crate) alpha: Vec<f64>,
    pub(crate) effective_noise: f64,
}

impl OutputModel {
    fn build(x: &[Vec<f64>], targets: Vec<f64>, hyper: KernelHyperparams, standardization: Standardization) -> Result<Self> {
        let n = x.len();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = hyper.outputscale + hyper.noise_variance;
            for j in 0..i {
                let v = hyper.k(&x[i], &x[j]);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let (chol, jitter) = cholesky_with_jitter(&a).map_err(|e| match e {
            Error::NotPositiveDefinite { jitter } => Error::Fitting(format!(
                "kernel matrix not positive definite after jitter {jitter:e}"
            )),
            other => other,
        })?;
        let mut alpha: Vec<f64> = targets.iter().map(|y| y - hyper.mean_constant).collect();
        forward_solve_in_place(&chol, &mut alpha);
        back_solve_transpose_in_place(&chol, &mut alpha);
        let chol_inv = lower_triangular_inverse(&chol);
        Ok(Self {
            effective_noise: hyper.noise_variance + jitter,
            hyper,
            standardization,
            targets,
            chol,
            chol_inv,
            alpha,
        })
    }

    pub fn hyperparams(&self) -> &KernelHyperparams {
        &self.hyper
    }

    pub fn standardization(&self) -> Standardization {
        self.standardization
    }

    /// Lower-triangular root of `K_nn + σ²I`.
    pub fn cholesky_root(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// Noise variance actually on the diagonal, including jitter.
    pub fn effective_noise(&self) -> f64 {
        self.effective_noise
    }

    pub(crate) fn cross_kernel(&self, train: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        train.iter().map(|t| self.hyper.k(x, t)).collect()
    }

    /// Latent posterior mean and variance at `x`, plus `v = L⁻¹ k_x`.
    pub(crate) fn mean_var_v(&self, train: &[Vec<f64>], x: &[f64]) -> (f64, f64, Vec<f64>) {
        let kx = self.cross_kernel(train, x);
        let mean = self.hyper.mean_constant + kx.iter().zip(&self.alpha).map(|(a, b)| a * b).sum::<f64>();
        let mut v = kx;
        forward_solve_in_place(&self.chol, &mut v);
        let var = (self.hyper.outputscale - v.iter().map(|a| a * a).sum::<f64>()).max(0.0);
        (mean, var, v)
    }
}

/// Independent Matérn 5/2 GPs, one per output, sharing training inputs.
#[derive(Clone, Debug)]
pub struct GaussianProcessSurrogate {
    pub(crate) train_x: Vec<Vec<f64>>,
    pub(crate) dim: usize,
    pub(crate) outputs: Vec<OutputModel>,
}

/// Joint posterior at query points, in model space.
#[derive(Clone, Debug)]
pub struct PosteriorDistribution {
    /// `m × M` posterior means.
    pub mean: DMatrix<f64>,
    /// Per-output lower factor of the `m × m` posterior covariance.
    pub covariance_roots: Vec<DMatrix<f64>>,
    pub standardization: Vec<Standardization>,
}

impl PosteriorDistribution {
    pub fn num_points(&self) -> usize {
        self.mean.nrows()
    }

    pub fn num_outputs(&self) -> usize {
        self.mean.ncols()
    }

    pub fn covariance(&self, output: usize) -> DMatrix<f64> {
        let l = &self.covariance_roots[output];
        l * l.transpose()
    }

    /// Means mapped back to raw units.
    pub fn unstandardized_mean(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.mean.nrows(), self.mean.ncols(), |i, o| {
            self.standardization[o].unstandardize(self.mean[(i, o)])
        })
    }
}

fn validate_inputs(x: &[Vec<f64>]) -> Result<usize> {
    let d = x.first().map(|r| r.len()).unwrap_or(0);
    if d == 0 {
        return Err(Error::InvalidInput("inputs need at least one dimension".into()));
    }
    for row in x {
        if row.len() != d {
            return Err(Error::DimensionMismatch("ragged input matrix".into()));
        }
        if row.iter().any(|v| !v.is_finite() || *v < -1e-9 || *v > 1.0 + 1e-9) {
            return Err(Error::InvalidInput("inputs must lie in the unit cube".into()));
        }
    }
    Ok(d)
}

fn validate_targets(y: &[Vec<f64>], n: usize) -> Result<usize> {
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("{} inputs but {} targets", n, y.len())));
    }
    let m = y.first().map(|r| r.len()).unwrap_or(0);
    if m == 0 || y.iter().any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch("ragged or empty target matrix".into()));
    }
    if y.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite training target".into()));
    }
    Ok(m)
}

/// Perturbs exact duplicate rows by uniform noise of magnitude 1e-6.
fn jitter_duplicates(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(x.len());
    let mut rng = ChaCha8Rng::seed_from_u64(0x6475_706c);
    for row in x {
        let mut r = row.clone();
        while out.iter().any(|o| *o == r) {
            for v in r.iter_mut() {
                *v = (*v + rng.gen_range(-1e-6..1e-6)).clamp(0.0, 1.0);
            }
        }
        out.push(r);
    }
    out
}

impl GaussianProcessSurrogate {
    /// MAP fit with default options.
    pub fn fit_map(train_x: &[Vec<f64>], train_y: &[Vec<f64>], noise_mode: NoiseMode) -> Result<Self> {
        Self::fit_map_with(train_x, train_y, noise_mode, &FitOptions::default())
    }

    pub fn fit_map_with(
        train_x: &[Vec<f64>],
        train_y: &[Vec<f64>],
        noise_mode: NoiseMode,
        options: &FitOptions,
    ) -> Result<Self> {
        if train_x.len() < 2 {
            return Err(Error::InvalidInput("fitting needs at least two points".into()));
        }
        let dim = validate_inputs(train_x)?;
        let m = validate_targets(train_y, train_x.len())?;
        if let NoiseMode::Known(v) = &noise_mode {
            if v.len() != m || v.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
                return Err(Error::InvalidInput("known noise needs one nonnegative variance per output".into()));
            }
        }
        let x = jitter_duplicates(train_x);
        let mut outputs = Vec::with_capacity(m);
        for o in 0..m {
            let raw: Vec<f64> = train_y.iter().map(|r| r[o]).collect();
            let st = Standardization::from_values(&raw);
            let targets: Vec<f64> = raw.iter().map(|v| st.standardize(*v)).collect();
            let known = match &noise_mode {
                NoiseMode::Known(v) => Some(v[o] / (st.std * st.std)),
                NoiseMode::Inferred => None,
            };
            let warm = options.warm_start.as_ref().and_then(|w| w.get(o));
            let mut hyper = fit_output(&x, &targets, known, options, warm, o as u64)
                .ok_or_else(|| Error::Fitting(format!("no restart produced a finite objective for output {o}")))?;
            if known.is_none() {
                hyper.noise_variance = hyper.noise_variance.max(NOISE_FLOOR);
            }
            outputs.push(OutputModel::build(&x, targets, hyper, st)?);
        }
        Ok(Self { train_x: x, dim, outputs })
    }

    /// Conditions fixed model-space hyperparameters on data (targets are
    /// standardized first).
    pub fn from_hyperparams(train_x: &[Vec<f64>], train_y: &[Vec<f64>], hypers: Vec<KernelHyperparams>) -> Result<Self> {
        let dim = validate_inputs(train_x)?;
        let m = validate_targets(train_y, train_x.len())?;
        if hypers.len() != m || hypers.iter().any(|h| h.lengthscales.len() != dim || !h.is_valid()) {
            return Err(Error::InvalidInput("one valid hyperparameter set per output required".into()));
        }
        let x = jitter_duplicates(train_x);
        let mut outputs = Vec::with_capacity(m);
        for (o, hyper) in hypers.into_iter().enumerate() {
            let raw: Vec<f64> = train_y.iter().map(|r| r[o]).collect();
            let st = Standardization::from_values(&raw);
            let targets = raw.iter().map(|v| st.standardize(*v)).collect();
            outputs.push(OutputModel::build(&x, targets, hyper, st)?);
        }
        Ok(Self { train_x: x, dim, outputs })
    }

    /// A model with no training data.
    pub fn prior(dim: usize, hypers: Vec<KernelHyperparams>) -> Result<Self> {
        if hypers.is_empty() || hypers.iter().any(|h| h.lengthscales.len() != dim || !h.is_valid()) {
            return Err(Error::InvalidInput("one valid hyperparameter set per output required".into()));
        }
        let outputs = hypers
            .into_iter()
            .map(|hyper| OutputModel {
                hyper,
                standardization: Standardization::identity(),
                targets: Vec::new(),
                chol: DMatrix::zeros(0, 0),
                chol_inv: DMatrix::zeros(0, 0),
                alpha: Vec::new(),
                effective_noise: 0.0,
            })
            .collect();
        Ok(Self {
            train_x: Vec::new(),
            dim,
            outputs,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn num_train(&self) -> usize {
        self.train_x.len()
    }

    pub fn train_inputs(&self) -> &[Vec<f64>] {
        &self.train_x
    }

    pub fn output(&self, o: usize) -> &OutputModel {
        &self.outputs[o]
    }

    pub fn hyperparams(&self) -> Vec<KernelHyperparams> {
        self.outputs.iter().map(|o| o.hyper.clone()).collect()
    }

    pub fn standardization(&self) -> Vec<Standardization> {
        self.outputs.iter().map(|o| o.standardization).collect()
    }

    /// Standardized training targets, `n × M`.
    pub fn train_targets(&self) -> Vec<Vec<f64>> {
        (0..self.num_train())
            .map(|i| self.outputs.iter().map(|o| o.targets[i]).collect())
            .collect()
    }

    /// Latent posterior mean and variance of each output at `x` (model space).
    pub fn mean_var(&self, x: &[f64]) -> Vec<(f64, f64)> {
        self.outputs
            .iter()
            .map(|o| {
                let (m, v, _) = o.mean_var_v(&self.train_x, x);
                (m, v)
            })
            .collect()
    }

    /// Joint latent posterior at the rows of `x`.
    pub fn posterior(&self, x: &[Vec<f64>]) -> Result<PosteriorDistribution> {
        if x.is_empty() {
            return Err(Error::InvalidInput("posterior needs at least one query point".into()));
        }
        if x.iter().any(|r| r.len() != self.dim) {
            return Err(Error::DimensionMismatch("query dimension differs from the model".into()));
        }
        let m = x.len();
        let mut mean = DMatrix::zeros(m, self.outputs.len());
        let mut roots = Vec::with_capacity(self.outputs.len());
        for (o, out) in self.outputs.iter().enumerate() {
            let mut vs = Vec::with_capacity(m);
            for (i, xi) in x.iter().enumerate() {
                let (mu, _, v) = out.mean_var_v(&self.train_x, xi);
                mean[(i, o)] = mu;
                vs.push(v);
            }
            let mut cov = DMatrix::zeros(m, m);
            for i in 0..m {
                for j in 0..=i {
                    let prior = out.hyper.k(&x[i], &x[j]);
                    let reduction: f64 = vs[i].iter().zip(&vs[j]).map(|(a, b)| a * b).sum();
                    let mut c = prior - reduction;
                    if i == j {
                        c = c.max(0.0);
                    }
                    cov[(i, j)] = c;
                    cov[(j, i)] = c;
                }
            }
            roots.push(root_with_floor(&cov, out.hyper.outputscale)?);
        }
        Ok(PosteriorDistribution {
            mean,
            covariance_roots: roots,
            standardization: self.standardization(),
        })
    }

    /// Joint latent posterior of output `o` at the training points `idx`, via
    /// `μ = y − σ²α` and `Σ = σ²I − σ⁴[(K + σ²I)⁻¹]`, which stay accurate as
    /// the noise vanishes.
    pub fn training_posterior(&self, o: usize, idx: &[usize]) -> (Vec<f64>, DMatrix<f64>) {
        let out = &self.outputs[o];
        let s2 = out.effective_noise;
        let mean = idx.iter().map(|&i| out.targets[i] - s2 * out.alpha[i]).collect();
        let k = idx.len();
        let n = self.num_train();
        let linv = &out.chol_inv;
        let mut cov = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in 0..=a {
                let (ia, ib) = (idx[a], idx[b]);
                let start = ia.max(ib);
                let mut ainv = 0.0;
                for r in start..n {
                    ainv += linv[(r, ia)] * linv[(r, ib)];
                }
                let mut c = -s2 * s2 * ainv;
                if a == b {
                    c = (c + s2).max(0.0);
                }
                cov[(a, b)] = c;
                cov[(b, a)] = c;
            }
        }
        (mean, cov)
    }
}

/// Root of a posterior covariance. Jitter follows the ladder relative to the
/// mean diagonal, with a tiny floor tied to the prior variance so an exactly
/// zero posterior still factors.
pub(crate) fn root_with_floor(cov: &DMatrix<f64>, prior_scale: f64) -> Result<DMatrix<f64>> {
    if let Some(c) = nalgebra::Cholesky::new(cov.clone()) {
        return Ok(c.l());
    }
    let n = cov.nrows();
    let mean_diag = (0..n).map(|i| cov[(i, i)]).sum::<f64>() / n.max(1) as f64;
    let scale = mean_diag.max(1e-12 * prior_scale);
    let mut jitter = 0.0;
    for rel in crate::linalg::JITTER_LADDER {
        jitter = rel * scale;
        let mut s = cov.clone();
        for i in 0..n {
            s[(i, i)] += jitter;
        }
        if let Some(c) = nalgebra::Cholesky::new(s) {
            return Ok(c.l());
        }
    }
    Err(Error::NotPositiveDefinite { jitter })
}

/// `sample_t = mean + root · ζ_t` for every sample and output.
pub fn draw_joint_samples(post: &PosteriorDistribution, base_samples: &SampleArray) -> Result<SampleArray> {
    let m = post.num_points();
    let outs = post.num_outputs();
    if base_samples.num_points != m || base_samples.num_outputs != outs {
        return Err(Error::DimensionMismatch(format!(
            "base samples are {}×{} per draw, posterior is {}×{}",
            base_samples.num_points, base_samples.num_outputs, m, outs
        )));
    }
    let mut out = SampleArray::zeros(base_samples.num_samples, m, outs);
    for t in 0..base_samples.num_samples {
        for o in 0..outs {
            let z = DVector::from_iterator(m, (0..m).map(|i| base_samples.get(t, i, o)));
            let f = &post.covariance_roots[o] * z;
            for i in 0..m {
                out.set(t, i, o, post.mean[(i, o)] + f[i]);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardization_round_trip() {
        let st = Standardization::from_values(&[1.0, 4.0, -2.5, 7.25]);
        for v in [1.0, 4.0, -2.5, 7.25, 1e6] {
            assert!((st.unstandardize(st.standardize(v)) - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
        let flat = Standardization::from_values(&[3.0, 3.0]);
        assert_eq!(flat.std, 1.0);
    }

    #[test]
    fn duplicates_are_separated() {
        let x = vec![vec![0.5, 0.5], vec![0.5, 0.5], vec![0.1, 0.2]];
        let j = jitter_duplicates(&x);
        assert_ne!(j[0], j[1]);
        assert!(j[1].iter().zip(&x[1]).all(|(a, b)| (a - b).abs() <= 1e-6));
    }
}
