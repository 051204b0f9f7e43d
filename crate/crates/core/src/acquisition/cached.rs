//! Cached box decompositions over fixed posterior samples.
//!
//! The state draws `N` joint samples at the (pruned) observed points once,
//! extracts each sample's Pareto front and box decomposition, and then
//! evaluates a candidate by sampling it from its conditional distribution
//! given those fixed values. Selected batch points are folded in by extending
//! the covariance root, so later candidates condition on them as well.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{AcquisitionConfig, ObjectiveSpec};
use crate::hypervolume::{hvi_flat, hvi_flat_with_grad, sigmoid};
use crate::linalg::{back_solve_transpose_in_place, compensated_sum, extend_root_lowrank, forward_solve_in_place};
use crate::optimize::sobol::derive_seed;
use crate::pareto::{pareto_front_unchecked, ParetoFront};
use crate::partitioning::{decompose_nondominated, pad_decompositions, BoxDecomposition};
use crate::surrogate::gp::root_with_floor;
use crate::optimize::sobol::SOBOL_MAX_DIM;
use crate::surrogate::samples::{base_column, normal_samples, sample_stride, BaseSampler};
use crate::surrogate::{GaussianProcessSurrogate, SampleArray};
use crate::{Error, Result};

const OBSERVED_STREAM: u64 = 0;
const CANDIDATE_STREAM: u64 = 1_000;

#[derive(Clone, Debug)]
struct OutputCache {
    /// Root of the joint covariance over observed and batch points.
    root: DMatrix<f64>,
    /// Whitened samples, `N` rows over observed then batch points.
    z: Vec<Vec<f64>>,
    /// `L⁻¹ k_b` for every batch point.
    batch_v: Vec<Vec<f64>>,
}

/// Per-output pieces of a candidate's conditional distribution.
#[derive(Clone, Debug)]
pub(crate) struct CandidateOutput {
    pub mean: f64,
    pub var: f64,
    pub v: Vec<f64>,
    pub ell: Vec<f64>,
    pub d: f64,
}

/// Fixed-sample state for qNEHVI and its fixed-front qEHVI relatives.
#[derive(Clone, Debug)]
pub struct CachedAcquisitionState {
    model: Arc<GaussianProcessSurrogate>,
    num_objectives: usize,
    num_outputs: usize,
    reference_point: Vec<f64>,
    feasibility_threshold: Vec<f64>,
    tau: f64,
    num_samples: usize,
    seed: u64,
    observed: Vec<usize>,
    batch_x: Vec<Vec<f64>>,
    outputs: Vec<OutputCache>,
    /// `[t]` flat `(point, output)` sample values over observed then batch.
    values: Vec<Vec<f64>>,
    decomps: Vec<BoxDecomposition>,
    padded: Vec<BoxDecomposition>,
    banked: Vec<f64>,
    constant: f64,
    candidate_base: SampleArray,
    sampler: BaseSampler,
}

impl CachedAcquisitionState {
    /// qNEHVI state over the observed points `observed` (in this order).
    pub fn with_observed(
        model: Arc<GaussianProcessSurrogate>,
        spec: &ObjectiveSpec,
        config: &AcquisitionConfig,
        seed: u64,
        observed: Vec<usize>,
    ) -> Result<Self> {
        let mut state = Self::empty(model, spec, config, seed)?;
        let n_out = state.num_outputs;
        let n_samples = state.num_samples;
        if observed.iter().any(|&i| i >= state.model.num_train()) {
            return Err(Error::InvalidInput("observed index out of range".into()));
        }
        let k = observed.len();
        let base = normal_samples(state.sampler, n_samples, k, n_out, observed_seed(seed));
        state.values = vec![vec![0.0; k * n_out]; n_samples];
        for o in 0..n_out {
            let (mean, cov) = state.model.training_posterior(o, &observed);
            let root = if k == 0 {
                DMatrix::zeros(0, 0)
            } else {
                root_with_floor(&cov, state.model.output(o).hyperparams().outputscale)?
            };
            let mut z = Vec::with_capacity(n_samples);
            for t in 0..n_samples {
                let zt: Vec<f64> = (0..k).map(|i| base.get(t, i, o)).collect();
                for i in 0..k {
                    let mut s = mean[i];
                    for j in 0..=i {
                        s += root[(i, j)] * zt[j];
                    }
                    state.values[t][i * n_out + o] = s;
                }
                z.push(zt);
            }
            state.outputs[o] = OutputCache {
                root,
                z,
                batch_v: Vec::new(),
            };
        }
        state.candidate_base = candidate_base(state.sampler, n_samples, n_out, seed, 0, k);
        state.observed = observed;
        let mut decomps = Vec::with_capacity(n_samples);
        for t in 0..n_samples {
            let front = state.feasible_front(t);
            decomps.push(decompose_nondominated(&front, &state.reference_point)?);
        }
        state.set_decomps(decomps)?;
        Ok(state)
    }

    /// qEHVI state: every sample shares the given front (model space), and
    /// only batch points are sampled.
    pub fn with_fixed_front(
        model: Arc<GaussianProcessSurrogate>,
        spec: &ObjectiveSpec,
        config: &AcquisitionConfig,
        seed: u64,
        front_points: &[Vec<f64>],
    ) -> Result<Self> {
        let mut state = Self::empty(model, spec, config, seed)?;
        let m = state.num_objectives;
        if front_points.iter().any(|p| p.len() != m) {
            return Err(Error::DimensionMismatch("front points must have M objectives".into()));
        }
        let front = pareto_front_unchecked(front_points, m);
        let d = decompose_nondominated(&front, &state.reference_point)?;
        state.values = vec![Vec::new(); state.num_samples];
        for o in 0..state.num_outputs {
            state.outputs[o].z = vec![Vec::new(); state.num_samples];
        }
        state.set_decomps(vec![d; state.num_samples])?;
        Ok(state)
    }

    fn empty(model: Arc<GaussianProcessSurrogate>, spec: &ObjectiveSpec, config: &AcquisitionConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let num_outputs = model.num_outputs();
        let m = spec.reference_point.len();
        if m < 2 || m > num_outputs {
            return Err(Error::InvalidInput(format!(
                "need 2 ≤ M ≤ outputs, got M = {m} with {num_outputs} outputs"
            )));
        }
        let feasibility_threshold: Vec<f64> = model
            .standardization()
            .iter()
            .skip(m)
            .map(|s| s.standardize(0.0))
            .collect();
        let n_samples = config.num_samples;
        Ok(Self {
            num_objectives: m,
            num_outputs,
            reference_point: spec.reference_point.clone(),
            feasibility_threshold,
            tau: config.constraint_tau,
            num_samples: n_samples,
            seed,
            observed: Vec::new(),
            batch_x: Vec::new(),
            outputs: vec![
                OutputCache {
                    root: DMatrix::zeros(0, 0),
                    z: vec![Vec::new(); n_samples],
                    batch_v: Vec::new(),
                };
                num_outputs
            ],
            values: vec![Vec::new(); n_samples],
            decomps: Vec::new(),
            padded: Vec::new(),
            banked: vec![0.0; n_samples],
            constant: 0.0,
            candidate_base: candidate_base(config.sampler, n_samples, num_outputs, seed, 0, 0),
            sampler: config.sampler,
            model,
        })
    }

    fn set_decomps(&mut self, decomps: Vec<BoxDecomposition>) -> Result<()> {
        self.padded = pad_decompositions(&decomps)?;
        self.decomps = decomps;
        Ok(())
    }

    fn num_points(&self) -> usize {
        self.observed.len() + self.batch_x.len()
    }

    fn feasible_front(&self, t: usize) -> ParetoFront {
        let n_out = self.num_outputs;
        let m = self.num_objectives;
        let rows: Vec<Vec<f64>> = self.values[t]
            .chunks_exact(n_out)
            .filter(|row| self.hard_feasible(row))
            .map(|row| row[..m].to_vec())
            .collect();
        pareto_front_unchecked(&rows, m)
    }

    fn hard_feasible(&self, row: &[f64]) -> bool {
        row[self.num_objectives..]
            .iter()
            .zip(&self.feasibility_threshold)
            .all(|(c, z0)| c >= z0)
    }

    pub fn model(&self) -> &Arc<GaussianProcessSurrogate> {
        &self.model
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn sampler(&self) -> BaseSampler {
        self.sampler
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_objectives(&self) -> usize {
        self.num_objectives
    }

    pub fn reference_point(&self) -> &[f64] {
        &self.reference_point
    }

    /// Training indices whose samples the state holds, in sample order.
    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn batch(&self) -> &[Vec<f64>] {
        &self.batch_x
    }

    /// Mean banked improvement of the already-selected batch points.
    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    /// Banked improvement per sample.
    pub fn banked(&self) -> &[f64] {
        &self.banked
    }

    pub fn fronts(&self) -> Vec<&ParetoFront> {
        self.decomps.iter().map(|d| d.front()).collect()
    }

    pub fn decompositions(&self) -> &[BoxDecomposition] {
        &self.decomps
    }

    pub fn padded_decompositions(&self) -> &[BoxDecomposition] {
        &self.padded
    }

    /// Sample values at observed then batch points, `N × points × outputs`.
    pub fn sampled_values(&self) -> SampleArray {
        let n_out = self.num_outputs;
        let p = self.num_points();
        let mut out = SampleArray::zeros(self.num_samples, p, n_out);
        for t in 0..self.num_samples {
            out.data[t * p * n_out..(t + 1) * p * n_out].copy_from_slice(&self.values[t]);
        }
        out
    }

    /// Standard normals used for the candidate in the current greedy step.
    pub fn candidate_base_samples(&self) -> &SampleArray {
        &self.candidate_base
    }

    /// Whitened samples of output `o`: `N` rows over observed then batch.
    pub fn whitened_samples(&self, o: usize) -> &[Vec<f64>] {
        &self.outputs[o].z
    }

    pub fn covariance_root(&self, o: usize) -> &DMatrix<f64> {
        &self.outputs[o].root
    }

    pub(crate) fn feasibility_weight(&self, c: &[f64]) -> f64 {
        c.iter()
            .zip(&self.feasibility_threshold)
            .map(|(v, z0)| sigmoid((v - z0) / self.tau))
            .product()
    }

    /// Conditional distribution pieces of the candidate for output `o`.
    pub(crate) fn candidate_output(&self, o: usize, x: &[f64]) -> CandidateOutput {
        let out = self.model.output(o);
        let train = self.model.train_inputs();
        let (mean, var, v) = out.mean_var_v(train, x);
        let cache = &self.outputs[o];
        let mut c = Vec::with_capacity(self.num_points());
        if !self.observed.is_empty() {
            let mut beta = v.clone();
            back_solve_transpose_in_place(out.cholesky_root(), &mut beta);
            let s2 = out.effective_noise();
            c.extend(self.observed.iter().map(|&i| s2 * beta[i]));
        }
        let h = out.hyperparams();
        for (b, vb) in self.batch_x.iter().zip(&cache.batch_v) {
            let dot: f64 = vb.iter().zip(&v).map(|(p, q)| p * q).sum();
            c.push(h.k(b, x) - dot);
        }
        let mut ell = c;
        forward_solve_in_place(&cache.root, &mut ell);
        let resid = var - ell.iter().map(|e| e * e).sum::<f64>();
        let d = if resid > 0.0 { resid.sqrt() } else { 0.0 };
        CandidateOutput { mean, var, v, ell, d }
    }

    /// Conditional samples of every output at `x`, `[t][o]`.
    pub(crate) fn candidate_samples(&self, x: &[f64]) -> (Vec<CandidateOutput>, Vec<Vec<f64>>) {
        let n_out = self.num_outputs;
        let parts: Vec<CandidateOutput> = (0..n_out).map(|o| self.candidate_output(o, x)).collect();
        let mut samples = vec![vec![0.0; n_out]; self.num_samples];
        for (o, p) in parts.iter().enumerate() {
            let z = &self.outputs[o].z;
            for t in 0..self.num_samples {
                let shift: f64 = z[t].iter().zip(&p.ell).map(|(a, b)| a * b).sum();
                samples[t][o] = p.mean + shift + p.d * self.candidate_base.get(t, 0, o);
            }
        }
        (parts, samples)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let (_, samples) = self.candidate_samples(x);
        let m = self.num_objectives;
        let terms = samples.iter().enumerate().map(|(t, s)| {
            let w = self.feasibility_weight(&s[m..]);
            if w == 0.0 {
                return 0.0;
            }
            let d = &self.padded[t];
            w * hvi_flat(&s[..m], d.lowers(), d.uppers(), m)
        });
        self.constant + compensated_sum(terms) / self.num_samples as f64
    }

    /// Value and exact sample-path gradient with respect to `x`.
    pub fn value_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (parts, samples) = self.candidate_samples(x);
        let m = self.num_objectives;
        let n_out = self.num_outputs;
        let inv_n = 1.0 / self.num_samples as f64;
        // Adjoint of the mean value with respect to each sample value.
        let mut adj = vec![vec![0.0; n_out]; self.num_samples];
        let mut hgrad = vec![0.0; m];
        let mut terms = Vec::with_capacity(self.num_samples);
        for (t, s) in samples.iter().enumerate() {
            let d = &self.padded[t];
            let h = hvi_flat_with_grad(&s[..m], d.lowers(), d.uppers(), m, &mut hgrad);
            let sig: Vec<f64> = s[m..]
                .iter()
                .zip(&self.feasibility_threshold)
                .map(|(v, z0)| sigmoid((v - z0) / self.tau))
                .collect();
            let w: f64 = sig.iter().product();
            terms.push(w * h);
            if h == 0.0 {
                continue;
            }
            for j in 0..m {
                adj[t][j] = inv_n * w * hgrad[j];
            }
            for (k, sk) in sig.iter().enumerate() {
                adj[t][m + k] = inv_n * h * w * (1.0 - sk) / self.tau;
            }
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        for o in 0..n_out {
            let g: Vec<f64> = adj.iter().map(|a| a[o]).collect();
            self.backprop_output(o, x, &parts[o], &g, grad);
        }
        self.constant + compensated_sum(terms) * inv_n
    }

    /// Accumulates `Σ_t g_t ∂f̃_t(x)/∂x` for output `o` into `grad`.
    pub(crate) fn backprop_output(&self, o: usize, x: &[f64], part: &CandidateOutput, g: &[f64], grad: &mut [f64]) {
        let total: f64 = g.iter().sum();
        if total == 0.0 && g.iter().all(|v| *v == 0.0) {
            return;
        }
        let out = self.model.output(o);
        let cache = &self.outputs[o];
        let train = self.model.train_inputs();
        let p = self.num_points();
        // ∂/∂ℓ through Zℓ, and through d = sqrt(σ² − ℓᵀℓ).
        let mut ell_bar = vec![0.0; p];
        let mut d_bar = 0.0;
        for (t, gt) in g.iter().enumerate() {
            if *gt == 0.0 {
                continue;
            }
            for (e, z) in ell_bar.iter_mut().zip(&cache.z[t]) {
                *e += gt * z;
            }
            d_bar += gt * self.candidate_base.get(t, 0, o);
        }
        let mut var_bar = 0.0;
        if part.d > 0.0 {
            for (e, l) in ell_bar.iter_mut().zip(&part.ell) {
                *e -= d_bar / part.d * l;
            }
            var_bar = d_bar / (2.0 * part.d);
        }
        let mut c_bar = ell_bar;
        back_solve_transpose_in_place(&cache.root, &mut c_bar);

        let n = train.len();
        let mut v_bar = vec![0.0; n];
        let k_obs = self.observed.len();
        if k_obs > 0 {
            let s2 = out.effective_noise();
            let mut beta_bar = vec![0.0; n];
            for (j, &i) in self.observed.iter().enumerate() {
                beta_bar[i] += s2 * c_bar[j];
            }
            forward_solve_in_place(out.cholesky_root(), &mut beta_bar);
            v_bar = beta_bar;
        }
        for (b, vb) in cache.batch_v.iter().enumerate() {
            let cb = c_bar[k_obs + b];
            for (a, w) in v_bar.iter_mut().zip(vb) {
                *a -= cb * w;
            }
        }
        if var_bar != 0.0 {
            for (a, w) in v_bar.iter_mut().zip(&part.v) {
                *a -= 2.0 * var_bar * w;
            }
        }
        let mut k_bar = v_bar;
        back_solve_transpose_in_place(out.cholesky_root(), &mut k_bar);
        for (k, a) in k_bar.iter_mut().zip(&out.alpha) {
            *k += total * a;
        }
        let h = out.hyperparams();
        for (xi, kb) in train.iter().zip(&k_bar) {
            h.add_grad_a(x, xi, *kb, grad);
        }
        for (b, xb) in self.batch_x.iter().enumerate() {
            h.add_grad_a(x, xb, c_bar[k_obs + b], grad);
        }
    }

    /// Folds the selected point into every sample: extends the roots,
    /// realizes its samples with this step's base samples, updates fronts and
    /// decompositions, and banks its improvement. The next step gets fresh
    /// candidate base samples.
    pub fn condition_on(&self, x: &[f64]) -> Result<Self> {
        if x.len() != self.model.dim() {
            return Err(Error::DimensionMismatch("selected point dimension".into()));
        }
        let mut next = self.clone();
        let n_out = self.num_outputs;
        let m = self.num_objectives;
        let p = self.num_points();
        let mut new_values = vec![vec![0.0; n_out]; self.num_samples];
        for o in 0..n_out {
            let part = self.candidate_output(o, x);
            let out = self.model.output(o);
            // Cross-covariance is L ℓ.
            let cache = &self.outputs[o];
            let mut cross = DMatrix::zeros(1, p);
            for i in 0..p {
                let mut s = 0.0;
                for j in 0..=i {
                    s += cache.root[(i, j)] * part.ell[j];
                }
                cross[(0, i)] = s;
            }
            let new_cov = DMatrix::from_element(1, 1, part.var);
            let root = if p == 0 {
                root_with_floor(&new_cov, out.hyperparams().outputscale)?
            } else {
                extend_root_lowrank(&cache.root, &cross, &new_cov)?
            };
            let last: Vec<f64> = (0..=p).map(|j| root[(p, j)]).collect();
            let nc = &mut next.outputs[o];
            for t in 0..self.num_samples {
                nc.z[t].push(self.candidate_base.get(t, 0, o));
                let s: f64 = last.iter().zip(&nc.z[t]).map(|(a, b)| a * b).sum();
                new_values[t][o] = part.mean + s;
            }
            nc.root = root;
            nc.batch_v.push(part.v);
        }
        let mut decomps = Vec::with_capacity(self.num_samples);
        for t in 0..self.num_samples {
            let y = &new_values[t];
            next.values[t].extend_from_slice(y);
            let mut dec = self.decomps[t].clone();
            if self.hard_feasible(y) {
                let gain = hvi_flat(&y[..m], dec.lowers(), dec.uppers(), m);
                if gain > 0.0 {
                    next.banked[t] += gain;
                    dec = dec.with_point(&y[..m]);
                }
            }
            decomps.push(dec);
        }
        next.set_decomps(decomps)?;
        next.batch_x.push(x.to_vec());
        next.constant = compensated_sum(next.banked.iter().copied()) / self.num_samples as f64;
        next.candidate_base = candidate_base(self.sampler, self.num_samples, n_out, self.seed, next.batch_x.len(), self.observed.len());
        Ok(next)
    }
}

fn observed_seed(seed: u64) -> u64 {
    derive_seed(seed, OBSERVED_STREAM)
}

/// Base samples for the candidate of greedy step `step`. They come from the
/// same scrambled Sobol sequence as the observed points, counting dimensions
/// down from the top of the table so they never depend on how many points are
/// observed. Should the two ranges meet, pseudo-random normals take over.
pub(crate) fn candidate_base(sampler: BaseSampler, num_samples: usize, num_outputs: usize, seed: u64, step: usize, num_observed: usize) -> SampleArray {
    let stride = sample_stride(num_outputs);
    let mut out = SampleArray::zeros(num_samples, 1, num_outputs);
    for o in 0..num_outputs {
        let offset = step * stride + o;
        let col = if offset < SOBOL_MAX_DIM && SOBOL_MAX_DIM - 1 - offset >= num_observed * stride {
            base_column(sampler, num_samples, SOBOL_MAX_DIM - 1 - offset, observed_seed(seed))
        } else {
            base_column(BaseSampler::Iid, num_samples, SOBOL_MAX_DIM + offset, derive_seed(seed, CANDIDATE_STREAM))
        };
        for (t, v) in col.into_iter().enumerate() {
            out.set(t, 0, o, v);
        }
    }
    out
}
