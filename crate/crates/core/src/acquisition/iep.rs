//! Joint batch value by inclusion–exclusion over freshly built joint samples.

use nalgebra::DMatrix;

use super::batch_base_samples;
use super::cached::CachedAcquisitionState;
use crate::hypervolume::{hvi_joint_iep_unchecked, IEP_MAX_BATCH};
use crate::linalg::{back_solve_transpose_in_place, compensated_sum};
use crate::surrogate::gp::root_with_floor;
use crate::{Error, Result};

/// Mean joint HVI of `batch` over the state's samples. The joint covariance
/// over observed and batch points is factored from scratch; batch point `j`
/// uses the candidate base samples of greedy step `j`, so this matches the
/// sequential cached evaluation on the same randomness.
pub fn qnehvi_iep_value(state: &CachedAcquisitionState, batch: &[Vec<f64>]) -> Result<f64> {
    let q = batch.len();
    if q == 0 {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    if q > IEP_MAX_BATCH {
        return Err(Error::BatchTooLarge { q, limit: IEP_MAX_BATCH });
    }
    if !state.batch().is_empty() {
        return Err(Error::InvalidInput("state already holds a partial batch".into()));
    }
    let model = state.model();
    let m = state.num_objectives();
    if model.num_outputs() != m {
        return Err(Error::InvalidInput("inclusion–exclusion path is unconstrained only".into()));
    }
    if batch.iter().any(|x| x.len() != model.dim()) {
        return Err(Error::DimensionMismatch("batch point dimension".into()));
    }
    let n_samples = state.num_samples();
    let observed = state.observed();
    let k = observed.len();
    let train = model.train_inputs();
    let base = batch_base_samples(state.sampler(), n_samples, q, m, state.seed(), k);
    // `[t][j][o]` joint samples at the batch.
    let mut ys = vec![vec![vec![0.0; m]; q]; n_samples];
    for o in 0..m {
        let out = model.output(o);
        let h = out.hyperparams();
        let s2 = out.effective_noise();
        let (_, cov_s) = model.training_posterior(o, observed);
        let parts: Vec<(f64, f64, Vec<f64>)> = batch.iter().map(|x| out.mean_var_v(train, x)).collect();
        let betas: Vec<Vec<f64>> = parts
            .iter()
            .map(|(_, _, v)| {
                let mut b = v.clone();
                back_solve_transpose_in_place(out.cholesky_root(), &mut b);
                b
            })
            .collect();
        let p = k + q;
        let mut cov = DMatrix::zeros(p, p);
        cov.view_mut((0, 0), (k, k)).copy_from(&cov_s);
        for a in 0..q {
            for (i, &s) in observed.iter().enumerate() {
                let c = s2 * betas[a][s];
                cov[(k + a, i)] = c;
                cov[(i, k + a)] = c;
            }
            for b in 0..=a {
                let dot: f64 = parts[a].2.iter().zip(&parts[b].2).map(|(x, y)| x * y).sum();
                let c = if a == b { parts[a].1 } else { h.k(&batch[a], &batch[b]) - dot };
                cov[(k + a, k + b)] = c;
                cov[(k + b, k + a)] = c;
            }
        }
        let root = root_with_floor(&cov, h.outputscale)?;
        let z_obs = state.whitened_samples(o);
        for t in 0..n_samples {
            let z: Vec<f64> = z_obs[t].iter().copied().chain((0..q).map(|j| base.get(t, j, o))).collect();
            for a in 0..q {
                let row = k + a;
                let s: f64 = (0..=row).map(|j| root[(row, j)] * z[j]).sum();
                ys[t][a][o] = parts[a].0 + s;
            }
        }
    }
    let decomps = state.padded_decompositions();
    let terms = ys
        .iter()
        .zip(decomps)
        .map(|(y, d)| hvi_joint_iep_unchecked(y, d.lowers(), d.uppers(), m));
    Ok(compensated_sum(terms) / n_samples as f64)
}
