#![allow(dead_code)]

use std::sync::Arc;

use mobo_core::acquisition::ObjectiveSpec;
use mobo_core::pareto::infer_reference_point;
use mobo_core::surrogate::{FitOptions, GaussianProcessSurrogate, NoiseMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect()
}

/// Smooth random test functions with conflicting objectives.
pub fn synthetic_outputs(x: &[Vec<f64>], outputs: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let d = x[0].len();
    let coefs: Vec<(Vec<f64>, f64)> = (0..outputs)
        .map(|_| ((0..d).map(|_| rng.gen_range(-3.0..3.0)).collect(), rng.gen_range(0.0..6.0)))
        .collect();
    x.iter()
        .map(|p| {
            coefs
                .iter()
                .enumerate()
                .map(|(o, (a, b))| {
                    let lin: f64 = a.iter().zip(p).map(|(c, v)| c * v).sum();
                    let sign = if o % 2 == 0 { 1.0 } else { -1.0 };
                    (lin + b).sin() + sign * p[0]
                })
                .collect()
        })
        .collect()
}

pub struct Instance {
    pub model: Arc<GaussianProcessSurrogate>,
    pub spec: ObjectiveSpec,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
}

/// Fits a model with `m` objectives and `v` constraints on `n` noisy points.
pub fn fitted_instance(seed: u64, n: usize, d: usize, m: usize, v: usize, noise: NoiseMode) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = random_points(&mut rng, n, d);
    let clean = synthetic_outputs(&x, m + v, seed);
    let y: Vec<Vec<f64>> = clean
        .iter()
        .map(|r| r.iter().map(|f| f + 0.05 * rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let options = FitOptions {
        restarts: 2,
        seed,
        ..Default::default()
    };
    let model = Arc::new(GaussianProcessSurrogate::fit_map_with(&x, &y, noise, &options).unwrap());
    let spec = model_space_spec(&model, m);
    Instance { model, spec, x, y }
}

/// Reference point `nadir − 0.1 (ideal − nadir)` of the standardized targets.
pub fn model_space_spec(model: &GaussianProcessSurrogate, m: usize) -> ObjectiveSpec {
    let targets = model.train_targets();
    let nadir: Vec<f64> = (0..m).map(|j| targets.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min)).collect();
    let ideal: Vec<f64> = (0..m).map(|j| targets.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max)).collect();
    ObjectiveSpec {
        reference_point: infer_reference_point(&nadir, &ideal, 0.1).unwrap(),
    }
}

/// Central differences with step `h`.
pub fn finite_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            (f(&xp) - f(&xm)) / (2.0 * h)
        })
        .collect()
}

/// Relative agreement `‖g − fd‖∞ ≤ rel · ‖fd‖∞`, with a tiny absolute floor
/// for flat regions.
pub fn gradients_agree(g: &[f64], fd: &[f64], rel: f64) -> bool {
    let scale = fd.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let err = g.iter().zip(fd).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
    err <= rel * scale + 1e-10
}

pub fn interior_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(0.05..0.95)).collect()
}
