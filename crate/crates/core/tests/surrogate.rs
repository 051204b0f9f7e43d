use mobo_core::linalg::cholesky_with_jitter;
use mobo_core::surrogate::{
    draw_joint_samples, draw_rff_path, extend_root_lowrank, matern52, qmc_normal_samples, FitOptions,
    GaussianProcessSurrogate, KernelHyperparams, NoiseMode, SampleArray,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect()
}

fn hyper(d: usize, ls: f64, scale: f64, noise: f64) -> KernelHyperparams {
    KernelHyperparams::new(vec![ls; d], scale, noise, 0.1)
}

/// Dense-formula oracle: explicit matrices and an LU solve.
fn dense_posterior(x: &[Vec<f64>], y: &[f64], h: &KernelHyperparams, q: &[f64]) -> (f64, f64) {
    let n = x.len();
    let kmat = DMatrix::from_fn(n, n, |i, j| {
        h.k(&x[i], &x[j]) + if i == j { h.noise_variance } else { 0.0 }
    });
    let kx = DVector::from_iterator(n, x.iter().map(|xi| h.k(q, xi)));
    let resid = DVector::from_iterator(n, y.iter().map(|v| v - h.mean_constant));
    let lu = kmat.lu();
    let a = lu.solve(&resid).unwrap();
    let b = lu.solve(&kx).unwrap();
    (h.mean_constant + kx.dot(&a), h.outputscale - kx.dot(&b))
}

#[test]
fn noiseless_line_interpolates() {
    let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 / 4.0]).collect();
    let y: Vec<Vec<f64>> = x.iter().map(|p| vec![p[0]]).collect();
    let model = GaussianProcessSurrogate::fit_map(&x, &y, NoiseMode::Known(vec![1e-10])).unwrap();
    let post = model.posterior(&x).unwrap();
    let mean = post.unstandardized_mean();
    for i in 0..5 {
        assert!((mean[(i, 0)] - y[i][0]).abs() < 1e-4, "{} vs {}", mean[(i, 0)], y[i][0]);
        let var = post.covariance(0)[(i, i)];
        assert!(var <= 1e-8, "variance {var}");
    }
}

#[test]
fn single_point_is_rejected() {
    let r = GaussianProcessSurrogate::fit_map(&[vec![0.5]], &[vec![1.0]], NoiseMode::Inferred);
    assert!(r.is_err());
    let nan = GaussianProcessSurrogate::fit_map(&[vec![0.1], vec![0.5]], &[vec![1.0], vec![f64::NAN]], NoiseMode::Inferred);
    assert!(nan.is_err());
}

#[test]
fn inferred_noise_recovers_the_truth() {
    // Across 50 repetitions the typical inferred noise falls in [σ²/2, 2σ²].
    let sigma: f64 = 0.1;
    let mut estimates = Vec::new();
    for rep in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + rep);
        let x = random_points(&mut rng, 20, 1);
        let y: Vec<Vec<f64>> = x
            .iter()
            .map(|p| {
                let e: f64 = StandardNormal.sample(&mut rng);
                vec![(6.0 * p[0]).sin() + sigma * e]
            })
            .collect();
        let opts = FitOptions {
            seed: rep,
            ..Default::default()
        };
        let model = GaussianProcessSurrogate::fit_map_with(&x, &y, NoiseMode::Inferred, &opts).unwrap();
        let st = model.standardization()[0];
        estimates.push(model.hyperparams()[0].noise_variance * st.std * st.std);
    }
    estimates.sort_by(f64::total_cmp);
    let median = 0.5 * (estimates[24] + estimates[25]);
    let s2 = sigma * sigma;
    assert!(median >= 0.5 * s2 && median <= 2.0 * s2, "median inferred noise {median}");
}

#[test]
fn prior_posterior() {
    let h = hyper(2, 0.4, 1.7, 0.0);
    let model = GaussianProcessSurrogate::prior(2, vec![h.clone()]).unwrap();
    let post = model.posterior(&[vec![0.3, 0.3]]).unwrap();
    assert_eq!(post.mean[(0, 0)], h.mean_constant);
    assert!((post.covariance(0)[(0, 0)] - h.outputscale).abs() < 1e-12);
}

#[test]
fn posterior_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [3, 12, 30] {
        let x = random_points(&mut rng, n, 3);
        let y: Vec<Vec<f64>> = x.iter().map(|p| vec![p[0] * 3.0 - p[1] + (5.0 * p[2]).cos()]).collect();
        let h = hyper(3, 0.35, 1.3, 0.02);
        let model = GaussianProcessSurrogate::from_hyperparams(&x, &y, vec![h.clone()]).unwrap();
        let ystd: Vec<f64> = model.train_targets().iter().map(|r| r[0]).collect();
        let q = random_points(&mut rng, 5, 3);
        let post = model.posterior(&q).unwrap();
        let cov = post.covariance(0);
        for (i, qi) in q.iter().enumerate() {
            let (m, v) = dense_posterior(&x, &ystd, &h, qi);
            assert!((post.mean[(i, 0)] - m).abs() < 1e-8);
            assert!((cov[(i, i)] - v).abs() < 1e-8);
        }
    }
}

#[test]
fn nearby_pair_covariance_matches_kernel_arithmetic() {
    let x = vec![vec![0.1, 0.2], vec![0.8, 0.5], vec![0.4, 0.9]];
    let y = vec![vec![1.0], vec![-0.5], vec![0.3]];
    let h = hyper(2, 0.5, 1.1, 1e-3);
    let model = GaussianProcessSurrogate::from_hyperparams(&x, &y, vec![h.clone()]).unwrap();
    let q = vec![vec![0.5, 0.5], vec![0.52, 0.49]];
    let post = model.posterior(&q).unwrap();
    // Σ = K_qq − K_qn (K_nn + σ²I)⁻¹ K_nq, by explicit matrix arithmetic.
    let knn = DMatrix::from_fn(3, 3, |i, j| h.k(&x[i], &x[j]) + if i == j { h.noise_variance } else { 0.0 });
    let kqn = DMatrix::from_fn(2, 3, |i, j| h.k(&q[i], &x[j]));
    let kqq = DMatrix::from_fn(2, 2, |i, j| h.k(&q[i], &q[j]));
    let expected = &kqq - &kqn * knn.try_inverse().unwrap() * kqn.transpose();
    assert!((post.covariance(0) - expected).abs().max() < 1e-8);
}

#[test]
fn joint_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_points(&mut rng, 8, 2);
    let y: Vec<Vec<f64>> = x.iter().map(|p| vec![p[0] + p[1], p[0] * p[1]]).collect();
    let model = GaussianProcessSurrogate::from_hyperparams(&x, &y, vec![hyper(2, 0.3, 1.0, 0.05), hyper(2, 0.6, 0.8, 0.01)]).unwrap();
    let q = vec![vec![0.2, 0.3], vec![0.25, 0.35], vec![0.9, 0.1]];
    let post = model.posterior(&q).unwrap();

    let zeros = SampleArray::zeros(2, 3, 2);
    let s = draw_joint_samples(&post, &zeros).unwrap();
    for i in 0..3 {
        for o in 0..2 {
            assert_eq!(s.get(1, i, o), post.mean[(i, o)]);
        }
    }
    assert!(draw_joint_samples(&post, &SampleArray::zeros(2, 4, 2)).is_err());

    let n = 100_000;
    let base = qmc_normal_samples(n, 3, 2, 11);
    let a = draw_joint_samples(&post, &base).unwrap();
    let b = draw_joint_samples(&post, &base).unwrap();
    assert_eq!(a, b);
    for o in 0..2 {
        let cov = post.covariance(o);
        for i in 0..3 {
            for j in 0..=i {
                let mi = post.mean[(i, o)];
                let mj = post.mean[(j, o)];
                let prods: Vec<f64> = (0..n).map(|t| (a.get(t, i, o) - mi) * (a.get(t, j, o) - mj)).collect();
                let est = prods.iter().sum::<f64>() / n as f64;
                let var = prods.iter().map(|p| (p - est).powi(2)).sum::<f64>() / (n - 1) as f64;
                let se = (var / n as f64).sqrt();
                assert!((est - cov[(i, j)]).abs() <= 3.0 * se + 1e-12, "({i},{j},{o}): {est} vs {}", cov[(i, j)]);
            }
        }
    }
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let pts = random_points(rng, n, 3);
    let h = hyper(3, 0.4, 1.0, 0.0);
    DMatrix::from_fn(n, n, |i, j| h.k(&pts[i], &pts[j]) + if i == j { 1e-3 } else { 0.0 })
}

#[test]
fn low_rank_extension_matches_recompute() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for n in [1, 10, 50] {
        for k in [1, 4, 8] {
            let a = random_spd(&mut rng, n + k);
            let (full, _) = cholesky_with_jitter(&a).unwrap();
            let (head, _) = cholesky_with_jitter(&a.view((0, 0), (n, n)).into_owned()).unwrap();
            let ext = extend_root_lowrank(&head, &a.view((n, 0), (k, n)).into_owned(), &a.view((n, n), (k, k)).into_owned()).unwrap();
            assert!((&ext - &full).abs().max() <= 1e-8);
            assert_eq!(ext.view((0, 0), (n, n)).into_owned(), head);
            // Chained single-point extensions agree with the block extension.
            let mut chained = head.clone();
            for j in 0..k {
                let m = n + j;
                chained = extend_root_lowrank(
                    &chained,
                    &a.view((m, 0), (1, m)).into_owned(),
                    &a.view((m, m), (1, 1)).into_owned(),
                )
                .unwrap();
            }
            assert!((&chained - &ext).abs().max() <= 1e-8);
        }
    }
}

#[test]
fn extension_by_a_duplicate_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let a = random_spd(&mut rng, 5);
    let (root, _) = cholesky_with_jitter(&a).unwrap();
    // The new point is an exact copy of point 2.
    let cross = a.view((2, 0), (1, 5)).into_owned();
    let new = a.view((2, 2), (1, 1)).into_owned();
    let ext = extend_root_lowrank(&root, &cross, &new).unwrap();
    let diag = ext[(5, 5)];
    let jitter_scale = new[(0, 0)];
    assert!(diag > 0.0 && diag <= (1e-4 * jitter_scale).sqrt() * 1.01, "diag {diag}");
}

#[test]
fn rff_features_approximate_the_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let lengthscales = vec![0.3, 0.7, 0.5];
    let outputscale = 1.4;
    let b = 100_000;
    let model = GaussianProcessSurrogate::prior(3, vec![KernelHyperparams::new(lengthscales.clone(), outputscale, 0.0, 0.0)]).unwrap();
    let path = draw_rff_path(&model, b, 5).unwrap();
    let comp = &path.components[0];
    let h = KernelHyperparams::new(lengthscales, outputscale, 0.0, 0.0);
    for _ in 0..20 {
        let x: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|v| v + rng.gen_range(-0.3..0.3)).collect();
        let mut acc = 0.0;
        for (omega, phase) in comp.frequencies.chunks_exact(3).zip(&comp.phases) {
            let ax = omega.iter().zip(&x).map(|(a, c)| a * c).sum::<f64>() + phase;
            let ay = omega.iter().zip(&y).map(|(a, c)| a * c).sum::<f64>() + phase;
            acc += 2.0 * outputscale * ax.cos() * ay.cos();
        }
        let approx = acc / b as f64;
        let exact = matern52(h.distance(&x, &y), outputscale);
        assert!((approx - exact).abs() <= 0.02 * exact, "{approx} vs {exact}");
    }
}

#[test]
fn rff_path_tracks_training_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let x = random_points(&mut rng, 15, 2);
    let y: Vec<Vec<f64>> = x.iter().map(|p| vec![(4.0 * p[0]).sin() * p[1]]).collect();
    let model = GaussianProcessSurrogate::from_hyperparams(&x, &y, vec![hyper(2, 0.4, 1.0, 1e-6)]).unwrap();
    let targets = model.train_targets();
    let noise = model.hyperparams()[0].noise_variance;
    let path = draw_rff_path(&model, 500, 2).unwrap();
    let a = draw_rff_path(&model, 500, 2).unwrap();
    let mut inside = 0;
    for (i, xi) in x.iter().enumerate() {
        let v = path.evaluate(xi)[0];
        assert_eq!(v, a.evaluate(xi)[0]);
        let (_, var) = model.mean_var(xi)[0];
        let sd = (var + noise).sqrt();
        if (v - targets[i][0]).abs() <= 3.0 * sd {
            inside += 1;
        }
    }
    assert!(inside as f64 >= 0.95 * 15.0, "{inside}/15 within 3 sd");
}

#[test]
fn fitted_model_root_reconstructs_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random_points(&mut rng, 12, 2);
    let y: Vec<Vec<f64>> = x.iter().map(|p| vec![p[0] - p[1] * p[1]]).collect();
    let model = GaussianProcessSurrogate::fit_map(&x, &y, NoiseMode::Inferred).unwrap();
    let out = model.output(0);
    let h = out.hyperparams();
    let l = out.cholesky_root();
    let kmat = DMatrix::from_fn(12, 12, |i, j| h.k(&x[i], &x[j]) + if i == j { out.effective_noise() } else { 0.0 });
    let rel = (l * l.transpose() - &kmat).norm() / kmat.norm();
    assert!(rel <= 1e-8);
}
