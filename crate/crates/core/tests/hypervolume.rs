use mobo_core::hypervolume::{hvi_joint_iep, hvi_single, hypervolume, hypervolume_of_points};
use mobo_core::pareto::{dominates, pareto_front, ParetoFront};
use mobo_core::partitioning::{decompose_nondominated, pad_decompositions};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cloud(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..m).map(|_| rng.gen::<f64>()).collect()).collect()
}

/// Sum of slabs of a two-objective front sorted by the first objective.
fn staircase_hv(points: &[Vec<f64>], r: &[f64]) -> f64 {
    let mut inside: Vec<&Vec<f64>> = points.iter().filter(|p| p[0] > r[0] && p[1] > r[1]).collect();
    inside.sort_by(|a, b| b[0].total_cmp(&a[0]));
    let mut hv = 0.0;
    let mut height = r[1];
    for p in inside {
        if p[1] > height {
            hv += (p[0] - r[0]) * (p[1] - height);
            height = p[1];
        }
    }
    hv
}

/// Rejection estimate over the box spanned by `r` and the ideal point, with
/// its standard error.
fn monte_carlo_hv(points: &[Vec<f64>], r: &[f64], draws: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let m = r.len();
    let cap: Vec<f64> = (0..m).map(|j| points.iter().map(|p| p[j]).fold(r[j], f64::max)).collect();
    let volume: f64 = cap.iter().zip(r).map(|(c, l)| c - l).product();
    if volume == 0.0 {
        return (0.0, 0.0);
    }
    let mut z = vec![0.0; m];
    let mut hits = 0usize;
    for _ in 0..draws {
        for j in 0..m {
            z[j] = rng.gen_range(r[j]..cap[j]);
        }
        if points.iter().any(|p| p.iter().zip(&z).all(|(a, b)| a >= b)) {
            hits += 1;
        }
    }
    let p = hits as f64 / draws as f64;
    (volume * p, volume * (p * (1.0 - p) / draws as f64).sqrt())
}

#[test]
fn two_objective_hypervolume_is_the_staircase_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let n = rng.gen_range(1..=10);
        let pts = random_cloud(&mut rng, n, 2);
        let r = vec![rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
        let hv = hypervolume_of_points(&pts, &r).unwrap();
        assert!((hv - staircase_hv(&pts, &r)).abs() <= 1e-12, "{pts:?} {r:?}");
    }
}

#[test]
fn hypervolume_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut agree = 0;
    let cases = 40;
    for case in 0..cases {
        let m = 2 + case % 3;
        let n = rng.gen_range(1..=10);
        let pts = random_cloud(&mut rng, n, m);
        let r: Vec<f64> = (0..m).map(|_| rng.gen_range(-0.5..0.3)).collect();
        let hv = hypervolume_of_points(&pts, &r).unwrap();
        let (est, se) = monte_carlo_hv(&pts, &r, 200_000, &mut rng);
        if (hv - est).abs() <= 3.0 * se.max(1e-12) {
            agree += 1;
        }
    }
    assert!(agree >= 38, "{agree}/{cases}");
}

#[test]
fn hand_computed_examples() {
    let front = pareto_front(&[vec![2.0, 3.0], vec![3.0, 1.0]]).unwrap();
    let r = [0.0, 0.0];
    assert_eq!(hypervolume(&front, &r).unwrap(), 7.0);
    let d = decompose_nondominated(&front, &r).unwrap();
    assert_eq!(hvi_single(&[3.0, 2.0], &d), 1.0);
    assert_eq!(hvi_single(&[4.0, 4.0], &d), 9.0);
    assert_eq!(hvi_single(&[1.0, 1.0], &d), 0.0);
    let single = pareto_front(&[vec![2.5, 2.5]]).unwrap();
    let d = decompose_nondominated(&single, &r).unwrap();
    // The union gains a 0.5 × 2 strip on each side of the square.
    let iep = hvi_joint_iep(&[vec![3.0, 2.0], vec![2.0, 3.0]], &d).unwrap();
    assert!((iep - 2.0).abs() < 1e-12);
    // Zero-area front on the second objective.
    let zdt = (0..=2000)
        .map(|i| {
            let f1 = i as f64 / 2000.0;
            vec![-f1, -(1.0 - f1.sqrt())]
        })
        .collect::<Vec<_>>();
    let hv = hypervolume_of_points(&zdt, &[-1.1, -1.1]).unwrap();
    assert!((hv - (0.11 + 0.1 + 2.0 / 3.0)).abs() < 1e-3);
}

#[test]
fn box_volumes_complement_the_hypervolume() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let pts = random_cloud(&mut rng, 6, 3);
        let front = pareto_front(&pts).unwrap();
        let r = [0.0; 3];
        let d = decompose_nondominated(&front, &r).unwrap();
        let cap = [1.5, 2.0, 1.25];
        let boxes: f64 = (0..d.num_boxes())
            .map(|k| {
                (0..3)
                    .map(|j| (d.upper(k)[j].min(cap[j]) - d.lower(k)[j]).max(0.0))
                    .product::<f64>()
            })
            .sum();
        let total: f64 = cap.iter().product();
        assert!((boxes + hypervolume(&front, &r).unwrap() - total).abs() < 1e-9);
    }
}

#[test]
fn padding_leaves_improvements_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let r = [0.0; 3];
    let decomps: Vec<_> = [1, 4, 7]
        .iter()
        .map(|&n| decompose_nondominated(&pareto_front(&random_cloud(&mut rng, n, 3)).unwrap(), &r).unwrap())
        .collect();
    let padded = pad_decompositions(&decomps).unwrap();
    let k = padded[0].num_boxes();
    assert!(padded.iter().all(|d| d.num_boxes() == k));
    for _ in 0..100 {
        let y: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.2..1.2)).collect();
        for (a, b) in decomps.iter().zip(&padded) {
            assert!((hvi_single(&y, a) - hvi_single(&y, b)).abs() <= 1e-12);
        }
    }
}

fn cloud_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (2usize..=4).prop_flat_map(|m| {
        (
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, m), 0..12),
            prop::collection::vec(-0.5f64..0.2, m),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn front_is_minimal_and_covers_the_input((pts, _) in cloud_strategy()) {
        let front = pareto_front(&pts).unwrap();
        for a in front.points() {
            for b in front.points() {
                prop_assert!(!dominates(a, b).unwrap());
            }
        }
        for p in &pts {
            prop_assert!(front.points().iter().any(|f| f == p || dominates(f, p).unwrap()));
        }
    }

    #[test]
    fn improvement_is_the_hypervolume_difference((pts, r) in cloud_strategy(), extra in prop::collection::vec(prop::collection::vec(-0.2f64..1.2, 4), 1..4)) {
        let m = r.len();
        // An empty input carries no objective count.
        let front = if pts.is_empty() { ParetoFront::empty(m) } else { pareto_front(&pts).unwrap() };
        let base = hypervolume(&front, &r).unwrap();
        let d = decompose_nondominated(&front, &r).unwrap();
        let ys: Vec<Vec<f64>> = extra.iter().map(|y| y[..m].to_vec()).collect();
        let mut all = pts.clone();
        all.push(ys[0].clone());
        let one = hypervolume_of_points(&all, &r).unwrap() - base;
        prop_assert!((hvi_single(&ys[0], &d) - one).abs() <= 1e-9);
        all.extend(ys[1..].iter().cloned());
        let joint = hypervolume_of_points(&all, &r).unwrap() - base;
        prop_assert!((hvi_joint_iep(&ys, &d).unwrap() - joint).abs() <= 1e-9);
        prop_assert!(joint >= one - 1e-12);
    }

    #[test]
    fn hypervolume_ignores_order_and_grows_with_points((pts, r) in cloud_strategy(), seed in any::<u64>()) {
        prop_assume!(!pts.is_empty());
        let hv = hypervolume_of_points(&pts, &r).unwrap();
        let mut shuffled = pts.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.gen_range(0..=i));
        }
        prop_assert!((hypervolume_of_points(&shuffled, &r).unwrap() - hv).abs() <= 1e-12);
        let fewer = hypervolume_of_points(&pts[..pts.len() - 1], &r).unwrap();
        prop_assert!(fewer <= hv + 1e-12);
    }
}
