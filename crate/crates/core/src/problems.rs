//! Synthetic benchmark problems in maximization form.
//!
//! Inputs are taken on the unit cube and mapped affinely onto each problem's
//! raw bounds. Minimization formulas are negated. Constraint outputs are
//! slacks, feasible when `c ≥ 0`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result};

/// Registry ids of the built-in problems.
pub const PROBLEM_IDS: [&str; 7] = [
    "branincurrin",
    "dtlz2-m2-d6",
    "zdt1-d4",
    "vehiclesafety",
    "carsideimpact",
    "sphereellipsoidal",
    "constrained-branincurrin",
];

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    BraninCurrin,
    Dtlz2,
    Zdt1,
    VehicleSafety,
    CarSideImpact,
    SphereEllipsoidal,
    ConstrainedBraninCurrin,
}

/// A benchmark problem with its reference point, outcome ranges and the
/// hypervolume of its true (feasible) Pareto front.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub id: String,
    pub dim: usize,
    pub num_objectives: usize,
    pub num_constraints: usize,
    /// Raw input interval per dimension.
    pub bounds: Vec<(f64, f64)>,
    pub reference_point: Vec<f64>,
    /// Default noise standard deviation as a fraction of each outcome's range.
    pub noise_fraction: f64,
    /// `(min, max)` of every outcome over the search space, objectives first.
    pub outcome_ranges: Vec<(f64, f64)>,
    pub true_hypervolume: f64,
    kind: Kind,
}

/// Looks up a problem by registry id. Besides the fixed ids, `dtlz2-m<M>-d<d>`
/// and `zdt1-d<d>` are accepted for other sizes.
pub fn problem(id: &str) -> Result<ProblemSpec> {
    let unknown = || Error::UnknownProblem(id.to_string());
    let spec = match id {
        "branincurrin" => branin_currin(),
        "constrained-branincurrin" => constrained_branin_currin(),
        "vehiclesafety" => vehicle_safety(),
        "carsideimpact" => car_side_impact(),
        "sphereellipsoidal" => sphere_ellipsoidal(),
        _ => {
            if let Some(rest) = id.strip_prefix("dtlz2-m") {
                let (m, d) = rest.split_once("-d").ok_or_else(unknown)?;
                let m: usize = m.parse().map_err(|_| unknown())?;
                let d: usize = d.parse().map_err(|_| unknown())?;
                if m < 2 || d < m {
                    return Err(unknown());
                }
                dtlz2(m, d)
            } else if let Some(d) = id.strip_prefix("zdt1-d") {
                let d: usize = d.parse().map_err(|_| unknown())?;
                if d < 2 {
                    return Err(unknown());
                }
                zdt1(d)
            } else {
                return Err(unknown());
            }
        }
    };
    Ok(spec)
}

/// All registered problems in id order.
pub fn registry() -> Vec<ProblemSpec> {
    PROBLEM_IDS.iter().map(|id| problem(id).expect("registered")).collect()
}

// Registry constants come from the offline procedure in tools/true_fronts.py:
// 2^20 scrambled Sobol points (seed 0) give the outcome ranges (polished by
// local search) and the dense front; two-objective fronts are refined by an
// epsilon-constraint sweep and integrated, larger ones are refined pointwise.

fn branin_currin() -> ProblemSpec {
    ProblemSpec {
        id: "branincurrin".into(),
        dim: 2,
        num_objectives: 2,
        num_constraints: 0,
        bounds: vec![(0.0, 1.0); 2],
        reference_point: vec![-18.0, -6.0],
        noise_fraction: 0.05,
        outcome_ranges: vec![BRANIN_RANGE, CURRIN_RANGE],
        true_hypervolume: BRANIN_CURRIN_HV,
        kind: Kind::BraninCurrin,
    }
}

fn constrained_branin_currin() -> ProblemSpec {
    ProblemSpec {
        id: "constrained-branincurrin".into(),
        num_constraints: 1,
        reference_point: vec![-80.0, -12.0],
        outcome_ranges: vec![BRANIN_RANGE, CURRIN_RANGE, (-62.5, 50.0)],
        true_hypervolume: CONSTRAINED_BRANIN_CURRIN_HV,
        kind: Kind::ConstrainedBraninCurrin,
        ..branin_currin()
    }
}

fn dtlz2(m: usize, d: usize) -> ProblemSpec {
    // g ranges over [0, k/4] with k = d − M + 1 tail variables.
    let top = 1.0 + (d - m + 1) as f64 / 4.0;
    let unit_ball = PI.powf(m as f64 / 2.0) / statrs::function::gamma::gamma(m as f64 / 2.0 + 1.0);
    ProblemSpec {
        id: format!("dtlz2-m{m}-d{d}"),
        dim: d,
        num_objectives: m,
        num_constraints: 0,
        bounds: vec![(0.0, 1.0); d],
        reference_point: vec![-1.1; m],
        noise_fraction: 0.10,
        outcome_ranges: vec![(-top, 0.0); m],
        // The front is the unit sphere in the negative orthant: the box of
        // side 1.1 minus the orthant's share of the unit ball.
        true_hypervolume: 1.1f64.powi(m as i32) - unit_ball / 2f64.powi(m as i32),
        kind: Kind::Dtlz2,
    }
}

fn zdt1(d: usize) -> ProblemSpec {
    ProblemSpec {
        id: format!("zdt1-d{d}"),
        dim: d,
        num_objectives: 2,
        num_constraints: 0,
        bounds: vec![(0.0, 1.0); d],
        reference_point: vec![-1.1, -1.1],
        noise_fraction: 0.05,
        outcome_ranges: vec![(-1.0, 0.0), (-10.0, 0.0)],
        // ∫₀¹ (0.1 + √a) da + 0.1 · 1.1
        true_hypervolume: 0.1 + 2.0 / 3.0 + 0.11,
        kind: Kind::Zdt1,
    }
}

fn vehicle_safety() -> ProblemSpec {
    ProblemSpec {
        id: "vehiclesafety".into(),
        dim: 5,
        num_objectives: 3,
        num_constraints: 0,
        bounds: vec![(1.0, 3.0); 5],
        reference_point: vec![-1698.55, -11.21, -0.29],
        noise_fraction: 0.01,
        outcome_ranges: VEHICLE_SAFETY_RANGES.to_vec(),
        true_hypervolume: VEHICLE_SAFETY_HV,
        kind: Kind::VehicleSafety,
    }
}

fn car_side_impact() -> ProblemSpec {
    ProblemSpec {
        id: "carsideimpact".into(),
        dim: 7,
        num_objectives: 4,
        num_constraints: 0,
        bounds: vec![
            (0.5, 1.5),
            (0.45, 1.35),
            (0.5, 1.5),
            (0.5, 1.5),
            (0.875, 2.625),
            (0.4, 1.2),
            (0.4, 1.2),
        ],
        reference_point: vec![-45.49, -4.51, -13.34, -10.39],
        noise_fraction: 0.01,
        outcome_ranges: CAR_SIDE_IMPACT_RANGES.to_vec(),
        true_hypervolume: CAR_SIDE_IMPACT_HV,
        kind: Kind::CarSideImpact,
    }
}

fn sphere_ellipsoidal() -> ProblemSpec {
    ProblemSpec {
        id: "sphereellipsoidal".into(),
        dim: 5,
        num_objectives: 2,
        num_constraints: 0,
        bounds: vec![(-5.0, 5.0); 5],
        reference_point: vec![-261.0, -6.77e6],
        noise_fraction: 0.05,
        outcome_ranges: SPHERE_ELLIPSOIDAL_RANGES.to_vec(),
        true_hypervolume: SPHERE_ELLIPSOIDAL_HV,
        kind: Kind::SphereEllipsoidal,
    }
}

const BRANIN_RANGE: (f64, f64) = (-308.12909601160663, -0.3978873577297384);
const CURRIN_RANGE: (f64, f64) = (-13.798722044728432, -1.1804080208620997);
const BRANIN_CURRIN_HV: f64 = 59.395391899431836;
const CONSTRAINED_BRANIN_CURRIN_HV: f64 = 609.192754139939;
const VEHICLE_SAFETY_RANGES: [(f64, f64); 3] = [
    (-1704.5588675, -1661.7078224999998),
    (-13.404063194646495, -6.363999999999999),
    (-0.264, -0.03939999999999995),
];
const VEHICLE_SAFETY_HV: f64 = 33.99423486279043;
const CAR_SIDE_IMPACT_RANGES: [(f64, f64); 4] = [
    (-42.768012, -15.576004000000003),
    (-4.42725, -3.58525),
    (-13.091381250000001, -10.61064375),
    (0.14765224667932322, 36.64275777000001),
];
const CAR_SIDE_IMPACT_HV: f64 = 1842.5597829078986;
const SPHERE_ELLIPSOIDAL_RANGES: [(f64, f64); 2] = [(-454.71633928999995, -203.71), (-73015155.85529788, -135.60000001936496)];
const SPHERE_ELLIPSOIDAL_HV: f64 = 375077420.1285757;

impl ProblemSpec {
    pub fn num_outcomes(&self) -> usize {
        self.num_objectives + self.num_constraints
    }

    /// Unit-cube point to raw coordinates.
    pub fn to_raw(&self, x_unit: &[f64]) -> Vec<f64> {
        x_unit.iter().zip(&self.bounds).map(|(u, (lo, hi))| lo + (hi - lo) * u).collect()
    }

    /// Raw coordinates to the unit cube.
    pub fn to_unit(&self, x_raw: &[f64]) -> Vec<f64> {
        x_raw.iter().zip(&self.bounds).map(|(x, (lo, hi))| (x - lo) / (hi - lo)).collect()
    }

    /// Noiseless objectives and constraint slacks at a unit-cube point.
    pub fn evaluate_true(&self, x_unit: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if x_unit.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "{} expects {} inputs, got {}",
                self.id,
                self.dim,
                x_unit.len()
            )));
        }
        if x_unit.iter().any(|u| !(0.0..=1.0).contains(u)) {
            return Err(Error::InvalidInput("inputs must lie in the unit cube".into()));
        }
        let x = self.to_raw(x_unit);
        let out = match self.kind {
            Kind::BraninCurrin => (branin_currin_eval(&x), vec![]),
            Kind::ConstrainedBraninCurrin => {
                let (a, b) = (15.0 * x[0] - 5.0, 15.0 * x[1]);
                (branin_currin_eval(&x), vec![50.0 - (a - 2.5).powi(2) - (b - 7.5).powi(2)])
            }
            Kind::Dtlz2 => (dtlz2_eval(&x, self.num_objectives), vec![]),
            Kind::Zdt1 => (zdt1_eval(&x), vec![]),
            Kind::VehicleSafety => (vehicle_safety_eval(&x), vec![]),
            Kind::CarSideImpact => (car_side_impact_eval(&x), vec![]),
            Kind::SphereEllipsoidal => (sphere_ellipsoidal_eval(&x), vec![]),
        };
        Ok(out)
    }

    /// Absolute noise standard deviations for every outcome at `fraction` of
    /// its range.
    pub fn noise_std(&self, fraction: f64) -> Vec<f64> {
        self.outcome_ranges.iter().map(|(lo, hi)| fraction * (hi - lo)).collect()
    }

    /// Noisy observation `f + ε`, `ε ~ N(0, diag(σ²))`, applied to objectives
    /// and constraint slacks alike. `noise_std` has one entry per outcome.
    pub fn observe_noisy<R: Rng + ?Sized>(
        &self,
        x_unit: &[f64],
        noise_std: &[f64],
        rng: &mut R,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        if noise_std.len() != self.num_outcomes() {
            return Err(Error::DimensionMismatch("one noise level per outcome".into()));
        }
        if noise_std.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidInput("noise levels must be finite and nonnegative".into()));
        }
        let (mut f, mut c) = self.evaluate_true(x_unit)?;
        for (v, s) in f.iter_mut().chain(c.iter_mut()).zip(noise_std) {
            if *s > 0.0 {
                *v += Normal::new(0.0, *s).expect("valid std").sample(rng);
            }
        }
        Ok((f, c))
    }

    pub fn true_front_hypervolume(&self) -> f64 {
        self.true_hypervolume
    }

    /// True when the slacks satisfy every constraint.
    pub fn is_feasible(&self, c: &[f64]) -> bool {
        c.iter().all(|v| *v >= 0.0)
    }
}

/// Branin with the standard constant 6 on `x' = (15x₁ − 5, 15x₂)`.
pub fn branin(x1: f64, x2: f64) -> f64 {
    let (a, b) = (15.0 * x1 - 5.0, 15.0 * x2);
    (b - 5.1 / (4.0 * PI * PI) * a * a + 5.0 / PI * a - 6.0).powi(2) + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * a.cos() + 10.0
}

/// Currin, continuously extended to `x₂ = 0`.
pub fn currin(x1: f64, x2: f64) -> f64 {
    let factor = if x2 > 0.0 { 1.0 - (-1.0 / (2.0 * x2)).exp() } else { 1.0 };
    factor * (2300.0 * x1.powi(3) + 1900.0 * x1 * x1 + 2092.0 * x1 + 60.0)
        / (100.0 * x1.powi(3) + 500.0 * x1 * x1 + 4.0 * x1 + 20.0)
}

fn branin_currin_eval(x: &[f64]) -> Vec<f64> {
    vec![-branin(x[0], x[1]), -currin(x[0], x[1])]
}

fn dtlz2_eval(x: &[f64], m: usize) -> Vec<f64> {
    let g: f64 = x[m - 1..].iter().map(|v| (v - 0.5).powi(2)).sum();
    let half_pi = PI / 2.0;
    (0..m)
        .map(|i| {
            let mut f = 1.0 + g;
            for v in &x[..m - 1 - i] {
                f *= (half_pi * v).cos();
            }
            if i > 0 {
                f *= (half_pi * x[m - 1 - i]).sin();
            }
            -f
        })
        .collect()
}

fn zdt1_eval(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let g = 1.0 + 9.0 / (d - 1) as f64 * x[1..].iter().sum::<f64>();
    let f1 = x[0];
    vec![-f1, -g * (1.0 - (f1 / g).sqrt())]
}

fn vehicle_safety_eval(x: &[f64]) -> Vec<f64> {
    let (x1, x2, x3, x4, x5) = (x[0], x[1], x[2], x[3], x[4]);
    let f1 = 1640.2823 + 2.3573285 * x1 + 2.3220035 * x2 + 4.5688768 * x3 + 7.7213633 * x4 + 4.4559504 * x5;
    let f2 = 6.5856 + 1.15 * x1 - 1.0427 * x2 + 0.9738 * x3 + 0.8364 * x4 - 0.3695 * x1 * x4
        + 0.0861 * x1 * x5
        + 0.3628 * x2 * x4
        + 0.1106 * x1 * x1
        - 0.3437 * x3 * x3
        + 0.1764 * x4 * x4;
    let f3 = -0.0551 + 0.0181 * x1 + 0.1024 * x2 + 0.0421 * x3 - 0.0073 * x1 * x2 + 0.024 * x2 * x3
        - 0.0118 * x2 * x4
        - 0.0204 * x3 * x4
        - 0.008 * x3 * x5
        - 0.0241 * x2 * x2
        + 0.0109 * x4 * x4;
    vec![-f1, -f2, -f3]
}

fn car_side_impact_eval(x: &[f64]) -> Vec<f64> {
    let (x1, x2, x3, x4, x5, x6, x7) = (x[0], x[1], x[2], x[3], x[4], x[5], x[6]);
    let f1 = 1.98 + 4.9 * x1 + 6.67 * x2 + 6.98 * x3 + 4.01 * x4 + 1.78 * x5 + 1e-5 * x6 + 2.73 * x7;
    let f2 = 4.72 - 0.5 * x4 - 0.19 * x2 * x3;
    let v_mbp = 10.58 - 0.674 * x1 * x2 - 0.67275 * x2;
    let v_fd = 16.45 - 0.489 * x3 * x7 - 0.843 * x5 * x6;
    let f3 = 0.5 * (v_mbp + v_fd);
    // g₁ … g₁₀ and f₄ = −Σ max(gᵢ, 0) exactly as printed in the source
    // formulation, including the loose constants in g₃ (two x₁ and two x₃
    // terms) and g₆ (a trailing −1.45728).
    let g = [
        1.0 - 1.16 + 0.3717 * x2 * x4 + 0.0092928 * x3,
        0.32 - 0.261 + 0.0159 * x1 * x2 + 0.06486 * x1 + 0.019 * x2 * x7 - 0.0144 * x3 * x5 - 0.0154464 * x6,
        0.32 - 0.214 - 0.00817 * x5 + 0.045195 * x1 + 0.0135168 * x1 - 0.03099 * x2 * x6 + 0.018 * x2 * x7
            - 0.007176 * x3
            - 0.023232 * x3
            + 0.00364 * x5 * x6
            + 0.018 * x2 * x2,
        0.32 - 0.74 + 0.61 * x2 + 0.031296 * x3 + 0.031872 * x7 - 0.227 * x2 * x2,
        32.0 - 28.98 - 3.818 * x3 + 4.2 * x1 * x2 - 1.27296 * x6 + 2.68065 * x7,
        32.0 - 33.86 - 2.95 * x3 + 5.057 * x1 * x2 + 3.795 * x2 + 3.4431 * x7 - 1.45728,
        32.0 - 46.36 + 9.9 * x2 + 4.4505 * x1,
        4.0 - f2,
        9.9 - v_mbp,
        15.7 - v_fd,
    ];
    let f4 = -g.iter().map(|v| v.max(0.0)).sum::<f64>();
    vec![-f1, -f2, -f3, -f4]
}

const SPHERE_OPT: [f64; 5] = [-0.0299, 2.1458, -3.2922, -2.9438, -1.5406];
const ELLIPSOID_OPT: [f64; 5] = [2.0611, -1.7655, -0.7754, 1.8775, -3.7657];

/// Oscillation transform of the bi-objective black-box suite.
fn t_osz(d: f64) -> f64 {
    if d == 0.0 {
        return 0.0;
    }
    let h = d.abs().ln();
    let (c1, c2) = if d > 0.0 { (10.0, 7.9) } else { (5.5, 3.1) };
    d.signum() * (h + 0.049 * ((c1 * h).sin() + (c2 * h).sin())).exp()
}

fn sphere_ellipsoidal_eval(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let f1: f64 = x.iter().zip(&SPHERE_OPT).map(|(v, o)| (v - o).powi(2)).sum::<f64>() + 203.71;
    let f2: f64 = x
        .iter()
        .zip(&ELLIPSOID_OPT)
        .enumerate()
        .map(|(i, (v, o))| 10f64.powf(6.0 * i as f64 / (d - 1) as f64) * t_osz(v - o).powi(2))
        .sum::<f64>()
        + 135.6;
    vec![-f1, -f2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn branin_currin_at_origin() {
        let p = problem("branincurrin").unwrap();
        let (f, c) = p.evaluate_true(&[0.0, 0.0]).unwrap();
        assert!((f[0] + 308.1291).abs() < 1e-4);
        assert!((f[1] + 3.0).abs() < 1e-12);
        assert!(c.is_empty());
    }

    #[test]
    fn zdt1_at_origin() {
        let (f, _) = problem("zdt1-d4").unwrap().evaluate_true(&[0.0; 4]).unwrap();
        assert_eq!(f, vec![0.0, -1.0]);
    }

    #[test]
    fn dtlz2_on_unit_circle() {
        let p = problem("dtlz2-m2-d6").unwrap();
        for x1 in [0.0, 0.3, 0.77, 1.0] {
            let (f, _) = p.evaluate_true(&[x1, 0.5, 0.5, 0.5, 0.5, 0.5]).unwrap();
            assert!((f[0] * f[0] + f[1] * f[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn disk_center_is_feasible() {
        let p = problem("constrained-branincurrin").unwrap();
        let u = p.to_unit(&[0.5, 0.5]);
        let (_, c) = p.evaluate_true(&[(2.5 + 5.0) / 15.0, 7.5 / 15.0]).unwrap();
        assert!((c[0] - 50.0).abs() < 1e-12);
        assert_eq!(u, vec![0.5, 0.5]);
    }

    #[test]
    fn zero_noise_is_exact() {
        let p = problem("constrained-branincurrin").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = [0.3, 0.8];
        assert_eq!(p.observe_noisy(&x, &[0.0; 3], &mut rng).unwrap(), p.evaluate_true(&x).unwrap());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(problem("nope"), Err(Error::UnknownProblem(_))));
        assert!(matches!(problem("dtlz2-m3-d2"), Err(Error::UnknownProblem(_))));
        let p = problem("branincurrin").unwrap();
        assert!(p.evaluate_true(&[0.5]).is_err());
        assert!(p.evaluate_true(&[0.5, 1.5]).is_err());
    }
}
