//! Exact hypervolume and hypervolume improvement via box decompositions.

use crate::linalg::compensated_sum;
use crate::pareto::{pareto_front_unchecked, ParetoFront};
use crate::partitioning::{decompose_nondominated, BoxDecomposition};
use crate::{Error, Result};

/// Largest batch accepted by [`hvi_joint_iep`]; the subset sum has `2^q − 1`
/// terms.
pub const IEP_MAX_BATCH: usize = 12;

/// Per-box clipped vertices and contributions of one HVI evaluation.
#[derive(Clone, Debug)]
pub struct HviTerms {
    /// Flat `K×M` clipped vertices `z_k = min(u_k, y)`.
    pub clipped: Vec<f64>,
    /// `Π_m [z_k − l_k]₊` per box.
    pub contributions: Vec<f64>,
}

impl HviTerms {
    pub fn total(&self) -> f64 {
        compensated_sum(self.contributions.iter().copied())
    }
}

/// Lebesgue measure of the region dominated by `front` and bounded below by `r`.
pub fn hypervolume(front: &ParetoFront, r: &[f64]) -> Result<f64> {
    let inside: Vec<&Vec<f64>> = front
        .points()
        .iter()
        .filter(|p| p.iter().zip(r).all(|(a, b)| a > b))
        .collect();
    if inside.is_empty() {
        return Ok(0.0);
    }
    if r.len() == 1 {
        return Ok(inside.iter().map(|p| p[0] - r[0]).fold(0.0, f64::max));
    }
    let d = decompose_nondominated(front, r)?;
    Ok(hypervolume_from_decomposition(&d))
}

/// `vol([r, U]) − Σ vol(box ∩ [r, U])` with `U` the component-wise maximum of
/// the decomposed front.
pub fn hypervolume_from_decomposition(d: &BoxDecomposition) -> f64 {
    let r = d.reference_point();
    let Some(cap) = d.front().ideal() else {
        return 0.0;
    };
    let total: f64 = cap.iter().zip(r).map(|(u, l)| (u - l).max(0.0)).product();
    if total == 0.0 {
        return 0.0;
    }
    let outside = compensated_sum((0..d.num_boxes()).map(|k| {
        d.lower(k)
            .iter()
            .zip(d.upper(k))
            .zip(&cap)
            .map(|((l, u), c)| (u.min(*c) - l).max(0.0))
            .product::<f64>()
    }));
    (total - outside).max(0.0)
}

/// Hypervolume of an arbitrary point set (the front is extracted first).
pub fn hypervolume_of_points(points: &[Vec<f64>], r: &[f64]) -> Result<f64> {
    if points.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN objective value".into()));
    }
    let front = pareto_front_unchecked(points, r.len());
    hypervolume(&front, r)
}

/// Per-box terms of `HVI(y)`.
pub fn hvi_terms(y: &[f64], decomp: &BoxDecomposition) -> HviTerms {
    let m = decomp.num_objectives();
    let k = decomp.num_boxes();
    let mut clipped = Vec::with_capacity(k * m);
    let mut contributions = Vec::with_capacity(k);
    for b in 0..k {
        let mut vol = 1.0;
        for ((l, u), v) in decomp.lower(b).iter().zip(decomp.upper(b)).zip(y) {
            let z = u.min(*v);
            clipped.push(z);
            vol *= (z - l).max(0.0);
        }
        contributions.push(vol);
    }
    HviTerms {
        clipped,
        contributions,
    }
}

/// Hypervolume improvement of a single point: `Σ_k Π_m [min(u_k, y) − l_k]₊`.
pub fn hvi_single(y: &[f64], decomp: &BoxDecomposition) -> f64 {
    hvi_flat(y, decomp.lowers(), decomp.uppers(), decomp.num_objectives())
}

#[inline]
pub(crate) fn hvi_flat(y: &[f64], lowers: &[f64], uppers: &[f64], m: usize) -> f64 {
    let mut total = 0.0;
    for (l, u) in lowers.chunks_exact(m).zip(uppers.chunks_exact(m)) {
        let mut vol = 1.0;
        for j in 0..m {
            let side = u[j].min(y[j]) - l[j];
            if side <= 0.0 {
                vol = 0.0;
                break;
            }
            vol *= side;
        }
        total += vol;
    }
    total
}

/// HVI and its gradient with respect to `y`. Sides clipped at the upper
/// vertex carry no gradient; a clamp exactly at zero is treated as inactive.
pub(crate) fn hvi_flat_with_grad(
    y: &[f64],
    lowers: &[f64],
    uppers: &[f64],
    m: usize,
    grad: &mut [f64],
) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut total = 0.0;
    let mut sides = [0.0f64; 16];
    let mut live = [false; 16];
    for (l, u) in lowers.chunks_exact(m).zip(uppers.chunks_exact(m)) {
        let mut vol = 1.0;
        for j in 0..m {
            let side = u[j].min(y[j]) - l[j];
            if side <= 0.0 {
                vol = 0.0;
                break;
            }
            sides[j] = side;
            live[j] = y[j] < u[j];
            vol *= side;
        }
        if vol == 0.0 {
            continue;
        }
        total += vol;
        for j in 0..m {
            if live[j] {
                let mut others = 1.0;
                for (i, s) in sides.iter().enumerate().take(m) {
                    if i != j {
                        others *= s;
                    }
                }
                grad[j] += others;
            }
        }
    }
    total
}

/// Joint hypervolume improvement of a batch by inclusion–exclusion over all
/// non-empty subsets (`q ≤` [`IEP_MAX_BATCH`]).
pub fn hvi_joint_iep(y: &[Vec<f64>], decomp: &BoxDecomposition) -> Result<f64> {
    let q = y.len();
    if q == 0 {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    if q > IEP_MAX_BATCH {
        return Err(Error::BatchTooLarge {
            q,
            limit: IEP_MAX_BATCH,
        });
    }
    let m = decomp.num_objectives();
    if y.iter().any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch("batch rows differ from M".into()));
    }
    Ok(hvi_joint_iep_unchecked(y, decomp.lowers(), decomp.uppers(), m))
}

pub(crate) fn hvi_joint_iep_unchecked(
    y: &[Vec<f64>],
    lowers: &[f64],
    uppers: &[f64],
    m: usize,
) -> f64 {
    let q = y.len();
    let mut terms = Vec::with_capacity((1usize << q) - 1);
    let mut corner = vec![0.0; m];
    for mask in 1usize..(1 << q) {
        corner.iter_mut().for_each(|c| *c = f64::INFINITY);
        for (i, yi) in y.iter().enumerate() {
            if mask & (1 << i) != 0 {
                for (c, v) in corner.iter_mut().zip(yi) {
                    *c = c.min(*v);
                }
            }
        }
        let sign = if mask.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
        terms.push(sign * hvi_flat(&corner, lowers, uppers, m));
    }
    compensated_sum(terms).max(0.0)
}

/// Feasibility-weighted HVI: `HVI(y) · Π_v sigmoid(c_v / τ)`.
pub fn hvi_feasible(y: &[f64], c: &[f64], decomp: &BoxDecomposition, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidInput("tau must be positive".into()));
    }
    let weight: f64 = c.iter().map(|v| sigmoid(v / tau)).product();
    Ok(hvi_single(y, decomp) * weight)
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pareto::pareto_front;
    use approx::assert_relative_eq;

    fn decomp(points: &[Vec<f64>], r: &[f64]) -> BoxDecomposition {
        decompose_nondominated(&pareto_front(points).unwrap(), r).unwrap()
    }

    #[test]
    fn hypervolume_examples() {
        assert_eq!(hypervolume(&ParetoFront::empty(2), &[0.0, 0.0]).unwrap(), 0.0);
        let f = pareto_front(&[vec![2.0, 3.0], vec![3.0, 1.0]]).unwrap();
        assert_relative_eq!(hypervolume(&f, &[0.0, 0.0]).unwrap(), 7.0, epsilon = 1e-12);
    }

    #[test]
    fn hvi_examples() {
        let d = decomp(&[vec![2.0, 3.0], vec![3.0, 1.0]], &[0.0, 0.0]);
        assert_eq!(hvi_single(&[1.0, 1.0], &d), 0.0);
        assert_relative_eq!(hvi_single(&[3.0, 2.0], &d), 1.0, epsilon = 1e-12);
        assert_relative_eq!(hvi_single(&[4.0, 4.0], &d), 9.0, epsilon = 1e-12);
    }

    #[test]
    fn iep_examples() {
        let d = decomp(&[vec![2.5, 2.5]], &[0.0, 0.0]);
        let y = vec![vec![3.0, 2.0], vec![2.0, 3.0]];
        // 6.25 plus two unit strips: HV of the union is 8.25.
        let union = hypervolume_of_points(
            &[vec![2.5, 2.5], vec![3.0, 2.0], vec![2.0, 3.0]],
            &[0.0, 0.0],
        )
        .unwrap();
        assert_relative_eq!(union, 8.25, epsilon = 1e-12);
        assert_relative_eq!(hvi_joint_iep(&y, &d).unwrap(), union - 6.25, epsilon = 1e-12);
        let single = hvi_joint_iep(&y[..1], &d).unwrap();
        assert_relative_eq!(single, hvi_single(&y[0], &d), epsilon = 1e-15);
        let dup = vec![y[0].clone(), y[0].clone()];
        assert_relative_eq!(hvi_joint_iep(&dup, &d).unwrap(), single, epsilon = 1e-12);
        let too_many = vec![vec![1.0, 1.0]; 13];
        assert!(matches!(
            hvi_joint_iep(&too_many, &d),
            Err(Error::BatchTooLarge { q: 13, limit: 12 })
        ));
    }

    #[test]
    fn feasibility_weighting_limits() {
        let d = decomp(&[vec![2.0, 3.0], vec![3.0, 1.0]], &[0.0, 0.0]);
        let y = [4.0, 4.0];
        let tau = 1e-3;
        let hi = hvi_feasible(&y, &[10.0 * tau * 1e3], &d, tau).unwrap();
        assert_relative_eq!(hi, 9.0, epsilon = 1e-9);
        let lo = hvi_feasible(&y, &[-10.0 * tau * 1e3], &d, tau).unwrap();
        assert!(lo < 1e-9);
        assert!(hvi_feasible(&y, &[1.0], &d, 0.0).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let d = decomp(
            &[vec![2.0, 3.0, 1.0], vec![3.0, 1.0, 2.0], vec![1.0, 2.0, 3.0]],
            &[0.0, 0.0, 0.0],
        );
        let y = [2.5, 2.2, 2.7];
        let mut g = [0.0; 3];
        let v = hvi_flat_with_grad(&y, d.lowers(), d.uppers(), 3, &mut g);
        assert_relative_eq!(v, hvi_single(&y, &d), epsilon = 1e-12);
        for j in 0..3 {
            let h = 1e-6;
            let mut yp = y;
            let mut ym = y;
            yp[j] += h;
            ym[j] -= h;
            let fd = (hvi_single(&yp, &d) - hvi_single(&ym, &d)) / (2.0 * h);
            assert_relative_eq!(g[j], fd, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1e4), 0.0);
        assert_eq!(sigmoid(1e4), 1.0);
        assert_relative_eq!(sigmoid(0.0), 0.5);
    }
}
