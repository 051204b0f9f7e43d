//! Dominance, Pareto-front extraction and the reference-point heuristic.
//!
//! Everything is maximization: minimization objectives are negated by the
//! problem definitions before they reach this module.

use crate::{Error, Result};

/// Maximal non-dominated subset of a set of objective vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct ParetoFront {
    points: Vec<Vec<f64>>,
    indices: Vec<usize>,
    num_objectives: usize,
}

impl ParetoFront {
    pub fn empty(num_objectives: usize) -> Self {
        Self {
            points: Vec::new(),
            indices: Vec::new(),
            num_objectives,
        }
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Row indices of the front points in the source matrix.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn num_objectives(&self) -> usize {
        self.num_objectives
    }

    /// Component-wise maximum of the front (`None` when empty).
    pub fn ideal(&self) -> Option<Vec<f64>> {
        let first = self.points.first()?;
        let mut out = first.clone();
        for p in &self.points[1..] {
            for (o, v) in out.iter_mut().zip(p) {
                *o = o.max(*v);
            }
        }
        Some(out)
    }

    /// Component-wise minimum of the front (`None` when empty).
    pub fn nadir(&self) -> Option<Vec<f64>> {
        let first = self.points.first()?;
        let mut out = first.clone();
        for p in &self.points[1..] {
            for (o, v) in out.iter_mut().zip(p) {
                *o = o.min(*v);
            }
        }
        Some(out)
    }

    /// Adds `y` if it is not weakly dominated, removing the points it dominates.
    /// Returns whether the front changed.
    pub fn insert(&mut self, y: &[f64], index: usize) -> bool {
        if self
            .points
            .iter()
            .any(|p| p.iter().zip(y).all(|(a, b)| a >= b))
        {
            return false;
        }
        let mut keep = 0;
        for i in 0..self.points.len() {
            if !dominates_unchecked(y, &self.points[i]) {
                self.points.swap(keep, i);
                self.indices.swap(keep, i);
                keep += 1;
            }
        }
        self.points.truncate(keep);
        self.indices.truncate(keep);
        self.points.push(y.to_vec());
        self.indices.push(index);
        true
    }
}

#[inline]
pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strict = true;
        }
    }
    strict
}

/// True iff `a ≥ b` component-wise with at least one strict inequality.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "comparing vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN in dominance test".into()));
    }
    Ok(dominates_unchecked(a, b))
}

/// Non-dominated subset of the rows of `y`; duplicates keep the lowest index.
pub fn pareto_front(y: &[Vec<f64>]) -> Result<ParetoFront> {
    let m = y.first().map_or(0, |r| r.len());
    if y.iter().any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch("ragged objective matrix".into()));
    }
    if y.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN objective value".into()));
    }
    Ok(pareto_front_unchecked(y, m))
}

pub(crate) fn pareto_front_unchecked(y: &[Vec<f64>], m: usize) -> ParetoFront {
    let mut points = Vec::new();
    let mut indices = Vec::new();
    'outer: for (i, yi) in y.iter().enumerate() {
        for (j, yj) in y.iter().enumerate() {
            if j == i {
                continue;
            }
            if dominates_unchecked(yj, yi) || (j < i && yj == yi) {
                continue 'outer;
            }
        }
        points.push(yi.clone());
        indices.push(i);
    }
    ParetoFront {
        points,
        indices,
        num_objectives: m,
    }
}

/// Boolean mask of the non-dominated rows (duplicates keep the lowest index).
pub fn non_dominated_mask(y: &[Vec<f64>]) -> Vec<bool> {
    let m = y.first().map_or(0, |r| r.len());
    let front = pareto_front_unchecked(y, m);
    let mut mask = vec![false; y.len()];
    for &i in front.indices() {
        mask[i] = true;
    }
    mask
}

/// `r = nadir − beta·(ideal − nadir)`.
pub fn infer_reference_point(nadir: &[f64], ideal: &[f64], beta: f64) -> Result<Vec<f64>> {
    if nadir.len() != ideal.len() {
        return Err(Error::DimensionMismatch("nadir and ideal differ in length".into()));
    }
    if nadir.iter().zip(ideal).any(|(n, i)| !(i >= n)) {
        return Err(Error::InvalidInput("ideal must be at least the nadir".into()));
    }
    Ok(nadir
        .iter()
        .zip(ideal)
        .map(|(n, i)| n - beta * (i - n))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance_examples() {
        assert!(!dominates(&[1.0, 2.0], &[1.0, 2.0]).unwrap());
        assert!(dominates(&[2.0, 2.0], &[1.0, 2.0]).unwrap());
        assert!(!dominates(&[2.0, 1.0], &[1.0, 2.0]).unwrap());
        assert!(dominates(&[f64::NAN, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn front_examples() {
        assert!(pareto_front(&[]).unwrap().is_empty());
        let y = vec![
            vec![1.0, 3.0],
            vec![2.0, 2.0],
            vec![3.0, 1.0],
            vec![1.0, 1.0],
        ];
        let f = pareto_front(&y).unwrap();
        assert_eq!(f.indices(), &[0, 1, 2]);
        let same = vec![vec![1.0, 1.0]; 4];
        let f = pareto_front(&same).unwrap();
        assert_eq!(f.indices(), &[0]);
        assert!(pareto_front(&[vec![f64::NAN, 0.0]]).is_err());
    }

    #[test]
    fn insert_tracks_batch_front() {
        let mut f = pareto_front(&[vec![1.0, 3.0], vec![3.0, 1.0]]).unwrap();
        assert!(!f.insert(&[1.0, 1.0], 2));
        assert!(!f.insert(&[1.0, 3.0], 3));
        assert!(f.insert(&[4.0, 4.0], 4));
        assert_eq!(f.indices(), &[4]);
    }

    #[test]
    fn reference_point_examples() {
        let r = infer_reference_point(&[0.0, 0.0], &[10.0, 5.0], 0.1).unwrap();
        assert_eq!(r, vec![-1.0, -0.5]);
        assert_eq!(
            infer_reference_point(&[1.0, 2.0], &[3.0, 4.0], 0.0).unwrap(),
            vec![1.0, 2.0]
        );
        assert!(infer_reference_point(&[1.0], &[0.0], 0.1).is_err());
    }
}
