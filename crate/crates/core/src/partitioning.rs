//! Disjoint box decompositions of the region above a reference point that is
//! not dominated by a Pareto front.
//!
//! Two objectives use the sorted staircase. Three or more use local lower
//! bounds (the maximization mirror of the local-upper-bound update), with
//! ties broken by a consistent symbolic perturbation.

use crate::pareto::ParetoFront;
use crate::{Error, Result};

/// Disjoint axis-aligned boxes `[lower, upper)` covering
/// `{z ≥ r : z not weakly dominated by the front}`. Uppers may be `+∞`.
#[derive(Clone, Debug)]
pub struct BoxDecomposition {
    lowers: Vec<f64>,
    uppers: Vec<f64>,
    num_boxes: usize,
    num_objectives: usize,
    reference_point: Vec<f64>,
    front: ParetoFront,
}

impl BoxDecomposition {
    pub fn num_boxes(&self) -> usize {
        self.num_boxes
    }

    pub fn num_objectives(&self) -> usize {
        self.num_objectives
    }

    pub fn reference_point(&self) -> &[f64] {
        &self.reference_point
    }

    /// The front the boxes were built from (after dropping points below `r`).
    pub fn front(&self) -> &ParetoFront {
        &self.front
    }

    pub fn lower(&self, k: usize) -> &[f64] {
        let m = self.num_objectives;
        &self.lowers[k * m..(k + 1) * m]
    }

    pub fn upper(&self, k: usize) -> &[f64] {
        let m = self.num_objectives;
        &self.uppers[k * m..(k + 1) * m]
    }

    /// Flat row-major `K×M` lower vertices.
    pub fn lowers(&self) -> &[f64] {
        &self.lowers
    }

    /// Flat row-major `K×M` upper vertices.
    pub fn uppers(&self) -> &[f64] {
        &self.uppers
    }

    /// Index of the box containing `z` (half-open boxes), if any.
    pub fn locate(&self, z: &[f64]) -> Option<usize> {
        (0..self.num_boxes).find(|&k| {
            self.lower(k)
                .iter()
                .zip(self.upper(k))
                .zip(z)
                .all(|((l, u), v)| l <= v && v < u)
        })
    }

    /// Decomposition of the front extended by `y` (rebuilt from scratch).
    pub fn with_point(&self, y: &[f64]) -> BoxDecomposition {
        let mut front = self.front.clone();
        let next = front.indices().iter().copied().max().map_or(0, |i| i + 1);
        if !front.insert(y, next) {
            return self.clone();
        }
        build(&front, &self.reference_point)
    }

    fn push_box(&mut self, lower: &[f64], upper: &[f64]) {
        self.lowers.extend_from_slice(lower);
        self.uppers.extend_from_slice(upper);
        self.num_boxes += 1;
    }
}

/// Partitions the non-dominated region above `r` into disjoint boxes.
///
/// Front points lying below `r` in some coordinate are dropped first; points
/// on the boundary of `r` are kept.
pub fn decompose_nondominated(front: &ParetoFront, r: &[f64]) -> Result<BoxDecomposition> {
    let m = r.len();
    if m < 2 {
        return Err(Error::InvalidInput(
            "box decompositions need at least two objectives".into(),
        ));
    }
    if !front.is_empty() && front.num_objectives() != m {
        return Err(Error::DimensionMismatch(format!(
            "front has {} objectives, reference point {}",
            front.num_objectives(),
            m
        )));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("reference point must be finite".into()));
    }
    Ok(build(front, r))
}

fn build(front: &ParetoFront, r: &[f64]) -> BoxDecomposition {
    let m = r.len();
    let mut kept = ParetoFront::empty(m);
    for (p, &i) in front.points().iter().zip(front.indices()) {
        if p.iter().zip(r).all(|(a, b)| a >= b) {
            kept.insert(p, i);
        }
    }
    let mut out = BoxDecomposition {
        lowers: Vec::new(),
        uppers: Vec::new(),
        num_boxes: 0,
        num_objectives: m,
        reference_point: r.to_vec(),
        front: kept,
    };
    let points: Vec<&[f64]> = out.front.points().iter().map(|p| p.as_slice()).collect();
    if m == 2 {
        for (l, u) in staircase(&points, r) {
            out.push_box(&l, &u);
        }
    } else {
        for (l, u) in local_lower_bounds(&points, r) {
            out.push_box(&l, &u);
        }
    }
    out
}

type Boxes = Vec<(Vec<f64>, Vec<f64>)>;

fn staircase(points: &[&[f64]], r: &[f64]) -> Boxes {
    let inf = f64::INFINITY;
    let mut sorted: Vec<&[f64]> = points.to_vec();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut boxes = Vec::with_capacity(sorted.len() + 1);
    let mut prev_x = r[0];
    for p in &sorted {
        boxes.push((vec![prev_x, p[1]], vec![p[0], inf]));
        prev_x = p[0];
    }
    boxes.push((vec![prev_x, r[1]], vec![inf, inf]));
    boxes
}

/// Coordinate value with a tie-breaking rank: the reference point ranks below
/// every front point and front points rank by position. Comparing keys
/// lexicographically is an infinitesimal perturbation that puts the front in
/// general position without changing any volume.
#[derive(Clone, Copy, Debug)]
struct Key {
    v: f64,
    rank: u32,
}

impl Key {
    const INF: Key = Key {
        v: f64::INFINITY,
        rank: u32::MAX,
    };

    fn lt(self, other: Key) -> bool {
        match self.v.total_cmp(&other.v) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => self.rank < other.rank,
        }
    }

    fn min(self, other: Key) -> Key {
        if other.lt(self) {
            other
        } else {
            self
        }
    }
}

struct LowerBound {
    l: Vec<Key>,
    // defining[k] is the point bounding l from above in coordinate k
    defining: Vec<Vec<Key>>,
}

fn local_lower_bounds(points: &[&[f64]], r: &[f64]) -> Boxes {
    let m = r.len();
    let r: Vec<Key> = r.iter().map(|&v| Key { v, rank: 0 }).collect();
    let dummy = |k: usize| {
        let mut d = vec![Key::INF; m];
        d[k] = r[k];
        d
    };
    let mut bounds = vec![LowerBound {
        l: r.clone(),
        defining: (0..m).map(dummy).collect(),
    }];
    for (i, p) in points.iter().enumerate() {
        let p: Vec<Key> = p.iter().map(|&v| Key { v, rank: i as u32 + 1 }).collect();
        let (affected, mut rest): (Vec<_>, Vec<_>) = bounds
            .into_iter()
            .partition(|b| p.iter().zip(&b.l).all(|(a, c)| c.lt(*a)));
        for b in &affected {
            for j in 0..m {
                let cap = (0..m)
                    .filter(|&k| k != j)
                    .map(|k| b.defining[k][j])
                    .fold(Key::INF, Key::min);
                if p[j].lt(cap) {
                    let mut l = b.l.clone();
                    l[j] = p[j];
                    let mut defining = b.defining.clone();
                    defining[j] = p.clone();
                    rest.push(LowerBound { l, defining });
                }
            }
        }
        bounds = rest;
    }
    bounds
        .into_iter()
        .filter_map(|b| {
            let lower: Vec<f64> = b.l.iter().map(|k| k.v).collect();
            let upper: Vec<f64> = (0..m)
                .map(|j| (j + 1..m).map(|k| b.defining[k][j]).fold(Key::INF, Key::min).v)
                .collect();
            // Boxes that only existed in the perturbation have zero width.
            lower.iter().zip(&upper).all(|(l, u)| l < u).then_some((lower, upper))
        })
        .collect()
}

/// Pads every decomposition with zero-volume boxes (`lower = upper = r`) up to
/// the largest box count.
pub fn pad_decompositions(decomps: &[BoxDecomposition]) -> Result<Vec<BoxDecomposition>> {
    let first = decomps
        .first()
        .ok_or_else(|| Error::InvalidInput("no decompositions to pad".into()))?;
    let m = first.num_objectives;
    if decomps.iter().any(|d| d.num_objectives != m) {
        return Err(Error::DimensionMismatch(
            "decompositions differ in objective count".into(),
        ));
    }
    let k_max = decomps.iter().map(|d| d.num_boxes).max().unwrap_or(0);
    Ok(decomps
        .iter()
        .map(|d| {
            let mut padded = d.clone();
            let r = d.reference_point.clone();
            while padded.num_boxes < k_max {
                padded.push_box(&r, &r);
            }
            padded
        })
        .collect())
}
