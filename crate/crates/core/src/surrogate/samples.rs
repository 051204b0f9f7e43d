//! Standard-normal base samples and sample arrays laid out as
//! `(sample; point; outcome)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::optimize::sobol::{derive_seed, scrambled_column, SOBOL_MAX_DIM};

/// Dense `N × m × M` array, row-major in that order.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleArray {
    pub num_samples: usize,
    pub num_points: usize,
    pub num_outputs: usize,
    pub data: Vec<f64>,
}

impl SampleArray {
    pub fn zeros(num_samples: usize, num_points: usize, num_outputs: usize) -> Self {
        Self {
            num_samples,
            num_points,
            num_outputs,
            data: vec![0.0; num_samples * num_points * num_outputs],
        }
    }

    #[inline]
    pub fn index(&self, t: usize, i: usize, o: usize) -> usize {
        (t * self.num_points + i) * self.num_outputs + o
    }

    #[inline]
    pub fn get(&self, t: usize, i: usize, o: usize) -> f64 {
        self.data[self.index(t, i, o)]
    }

    #[inline]
    pub fn set(&mut self, t: usize, i: usize, o: usize, v: f64) {
        let k = self.index(t, i, o);
        self.data[k] = v;
    }

    /// The `M` outcome values of point `i` in sample `t`.
    pub fn point(&self, t: usize, i: usize) -> &[f64] {
        let k = self.index(t, i, 0);
        &self.data[k..k + self.num_outputs]
    }
}

/// Dimensions reserved per point; outputs beyond this widen the stride.
pub(crate) const OUTPUT_STRIDE: usize = 4;

/// Quasi-random standard normals: dimension `i·S + o` of one scrambled Sobol
/// sequence, mapped through the inverse normal CDF, where the stride `S` is
/// fixed (at least four) rather than the output count. Each dimension is
/// seeded from `(seed, dimension)` alone, so a prefix of points keeps its
/// samples when more points are appended, and an output's samples do not
/// depend on how many further outputs exist. Dimensions past the Sobol table
/// fall back to pseudo-random normals.
pub fn qmc_normal_samples(num_samples: usize, num_points: usize, num_outputs: usize, seed: u64) -> SampleArray {
    normal_samples(BaseSampler::ScrambledSobol, num_samples, num_points, num_outputs, seed)
}

/// How standard-normal base samples are generated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BaseSampler {
    /// Inverse-CDF transformed scrambled Sobol points.
    #[default]
    ScrambledSobol,
    /// Independent pseudo-random normals, laid out like the Sobol dimensions.
    Iid,
}

/// Base samples from either sampler with the layout of [`qmc_normal_samples`].
pub fn normal_samples(
    sampler: BaseSampler,
    num_samples: usize,
    num_points: usize,
    num_outputs: usize,
    seed: u64,
) -> SampleArray {
    let mut out = SampleArray::zeros(num_samples, num_points, num_outputs);
    let stride = sample_stride(num_outputs);
    for i in 0..num_points {
        for o in 0..num_outputs {
            let col = base_column(sampler, num_samples, i * stride + o, seed);
            for (t, v) in col.into_iter().enumerate() {
                out.set(t, i, o, v);
            }
        }
    }
    out
}

pub(crate) fn sample_stride(num_outputs: usize) -> usize {
    num_outputs.max(OUTPUT_STRIDE)
}

pub(crate) fn base_column(sampler: BaseSampler, count: usize, dim: usize, seed: u64) -> Vec<f64> {
    match sampler {
        BaseSampler::ScrambledSobol => normal_column(count, dim, seed),
        BaseSampler::Iid => iid_column(count, dim, seed),
    }
}

fn iid_column(count: usize, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, dim as u64));
    (0..count).map(|_| StandardNormal.sample(&mut rng)).collect()
}

pub(crate) fn normal_column(count: usize, dim: usize, seed: u64) -> Vec<f64> {
    if count == 0 {
        return Vec::new();
    }
    if dim < SOBOL_MAX_DIM {
        let normal = Normal::standard();
        scrambled_column(count, dim, seed)
            .into_iter()
            .map(|u| normal.inverse_cdf(u))
            .collect()
    } else {
        iid_column(count, dim, seed)
    }
}
