//! Owen-scrambled Sobol points.
//!
//! Direction numbers are the Joe–Kuo `new-joe-kuo-6.21201` set for the first
//! [`SOBOL_MAX_DIM`] dimensions. Scrambling uses a hash-based nested uniform
//! permutation per dimension, so every dimension is scrambled independently
//! and a dimension's column depends only on `(seed, dimension)`.

use std::sync::OnceLock;

use crate::{Error, Result};

/// Number of dimensions with tabulated direction numbers.
pub const SOBOL_MAX_DIM: usize = 2048;

const BITS: usize = 32;
const DIRECTIONS: &str = include_str!("sobol_directions.txt");

fn direction_table() -> &'static Vec<[u32; BITS]> {
    static TABLE: OnceLock<Vec<[u32; BITS]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        DIRECTIONS
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(dim, line)| {
                let nums: Vec<u64> = line
                    .split_whitespace()
                    .map(|t| t.parse().expect("malformed direction table"))
                    .collect();
                directions_for(dim, nums[0], &nums[1..])
            })
            .collect()
    })
}

fn directions_for(dim: usize, poly: u64, initial: &[u64]) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (j, vj) in v.iter_mut().enumerate() {
            *vj = 1u32 << (BITS - 1 - j);
        }
        return v;
    }
    // The polynomial includes its leading and constant terms.
    let s = (64 - poly.leading_zeros() - 1) as usize;
    let mut m = vec![0u64; BITS];
    m[..s].copy_from_slice(&initial[..s]);
    for j in s..BITS {
        let mut next = m[j - s] ^ (m[j - s] << s);
        for k in 1..s {
            if (poly >> (s - k)) & 1 == 1 {
                next ^= m[j - k] << k;
            }
        }
        m[j] = next;
    }
    for j in 0..BITS {
        v[j] = (m[j] << (BITS - 1 - j)) as u32;
    }
    v
}

fn check(count: usize, d: usize) -> Result<()> {
    if count == 0 || d == 0 {
        return Err(Error::InvalidInput("Sobol count and dimension must be positive".into()));
    }
    if d > SOBOL_MAX_DIM {
        return Err(Error::SobolDimension {
            requested: d,
            limit: SOBOL_MAX_DIM,
        });
    }
    if count as u64 > 1u64 << BITS {
        return Err(Error::InvalidInput("too many Sobol points".into()));
    }
    Ok(())
}

/// Raw 32-bit digits of the unscrambled sequence, natural (non-Gray) order.
fn raw_column(count: usize, dim: usize) -> Vec<u32> {
    let v = &direction_table()[dim];
    (0..count)
        .map(|i| {
            let mut x = 0u32;
            let mut idx = i as u64;
            let mut j = 0;
            while idx != 0 {
                if idx & 1 == 1 {
                    x ^= v[j];
                }
                idx >>= 1;
                j += 1;
            }
            x
        })
        .collect()
}

/// The unscrambled net, `count × d`, row-major.
pub fn sobol_unscrambled(count: usize, d: usize) -> Result<Vec<Vec<f64>>> {
    check(count, d)?;
    let cols: Vec<Vec<u32>> = (0..d).map(|j| raw_column(count, j)).collect();
    Ok((0..count)
        .map(|i| cols.iter().map(|c| c[i] as f64 / 4294967296.0).collect())
        .collect())
}

fn laine_karras(mut x: u32, seed: u32) -> u32 {
    x = x.wrapping_add(seed);
    x ^= x.wrapping_mul(0x6c50_b47c);
    x ^= x.wrapping_mul(0xb82f_1e52);
    x ^= x.wrapping_mul(0xc7af_e638);
    x ^= x.wrapping_mul(0x8d22_f6e6);
    x
}

fn nested_uniform_scramble(x: u32, seed: u32) -> u32 {
    laine_karras(x.reverse_bits(), seed).reverse_bits()
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one stream derived from a parent seed and a label.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(label.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// One scrambled column in `(0, 1)`; depends only on `(seed, dim)`.
pub(crate) fn scrambled_column(count: usize, dim: usize, seed: u64) -> Vec<f64> {
    let dim_seed = derive_seed(seed, dim as u64) as u32;
    raw_column(count, dim)
        .into_iter()
        .map(|x| (nested_uniform_scramble(x, dim_seed) as f64 + 0.5) / 4294967296.0)
        .collect()
}

/// `count × d` Owen-scrambled Sobol points in `(0, 1)^d`, row-major.
pub fn scrambled_sobol(count: usize, d: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    check(count, d)?;
    let cols: Vec<Vec<f64>> = (0..d).map(|j| scrambled_column(count, j, seed)).collect();
    Ok((0..count)
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_dimension_is_van_der_corput() {
        let pts = sobol_unscrambled(4, 1).unwrap();
        let flat: Vec<f64> = pts.into_iter().flatten().collect();
        assert_eq!(flat, vec![0.0, 0.5, 0.25, 0.75]);
    }

    #[test]
    fn second_dimension_matches_reference() {
        // Direction numbers 1/2, 3/4, 5/8 XOR-ed along the binary digits of
        // the index (natural order, not Gray code).
        let pts = sobol_unscrambled(8, 2).unwrap();
        let second: Vec<f64> = pts.iter().map(|p| p[1]).collect();
        assert_eq!(second, vec![0.0, 0.5, 0.75, 0.25, 0.625, 0.125, 0.375, 0.875]);
    }

    #[test]
    fn unscrambled_prefix_is_a_net() {
        // Every dyadic interval of length 1/16 holds exactly one of 16 points
        // in each one-dimensional projection.
        let pts = sobol_unscrambled(16, 40).unwrap();
        for j in 0..40 {
            let mut cells = [0usize; 16];
            for p in &pts {
                cells[(p[j] * 16.0) as usize] += 1;
            }
            assert!(cells.iter().all(|&c| c == 1), "dimension {j}");
        }
    }

    #[test]
    fn scrambling_preserves_stratification() {
        let pts = scrambled_sobol(256, 8, 3).unwrap();
        for j in 0..8 {
            let mut cells = [0usize; 256];
            for p in &pts {
                assert!(p[j] > 0.0 && p[j] < 1.0);
                cells[(p[j] * 256.0) as usize] += 1;
            }
            assert!(cells.iter().all(|&c| c == 1));
            let mean = pts.iter().map(|p| p[j]).sum::<f64>() / 256.0;
            assert!((mean - 0.5).abs() < 0.01);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(scrambled_sobol(32, 5, 9).unwrap(), scrambled_sobol(32, 5, 9).unwrap());
        assert_ne!(scrambled_sobol(32, 5, 9).unwrap(), scrambled_sobol(32, 5, 10).unwrap());
    }

    #[test]
    fn dimension_limit() {
        assert!(scrambled_sobol(4, SOBOL_MAX_DIM, 0).is_ok());
        assert!(matches!(
            scrambled_sobol(4, SOBOL_MAX_DIM + 1, 0),
            Err(Error::SobolDimension { .. })
        ));
        assert!(scrambled_sobol(0, 2, 0).is_err());
    }
}
