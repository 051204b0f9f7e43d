//! Multi-objective Bayesian optimization with noisy expected hypervolume
//! improvement.
//!
//! The crate is organised bottom-up:
//!
//! * [`pareto`] and [`partitioning`] extract fronts and split the
//!   non-dominated region into disjoint boxes.
//! * [`hypervolume`] computes hypervolume and hypervolume improvement from
//!   those boxes, including joint batch improvement by inclusion-exclusion.
//! * [`surrogate`] fits independent Matérn 5/2 Gaussian processes and exposes
//!   joint posterior sampling, low-rank root extension and random Fourier
//!   feature sample paths.
//! * [`acquisition`] builds cached per-sample box decompositions and evaluates
//!   qNEHVI, qEHVI, qNEHVI-1 and TS-TCH with exact sample-path gradients.
//! * [`optimize`] provides scrambled Sobol points, a bounded quasi-Newton
//!   solver, multi-start maximization and sequential greedy batch selection.
//! * [`problems`] holds the synthetic benchmark suite.

pub mod acquisition;
pub mod error;
pub mod hypervolume;
pub mod linalg;
pub mod optimize;
pub mod pareto;
pub mod partitioning;
pub mod problems;
pub mod surrogate;

pub use error::{Error, Result};
