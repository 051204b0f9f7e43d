//! Independent-output Gaussian process regression.
//!
//! Targets are standardized per output and all model quantities (means,
//! variances, samples, hyperparameters) live in that standardized space.

mod fit;
pub(crate) mod gp;
pub mod kernel;
pub mod rff;
pub mod samples;

pub use crate::linalg::extend_root_lowrank;
pub use fit::{FitOptions, LENGTHSCALE_PRIOR, NOISE_FLOOR, NOISE_PRIOR, OUTPUTSCALE_PRIOR};
pub use gp::{
    draw_joint_samples, GaussianProcessSurrogate, NoiseMode, OutputModel, PosteriorDistribution, Standardization,
};
pub use kernel::{matern52, KernelHyperparams};
pub use rff::{draw_rff_path, RffComponent, RffSamplePath, DEFAULT_BASIS_COUNT};
pub use samples::{normal_samples, qmc_normal_samples, BaseSampler, SampleArray};
