//! Quasi-random points, bounded quasi-Newton maximization and batch
//! construction.

pub mod greedy;
pub mod lbfgsb;
pub mod multistart;
pub mod sobol;

pub use greedy::{greedy_discrete_batch, select_batch_sequential_greedy, simplex_weights, BatchSelection, OPTIMIZER_STREAM};
pub use lbfgsb::{LbfgsConfig, LbfgsResult};
pub use multistart::{multistart_maximize, FnObjective, MultistartResult, Objective, OptimizerConfig};
pub use sobol::{derive_seed, scrambled_sobol, sobol_unscrambled, SOBOL_MAX_DIM};
