//! Adaptive robust linear ensemble: combination weights that move with the
//! members' recent errors, `β_t = β0 + V0 Z_t`.

mod context;
mod problem;
mod rule;
mod solver;

pub use context::{build_context, build_context_from, context_matrix, ErrorContext};
pub use problem::{coefficients, n_params, AdaptiveFitProblem};
pub use rule::{fit_adaptive, AdaptiveConfig, AdaptiveRule, FORMAT_VERSION};
pub use solver::{solve_adaptive_ridge, Solution, SolveMode, SolverOptions, SpectralFactor, SquaredSystem};
