//! Adaptive robust linear ensembles for forecast combination.

pub mod adaptive;
pub mod baselines;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod panel;
pub mod pipeline;
pub mod robustcheck;
pub mod synth;

pub use error::{Error, Result};
