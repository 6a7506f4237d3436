//! Self-adaptive residual-weighted physics-informed networks for the
//! Allen-Cahn and Cahn-Hilliard equations, with a Fourier pseudo-spectral
//! reference solver and convergence diagnostics.

pub mod config;
pub mod error;
pub mod io_util;
pub mod knn;
pub mod loss;
pub mod metrics;
pub mod net;
pub mod optim;
pub mod pde;
pub mod sampling;
pub mod spectral;
pub mod weighting;
pub mod taylor;
pub mod train;

pub use error::{Error, Result};
