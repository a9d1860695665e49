//! Complexity-controlled Gaussian-process Bayesian optimization.
//!
//! The numeric core (kernels, GP inference, hyperparameter fitting, LogEI,
//! information gain) is generic over [`Scalar`] and works with `f32` or `f64`.
//! The BO loop, benchmarks and locality diagnostics operate on `f64`.

pub mod acquisition;
pub mod benchmarks;
pub mod complexity;
pub mod engine;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod gp;
pub mod linalg;
pub mod optim;
pub mod sampling;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type GpModel = gp::GpModel<f64>;
pub type GpModel32 = gp::GpModel<f32>;
pub type Hyperparameters = gp::Hyperparameters<f64>;
pub type Hyperparameters32 = gp::Hyperparameters<f32>;
pub type Dataset = gp::Dataset<f64>;
pub type Dataset32 = gp::Dataset<f32>;
pub type Matrix = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type FitResult = fit::FitResult<f64>;
pub type Posterior = gp::Posterior<f64>;
