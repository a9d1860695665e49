//! Gaussian-process regression: kernels, hyperparameters, data and exact inference.

mod kernel;
mod model;

pub use kernel::{ard_distance, kernel_eval, KernelFamily, KernelSpec};
pub use model::{GpModel, LmlGradient, Posterior, PosteriorGradient};

use crate::error::{check_len, contract, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Kernel and likelihood hyperparameters of one GP.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters<S> {
    pub lengthscales: Vec<S>,
    pub signal_variance: S,
    pub noise_variance: S,
    pub mean_constant: S,
}

impl<S: Scalar> Hyperparameters<S> {
    pub fn new(
        lengthscales: Vec<S>,
        signal_variance: S,
        noise_variance: S,
        mean_constant: S,
    ) -> Result<Self> {
        let hp = Self {
            lengthscales,
            signal_variance,
            noise_variance,
            mean_constant,
        };
        hp.validate()?;
        Ok(hp)
    }

    /// Same lengthscale along every one of `dim` axes.
    pub fn isotropic(dim: usize, lengthscale: S, signal_variance: S, noise_variance: S) -> Result<Self> {
        Self::new(vec![lengthscale; dim], signal_variance, noise_variance, S::zero())
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengthscales.is_empty() {
            return Err(contract("at least one lengthscale is required"));
        }
        if self.lengthscales.iter().any(|&l| !(l > S::zero()) || !l.is_finite()) {
            return Err(contract("lengthscales must be positive and finite"));
        }
        if !(self.signal_variance > S::zero()) || !self.signal_variance.is_finite() {
            return Err(contract("signal variance must be positive and finite"));
        }
        if !(self.noise_variance >= S::zero()) || !self.noise_variance.is_finite() {
            return Err(contract("noise variance must be non-negative and finite"));
        }
        if !self.mean_constant.is_finite() {
            return Err(contract("mean constant must be finite"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Raw parameter vector `[log ℓ_1..log ℓ_D, log σ_f², log σ_ε², c]`.
    pub fn to_raw(&self) -> Vec<S> {
        let mut raw: Vec<S> = self.lengthscales.iter().map(|l| l.ln()).collect();
        raw.push(self.signal_variance.ln());
        raw.push(self.noise_variance.ln());
        raw.push(self.mean_constant);
        raw
    }

    pub fn from_raw(raw: &[S]) -> Result<Self> {
        if raw.len() < 4 {
            return Err(contract("raw hyperparameter vector needs at least 4 entries"));
        }
        let d = raw.len() - 3;
        Self::new(
            raw[..d].iter().map(|v| v.exp()).collect(),
            raw[d].exp(),
            raw[d + 1].exp(),
            raw[d + 2],
        )
    }

    /// Median lengthscale (mean of the middle pair for even counts).
    pub fn median_lengthscale(&self) -> S {
        let mut ls = self.lengthscales.clone();
        ls.sort_by(|a, b| a.partial_cmp(b).expect("finite lengthscales"));
        let n = ls.len();
        if n % 2 == 1 {
            ls[n / 2]
        } else {
            (ls[n / 2 - 1] + ls[n / 2]) * S::lit(0.5)
        }
    }
}

/// Affine map between raw and standardized targets: `y_std = (y_raw - mean) / scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardization<S> {
    pub mean: S,
    pub scale: S,
}

impl<S: Scalar> Standardization<S> {
    pub fn identity() -> Self {
        Self {
            mean: S::zero(),
            scale: S::one(),
        }
    }

    pub fn forward(&self, raw: S) -> S {
        (raw - self.mean) / self.scale
    }

    pub fn inverse(&self, standardized: S) -> S {
        standardized * self.scale + self.mean
    }
}

/// Training inputs in the unit cube with standardized targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<S> {
    inputs: Matrix<S>,
    targets: Vec<S>,
    standardization: Standardization<S>,
}

impl<S: Scalar> Dataset<S> {
    pub fn new(inputs: Matrix<S>, targets: Vec<S>, standardization: Standardization<S>) -> Result<Self> {
        check_len(inputs.rows(), targets.len())?;
        if inputs.as_slice().iter().any(|&v| !(v >= S::zero() && v <= S::one())) {
            return Err(contract("dataset inputs must lie in the unit cube"));
        }
        if targets.iter().any(|v| !v.is_finite()) {
            return Err(contract("dataset targets must be finite"));
        }
        Ok(Self {
            inputs,
            targets,
            standardization,
        })
    }

    /// Dataset whose targets are already on the modelling scale.
    pub fn from_standardized(inputs: Matrix<S>, targets: Vec<S>) -> Result<Self> {
        Self::new(inputs, targets, Standardization::identity())
    }

    /// Standardizes `raw_targets` and stores the transform.
    pub fn from_raw(inputs: Matrix<S>, raw_targets: &[S]) -> Result<Self> {
        let (y, st) = crate::fit::standardize(raw_targets)?;
        Self::new(inputs, y, st)
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            inputs: Matrix::zeros(0, dim),
            targets: Vec::new(),
            standardization: Standardization::identity(),
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn inputs(&self) -> &Matrix<S> {
        &self.inputs
    }

    pub fn targets(&self) -> &[S] {
        &self.targets
    }

    pub fn standardization(&self) -> Standardization<S> {
        self.standardization
    }

    /// Largest standardized target, `None` when empty.
    pub fn y_max(&self) -> Option<S> {
        self.targets.iter().copied().reduce(S::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_round_trip() {
        let hp = Hyperparameters::new(vec![0.2f64, 1.5], 1.3, 1e-3, -0.4).unwrap();
        let back = Hyperparameters::from_raw(&hp.to_raw()).unwrap();
        for (a, b) in hp.lengthscales.iter().zip(&back.lengthscales) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((back.noise_variance - 1e-3f64).abs() < 1e-18);
        assert_eq!(back.mean_constant, -0.4);
    }

    #[test]
    fn invalid_hyperparameters_rejected() {
        assert!(Hyperparameters::new(vec![0.0], 1.0, 0.0, 0.0).is_err());
        assert!(Hyperparameters::new(vec![1.0], 0.0, 0.0, 0.0).is_err());
        assert!(Hyperparameters::new(vec![1.0], 1.0, -1e-9, 0.0).is_err());
    }

    #[test]
    fn dataset_rejects_points_outside_cube() {
        let x = Matrix::from_rows(&[vec![0.5, 1.2]]).unwrap();
        assert!(Dataset::from_standardized(x, vec![0.0]).is_err());
        let x = Matrix::from_rows(&[vec![0.5, 1.0]]).unwrap();
        assert!(Dataset::from_standardized(x.clone(), vec![0.0, 1.0]).is_err());
        assert_eq!(Dataset::from_standardized(x, vec![2.0]).unwrap().y_max(), Some(2.0));
    }

    #[test]
    fn median_lengthscale_even_and_odd() {
        let hp = Hyperparameters::new(vec![3.0, 1.0, 2.0], 1.0, 0.0, 0.0).unwrap();
        assert_eq!(hp.median_lengthscale(), 2.0);
        let hp = Hyperparameters::new(vec![4.0, 1.0, 2.0, 3.0], 1.0, 0.0, 0.0).unwrap();
        assert_eq!(hp.median_lengthscale(), 2.5);
    }
}
