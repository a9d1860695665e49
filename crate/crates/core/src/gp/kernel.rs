//! Stationary ARD kernels.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, contract, Result};
use crate::gp::Hyperparameters;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// Squared exponential, `σ_f²·exp(-r²/2)`.
    Rbf,
    /// Matérn-5/2, `σ_f²·(1 + √5r + 5r²/3)·exp(-√5r)`.
    #[default]
    Matern52,
}

impl KernelFamily {
    /// Unit-variance correlation as a function of the squared scaled distance.
    #[inline]
    pub fn correlation<S: Scalar>(self, r2: S) -> S {
        match self {
            KernelFamily::Rbf => (-S::lit(0.5) * r2).exp(),
            KernelFamily::Matern52 => {
                let sr = (S::lit(5.0) * r2).sqrt();
                (S::one() + sr + S::lit(5.0 / 3.0) * r2) * (-sr).exp()
            }
        }
    }

    /// Derivative of the unit-variance correlation with respect to `r²`.
    #[inline]
    pub fn dcorrelation_dr2<S: Scalar>(self, r2: S) -> S {
        match self {
            KernelFamily::Rbf => -S::lit(0.5) * (-S::lit(0.5) * r2).exp(),
            KernelFamily::Matern52 => {
                let sr = (S::lit(5.0) * r2).sqrt();
                -S::lit(5.0 / 6.0) * (S::one() + sr) * (-sr).exp()
            }
        }
    }
}

/// Kernel family plus input dimension; fixed for a model's lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub dim: usize,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(contract("kernel dimension must be at least 1"));
        }
        Ok(Self { family, dim })
    }

    /// Kernel value `k(x, x')` with full argument checking.
    pub fn eval<S: Scalar>(&self, hp: &Hyperparameters<S>, x: &[S], x2: &[S]) -> Result<S> {
        check_len(self.dim, hp.lengthscales.len())?;
        check_len(self.dim, x.len())?;
        check_len(self.dim, x2.len())?;
        Ok(self.eval_unchecked(hp, x, x2))
    }

    #[inline]
    pub(crate) fn eval_unchecked<S: Scalar>(&self, hp: &Hyperparameters<S>, x: &[S], x2: &[S]) -> S {
        hp.signal_variance * self.family.correlation(scaled_sq_dist(x, x2, &hp.lengthscales))
    }

    /// Gram matrix `k(X, X)` without noise.
    pub fn gram<S: Scalar>(&self, hp: &Hyperparameters<S>, xs: &Matrix<S>) -> Result<Matrix<S>> {
        check_len(self.dim, xs.cols())?;
        check_len(self.dim, hp.lengthscales.len())?;
        let n = xs.rows();
        let mut k = Matrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = hp.signal_variance;
            for j in 0..i {
                let v = self.eval_unchecked(hp, xs.row(i), xs.row(j));
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        Ok(k)
    }

    /// Cross-covariance vector `k(X, x)`.
    pub fn cross<S: Scalar>(&self, hp: &Hyperparameters<S>, xs: &Matrix<S>, x: &[S]) -> Vec<S> {
        xs.row_iter().map(|r| self.eval_unchecked(hp, r, x)).collect()
    }
}

/// ARD distance `r = sqrt(Σ (x_i - x'_i)² / ℓ_i²)`.
pub fn ard_distance<S: Scalar>(x: &[S], x2: &[S], lengthscales: &[S]) -> Result<S> {
    check_len(lengthscales.len(), x.len())?;
    check_len(lengthscales.len(), x2.len())?;
    if lengthscales.iter().any(|&l| !(l > S::zero())) {
        return Err(contract("lengthscales must be positive"));
    }
    Ok(scaled_sq_dist(x, x2, lengthscales).sqrt())
}

#[inline]
pub(crate) fn scaled_sq_dist<S: Scalar>(x: &[S], x2: &[S], lengthscales: &[S]) -> S {
    x.iter()
        .zip(x2)
        .zip(lengthscales)
        .fold(S::zero(), |acc, ((&a, &b), &l)| {
            let d = (a - b) / l;
            acc + d * d
        })
}

/// Kernel value for the convenience of callers holding separate pieces.
pub fn kernel_eval<S: Scalar>(
    spec: &KernelSpec,
    hp: &Hyperparameters<S>,
    x: &[S],
    x2: &[S],
) -> Result<S> {
    spec.eval(hp, x, x2)
}
