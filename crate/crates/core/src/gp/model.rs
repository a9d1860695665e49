//! Exact GP inference on a Cholesky factorization of `K + σ_ε²I`.

use crate::error::{check_len, contract, Result};
use crate::gp::kernel::scaled_sq_dist;
use crate::gp::{Dataset, Hyperparameters, KernelSpec};
use crate::linalg::{dot, Cholesky, Matrix};
use crate::special::ln_sqrt_2pi;
use crate::scalar::Scalar;

/// Latent posterior moments at one query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior<S> {
    pub mean: S,
    pub variance: S,
}

impl<S: Scalar> Posterior<S> {
    pub fn std(&self) -> S {
        self.variance.sqrt()
    }
}

/// Gradients of the posterior moments with respect to the query location.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGradient<S> {
    pub mean: Vec<S>,
    pub variance: Vec<S>,
}

/// Gradient of the log marginal likelihood in raw (log-space) coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LmlGradient<S> {
    pub log_lengthscales: Vec<S>,
    pub log_signal_variance: S,
    pub log_noise_variance: S,
    pub mean_constant: S,
}

impl<S: Scalar> LmlGradient<S> {
    /// Flattened in the order of [`Hyperparameters::to_raw`].
    pub fn to_raw(&self) -> Vec<S> {
        let mut g = self.log_lengthscales.clone();
        g.push(self.log_signal_variance);
        g.push(self.log_noise_variance);
        g.push(self.mean_constant);
        g
    }
}

/// A GP conditioned on a dataset. Immutable once built.
#[derive(Debug, Clone)]
pub struct GpModel<S> {
    kernel: KernelSpec,
    hp: Hyperparameters<S>,
    data: Dataset<S>,
    chol: Cholesky<S>,
    alpha: Vec<S>,
}

impl<S: Scalar> GpModel<S> {
    pub fn new(kernel: KernelSpec, hp: Hyperparameters<S>, data: Dataset<S>) -> Result<Self> {
        hp.validate()?;
        check_len(kernel.dim, hp.dim())?;
        check_len(kernel.dim, data.dim())?;
        let mut k = kernel.gram(&hp, data.inputs())?;
        for i in 0..data.len() {
            k[(i, i)] += hp.noise_variance;
        }
        let chol = Cholesky::with_jitter(&k)?;
        let resid: Vec<S> = data.targets().iter().map(|&y| y - hp.mean_constant).collect();
        let alpha = chol.solve(&resid);
        Ok(Self {
            kernel,
            hp,
            data,
            chol,
            alpha,
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn hyperparameters(&self) -> &Hyperparameters<S> {
        &self.hp
    }

    pub fn data(&self) -> &Dataset<S> {
        &self.data
    }

    pub fn cholesky(&self) -> &Cholesky<S> {
        &self.chol
    }

    /// `(K + σ_ε²I)⁻¹(y - c)`.
    pub fn alpha(&self) -> &[S] {
        &self.alpha
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim
    }

    pub fn posterior(&self, x: &[S]) -> Result<Posterior<S>> {
        check_len(self.dim(), x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(contract("query point must be finite"));
        }
        Ok(self.posterior_unchecked(x))
    }

    pub fn posterior_many(&self, xs: &Matrix<S>) -> Result<Vec<Posterior<S>>> {
        check_len(self.dim(), xs.cols())?;
        xs.row_iter().map(|r| self.posterior(r)).collect()
    }

    pub(crate) fn posterior_unchecked(&self, x: &[S]) -> Posterior<S> {
        let ks = self.kernel.cross(&self.hp, self.data.inputs(), x);
        let mean = self.hp.mean_constant + dot(&ks, &self.alpha);
        let v = self.chol.solve_lower(&ks);
        let variance = (self.hp.signal_variance - dot(&v, &v)).max(S::zero());
        Posterior { mean, variance }
    }

    /// Posterior moments and their gradients with respect to `x`.
    pub fn posterior_with_gradient(&self, x: &[S]) -> Result<(Posterior<S>, PosteriorGradient<S>)> {
        check_len(self.dim(), x.len())?;
        let d = self.dim();
        let xs = self.data.inputs();
        let n = xs.rows();
        let ls = &self.hp.lengthscales;
        let sv = self.hp.signal_variance;
        let family = self.kernel.family;

        let mut ks = Vec::with_capacity(n);
        // ∂k(x, x_j)/∂x, row j
        let mut dks = Matrix::zeros(n, d);
        for j in 0..n {
            let xj = xs.row(j);
            let r2 = scaled_sq_dist(x, xj, ls);
            ks.push(sv * family.correlation(r2));
            let g = sv * family.dcorrelation_dr2(r2);
            let row = dks.row_mut(j);
            for k in 0..d {
                row[k] = g * S::lit(2.0) * (x[k] - xj[k]) / (ls[k] * ls[k]);
            }
        }
        let mean = self.hp.mean_constant + dot(&ks, &self.alpha);
        let v_low = self.chol.solve_lower(&ks);
        let variance = (sv - dot(&v_low, &v_low)).max(S::zero());
        let v = self.chol.solve_upper(&v_low);

        let mut dmean = vec![S::zero(); d];
        let mut dvar = vec![S::zero(); d];
        for j in 0..n {
            let row = dks.row(j);
            for k in 0..d {
                dmean[k] += self.alpha[j] * row[k];
                dvar[k] -= S::lit(2.0) * v[j] * row[k];
            }
        }
        Ok((
            Posterior { mean, variance },
            PosteriorGradient {
                mean: dmean,
                variance: dvar,
            },
        ))
    }

    pub fn log_marginal_likelihood(&self) -> S {
        let n = self.data.len();
        let resid: Vec<S> = self.residuals();
        -S::lit(0.5) * dot(&resid, &self.alpha)
            - self.chol.half_log_det()
            - S::from_usize_lossy(n) * ln_sqrt_2pi::<S>()
    }

    /// Log marginal likelihood and its gradient in raw coordinates.
    pub fn log_marginal_likelihood_with_gradient(&self) -> (S, LmlGradient<S>) {
        let value = self.log_marginal_likelihood();
        let n = self.data.len();
        let d = self.dim();
        let half = S::lit(0.5);
        let xs = self.data.inputs();
        let ls = &self.hp.lengthscales;
        let sv = self.hp.signal_variance;
        let family = self.kernel.family;
        let alpha = &self.alpha;

        let kinv = self.chol.inverse();
        let mut g_ls = vec![S::zero(); d];
        let mut g_sv = S::zero();
        let mut g_noise = S::zero();
        for i in 0..n {
            let wii = alpha[i] * alpha[i] - kinv[(i, i)];
            g_sv += half * wii * sv;
            g_noise += half * wii * self.hp.noise_variance;
            let xi = xs.row(i);
            for j in 0..i {
                let wij = alpha[i] * alpha[j] - kinv[(i, j)];
                let xj = xs.row(j);
                let r2 = scaled_sq_dist(xi, xj, ls);
                let kij = sv * family.correlation(r2);
                g_sv += wij * kij;
                // ∂K_ij/∂log ℓ_k = -2 s_k · ∂k/∂r²
                let dk = sv * family.dcorrelation_dr2(r2);
                let c = -S::lit(2.0) * wij * dk;
                for k in 0..d {
                    let t = (xi[k] - xj[k]) / ls[k];
                    g_ls[k] += c * t * t;
                }
            }
        }
        let g_mean = alpha.iter().copied().sum();
        (
            value,
            LmlGradient {
                log_lengthscales: g_ls,
                log_signal_variance: g_sv,
                log_noise_variance: g_noise,
                mean_constant: g_mean,
            },
        )
    }

    fn residuals(&self) -> Vec<S> {
        self.data
            .targets()
            .iter()
            .map(|&y| y - self.hp.mean_constant)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::KernelFamily;

    fn one_point(y: f64, c: f64, sv: f64, noise: f64) -> GpModel<f64> {
        let spec = KernelSpec::new(KernelFamily::Matern52, 2).unwrap();
        let hp = Hyperparameters::new(vec![0.3, 0.7], sv, noise, c).unwrap();
        let x = Matrix::from_rows(&[vec![0.2, 0.9]]).unwrap();
        GpModel::new(spec, hp, Dataset::from_standardized(x, vec![y]).unwrap()).unwrap()
    }

    #[test]
    fn prior_reversion_on_empty_data() {
        let spec = KernelSpec::new(KernelFamily::Rbf, 3).unwrap();
        let hp = Hyperparameters::new(vec![0.5; 3], 1.0, 0.0, 0.3).unwrap();
        let m = GpModel::new(spec, hp, Dataset::empty(3)).unwrap();
        let p = m.posterior(&[0.1, 0.5, 0.9]).unwrap();
        assert_eq!(p.mean, 0.3);
        assert_eq!(p.variance, 1.0);
    }

    #[test]
    fn noiseless_interpolation() {
        let m = one_point(1.7, 0.0, 1.0, 0.0);
        let p = m.posterior(&[0.2, 0.9]).unwrap();
        assert!((p.mean - 1.7).abs() < 1e-12);
        assert!(p.variance.abs() < 1e-12);
    }

    #[test]
    fn lml_single_point_examples() {
        let m = one_point(0.0, 0.0, 1.0, 0.0);
        let expected = -0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((m.log_marginal_likelihood() - expected).abs() < 1e-14);
        assert!((expected + 0.91894).abs() < 1e-5);

        let m = one_point(0.4, 0.4, 2.5, 0.3);
        let expected = -0.5 * (2.0 * std::f64::consts::PI * 2.8).ln();
        assert!((m.log_marginal_likelihood() - expected).abs() < 1e-13);
    }

    #[test]
    fn query_dimension_checked() {
        let m = one_point(0.0, 0.0, 1.0, 0.0);
        assert!(m.posterior(&[0.1]).is_err());
    }
}
