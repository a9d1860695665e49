//! Hyperpriors over lengthscales, noise, signal variance and the mean constant.

use rand::Rng;
use rand_distr::{Distribution, Gamma, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::scalar::Scalar;
use crate::special::{ln_gamma, ln_sqrt_2pi};

/// `LN(location, scale)`: `log x ~ N(location, scale²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalPrior {
    pub location: f64,
    pub scale: f64,
}

impl LogNormalPrior {
    pub fn new(location: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() || !location.is_finite() {
            return Err(contract("lognormal prior needs a finite location and positive scale"));
        }
        Ok(Self { location, scale })
    }

    /// Log density over `x` (not over `log x`).
    pub fn log_density<S: Scalar>(&self, x: S) -> S {
        let (mu, s) = (S::lit(self.location), S::lit(self.scale));
        let lx = x.ln();
        let t = (lx - mu) / s;
        -lx - s.ln() - ln_sqrt_2pi::<S>() - S::lit(0.5) * t * t
    }

    /// Derivative of [`Self::log_density`] with respect to `log x`.
    pub fn dlog_density_dlog<S: Scalar>(&self, x: S) -> S {
        let (mu, s) = (S::lit(self.location), S::lit(self.scale));
        -S::one() - (x.ln() - mu) / (s * s)
    }

    pub fn mode(&self) -> f64 {
        (self.location - self.scale * self.scale).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        LogNormal::new(self.location, self.scale)
            .expect("validated lognormal parameters")
            .sample(rng)
    }
}

/// `Γ(shape, rate)` with density `∝ x^(α-1) e^(-βx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && rate > 0.0) || !shape.is_finite() || !rate.is_finite() {
            return Err(contract("gamma prior needs positive shape and rate"));
        }
        Ok(Self { shape, rate })
    }

    pub fn log_density<S: Scalar>(&self, x: S) -> S {
        let (a, b) = (S::lit(self.shape), S::lit(self.rate));
        a * b.ln() - ln_gamma(a) + (a - S::one()) * x.ln() - b * x
    }

    pub fn dlog_density_dlog<S: Scalar>(&self, x: S) -> S {
        S::lit(self.shape - 1.0) - S::lit(self.rate) * x
    }

    /// Mode for `shape > 1`; otherwise the mode sits at 0 and the mean is returned instead.
    pub fn mode(&self) -> f64 {
        if self.shape > 1.0 {
            (self.shape - 1.0) / self.rate
        } else {
            self.shape / self.rate
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Gamma::new(self.shape, 1.0 / self.rate)
            .expect("validated gamma parameters")
            .sample(rng)
    }
}

/// A resolved prior over one positive hyperparameter, or a fixed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PositivePrior {
    LogNormal(LogNormalPrior),
    Gamma(GammaPrior),
    Fixed(f64),
}

impl PositivePrior {
    pub fn is_fixed(&self) -> bool {
        matches!(self, PositivePrior::Fixed(_))
    }

    pub fn log_density<S: Scalar>(&self, x: S) -> S {
        match self {
            PositivePrior::LogNormal(p) => p.log_density(x),
            PositivePrior::Gamma(p) => p.log_density(x),
            PositivePrior::Fixed(_) => S::zero(),
        }
    }

    pub fn dlog_density_dlog<S: Scalar>(&self, x: S) -> S {
        match self {
            PositivePrior::LogNormal(p) => p.dlog_density_dlog(x),
            PositivePrior::Gamma(p) => p.dlog_density_dlog(x),
            PositivePrior::Fixed(_) => S::zero(),
        }
    }

    pub fn mode(&self) -> f64 {
        match self {
            PositivePrior::LogNormal(p) => p.mode(),
            PositivePrior::Gamma(p) => p.mode(),
            PositivePrior::Fixed(v) => *v,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            PositivePrior::LogNormal(p) => p.sample(rng),
            PositivePrior::Gamma(p) => p.sample(rng),
            PositivePrior::Fixed(v) => *v,
        }
    }
}

/// Lengthscale prior family, applied independently to every dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LengthscalePrior {
    /// `LN(μ0 + log(D)/2, σ0)`.
    ScaledLogNormal { mu0: f64, sigma0: f64 },
    /// Unscaled `Γ(shape, rate)`.
    Gamma { shape: f64, rate: f64 },
    /// `Γ(shape, rate/√D)`, so the mode grows as `√D`.
    ScaledGamma { shape: f64, rate: f64 },
    Fixed { value: f64 },
}

impl LengthscalePrior {
    pub fn resolve(&self, dim: usize) -> Result<PositivePrior> {
        let d = dim.max(1) as f64;
        Ok(match *self {
            LengthscalePrior::ScaledLogNormal { mu0, sigma0 } => {
                PositivePrior::LogNormal(scaled_lengthscale_prior(dim, mu0, sigma0)?)
            }
            LengthscalePrior::Gamma { shape, rate } => PositivePrior::Gamma(GammaPrior::new(shape, rate)?),
            LengthscalePrior::ScaledGamma { shape, rate } => {
                PositivePrior::Gamma(GammaPrior::new(shape, rate / d.sqrt())?)
            }
            LengthscalePrior::Fixed { value } => {
                if !(value > 0.0) || !value.is_finite() {
                    return Err(contract("fixed lengthscale must be positive"));
                }
                PositivePrior::Fixed(value)
            }
        })
    }
}

/// The dimensionality-scaled lengthscale prior `LN(μ0 + log(D)/2, σ0)`.
pub fn scaled_lengthscale_prior(dim: usize, mu0: f64, sigma0: f64) -> Result<LogNormalPrior> {
    if dim == 0 {
        return Err(contract("dimension must be at least 1"));
    }
    LogNormalPrior::new(mu0 + 0.5 * (dim as f64).ln(), sigma0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoisePrior {
    /// Lognormal over the noise variance `σ_ε²`.
    LogNormal { location: f64, scale: f64 },
    Fixed { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalVariancePolicy {
    Fixed { value: f64 },
    /// MAP-fit under a lognormal prior over `σ_f²`.
    Learned { location: f64, scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeanPrior {
    Flat,
    Fixed { value: f64 },
}

/// Priors defining the MAP objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperpriorSpec {
    pub lengthscale: LengthscalePrior,
    pub noise: NoisePrior,
    pub signal_variance: SignalVariancePolicy,
    pub mean: MeanPrior,
}

pub const DEFAULT_MU0: f64 = std::f64::consts::SQRT_2;
pub const DEFAULT_SIGMA0: f64 = 1.732_050_807_568_877_2;

impl Default for HyperpriorSpec {
    fn default() -> Self {
        Self::scaled_lognormal(DEFAULT_MU0, DEFAULT_SIGMA0)
    }
}

impl HyperpriorSpec {
    /// Scaled lognormal lengthscales, `σ_f² = 1`, broad low-noise prior, flat mean.
    pub fn scaled_lognormal(mu0: f64, sigma0: f64) -> Self {
        Self {
            lengthscale: LengthscalePrior::ScaledLogNormal { mu0, sigma0 },
            noise: NoisePrior::LogNormal {
                location: -4.0,
                scale: 1.0,
            },
            signal_variance: SignalVariancePolicy::Fixed { value: 1.0 },
            mean: MeanPrior::Flat,
        }
    }

    /// The conventional `Γ(3, 6)` lengthscale prior.
    pub fn gamma_3_6() -> Self {
        Self {
            lengthscale: LengthscalePrior::Gamma { shape: 3.0, rate: 6.0 },
            ..Self::default()
        }
    }

    /// `Γ(3, 6/√D)`.
    pub fn scaled_gamma_3_6() -> Self {
        Self {
            lengthscale: LengthscalePrior::ScaledGamma { shape: 3.0, rate: 6.0 },
            ..Self::default()
        }
    }

    pub fn with_learned_signal_variance(mut self) -> Self {
        self.signal_variance = SignalVariancePolicy::Learned {
            location: 0.0,
            scale: 2.0,
        };
        self
    }

    pub fn resolve(&self, dim: usize) -> Result<ResolvedPriors> {
        let noise = match self.noise {
            NoisePrior::LogNormal { location, scale } => PositivePrior::LogNormal(LogNormalPrior::new(location, scale)?),
            NoisePrior::Fixed { value } => {
                if !(value >= 0.0) || !value.is_finite() {
                    return Err(contract("fixed noise variance must be non-negative"));
                }
                PositivePrior::Fixed(value)
            }
        };
        let signal_variance = match self.signal_variance {
            SignalVariancePolicy::Fixed { value } => {
                if !(value > 0.0) || !value.is_finite() {
                    return Err(contract("fixed signal variance must be positive"));
                }
                PositivePrior::Fixed(value)
            }
            SignalVariancePolicy::Learned { location, scale } => {
                PositivePrior::LogNormal(LogNormalPrior::new(location, scale)?)
            }
        };
        let mean = match self.mean {
            MeanPrior::Flat => None,
            MeanPrior::Fixed { value } => {
                if !value.is_finite() {
                    return Err(contract("fixed mean constant must be finite"));
                }
                Some(value)
            }
        };
        Ok(ResolvedPriors {
            lengthscale: self.lengthscale.resolve(dim)?,
            signal_variance,
            noise,
            fixed_mean: mean,
        })
    }
}

/// [`HyperpriorSpec`] instantiated for a concrete dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedPriors {
    pub lengthscale: PositivePrior,
    pub signal_variance: PositivePrior,
    pub noise: PositivePrior,
    /// `None` for a learned mean with flat prior.
    pub fixed_mean: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scaled_prior_mode_at_six_dims() {
        let p = scaled_lengthscale_prior(6, DEFAULT_MU0, DEFAULT_SIGMA0).unwrap();
        assert!((p.mode() - 0.5016).abs() < 1e-3, "{}", p.mode());
        assert_eq!(scaled_lengthscale_prior(1, 0.7, 1.0).unwrap().location, 0.7);
        let r = scaled_lengthscale_prior(24, DEFAULT_MU0, DEFAULT_SIGMA0).unwrap().mode() / p.mode();
        assert!((r - 2.0).abs() < 1e-12);
    }

    #[test]
    fn scaled_gamma_mode_scales_with_sqrt_dim() {
        let spec = LengthscalePrior::ScaledGamma { shape: 3.0, rate: 6.0 };
        let m1 = spec.resolve(1).unwrap().mode();
        let m16 = spec.resolve(16).unwrap().mode();
        assert!((m1 - 1.0 / 3.0).abs() < 1e-15);
        assert!((m16 / m1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn log_density_derivatives_match_finite_differences() {
        let ln = LogNormalPrior::new(0.3, 1.2).unwrap();
        let g = GammaPrior::new(3.0, 6.0).unwrap();
        for &x in &[0.05f64, 0.4, 1.0, 3.0] {
            let h = 1e-6;
            let fd = |f: &dyn Fn(f64) -> f64| (f((x.ln() + h).exp()) - f((x.ln() - h).exp())) / (2.0 * h);
            let a = fd(&|v| ln.log_density(v));
            assert!((a - ln.dlog_density_dlog(x)).abs() < 1e-7);
            let b = fd(&|v| g.log_density(v));
            assert!((b - g.dlog_density_dlog(x)).abs() < 1e-7);
        }
    }

    #[test]
    fn gamma_density_normalizes() {
        let g = GammaPrior::new(3.0, 6.0).unwrap();
        let n = 200_000;
        let h = 5.0 / n as f64;
        let total: f64 = (1..n).map(|i| g.log_density(i as f64 * h).exp() * h).sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn samples_are_positive_and_seeded() {
        let p = PositivePrior::LogNormal(LogNormalPrior::new(-4.0, 1.0).unwrap());
        let a: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            (0..5).map(|_| p.sample(&mut rng)).collect()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b: Vec<f64> = (0..5).map(|_| p.sample(&mut rng)).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(LogNormalPrior::new(0.0, 0.0).is_err());
        assert!(GammaPrior::new(-1.0, 1.0).is_err());
        assert!(LengthscalePrior::Fixed { value: 0.0 }.resolve(2).is_err());
    }
}
