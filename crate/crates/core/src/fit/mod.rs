//! Hyperparameter estimation: standardization, MAP/MLE objectives and multi-restart fitting.

mod prior;

pub use prior::{
    scaled_lengthscale_prior, GammaPrior, HyperpriorSpec, LengthscalePrior, LogNormalPrior, MeanPrior,
    NoisePrior, PositivePrior, ResolvedPriors, SignalVariancePolicy, DEFAULT_MU0, DEFAULT_SIGMA0,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::gp::{Dataset, GpModel, Hyperparameters, KernelSpec, Standardization};
use crate::optim::{minimize_box, LbfgsConfig};
use crate::scalar::Scalar;

/// Box on the raw (log) parameters during fitting.
pub const LOG_LENGTHSCALE_BOUNDS: (f64, f64) = (-9.210_340_371_976_182, 9.210_340_371_976_182);
pub const LOG_SIGNAL_VARIANCE_BOUNDS: (f64, f64) = (-9.210_340_371_976_182, 9.210_340_371_976_182);
pub const LOG_NOISE_VARIANCE_BOUNDS: (f64, f64) = (-13.815_510_557_964_274, 2.302_585_092_994_046);
pub const MEAN_CONSTANT_BOUNDS: (f64, f64) = (-10.0, 10.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    #[default]
    Map,
    Mle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub n_restarts: usize,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub mode: FitMode,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_restarts: 4,
            max_iterations: 100,
            gradient_tolerance: 1e-6,
            mode: FitMode::Map,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_restarts == 0 {
            return Err(contract("n_restarts must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(contract("max_iterations must be at least 1"));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(contract("gradient_tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<S> {
    pub hp: Hyperparameters<S>,
    /// Best objective (log posterior up to a constant, or LML in MLE mode).
    pub objective_value: S,
    pub converged: bool,
    pub restart_index: usize,
    /// Restarts whose optimization produced a finite optimum.
    pub restarts_succeeded: usize,
}

/// Standardizes targets to mean 0 and Bessel-corrected standard deviation 1.
///
/// Constant (or single-element) input maps to zeros with unit scale.
pub fn standardize<S: Scalar>(raw: &[S]) -> Result<(Vec<S>, Standardization<S>)> {
    if raw.is_empty() {
        return Err(contract("cannot standardize an empty vector"));
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(contract("targets must be finite"));
    }
    let n = S::from_usize_lossy(raw.len());
    let mean = raw.iter().copied().sum::<S>() / n;
    let scale = if raw.len() > 1 {
        let ss: S = raw.iter().map(|&v| (v - mean) * (v - mean)).sum();
        (ss / (n - S::one())).sqrt()
    } else {
        S::zero()
    };
    let scale = if scale > S::epsilon() * mean.abs().max(S::one()) {
        scale
    } else {
        S::one()
    };
    let st = Standardization { mean, scale };
    let constant = raw.iter().all(|&v| v == raw[0]);
    let y = raw
        .iter()
        .map(|&v| if constant { S::zero() } else { st.forward(v) })
        .collect();
    Ok((y, st))
}

/// Closed-form signal-variance estimate `yᵀK⁻¹y / n` for a model built with `σ_f² = 1`.
pub fn signal_variance_hat<S: Scalar>(y: &[S], model: &GpModel<S>) -> Result<S> {
    if model.hyperparameters().signal_variance != S::one() {
        return Err(contract("signal_variance_hat requires a unit-signal-variance model"));
    }
    crate::error::check_len(model.data().len(), y.len())?;
    if y.is_empty() {
        return Err(contract("signal_variance_hat needs at least one observation"));
    }
    let v = model.cholesky().solve_lower(y);
    let q: S = v.iter().map(|&a| a * a).sum();
    Ok(q / S::from_usize_lossy(y.len()))
}

/// MAP (or MLE) objective and its gradient in raw coordinates
/// `[log ℓ_1..log ℓ_D, log σ_f², log σ_ε², c]`.
///
/// Prior terms are added only for learned hyperparameters.
pub fn map_objective<S: Scalar>(model: &GpModel<S>, priors: &HyperpriorSpec, mode: FitMode) -> Result<(S, Vec<S>)> {
    let resolved = priors.resolve(model.dim())?;
    let (v, g) = objective_with_resolved(model, &resolved, mode);
    if !v.is_finite() || g.iter().any(|c| !c.is_finite()) {
        return Err(contract("objective is not finite at these hyperparameters"));
    }
    Ok((v, g))
}

fn objective_with_resolved<S: Scalar>(model: &GpModel<S>, priors: &ResolvedPriors, mode: FitMode) -> (S, Vec<S>) {
    let (lml, grad) = model.log_marginal_likelihood_with_gradient();
    let mut value = lml;
    let mut g = grad.to_raw();
    if mode == FitMode::Mle {
        return (value, g);
    }
    let hp = model.hyperparameters();
    let d = hp.dim();
    for (i, &l) in hp.lengthscales.iter().enumerate() {
        value += priors.lengthscale.log_density(l);
        g[i] += priors.lengthscale.dlog_density_dlog(l);
    }
    value += priors.signal_variance.log_density(hp.signal_variance);
    g[d] += priors.signal_variance.dlog_density_dlog(hp.signal_variance);
    value += priors.noise.log_density(hp.noise_variance);
    g[d + 1] += priors.noise.dlog_density_dlog(hp.noise_variance);
    (value, g)
}

/// Which raw coordinates are free, and the values of the fixed ones.
struct Layout<S> {
    dim: usize,
    fixed_ls: Option<S>,
    fixed_sv: Option<S>,
    fixed_noise: Option<S>,
    fixed_mean: Option<S>,
}

impl<S: Scalar> Layout<S> {
    fn new(dim: usize, p: &ResolvedPriors) -> Self {
        let fixed = |q: &PositivePrior| match q {
            PositivePrior::Fixed(v) => Some(S::lit(*v)),
            _ => None,
        };
        Self {
            dim,
            fixed_ls: fixed(&p.lengthscale),
            fixed_sv: fixed(&p.signal_variance),
            fixed_noise: fixed(&p.noise),
            fixed_mean: p.fixed_mean.map(S::lit),
        }
    }

    /// Free-coordinate indices into the full raw vector.
    fn free_indices(&self) -> Vec<usize> {
        let d = self.dim;
        let mut idx = Vec::new();
        if self.fixed_ls.is_none() {
            idx.extend(0..d);
        }
        if self.fixed_sv.is_none() {
            idx.push(d);
        }
        if self.fixed_noise.is_none() {
            idx.push(d + 1);
        }
        if self.fixed_mean.is_none() {
            idx.push(d + 2);
        }
        idx
    }

    fn full_raw(&self, free: &[S], free_idx: &[usize]) -> Vec<S> {
        let d = self.dim;
        let ln = |v: S| v.ln();
        let mut raw = vec![S::zero(); d + 3];
        if let Some(l) = self.fixed_ls {
            raw[..d].iter_mut().for_each(|r| *r = ln(l));
        }
        if let Some(v) = self.fixed_sv {
            raw[d] = ln(v);
        }
        if let Some(v) = self.fixed_noise {
            raw[d + 1] = ln(v);
        }
        if let Some(v) = self.fixed_mean {
            raw[d + 2] = v;
        }
        for (&i, &v) in free_idx.iter().zip(free) {
            raw[i] = v;
        }
        raw
    }

    /// Builds hyperparameters, keeping fixed values bit-exact rather than round-tripping through `ln`/`exp`.
    fn hyperparameters(&self, free: &[S], free_idx: &[usize]) -> Result<Hyperparameters<S>> {
        let d = self.dim;
        let raw = self.full_raw(free, free_idx);
        let ls = match self.fixed_ls {
            Some(l) => vec![l; d],
            None => raw[..d].iter().map(|v| v.exp()).collect(),
        };
        Hyperparameters::new(
            ls,
            self.fixed_sv.unwrap_or_else(|| raw[d].exp()),
            self.fixed_noise.unwrap_or_else(|| raw[d + 1].exp()),
            self.fixed_mean.unwrap_or(raw[d + 2]),
        )
    }

    fn bounds(&self, free_idx: &[usize]) -> (Vec<S>, Vec<S>) {
        let d = self.dim;
        free_idx
            .iter()
            .map(|&i| {
                let (lo, hi) = if i < d {
                    LOG_LENGTHSCALE_BOUNDS
                } else if i == d {
                    LOG_SIGNAL_VARIANCE_BOUNDS
                } else if i == d + 1 {
                    LOG_NOISE_VARIANCE_BOUNDS
                } else {
                    MEAN_CONSTANT_BOUNDS
                };
                (S::lit(lo), S::lit(hi))
            })
            .unzip()
    }
}

/// Fits hyperparameters by maximizing the MAP (or MLE) objective with multiple restarts.
///
/// Restart 0 starts at the prior mode, the rest at prior draws. The best restart
/// wins, ties going to the lowest index.
pub fn fit<S: Scalar>(
    data: &Dataset<S>,
    kernel: &KernelSpec,
    priors: &HyperpriorSpec,
    cfg: &FitConfig,
) -> Result<FitResult<S>> {
    cfg.validate()?;
    crate::error::check_len(kernel.dim, data.dim())?;
    if data.len() < 2 {
        return Err(contract("fitting needs at least 2 observations"));
    }
    let resolved = priors.resolve(kernel.dim)?;
    let layout = Layout::<S>::new(kernel.dim, &resolved);
    let free_idx = layout.free_indices();
    let (lower, upper) = layout.bounds(&free_idx);
    let lbfgs = LbfgsConfig {
        max_iterations: cfg.max_iterations,
        gradient_tolerance: cfg.gradient_tolerance,
        value_tolerance: 1e-9,
        ..Default::default()
    };

    if free_idx.is_empty() {
        let hp = layout.hyperparameters(&[], &free_idx)?;
        let model = GpModel::new(*kernel, hp.clone(), data.clone())?;
        let (value, _) = objective_with_resolved(&model, &resolved, cfg.mode);
        return Ok(FitResult {
            hp,
            objective_value: value,
            converged: true,
            restart_index: 0,
            restarts_succeeded: 1,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(S, Vec<S>, bool, usize)> = None;
    let mut succeeded = 0;
    let mut best_start: Option<(S, Vec<S>)> = None;

    for restart in 0..cfg.n_restarts {
        let start = start_point::<S, _>(&layout, &resolved, &free_idx, restart == 0, &mut rng);
        let objective = |free: &[S]| -> Option<(S, Vec<S>)> {
            let hp = layout.hyperparameters(free, &free_idx).ok()?;
            let model = GpModel::new(*kernel, hp, data.clone()).ok()?;
            let (v, g) = objective_with_resolved(&model, &resolved, cfg.mode);
            let gf: Vec<S> = free_idx.iter().map(|&i| -g[i]).collect();
            Some((-v, gf))
        };
        let Some(m) = minimize_box(objective, &start, &lower, &upper, &lbfgs) else {
            continue;
        };
        if !m.value.is_finite() {
            if best_start.as_ref().is_none_or(|(v, _)| m.value < *v) {
                best_start = Some((m.value, m.x.clone()));
            }
            continue;
        }
        succeeded += 1;
        let value = -m.value;
        if best.as_ref().is_none_or(|(bv, ..)| value > *bv) {
            best = Some((value, m.x, m.converged, restart));
        }
    }

    let Some((value, x, converged, restart_index)) = best else {
        return Err(Error::FitDiverged {
            restarts: cfg.n_restarts,
            best_objective: best_start.as_ref().map_or(f64::NEG_INFINITY, |(v, _)| -v.as_f64()),
            best_raw: best_start.map(|(_, x)| x.iter().map(|v| v.as_f64()).collect()),
        });
    };
    Ok(FitResult {
        hp: layout.hyperparameters(&x, &free_idx)?,
        objective_value: value,
        converged,
        restart_index,
        restarts_succeeded: succeeded,
    })
}

fn start_point<S: Scalar, R: Rng>(
    layout: &Layout<S>,
    priors: &ResolvedPriors,
    free_idx: &[usize],
    at_mode: bool,
    rng: &mut R,
) -> Vec<S> {
    let d = layout.dim;
    let draw = |p: &PositivePrior, rng: &mut R| -> f64 {
        if at_mode {
            p.mode()
        } else {
            p.sample(rng)
        }
    };
    free_idx
        .iter()
        .map(|&i| {
            let v = if i < d {
                draw(&priors.lengthscale, rng).ln()
            } else if i == d {
                draw(&priors.signal_variance, rng).ln()
            } else if i == d + 1 {
                draw(&priors.noise, rng).ln()
            } else if at_mode {
                0.0
            } else {
                rng.random_range(-1.0..1.0)
            };
            S::lit(v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    #[test]
    fn standardize_examples() {
        let (y, st) = standardize(&[0.0f64, 2.0]).unwrap();
        let r = 0.5f64.sqrt();
        assert!((y[0] + r).abs() < 1e-15 && (y[1] - r).abs() < 1e-15);
        assert_eq!(st.mean, 1.0);
        assert!((st.scale - 2f64.sqrt()).abs() < 1e-15);

        let (y, st) = standardize(&[5.0f64, 5.0, 5.0]).unwrap();
        assert_eq!(y, vec![0.0; 3]);
        assert_eq!(st.scale, 1.0);

        let (y, st) = standardize(&[4.2f64]).unwrap();
        assert_eq!((y, st.scale, st.mean), (vec![0.0], 1.0, 4.2));
        assert!(standardize::<f64>(&[]).is_err());
    }

    #[test]
    fn signal_variance_hat_examples() {
        let spec = KernelSpec::new(crate::gp::KernelFamily::Rbf, 1).unwrap();
        // far-apart points give K ≈ I
        let x = Matrix::from_rows(&[vec![0.0], vec![0.5], vec![1.0]]).unwrap();
        let hp = Hyperparameters::new(vec![1e-3], 1.0, 0.0, 0.0).unwrap();
        let data = Dataset::from_standardized(x, vec![1.0; 3]).unwrap();
        let m = GpModel::new(spec, hp, data).unwrap();
        assert!((signal_variance_hat(&[1.0f64, 1.0, 1.0], &m).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(signal_variance_hat(&[0.0; 3], &m).unwrap(), 0.0);
    }

    #[test]
    fn fully_fixed_priors_return_inputs() {
        let spec = KernelSpec::new(crate::gp::KernelFamily::Matern52, 2).unwrap();
        let x = Matrix::from_rows(&[vec![0.1, 0.2], vec![0.7, 0.4], vec![0.3, 0.9]]).unwrap();
        let data = Dataset::from_standardized(x, vec![0.5, -1.0, 0.5]).unwrap();
        let priors = HyperpriorSpec {
            lengthscale: LengthscalePrior::Fixed { value: 0.37 },
            noise: NoisePrior::Fixed { value: 0.011 },
            signal_variance: SignalVariancePolicy::Fixed { value: 1.0 },
            mean: MeanPrior::Fixed { value: 0.13 },
        };
        let r = fit(&data, &spec, &priors, &FitConfig::default()).unwrap();
        assert_eq!(r.hp.lengthscales, vec![0.37, 0.37]);
        assert_eq!(r.hp.noise_variance, 0.011);
        assert_eq!(r.hp.mean_constant, 0.13);
        assert_eq!(r.hp.signal_variance, 1.0);
    }

    #[test]
    fn fit_needs_two_points() {
        let spec = KernelSpec::new(crate::gp::KernelFamily::Rbf, 1).unwrap();
        let data = Dataset::from_standardized(Matrix::from_rows(&[vec![0.5]]).unwrap(), vec![0.0]).unwrap();
        assert!(fit(&data, &spec, &HyperpriorSpec::default(), &FitConfig::default()).is_err());
    }
}
