//! Expected improvement, LogEI, and the global-plus-local acquisition optimizer.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, contract, Error, Result};
use crate::gp::GpModel;
use crate::linalg::Matrix;
use crate::optim::{minimize_box, LbfgsConfig};
use crate::sampling::{derive_seed, gaussian_around, SobolStream};
use crate::scalar::Scalar;
use crate::special::{log_normalized_improvement, normalized_improvement};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcqConfig {
    pub n_global_sobol: usize,
    pub n_local_gaussian: usize,
    pub n_refine: usize,
    /// Per-coordinate standard deviation of the local candidates.
    pub local_scale: f64,
    pub max_refine_iters: usize,
    pub gradient_tolerance: f64,
}

impl Default for AcqConfig {
    fn default() -> Self {
        Self {
            n_global_sobol: 512,
            n_local_gaussian: 512,
            n_refine: 4,
            local_scale: 1e-3,
            max_refine_iters: 50,
            gradient_tolerance: 1e-6,
        }
    }
}

impl AcqConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_global_sobol == 0 || self.n_local_gaussian == 0 || self.n_refine == 0 {
            return Err(contract("acquisition candidate counts must be positive"));
        }
        if self.n_refine > self.n_global_sobol + self.n_local_gaussian {
            return Err(contract("n_refine exceeds the number of candidates"));
        }
        if !(self.local_scale > 0.0) || !self.local_scale.is_finite() {
            return Err(contract("local_scale must be positive"));
        }
        if self.max_refine_iters == 0 || !(self.gradient_tolerance > 0.0) {
            return Err(contract("refinement budget and tolerance must be positive"));
        }
        Ok(())
    }
}

/// LogEI at one `(μ, σ)` with its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcqValue<S> {
    pub log_ei: S,
    /// `Z = (μ - y_max) / σ`.
    pub z: S,
    pub dlog_ei_dmu: S,
    pub dlog_ei_dsigma: S,
}

/// `EI = σ[ZΦ(Z) + φ(Z)]`, or `max(μ - y_max, 0)` at `σ = 0`.
pub fn ei<S: Scalar>(mu: S, sigma: S, y_max: S) -> Result<S> {
    if !(sigma >= S::zero()) {
        return Err(contract("sigma must be non-negative"));
    }
    if sigma == S::zero() {
        return Ok((mu - y_max).max(S::zero()));
    }
    let z = (mu - y_max) / sigma;
    Ok((sigma * normalized_improvement(z)).max(S::zero()))
}

/// `log EI` with a stable branch far in the lower tail.
pub fn log_ei<S: Scalar>(mu: S, sigma: S, y_max: S) -> Result<AcqValue<S>> {
    if !(sigma > S::zero()) || !sigma.is_finite() {
        return Err(contract("log_ei requires sigma > 0"));
    }
    let z = (mu - y_max) / sigma;
    let li = log_normalized_improvement(z);
    Ok(AcqValue {
        log_ei: sigma.ln() + li.log_h,
        z,
        dlog_ei_dmu: li.cdf_over_h / sigma,
        dlog_ei_dsigma: li.pdf_over_h / sigma,
    })
}

/// LogEI of a model at `x` and its gradient with respect to `x`.
///
/// Returns `None` where the posterior variance vanishes.
pub fn log_ei_at<S: Scalar>(model: &GpModel<S>, x: &[S], y_max: S) -> Result<Option<(S, Vec<S>)>> {
    let (p, g) = model.posterior_with_gradient(x)?;
    if !(p.variance > S::zero()) {
        return Ok(None);
    }
    let sigma = p.variance.sqrt();
    let v = log_ei(p.mean, sigma, y_max)?;
    let grad = g
        .mean
        .iter()
        .zip(&g.variance)
        .map(|(&dm, &dv)| v.dlog_ei_dmu * dm + v.dlog_ei_dsigma * dv / (S::lit(2.0) * sigma))
        .collect();
    Ok(Some((v.log_ei, grad)))
}

fn candidate_score<S: Scalar>(model: &GpModel<S>, x: &[S], y_max: S) -> (S, bool) {
    let p = model.posterior_unchecked(x);
    if p.variance > S::zero() {
        let v = log_ei(p.mean, p.variance.sqrt(), y_max).map_or(S::neg_infinity(), |v| v.log_ei);
        (v, true)
    } else if p.mean > y_max {
        ((p.mean - y_max).ln(), false)
    } else {
        (S::neg_infinity(), false)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcqResult<S> {
    pub point: Vec<S>,
    pub log_ei: S,
    /// Best LogEI among the unrefined candidates.
    pub best_candidate_log_ei: S,
    /// Index of the winning candidate, or of the refinement start that produced the winner.
    pub source_index: usize,
}

/// Scores Sobol and incumbent-local candidates, refines the best few with
/// box-constrained L-BFGS on LogEI, and returns the best point in `[0,1]^D`.
pub fn optimize_acquisition<S: Scalar>(
    model: &GpModel<S>,
    y_max: S,
    incumbent: &[S],
    cfg: &AcqConfig,
    seed: u64,
) -> Result<AcqResult<S>> {
    cfg.validate()?;
    let d = model.dim();
    check_len(d, incumbent.len())?;
    if incumbent.iter().any(|&v| !(v >= S::zero() && v <= S::one())) {
        return Err(contract("incumbent must lie in the unit cube"));
    }
    let global: Matrix<S> = SobolStream::new(d, Some(derive_seed(seed, 0)))?.take(cfg.n_global_sobol)?;
    let local = gaussian_around(
        incumbent,
        &vec![S::lit(cfg.local_scale); d],
        cfg.n_local_gaussian,
        derive_seed(seed, 1),
    )?;
    let candidates: Vec<&[S]> = global.row_iter().chain(local.row_iter()).collect();

    let mut any_variance = false;
    let scores: Vec<S> = candidates
        .iter()
        .map(|x| {
            let (s, has_var) = candidate_score(model, x, y_max);
            any_variance |= has_var;
            s
        })
        .collect();
    if !any_variance {
        return Err(Error::DegenerateAcquisition);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    // stable: equal scores keep index order
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal));
    let best_idx = order[0];
    let mut best = AcqResult {
        point: candidates[best_idx].to_vec(),
        log_ei: scores[best_idx],
        best_candidate_log_ei: scores[best_idx],
        source_index: best_idx,
    };

    let lbfgs = LbfgsConfig {
        max_iterations: cfg.max_refine_iters,
        gradient_tolerance: cfg.gradient_tolerance,
        ..Default::default()
    };
    let lower = vec![S::zero(); d];
    let upper = vec![S::one(); d];
    for &idx in order.iter().take(cfg.n_refine) {
        if !scores[idx].is_finite() {
            continue;
        }
        let f = |x: &[S]| -> Option<(S, Vec<S>)> {
            let (v, g) = log_ei_at(model, x, y_max).ok()??;
            Some((-v, g.into_iter().map(|c| -c).collect()))
        };
        let Some(m) = minimize_box(f, candidates[idx], &lower, &upper, &lbfgs) else {
            continue;
        };
        let v = -m.value;
        if v > best.log_ei {
            best.point = m.x;
            best.log_ei = v;
            best.source_index = idx;
        }
    }
    Ok(best)
}
