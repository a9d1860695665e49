//! Expected improvement as a function of correlation with the incumbent.
//!
//! Under an uninformed model (independent training points, `σ_f` scale), a query
//! with correlation `ρ` to the incumbent has `μ = c + ρ(y_max - c)` and
//! `σ² = σ_f²(1 - ρ²)`. With `ŷ = (y_max - c)/σ_f` the EI becomes a function of
//! `ρ` alone, maximized at a correlation bounded below by the root of
//! `ρ√((1+ρ)/(1-ρ)) = ŷ`.

use crate::engine::RunHistory;
use crate::error::{contract, Result};
use crate::scalar::Scalar;
use crate::special::{log_normalized_improvement, norm_cdf, norm_pdf};

/// Grid resolution used by [`rho_star_numeric`].
pub const RHO_GRID_POINTS: usize = 4096;
/// Upper end of the scanned correlation range.
pub const RHO_GRID_MAX: f64 = 1.0 - 1e-6;

fn check_args<S: Scalar>(rho: S, yhat: S) -> Result<()> {
    if !(rho >= S::zero() && rho < S::one()) {
        return Err(contract("rho must lie in [0, 1)"));
    }
    if !(yhat > S::zero()) || !yhat.is_finite() {
        return Err(contract("yhat must be positive and finite"));
    }
    Ok(())
}

fn z_of_rho<S: Scalar>(rho: S, yhat: S) -> S {
    -yhat * ((S::one() - rho) / (S::one() + rho)).sqrt()
}

/// `log EI(ρ)`, finite on all of `[0, 1)`.
pub fn log_ei_of_rho<S: Scalar>(rho: S, yhat: S) -> Result<S> {
    check_args(rho, yhat)?;
    let z = z_of_rho(rho, yhat);
    let s = ((S::one() - rho) * (S::one() + rho)).sqrt();
    Ok(s.ln() + log_normalized_improvement(z).log_h)
}

/// `EI(ρ) = (ρ-1)ŷΦ(Z) + √(1-ρ²)φ(Z)` with `Z = ŷ(ρ-1)/√(1-ρ²)`.
pub fn ei_of_rho<S: Scalar>(rho: S, yhat: S) -> Result<S> {
    Ok(log_ei_of_rho(rho, yhat)?.exp())
}

/// `dEI/dρ = ŷΦ(Z) - ρφ(Z)/√(1-ρ²)`.
pub fn dei_drho<S: Scalar>(rho: S, yhat: S) -> Result<S> {
    check_args(rho, yhat)?;
    let z = z_of_rho(rho, yhat);
    let s = ((S::one() - rho) * (S::one() + rho)).sqrt();
    Ok(yhat * norm_cdf(z) - rho / s * norm_pdf(z))
}

/// Root of `ρ√((1+ρ)/(1-ρ)) = ŷ` by bisection to `1e-10`.
pub fn rho_lower_bound(yhat: f64) -> Result<f64> {
    if !(yhat >= 0.0) || !yhat.is_finite() {
        return Err(contract("yhat must be non-negative and finite"));
    }
    if yhat == 0.0 {
        return Ok(0.0);
    }
    let g = |r: f64| r * ((1.0 + r) / (1.0 - r)).sqrt() - yhat;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if mid >= 1.0 || g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Numerical maximizer of `EI(ρ)`: dense grid scan plus golden-section refinement.
pub fn rho_star_numeric(yhat: f64) -> Result<f64> {
    let f = |r: f64| log_ei_of_rho(r, yhat);
    let n = RHO_GRID_POINTS;
    let step = RHO_GRID_MAX / (n - 1) as f64;
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..n {
        let v = f(i as f64 * step)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    let i = best.0;
    let lo = i.saturating_sub(1) as f64 * step;
    let hi = ((i + 1).min(n - 1)) as f64 * step;
    let (x, v) = golden_section_max(|r| f(r).unwrap_or(f64::NEG_INFINITY), lo, hi, 1e-13);
    Ok(if v >= best.1 { x } else { i as f64 * step })
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// EI over a correlation grid for one `ŷ`, with the bound and the numerical optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoProfile {
    pub yhat: f64,
    pub rho: Vec<f64>,
    pub ei: Vec<f64>,
    pub dei: Vec<f64>,
    pub rho_star_numeric: f64,
    pub rho_bound: f64,
}

pub fn rho_profile(yhat: f64, grid_points: usize) -> Result<RhoProfile> {
    if grid_points < 2 {
        return Err(contract("profile needs at least 2 grid points"));
    }
    let rho: Vec<f64> = (0..grid_points)
        .map(|i| i as f64 * RHO_GRID_MAX / (grid_points - 1) as f64)
        .collect();
    let ei = rho.iter().map(|&r| ei_of_rho(r, yhat)).collect::<Result<_>>()?;
    let dei = rho.iter().map(|&r| dei_drho(r, yhat)).collect::<Result<_>>()?;
    Ok(RhoProfile {
        yhat,
        rho,
        ei,
        dei,
        rho_star_numeric: rho_star_numeric(yhat)?,
        rho_bound: rho_lower_bound(yhat)?,
    })
}

/// Per-query distances to the incumbent held at query time and to the nearest earlier point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalityRecord {
    pub iteration: usize,
    pub dist_to_incumbent: f64,
    pub min_dist_to_data: f64,
    /// Whether the query came from the acquisition rather than the initial design.
    pub model_guided: bool,
}

/// Locality distances for every query after the first.
pub fn locality_report(history: &RunHistory) -> Result<Vec<LocalityRecord>> {
    if history.is_empty() {
        return Err(contract("locality report of an empty history"));
    }
    Ok(history
        .records
        .iter()
        .skip(1)
        .map(|r| LocalityRecord {
            iteration: r.iteration,
            dist_to_incumbent: r.dist_to_incumbent,
            min_dist_to_data: r.min_dist_to_data,
            model_guided: r.iteration >= history.n_init,
        })
        .collect())
}

/// Median of the model-guided distances to the incumbent, `None` if there are none.
pub fn median_guided_distance(report: &[LocalityRecord]) -> Option<f64> {
    let mut d: Vec<f64> = report
        .iter()
        .filter(|r| r.model_guided)
        .map(|r| r.dist_to_incumbent)
        .collect();
    if d.is_empty() {
        return None;
    }
    d.sort_by(f64::total_cmp);
    let n = d.len();
    Some(if n % 2 == 1 { d[n / 2] } else { 0.5 * (d[n / 2 - 1] + d[n / 2]) })
}
