//! Standard normal helpers and the tail machinery behind log expected improvement.
//!
//! `h(z) = φ(z) + zΦ(z)` is the normalized improvement, `EI = σ·h(z)`. For very
//! negative `z` the two terms cancel, so `h` is evaluated as `φ(z)·q(-z)` where
//! `q(x) = 1 - x·R(x)` and `R` is the Mills ratio `(1 - Φ(x)) / φ(x)`.

use crate::scalar::Scalar;

/// Below this `x` the Mills ratio comes from the scaled complementary error
/// function; above it the asymptotic series converges to machine precision.
const SERIES_THRESHOLD: f64 = 12.0;
const ERFCX_ASYMPTOTIC: f64 = 25.0;

#[inline]
pub fn ln_sqrt_2pi<S: Scalar>() -> S {
    S::lit(0.918_938_533_204_672_8)
}

#[inline]
pub fn norm_logpdf<S: Scalar>(z: S) -> S {
    -ln_sqrt_2pi::<S>() - S::lit(0.5) * z * z
}

#[inline]
pub fn norm_pdf<S: Scalar>(z: S) -> S {
    norm_logpdf(z).exp()
}

pub fn erfc<S: Scalar>(x: S) -> S {
    S::lit(libm::erfc(x.as_f64()))
}

#[inline]
pub fn norm_cdf<S: Scalar>(z: S) -> S {
    S::lit(0.5) * erfc(-z * S::FRAC_1_SQRT_2())
}

/// Scaled complementary error function `exp(x²)·erfc(x)` for `x ≥ 0`.
pub fn erfcx<S: Scalar>(x: S) -> S {
    let xf = x.as_f64();
    S::lit(if xf < ERFCX_ASYMPTOTIC {
        erfcx_direct(xf)
    } else {
        erfcx_series(xf)
    })
}

fn erfcx_direct(x: f64) -> f64 {
    // x² = h² + (x-h)(x+h) with h² exact keeps exp(x²) accurate
    let h = (x * 4096.0).trunc() / 4096.0;
    (h * h).exp() * ((x - h) * (x + h)).exp() * libm::erfc(x)
}

fn erfcx_series(x: f64) -> f64 {
    // 1/(x√π) Σ (-1)^k (2k-1)!! / (2x²)^k
    let inv = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        term *= -((2 * k - 1) as f64) * inv;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (x * std::f64::consts::PI.sqrt())
}

/// `q(x) = 1 - x·R(x)` for `x ≥ 0`, accurate in relative terms for large `x`.
pub fn one_minus_x_mills<S: Scalar>(x: S) -> S {
    if x.as_f64() < SERIES_THRESHOLD {
        S::one() - x * mills_ratio(x)
    } else {
        q_series(x)
    }
}

fn q_series<S: Scalar>(x: S) -> S {
    // 1/x² - 3/x⁴ + 15/x⁶ - ...
    let inv2 = (x * x).recip();
    let mut term = inv2;
    let mut sum = term;
    for k in 1..48 {
        term = -term * S::from_usize_lossy(2 * k + 1) * inv2;
        sum += term;
        if term.abs() < S::epsilon() * S::lit(0.01) * sum.abs() {
            break;
        }
    }
    sum
}

/// Mills ratio `R(x) = (1 - Φ(x)) / φ(x)` for `x ≥ 0`.
pub fn mills_ratio<S: Scalar>(x: S) -> S {
    if x.as_f64() < SERIES_THRESHOLD {
        S::lit((std::f64::consts::PI / 2.0).sqrt()) * erfcx(x * S::FRAC_1_SQRT_2())
    } else {
        (S::one() - one_minus_x_mills(x)) / x
    }
}

/// `h(z) = φ(z) + zΦ(z)` evaluated directly; loses relative accuracy for `z ≪ 0`.
#[inline]
pub fn normalized_improvement<S: Scalar>(z: S) -> S {
    norm_pdf(z) + z * norm_cdf(z)
}

/// `log h(z)` together with `Φ(z)/h(z)` and `φ(z)/h(z)`, stable for all finite `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogImprovement<S> {
    pub log_h: S,
    pub cdf_over_h: S,
    pub pdf_over_h: S,
}

pub fn log_normalized_improvement<S: Scalar>(z: S) -> LogImprovement<S> {
    if z > -S::one() {
        let pdf = norm_pdf(z);
        let cdf = norm_cdf(z);
        let h = pdf + z * cdf;
        LogImprovement {
            log_h: h.ln(),
            cdf_over_h: cdf / h,
            pdf_over_h: pdf / h,
        }
    } else {
        let x = -z;
        let q = one_minus_x_mills(x);
        let r = mills_ratio(x);
        LogImprovement {
            log_h: norm_logpdf(z) + q.ln(),
            cdf_over_h: r / q,
            pdf_over_h: q.recip(),
        }
    }
}

/// Natural log of the gamma function.
pub fn ln_gamma<S: Scalar>(x: S) -> S {
    S::lit(libm::lgamma(x.as_f64()))
}
