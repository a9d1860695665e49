//! Projected limited-memory BFGS for smooth objectives under box constraints.
//!
//! Variables sitting on a bound with the gradient pushing outward are pinned for
//! the iteration; the two-loop recursion runs on the remaining free coordinates
//! and the step is projected back into the box during backtracking.

use std::collections::VecDeque;

use crate::linalg::dot;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsConfig {
    pub max_iterations: usize,
    /// Stop when the infinity norm of the projected gradient drops below this.
    pub gradient_tolerance: f64,
    /// Stop when the relative decrease of the objective drops below this.
    pub value_tolerance: f64,
    pub memory: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            gradient_tolerance: 1e-6,
            value_tolerance: 1e-10,
            memory: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<S> {
    pub x: Vec<S>,
    pub value: S,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

/// Minimizes `f` over the box `[lower, upper]` starting from `x0` (clamped into the box).
///
/// `f` returns `None` where the objective is undefined; the line search backs off
/// from such points. Returns `None` only if the start point itself is undefined.
pub fn minimize_box<S, F>(mut f: F, x0: &[S], lower: &[S], upper: &[S], cfg: &LbfgsConfig) -> Option<Minimum<S>>
where
    S: Scalar,
    F: FnMut(&[S]) -> Option<(S, Vec<S>)>,
{
    let n = x0.len();
    assert!(lower.len() == n && upper.len() == n, "bounds must match the dimension");
    let clamp = |x: &mut [S]| {
        for i in 0..n {
            x[i] = x[i].max(lower[i]).min(upper[i]);
        }
    };
    let mut x = x0.to_vec();
    clamp(&mut x);
    let mut evaluations = 1;
    let (mut fx, mut g) = match f(&x) {
        Some((v, g)) if v.is_finite() && g.iter().all(|c| c.is_finite()) => (v, g),
        _ => return None,
    };
    let gtol = S::lit(cfg.gradient_tolerance);
    let ftol = S::lit(cfg.value_tolerance);
    let mut memory: VecDeque<(Vec<S>, Vec<S>, S)> = VecDeque::with_capacity(cfg.memory);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        let pinned: Vec<bool> = (0..n)
            .map(|i| (x[i] <= lower[i] && g[i] > S::zero()) || (x[i] >= upper[i] && g[i] < S::zero()))
            .collect();
        let pg: Vec<S> = (0..n).map(|i| if pinned[i] { S::zero() } else { g[i] }).collect();
        if pg.iter().fold(S::zero(), |m, v| m.max(v.abs())) < gtol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut d = two_loop(&pg, &memory, &pinned);
        if !(dot(&d, &pg) < S::zero()) {
            memory.clear();
            d = pg.iter().map(|&v| -v).collect();
        }
        let mut t = if memory.is_empty() {
            let norm = dot(&d, &d).sqrt();
            S::one().min(norm.recip())
        } else {
            S::one()
        };

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut xn: Vec<S> = x.iter().zip(&d).map(|(&a, &b)| a + t * b).collect();
            clamp(&mut xn);
            let step: Vec<S> = xn.iter().zip(&x).map(|(&a, &b)| a - b).collect();
            if step.iter().all(|v| *v == S::zero()) {
                break;
            }
            evaluations += 1;
            if let Some((fn_, gn)) = f(&xn) {
                let decrease = dot(&g, &step);
                if decrease < S::zero()
                    && fn_.is_finite()
                    && gn.iter().all(|c| c.is_finite())
                    && fn_ <= fx + S::lit(ARMIJO) * decrease
                {
                    accepted = Some((xn, fn_, gn, step));
                    break;
                }
            }
            t *= S::lit(0.5);
        }
        let Some((xn, fn_, gn, step)) = accepted else {
            // no progress possible along the search direction
            converged = memory.is_empty();
            if !memory.is_empty() {
                memory.clear();
                continue;
            }
            break;
        };

        let y: Vec<S> = gn.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = dot(&step, &y);
        if sy > S::lit(1e-12) * dot(&step, &step).sqrt() * dot(&y, &y).sqrt() {
            if memory.len() == cfg.memory {
                memory.pop_front();
            }
            memory.push_back((step, y, sy.recip()));
        }
        let rel = (fx - fn_) / fx.abs().max(fn_.abs()).max(S::one());
        x = xn;
        fx = fn_;
        g = gn;
        if rel <= ftol {
            converged = true;
            break;
        }
    }

    Some(Minimum {
        x,
        value: fx,
        iterations,
        evaluations,
        converged,
    })
}

fn two_loop<S: Scalar>(grad: &[S], memory: &VecDeque<(Vec<S>, Vec<S>, S)>, pinned: &[bool]) -> Vec<S> {
    let mask = |v: &[S]| -> Vec<S> {
        v.iter()
            .zip(pinned)
            .map(|(&a, &p)| if p { S::zero() } else { a })
            .collect()
    };
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    let masked: Vec<(Vec<S>, Vec<S>)> = memory.iter().map(|(s, y, _)| (mask(s), mask(y))).collect();
    for ((s, y), (_, _, rho)) in masked.iter().zip(memory).rev() {
        let a = *rho * dot(s, &q);
        for (qi, &yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y)) = masked.last() {
        let yy = dot(y, y);
        if yy > S::zero() {
            let gamma = dot(s, y) / yy;
            if gamma > S::zero() {
                q.iter_mut().for_each(|v| *v *= gamma);
            }
        }
    }
    for (((s, y), (_, _, rho)), a) in masked.iter().zip(memory).zip(alphas.into_iter().rev()) {
        let b = *rho * dot(y, &q);
        for (qi, &si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter()
        .zip(pinned)
        .map(|(&v, &p)| if p { S::zero() } else { -v })
        .collect()
}
