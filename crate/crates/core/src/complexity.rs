//! Information gain `½ log|I + σ_ε⁻²K|` and maximal-information-gain curves for
//! several model classes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::gp::{KernelFamily, KernelSpec};
use crate::linalg::{Cholesky, Matrix};
use crate::sampling::SobolStream;
use crate::scalar::Scalar;

/// Upper limit on greedy candidate pools.
pub const MAX_POOL: usize = 50_000;

/// `½ log|I + K/σ_ε²|` via a Cholesky log-determinant.
pub fn information_gain<S: Scalar>(k: &Matrix<S>, noise_variance: S) -> Result<S> {
    Ok(information_gain_prefix(k, noise_variance)?.last().copied().unwrap_or(S::zero()))
}

/// Information gain of every prefix: entry `i` is the IG of the first `i + 1` points.
pub fn information_gain_prefix<S: Scalar>(k: &Matrix<S>, noise_variance: S) -> Result<Vec<S>> {
    if !k.is_square() {
        return Err(contract("gram matrix must be square"));
    }
    if !(noise_variance > S::zero()) {
        return Err(contract("noise variance must be positive"));
    }
    let n = k.rows();
    let inv = noise_variance.recip();
    let a = Matrix::from_fn(n, n, |i, j| {
        let v = k[(i, j)] * inv;
        if i == j {
            v + S::one()
        } else {
            v
        }
    });
    let chol = Cholesky::with_jitter(&a)?;
    let l = chol.factor();
    let mut acc = S::zero();
    Ok((0..n)
        .map(|i| {
            acc += l[(i, i)].ln();
            acc
        })
        .collect())
}

/// `(n/2)·log(1 + σ_f²/σ_ε²)`, the information gain of an independent kernel.
pub fn independent_gain(n: usize, signal_variance: f64, noise_variance: f64) -> f64 {
    0.5 * n as f64 * (signal_variance / noise_variance).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelVariant {
    Independent,
    FixedLengthscale { lengthscale: f64 },
    /// `ℓ = base·√(D/d_ref)`.
    ScaledLengthscale { base: f64, d_ref: f64 },
    AddGpRandomGroups { lengthscale: f64, seed: u64 },
    /// Fixed-lengthscale GP on a centered cube of side `shrink·ℓ`.
    LocalGpShrunk { lengthscale: f64, shrink: f64 },
    /// REMBO: `d_e`-dimensional kernel with `ℓ_j = base/‖A_j‖` for a Gaussian embedding `A`.
    Rembo { d_e: usize, base: f64, seed: u64 },
}

impl ModelVariant {
    pub fn name(&self) -> &'static str {
        match self {
            ModelVariant::Independent => "independent",
            ModelVariant::FixedLengthscale { .. } => "fixed",
            ModelVariant::ScaledLengthscale { .. } => "scaled",
            ModelVariant::AddGpRandomGroups { .. } => "addgp",
            ModelVariant::LocalGpShrunk { .. } => "local",
            ModelVariant::Rembo { .. } => "rembo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelClassSpec {
    pub variant: ModelVariant,
    pub family: KernelFamily,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl ModelClassSpec {
    pub fn new(variant: ModelVariant) -> Self {
        Self {
            variant,
            family: KernelFamily::Rbf,
            signal_variance: 1.0,
            noise_variance: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.signal_variance) || !pos(self.noise_variance) {
            return Err(contract("signal and noise variance must be positive"));
        }
        let ok = match self.variant {
            ModelVariant::Independent => true,
            ModelVariant::FixedLengthscale { lengthscale } => pos(lengthscale),
            ModelVariant::ScaledLengthscale { base, d_ref } => pos(base) && pos(d_ref),
            ModelVariant::AddGpRandomGroups { lengthscale, .. } => pos(lengthscale),
            ModelVariant::LocalGpShrunk { lengthscale, shrink } => pos(lengthscale) && pos(shrink),
            ModelVariant::Rembo { d_e, base, .. } => d_e >= 1 && pos(base),
        };
        if ok {
            Ok(())
        } else {
            Err(contract(format!("invalid parameters for model class {}", self.variant.name())))
        }
    }
}

/// A model class resolved for one ambient dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum EffectiveModel {
    Independent,
    /// Groups of input coordinates, each with its own stationary kernel over
    /// points drawn from `[lo, lo + side]^dim`.
    Grouped {
        groups: Vec<Vec<usize>>,
        lengthscales: Vec<f64>,
        dim: usize,
        lo: f64,
        side: f64,
    },
}

impl EffectiveModel {
    /// Dimension of the points the kernel acts on.
    pub fn point_dim(&self) -> usize {
        match self {
            EffectiveModel::Independent => 1,
            EffectiveModel::Grouped { dim, .. } => *dim,
        }
    }
}

/// Sequential random grouping: each dimension joins one of the existing groups or a
/// new one, all options equally likely.
pub fn random_groups(dim: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for d in 0..dim {
        let k = rng.random_range(0..=groups.len());
        if k == groups.len() {
            groups.push(vec![d]);
        } else {
            groups[k].push(d);
        }
    }
    groups
}

/// Per-embedded-dimension REMBO lengthscales `base/‖A_j‖` for a `D × d_e` standard Gaussian `A`.
pub fn rembo_lengthscales(dim: usize, d_e: usize, base: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = (0..dim * d_e).map(|_| rng.sample(StandardNormal)).collect();
    (0..d_e)
        .map(|j| {
            let norm = (0..dim).map(|i| a[i * d_e + j].powi(2)).sum::<f64>().sqrt();
            base / norm
        })
        .collect()
}

/// Resolves a model class for ambient dimension `dim`.
pub fn build_model_class(spec: &ModelClassSpec, dim: usize) -> Result<EffectiveModel> {
    spec.validate()?;
    if dim == 0 {
        return Err(contract("dimension must be at least 1"));
    }
    let all = || vec![(0..dim).collect::<Vec<_>>()];
    Ok(match spec.variant {
        ModelVariant::Independent => EffectiveModel::Independent,
        ModelVariant::FixedLengthscale { lengthscale } => EffectiveModel::Grouped {
            groups: all(),
            lengthscales: vec![lengthscale; dim],
            dim,
            lo: 0.0,
            side: 1.0,
        },
        ModelVariant::ScaledLengthscale { base, d_ref } => EffectiveModel::Grouped {
            groups: all(),
            lengthscales: vec![base * (dim as f64 / d_ref).sqrt(); dim],
            dim,
            lo: 0.0,
            side: 1.0,
        },
        ModelVariant::AddGpRandomGroups { lengthscale, seed } => EffectiveModel::Grouped {
            groups: random_groups(dim, seed),
            lengthscales: vec![lengthscale; dim],
            dim,
            lo: 0.0,
            side: 1.0,
        },
        ModelVariant::LocalGpShrunk { lengthscale, shrink } => {
            let side = (shrink * lengthscale).min(1.0);
            EffectiveModel::Grouped {
                groups: all(),
                lengthscales: vec![lengthscale; dim],
                dim,
                lo: 0.5 - 0.5 * side,
                side,
            }
        }
        ModelVariant::Rembo { d_e, base, seed } => {
            if d_e > dim {
                return Err(contract("embedding dimension exceeds the ambient dimension"));
            }
            EffectiveModel::Grouped {
                groups: vec![(0..d_e).collect()],
                lengthscales: rembo_lengthscales(dim, d_e, base, seed),
                dim: d_e,
                lo: 0.0,
                side: 1.0,
            }
        }
    })
}

/// Information-gain curve `γ` at increasing point counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MigCurve {
    pub counts: Vec<usize>,
    pub values: Vec<f64>,
    /// Set when the candidate pool ran out before the requested count.
    pub truncated: bool,
}

fn group_gram<S: Scalar>(
    family: KernelFamily,
    signal_variance: S,
    pts: &Matrix<S>,
    group: &[usize],
    ls: &[S],
) -> Matrix<S> {
    let n = pts.rows();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = signal_variance;
        let xi = pts.row(i);
        for j in 0..i {
            let xj = pts.row(j);
            let r2 = group.iter().fold(S::zero(), |acc, &g| {
                let t = (xi[g] - xj[g]) / ls[g];
                acc + t * t
            });
            let v = signal_variance * family.correlation(r2);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

fn sobol_points<S: Scalar>(n: usize, dim: usize, lo: f64, side: f64, seed: Option<u64>) -> Result<Matrix<S>> {
    let m: Matrix<S> = SobolStream::new(dim, seed)?.take(n)?;
    Ok(m.map(|v| S::lit(lo) + S::lit(side) * v))
}

/// Log-spaced point counts `1..=n` (always including `n`).
pub fn log_grid(n: usize, per_decade: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let steps = ((n as f64).log10() * per_decade as f64).ceil() as usize;
    let mut v: Vec<usize> = (0..=steps)
        .map(|i| (10f64.powf(i as f64 / per_decade as f64)).round() as usize)
        .filter(|&c| c >= 1 && c <= n)
        .collect();
    v.push(n);
    v.dedup();
    v
}

/// Information gain of the first `k` Sobol points for `k` on a log grid up to `n`.
///
/// One factorization of the full design gives every prefix.
pub fn sobol_mig(spec: &ModelClassSpec, dim: usize, n: usize, seed: Option<u64>) -> Result<MigCurve> {
    if n == 0 {
        return Err(contract("sobol_mig needs n >= 1"));
    }
    let model = build_model_class(spec, dim)?;
    let counts = log_grid(n, 10);
    let prefix: Vec<f64> = match &model {
        EffectiveModel::Independent => (1..=n)
            .map(|k| independent_gain(k, spec.signal_variance, spec.noise_variance))
            .collect(),
        EffectiveModel::Grouped {
            groups,
            lengthscales,
            dim: pd,
            lo,
            side,
        } => {
            let pts: Matrix<f64> = sobol_points(n, *pd, *lo, *side, seed)?;
            let mut total = vec![0.0; n];
            for g in groups {
                let k = group_gram(spec.family, spec.signal_variance, &pts, g, lengthscales);
                for (t, v) in total.iter_mut().zip(information_gain_prefix(&k, spec.noise_variance)?) {
                    *t += v;
                }
            }
            total
        }
    };
    Ok(MigCurve {
        values: counts.iter().map(|&c| prefix[c - 1]).collect(),
        counts,
        truncated: false,
    })
}

/// Greedy MIG: repeatedly adds the pool point with the largest information gain
/// under the model conditioned on the points chosen so far.
///
/// Variances are maintained with rank-one updates. For grouped models the gain is
/// the sum of the per-group gains.
pub fn greedy_mig(spec: &ModelClassSpec, dim: usize, pool: &Matrix<f64>, n: usize) -> Result<MigCurve> {
    let model = build_model_class(spec, dim)?;
    let (sv, noise) = (spec.signal_variance, spec.noise_variance);
    let counts: Vec<usize>;
    let mut values = Vec::new();
    match &model {
        EffectiveModel::Independent => {
            let m = n.min(pool.rows());
            counts = (1..=m).collect();
            values.extend(counts.iter().map(|&k| independent_gain(k, sv, noise)));
        }
        EffectiveModel::Grouped {
            groups,
            lengthscales,
            dim: pd,
            ..
        } => {
            if pool.cols() != *pd {
                return Err(contract(format!(
                    "pool has {} columns, model class acts on {pd}",
                    pool.cols()
                )));
            }
            let p = pool.rows();
            let m = n.min(p);
            let kern = |g: &[usize], a: &[f64], b: &[f64]| {
                let r2 = g.iter().fold(0.0, |acc, &i| acc + ((a[i] - b[i]) / lengthscales[i]).powi(2));
                sv * spec.family.correlation(r2)
            };
            let mut var: Vec<Vec<f64>> = vec![vec![sv; p]; groups.len()];
            // factors[g][t] = column t of the incremental Cholesky over the pool
            let mut factors: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(m); groups.len()];
            let mut chosen = vec![false; p];
            let mut acc = 0.0;
            let mut c = Vec::with_capacity(m);
            for step in 0..m {
                let mut best = (usize::MAX, f64::NEG_INFINITY);
                for i in 0..p {
                    if chosen[i] {
                        continue;
                    }
                    let gain: f64 = var.iter().map(|v| 0.5 * (v[i].max(0.0) / noise).ln_1p()).sum();
                    if gain > best.1 {
                        best = (i, gain);
                    }
                }
                let s = best.0;
                chosen[s] = true;
                acc += best.1;
                c.push(step + 1);
                values.push(acc);
                let xs = pool.row(s);
                for (gi, g) in groups.iter().enumerate() {
                    let denom = (var[gi][s].max(0.0) + noise).sqrt();
                    let prev = &factors[gi];
                    let col: Vec<f64> = (0..p)
                        .map(|i| {
                            let mut v = kern(g, pool.row(i), xs);
                            for f in prev {
                                v -= f[i] * f[s];
                            }
                            v / denom
                        })
                        .collect();
                    for i in 0..p {
                        var[gi][i] -= col[i] * col[i];
                    }
                    factors[gi].push(col);
                }
            }
            counts = c;
        }
    }
    Ok(MigCurve {
        truncated: counts.len() < n,
        counts,
        values,
    })
}

/// Sobol candidate pool of size `min(10n, 50 000)` in the model's point domain.
pub fn default_pool(spec: &ModelClassSpec, dim: usize, n: usize, seed: Option<u64>) -> Result<Matrix<f64>> {
    let size = (10 * n).clamp(1, MAX_POOL);
    match build_model_class(spec, dim)? {
        EffectiveModel::Independent => Ok(Matrix::zeros(size, 1)),
        EffectiveModel::Grouped { dim: pd, lo, side, .. } => sobol_points(size, pd, lo, side, seed),
    }
}

/// Builds the stationary Gram matrix of `pts` for a single-group kernel.
pub fn gram_for(spec: &KernelSpec, lengthscale: f64, signal_variance: f64, pts: &Matrix<f64>) -> Matrix<f64> {
    let group: Vec<usize> = (0..spec.dim).collect();
    group_gram(spec.family, signal_variance, pts, &group, &vec![lengthscale; spec.dim])
}
