//! Levy-4 and Hartmann-6 embedded axis-aligned in a larger ambient space.
//!
//! All objectives are maximized: the standard minimization forms are negated.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, contract, Result};

/// Observation noise standard deviation used by the synthetic tasks.
pub const BENCHMARK_NOISE_STD: f64 = 0.01;

/// Ambient dimensionalities covered by the default sweeps.
pub const AMBIENT_DIMS: [usize; 5] = [10, 25, 100, 300, 1000];

pub const HARTMANN6_OPTIMIZER: [f64; 6] = [
    0.201_689_52,
    0.150_010_69,
    0.476_873_98,
    0.275_332_43,
    0.311_651_62,
    0.657_300_54,
];
pub const HARTMANN6_OPTIMUM: f64 = 3.322_368_011_415_515;

const LEVY4_BOUNDS: [(f64, f64); 4] = [(-10.0, 5.0), (-10.0, 10.0), (-5.0, 10.0), (-1.0, 10.0)];

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

/// Standard Levy function (minimum 0 at the all-ones point).
pub fn levy(x: &[f64]) -> f64 {
    use std::f64::consts::PI;
    let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
    let d = w.len();
    let mut f = (PI * w[0]).sin().powi(2);
    for &wi in &w[..d - 1] {
        f += (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2));
    }
    f + (w[d - 1] - 1.0).powi(2) * (1.0 + (2.0 * PI * w[d - 1]).sin().powi(2))
}

/// Standard Hartmann-6 function (minimum ≈ -3.32237).
pub fn hartmann6(x: &[f64]) -> f64 {
    -(0..4)
        .map(|i| {
            let e: f64 = (0..6).map(|j| HARTMANN_A[i][j] * (x[j] - HARTMANN_P[i][j]).powi(2)).sum();
            HARTMANN_ALPHA[i] * (-e).exp()
        })
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseFunction {
    Levy4,
    Hartmann6,
}

impl BaseFunction {
    pub fn effective_dim(self) -> usize {
        match self {
            BaseFunction::Levy4 => 4,
            BaseFunction::Hartmann6 => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BaseFunction::Levy4 => "levy4",
            BaseFunction::Hartmann6 => "hartmann6",
        }
    }

    fn native_bounds(self) -> Vec<(f64, f64)> {
        match self {
            BaseFunction::Levy4 => LEVY4_BOUNDS.to_vec(),
            BaseFunction::Hartmann6 => vec![(0.0, 1.0); 6],
        }
    }
}

/// A base function placed on randomly chosen active coordinates of `[0,1]^D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedBenchmark {
    pub base: BaseFunction,
    pub ambient_dim: usize,
    /// `active_dims[k]` is the ambient coordinate feeding base coordinate `k`.
    pub active_dims: Vec<usize>,
    /// Native-space shift per active dimension (Levy only; zeros for Hartmann).
    pub offsets: Vec<f64>,
    /// Native bounds per active dimension; inert coordinates are unused.
    pub bounds: Vec<(f64, f64)>,
    pub noise_std: f64,
    pub known_optimum: f64,
    pub seed: u64,
}

/// Builds a benchmark with seeded active-dimension placement and (for Levy) offsets
/// that keep the optimizer inside the middle 80% of every active range.
pub fn make_embedded(base: BaseFunction, ambient_dim: usize, seed: u64) -> Result<EmbeddedBenchmark> {
    let de = base.effective_dim();
    if ambient_dim < de {
        return Err(contract(format!(
            "ambient dimension {ambient_dim} is below the effective dimension {de}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let active_dims = sample(&mut rng, ambient_dim, de).into_vec();
    let bounds = base.native_bounds();
    let (offsets, known_optimum) = match base {
        BaseFunction::Levy4 => {
            let offsets = bounds
                .iter()
                .map(|&(lo, hi)| {
                    let w = hi - lo;
                    rng.random_range(lo + 0.1 * w..hi - 0.1 * w) - 1.0
                })
                .collect();
            (offsets, 0.0)
        }
        BaseFunction::Hartmann6 => (vec![0.0; de], HARTMANN6_OPTIMUM),
    };
    Ok(EmbeddedBenchmark {
        base,
        ambient_dim,
        active_dims,
        offsets,
        bounds,
        noise_std: BENCHMARK_NOISE_STD,
        known_optimum,
        seed,
    })
}

impl EmbeddedBenchmark {
    pub fn dim(&self) -> usize {
        self.ambient_dim
    }

    /// Maps the active coordinates of a unit-cube point to native base-function inputs.
    pub fn to_native(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.ambient_dim, x.len())?;
        if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(contract("benchmark input must lie in the unit cube"));
        }
        Ok(self
            .active_dims
            .iter()
            .zip(&self.bounds)
            .map(|(&a, &(lo, hi))| lo + x[a] * (hi - lo))
            .collect())
    }

    /// Inverse of [`Self::to_native`]; inert coordinates are set to `fill`.
    pub fn from_native(&self, z: &[f64], fill: f64) -> Result<Vec<f64>> {
        check_len(self.active_dims.len(), z.len())?;
        let mut x = vec![fill; self.ambient_dim];
        for ((&a, &(lo, hi)), &v) in self.active_dims.iter().zip(&self.bounds).zip(z) {
            x[a] = (v - lo) / (hi - lo);
        }
        Ok(x)
    }

    /// Noiseless maximized objective value at a unit-cube point.
    pub fn evaluate_true(&self, x: &[f64]) -> Result<f64> {
        let z = self.to_native(x)?;
        Ok(match self.base {
            BaseFunction::Levy4 => {
                let shifted: Vec<f64> = z.iter().zip(&self.offsets).map(|(v, o)| v - o).collect();
                -levy(&shifted)
            }
            BaseFunction::Hartmann6 => -hartmann6(&z),
        })
    }

    /// Unit-cube location of the optimum (inert coordinates at 0.5).
    pub fn optimizer(&self) -> Vec<f64> {
        let z: Vec<f64> = match self.base {
            BaseFunction::Levy4 => self.offsets.iter().map(|o| 1.0 + o).collect(),
            BaseFunction::Hartmann6 => HARTMANN6_OPTIMIZER.to_vec(),
        };
        self.from_native(&z, 0.5).expect("optimizer has the effective dimension")
    }

    pub fn with_noise_std(mut self, noise_std: f64) -> Self {
        self.noise_std = noise_std;
        self
    }
}

/// Additive Gaussian observation noise from a seeded stream, independent of the query.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    std: f64,
    calls: u64,
}

impl NoiseStream {
    pub fn new(std: f64, seed: u64) -> Result<Self> {
        if !(std >= 0.0) || !std.is_finite() {
            return Err(contract("noise std must be non-negative"));
        }
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            std,
            calls: 0,
        })
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn draw(&mut self) -> f64 {
        self.calls += 1;
        if self.std == 0.0 {
            return 0.0;
        }
        Normal::new(0.0, self.std).expect("validated std").sample(&mut self.rng)
    }
}

/// `evaluate_true` plus one draw from the noise stream.
pub fn evaluate_noisy(bench: &EmbeddedBenchmark, x: &[f64], noise: &mut NoiseStream) -> Result<f64> {
    Ok(bench.evaluate_true(x)? + noise.draw())
}
