//! The vanilla BO loop: Sobol design, then standardize, refit, maximize LogEI, evaluate.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::acquisition::{optimize_acquisition, AcqConfig};
use crate::benchmarks::{EmbeddedBenchmark, NoiseStream};
use crate::error::{contract, Error, Result};
use crate::fit::{fit, FitConfig, HyperpriorSpec};
use crate::gp::{Dataset, GpModel, KernelFamily, KernelSpec};
use crate::linalg::{euclidean, Matrix};
use crate::sampling::{derive_seed, doe_size, SobolStream};

/// One evaluation of a black-box objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub y: f64,
    /// Noiseless value, when the objective knows it.
    pub y_true: Option<f64>,
}

/// A maximization problem on `[0,1]^D`.
pub trait Objective {
    fn dim(&self) -> usize;
    fn evaluate(&mut self, x: &[f64]) -> Result<Observation>;
    fn known_optimum(&self) -> Option<f64> {
        None
    }
}

/// A synthetic benchmark paired with its observation-noise stream.
#[derive(Debug, Clone)]
pub struct BenchmarkProblem {
    pub bench: EmbeddedBenchmark,
    noise: NoiseStream,
}

impl BenchmarkProblem {
    pub fn new(bench: EmbeddedBenchmark, noise_seed: u64) -> Result<Self> {
        let noise = NoiseStream::new(bench.noise_std, noise_seed)?;
        Ok(Self { bench, noise })
    }
}

impl Objective for BenchmarkProblem {
    fn dim(&self) -> usize {
        self.bench.dim()
    }

    fn evaluate(&mut self, x: &[f64]) -> Result<Observation> {
        let y_true = self.bench.evaluate_true(x)?;
        Ok(Observation {
            y: y_true + self.noise.draw(),
            y_true: Some(y_true),
        })
    }

    fn known_optimum(&self) -> Option<f64> {
        Some(self.bench.known_optimum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoConfig {
    /// Total number of evaluations, including the initial design.
    pub budget: usize,
    /// Initial design size; `None` uses `ceil(3√D)`.
    pub n_init: Option<usize>,
    pub kernel: KernelFamily,
    pub hyperpriors: HyperpriorSpec,
    pub acq: AcqConfig,
    pub fit: FitConfig,
    pub seed: u64,
}

impl BoConfig {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self {
            budget,
            n_init: None,
            kernel: KernelFamily::default(),
            hyperpriors: HyperpriorSpec::default(),
            acq: AcqConfig::default(),
            fit: FitConfig::default(),
            seed,
        }
    }

    pub fn initial_design_size(&self, dim: usize) -> usize {
        self.n_init.unwrap_or_else(|| doe_size(dim))
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let n0 = self.initial_design_size(dim);
        if n0 == 0 {
            return Err(contract("initial design must contain at least one point"));
        }
        if self.budget < n0 {
            return Err(contract(format!("budget {} is below the initial design size {n0}", self.budget)));
        }
        self.acq.validate()?;
        self.fit.validate()?;
        self.hyperpriors.resolve(dim)?;
        Ok(())
    }
}

/// Summary of the hyperparameters fitted before a model-guided query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperSummary {
    pub ell_median: f64,
    pub signal_variance: f64,
    pub sigma_eps2: f64,
    pub mean_c: f64,
    pub restarts_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub x: Vec<f64>,
    pub y_raw: f64,
    pub y_true: Option<f64>,
    /// Best raw observation after this evaluation.
    pub incumbent_value: f64,
    /// `None` for initial-design points.
    pub hyper: Option<HyperSummary>,
    /// Distance to the incumbent held before this query (NaN for the first point).
    pub dist_to_incumbent: f64,
    /// Distance to the nearest earlier query (NaN for the first point).
    pub min_dist_to_data: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunHistory {
    pub dim: usize,
    pub n_init: usize,
    pub records: Vec<IterationRecord>,
}

impl RunHistory {
    pub fn new(dim: usize, n_init: usize) -> Self {
        Self {
            dim,
            n_init,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn queries(&self) -> Matrix<f64> {
        let mut m = Matrix::zeros(0, self.dim);
        for r in &self.records {
            m.push_row(&r.x).expect("record matches history dimension");
        }
        m
    }

    pub fn raw_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.y_raw).collect()
    }

    fn push(&mut self, x: Vec<f64>, obs: Observation, hyper: Option<HyperSummary>, wall_ms: f64) {
        let (dist_inc, min_dist, inc_before) = match incumbent(self) {
            Ok((p, v)) => {
                let md = self
                    .records
                    .iter()
                    .map(|r| euclidean(&r.x, &x))
                    .fold(f64::INFINITY, f64::min);
                (euclidean(&p, &x), md, v)
            }
            Err(_) => (f64::NAN, f64::NAN, f64::NEG_INFINITY),
        };
        self.records.push(IterationRecord {
            iteration: self.records.len(),
            x,
            y_raw: obs.y,
            y_true: obs.y_true,
            incumbent_value: inc_before.max(obs.y),
            hyper,
            dist_to_incumbent: dist_inc,
            min_dist_to_data: min_dist,
            wall_ms,
        });
    }
}

/// A failed run together with everything evaluated before the failure.
#[derive(Debug, Clone, thiserror::Error)]
#[error("BO run failed after {} evaluations: {error}", history.len())]
pub struct RunError {
    pub error: Error,
    pub history: RunHistory,
}

/// Best observed point and value; ties go to the earliest iteration.
pub fn incumbent(history: &RunHistory) -> Result<(Vec<f64>, f64)> {
    let mut best: Option<&IterationRecord> = None;
    for r in &history.records {
        if best.is_none_or(|b| r.y_raw > b.y_raw) {
            best = Some(r);
        }
    }
    best.map(|r| (r.x.clone(), r.y_raw))
        .ok_or_else(|| contract("incumbent of an empty history"))
}

/// `regret_t = f* - max_{s ≤ t} f(x_s)` using noiseless values.
pub fn simple_regret(history: &RunHistory, known_optimum: f64) -> Result<Vec<f64>> {
    let mut best = f64::NEG_INFINITY;
    history
        .records
        .iter()
        .map(|r| {
            let v = r
                .y_true
                .ok_or_else(|| contract(format!("iteration {} has no noiseless value", r.iteration)))?;
            best = best.max(v);
            Ok((known_optimum - best).max(0.0))
        })
        .collect()
}

fn evaluate_point(
    problem: &mut dyn Objective,
    history: &mut RunHistory,
    x: Vec<f64>,
    hyper: Option<HyperSummary>,
    started: Instant,
) -> std::result::Result<(), RunError> {
    if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(RunError {
            error: contract("query left the unit cube"),
            history: history.clone(),
        });
    }
    match problem.evaluate(&x) {
        Ok(obs) if obs.y.is_finite() => {
            history.push(x, obs, hyper, started.elapsed().as_secs_f64() * 1e3);
            Ok(())
        }
        Ok(_) => Err(RunError {
            error: Error::Objective("non-finite observation".into()),
            history: history.clone(),
        }),
        Err(e) => Err(RunError {
            error: match e {
                Error::Objective(_) => e,
                other => Error::Objective(other.to_string()),
            },
            history: history.clone(),
        }),
    }
}

/// Proposes the next query from the current history.
pub fn propose(history: &RunHistory, cfg: &BoConfig, step: u64) -> Result<(Vec<f64>, HyperSummary)> {
    let kernel = KernelSpec::new(cfg.kernel, history.dim)?;
    let data = Dataset::from_raw(history.queries(), &history.raw_values())?;
    let fit_cfg = FitConfig {
        seed: derive_seed(cfg.seed, 2 * step + 2),
        ..cfg.fit
    };
    let fitted = fit(&data, &kernel, &cfg.hyperpriors, &fit_cfg)?;
    let model = GpModel::new(kernel, fitted.hp.clone(), data)?;
    let y_max = model.data().y_max().expect("non-empty data");
    let (inc, _) = incumbent(history)?;
    let acq = optimize_acquisition(&model, y_max, &inc, &cfg.acq, derive_seed(cfg.seed, 2 * step + 3))?;
    let hp = &fitted.hp;
    Ok((
        acq.point,
        HyperSummary {
            ell_median: hp.median_lengthscale(),
            signal_variance: hp.signal_variance,
            sigma_eps2: hp.noise_variance,
            mean_c: hp.mean_constant,
            restarts_used: fitted.restarts_succeeded,
        },
    ))
}

/// Runs vanilla BO for exactly `cfg.budget` evaluations.
pub fn run(problem: &mut dyn Objective, cfg: &BoConfig) -> std::result::Result<RunHistory, RunError> {
    let dim = problem.dim();
    let n_init = cfg.initial_design_size(dim);
    let mut history = RunHistory::new(dim, n_init);
    let fail = |error: Error, history: &RunHistory| RunError {
        error,
        history: history.clone(),
    };
    cfg.validate(dim).map_err(|e| fail(e, &history))?;

    let mut doe = SobolStream::new(dim, Some(derive_seed(cfg.seed, 1))).map_err(|e| fail(e, &history))?;
    for _ in 0..n_init {
        let started = Instant::now();
        let mut x = vec![0.0; dim];
        doe.next_into(&mut x).map_err(|e| fail(e, &history))?;
        evaluate_point(problem, &mut history, x, None, started)?;
    }
    for step in n_init..cfg.budget {
        let started = Instant::now();
        let (x, hyper) = propose(&history, cfg, step as u64).map_err(|e| fail(e, &history))?;
        evaluate_point(problem, &mut history, x, Some(hyper), started)?;
    }
    Ok(history)
}

/// Pure Sobol search with the same budget, a non-adaptive baseline.
pub fn run_sobol_search(
    problem: &mut dyn Objective,
    budget: usize,
    seed: u64,
) -> std::result::Result<RunHistory, RunError> {
    let dim = problem.dim();
    let mut history = RunHistory::new(dim, budget);
    let mut stream = SobolStream::new(dim, Some(derive_seed(seed, 1))).map_err(|error| RunError {
        error,
        history: history.clone(),
    })?;
    for _ in 0..budget {
        let started = Instant::now();
        let mut x = vec![0.0; dim];
        stream.next_into(&mut x).map_err(|error| RunError {
            error,
            history: history.clone(),
        })?;
        evaluate_point(problem, &mut history, x, None, started)?;
    }
    Ok(history)
}
