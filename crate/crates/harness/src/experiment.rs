//! Experiment orchestration: repetitions across worker threads, then aggregation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;
use vanilla_bo::benchmarks::make_embedded;
use vanilla_bo::complexity::{default_pool, greedy_mig, sobol_mig};
use vanilla_bo::engine::{run, run_sobol_search, BenchmarkProblem, BoConfig, RunError, RunHistory};
use vanilla_bo::geometry::{locality_report, rho_lower_bound, rho_star_numeric};
use vanilla_bo::sampling::derive_seed;

use crate::config::{Command, ExperimentConfig};
use crate::output::{fmt_float, format_table, format_trace, quantiles, read_trace_regret, write_json, write_string, VERSION};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "VBO_WORKERS";
/// Stream index of the observation noise within a repetition seed.
const NOISE_STREAM: u64 = 1_000;
/// Method name of the Sobol-search baseline.
pub const SOBOL_METHOD: &str = "sobol";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] vanilla_bo::Error),
    #[error("{0}")]
    Report(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn worker_count(cfg: &ExperimentConfig) -> usize {
    cfg.workers
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()))
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
        .max(1)
}

/// Evaluates `f(0..n)` on up to `workers` scoped threads, preserving order.
pub fn parallel_map<T: Send>(n: usize, workers: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.min(n).max(1) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let v = f(i);
                slots.lock().expect("no worker panicked holding the lock")[i] = Some(v);
            });
        }
    });
    slots
        .into_inner()
        .expect("no worker panicked holding the lock")
        .into_iter()
        .map(|v| v.expect("every task ran"))
        .collect()
}

fn problem_for(cfg: &ExperimentConfig, seed: u64) -> Result<BenchmarkProblem, RunError> {
    let fail = |error| RunError {
        error,
        history: RunHistory::new(cfg.dim, 0),
    };
    let bench = make_embedded(cfg.benchmark, cfg.dim, seed).map_err(fail)?.with_noise_std(cfg.noise_std);
    BenchmarkProblem::new(bench, derive_seed(seed, NOISE_STREAM)).map_err(fail)
}

/// One BO repetition on the configured benchmark. Returns the history and the known optimum.
pub fn run_rep(cfg: &ExperimentConfig, seed: u64) -> Result<(RunHistory, f64), RunError> {
    let mut problem = problem_for(cfg, seed)?;
    let bo = BoConfig { seed, ..cfg.bo };
    let opt = problem.bench.known_optimum;
    run(&mut problem, &bo).map(|h| (h, opt))
}

/// Sobol search with the same benchmark instance and budget.
pub fn run_sobol_rep(cfg: &ExperimentConfig, seed: u64) -> Result<(RunHistory, f64), RunError> {
    let mut problem = problem_for(cfg, seed)?;
    let opt = problem.bench.known_optimum;
    run_sobol_search(&mut problem, cfg.bo.budget, seed).map(|h| (h, opt))
}

fn trace_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("trace_seed{seed}.csv"))
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub seed: u64,
    pub error: String,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub seeds: Vec<u64>,
    pub final_regret: Vec<f64>,
    pub median_final_regret: Option<f64>,
    pub median_regret: Vec<f64>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub version: String,
    pub config_hash: String,
    pub benchmark: String,
    pub dim: usize,
    pub budget: usize,
    pub methods: BTreeMap<String, MethodSummary>,
}

/// Outcome of [`execute`].
#[derive(Debug, Clone, Default)]
pub struct ExecutionReport {
    pub succeeded: usize,
    pub failed: usize,
    pub files: Vec<PathBuf>,
}

impl ExecutionReport {
    pub fn all_failed(&self) -> bool {
        self.succeeded == 0 && self.failed > 0
    }
}

type RepFn = fn(&ExperimentConfig, u64) -> Result<(RunHistory, f64), RunError>;

/// Runs all repetitions of one method, writing each trace as soon as it finishes.
fn run_method(
    cfg: &ExperimentConfig,
    dir: &Path,
    rep: RepFn,
    report: &mut ExecutionReport,
) -> Result<Vec<Failure>, HarnessError> {
    let results = parallel_map(cfg.reps, worker_count(cfg), |i| {
        let seed = cfg.rep_seed(i);
        let (history, opt, err) = match rep(cfg, seed) {
            Ok((h, opt)) => (h, Some(opt), None),
            Err(e) => {
                let opt = make_embedded(cfg.benchmark, cfg.dim, seed).ok().map(|b| b.known_optimum);
                (e.history, opt, Some(e.error.to_string()))
            }
        };
        let path = trace_path(dir, seed);
        let written = format_trace(cfg, seed, &history, opt)
            .map_err(HarnessError::from)
            .and_then(|s| write_string(&path, &s).map_err(io_err(&path)));
        (seed, history.len(), err, written.map(|_| path))
    });
    let mut failures = Vec::new();
    for (seed, evaluations, err, written) in results {
        report.files.push(written?);
        match err {
            None => report.succeeded += 1,
            Some(error) => {
                report.failed += 1;
                failures.push(Failure {
                    seed,
                    error,
                    evaluations,
                });
            }
        }
    }
    Ok(failures)
}

fn seed_of(path: &Path) -> Option<u64> {
    path.file_name()?
        .to_str()?
        .strip_prefix("trace_seed")?
        .strip_suffix(".csv")?
        .parse()
        .ok()
}

/// Summarizes the trace files of one method directory.
pub fn summarize_method(dir: &Path, budget: usize) -> Result<MethodSummary, HarnessError> {
    let mut traces: Vec<(u64, PathBuf)> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter_map(|p| seed_of(&p).map(|s| (s, p)))
        .collect();
    traces.sort();
    let mut seeds = Vec::new();
    let mut curves = Vec::new();
    for (seed, path) in &traces {
        let regret = read_trace_regret(path).map_err(|e| HarnessError::Report(format!("{}: {e}", path.display())))?;
        seeds.push(*seed);
        curves.push(regret);
    }
    let complete: Vec<&Vec<f64>> = curves.iter().filter(|c| c.len() == budget).collect();
    let final_regret: Vec<f64> = complete.iter().map(|c| c[budget - 1]).collect();
    let median_regret = (0..budget)
        .map(|t| {
            let col: Vec<f64> = complete.iter().map(|c| c[t]).collect();
            quantiles(&col).map_or(f64::NAN, |q| q.1)
        })
        .collect();
    Ok(MethodSummary {
        seeds,
        median_final_regret: quantiles(&final_regret).map(|q| q.1),
        final_regret,
        median_regret,
        failures: Vec::new(),
    })
}

fn regret_rows(dir: &Path, method: &str, budget: usize) -> Result<Vec<Vec<String>>, HarnessError> {
    let mut curves = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| seed_of(p).is_some())
        .collect();
    entries.sort_by_key(|p| seed_of(p));
    for p in &entries {
        curves.push(read_trace_regret(p).map_err(|e| HarnessError::Report(format!("{}: {e}", p.display())))?);
    }
    Ok((0..budget)
        .filter_map(|t| {
            let col: Vec<f64> = curves.iter().filter_map(|c| c.get(t).copied()).collect();
            quantiles(&col).map(|(q1, m, q3)| {
                vec![
                    method.to_string(),
                    t.to_string(),
                    fmt_float(m),
                    fmt_float(q1),
                    fmt_float(q3),
                    col.len().to_string(),
                ]
            })
        })
        .collect())
}

fn run_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out.join("run")
}

fn methods(cfg: &ExperimentConfig) -> Vec<String> {
    let mut m = vec![cfg.preset.clone()];
    if cfg.sobol_baseline {
        m.push(SOBOL_METHOD.into());
    }
    m
}

/// Rebuilds `regret.csv` and `summary.json` from the trace files under `out/run`.
pub fn aggregate(
    cfg: &ExperimentConfig,
    failures: &BTreeMap<String, Vec<Failure>>,
    report: &mut ExecutionReport,
) -> Result<RunSummary, HarnessError> {
    let root = run_dir(cfg);
    let mut names: Vec<String> = std::fs::read_dir(&root)
        .map_err(io_err(&root))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .filter_map(|e| e.file_name().to_str().map(String::from))
        .collect();
    names.sort();
    let mut summary = RunSummary {
        version: VERSION.into(),
        config_hash: cfg.hash(),
        benchmark: cfg.benchmark.name().into(),
        dim: cfg.dim,
        budget: cfg.bo.budget,
        methods: BTreeMap::new(),
    };
    let mut rows = Vec::new();
    for name in names {
        let dir = root.join(&name);
        let mut m = summarize_method(&dir, cfg.bo.budget)?;
        m.failures = failures.get(&name).cloned().unwrap_or_default();
        rows.extend(regret_rows(&dir, &name, cfg.bo.budget)?);
        summary.methods.insert(name, m);
    }
    let path = root.join("regret.csv");
    let table = format_table(cfg, &["method", "iteration", "median", "q25", "q75", "n_runs"], &rows)?;
    write_string(&path, &table).map_err(io_err(&path))?;
    report.files.push(path);
    let path = root.join("summary.json");
    write_json(&path, &summary).map_err(io_err(&path))?;
    report.files.push(path);
    Ok(summary)
}

fn execute_run(cfg: &ExperimentConfig) -> Result<ExecutionReport, HarnessError> {
    let mut report = ExecutionReport::default();
    let mut failures = BTreeMap::new();
    for name in methods(cfg) {
        let dir = run_dir(cfg).join(&name);
        let rep: RepFn = if name == SOBOL_METHOD { run_sobol_rep } else { run_rep };
        failures.insert(name, run_method(cfg, &dir, rep, &mut report)?);
    }
    aggregate(cfg, &failures, &mut report)?;
    Ok(report)
}

/// `(yhat, rho_bound, rho_star_numeric)` on an even grid over `[0.1, 3.0]`.
pub fn prop1_table(points: usize) -> Result<Vec<(f64, f64, f64)>, HarnessError> {
    (0..points)
        .map(|i| {
            let y = 0.1 + 2.9 * i as f64 / (points - 1) as f64;
            Ok((y, rho_lower_bound(y)?, rho_star_numeric(y)?))
        })
        .collect()
}

fn execute_prop1(cfg: &ExperimentConfig) -> Result<ExecutionReport, HarnessError> {
    let rows: Vec<Vec<String>> = prop1_table(cfg.prop1_points)?
        .into_iter()
        .map(|(y, b, s)| vec![fmt_float(y), fmt_float(b), fmt_float(s)])
        .collect();
    let path = cfg.out.join("prop1.csv");
    let table = format_table(cfg, &["yhat", "rho_bound", "rho_star_numeric"], &rows)?;
    write_string(&path, &table).map_err(io_err(&path))?;
    Ok(ExecutionReport {
        succeeded: 1,
        failed: 0,
        files: vec![path],
    })
}

fn execute_mig(cfg: &ExperimentConfig) -> Result<ExecutionReport, HarnessError> {
    let m = &cfg.mig;
    let tasks: Vec<(String, usize)> = m
        .variants
        .iter()
        .flat_map(|v| m.dims.iter().map(move |&d| (v.clone(), d)))
        .collect();
    let results = parallel_map(tasks.len(), worker_count(cfg), |i| {
        let (name, d) = &tasks[i];
        let spec = m.model_class(name, cfg.seed)?;
        let curve = if m.greedy {
            let pool = default_pool(&spec, *d, m.n, Some(cfg.seed))?;
            greedy_mig(&spec, *d, &pool, m.n)?
        } else {
            sobol_mig(&spec, *d, m.n, Some(cfg.seed))?
        };
        Ok::<_, HarnessError>(
            curve
                .counts
                .iter()
                .zip(&curve.values)
                .map(|(n, g)| {
                    vec![
                        name.clone(),
                        d.to_string(),
                        n.to_string(),
                        fmt_float(*g),
                        fmt_float(m.noise_variance),
                        cfg.seed.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        )
    });
    let mut rows = Vec::new();
    let mut report = ExecutionReport::default();
    for r in results {
        rows.extend(r?);
        report.succeeded += 1;
    }
    let path = cfg.out.join("mig.csv");
    let table = format_table(cfg, &["variant", "D", "n", "gamma_nats", "sigma_eps2", "seed"], &rows)?;
    write_string(&path, &table).map_err(io_err(&path))?;
    report.files.push(path);
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalitySummary {
    pub preset: String,
    pub seeds: Vec<u64>,
    /// Median post-design distance to the incumbent, pooled over seeds.
    pub pooled_median_distance: Option<f64>,
    pub per_seed_median_distance: Vec<Option<f64>>,
}

/// Post-design distances to the incumbent for every repetition of a preset.
pub fn locality_distances(cfg: &ExperimentConfig, preset: &str) -> Result<Vec<(u64, Result<Vec<f64>, String>)>, HarnessError> {
    let c = cfg.with_preset(preset)?;
    Ok(parallel_map(c.reps, worker_count(&c), |i| {
        let seed = c.rep_seed(i);
        let d = run_rep(&c, seed).map_err(|e| e.to_string()).and_then(|(h, _)| {
            let rep = locality_report(&h).map_err(|e| e.to_string())?;
            Ok(rep.iter().filter(|r| r.model_guided).map(|r| r.dist_to_incumbent).collect())
        });
        (seed, d)
    }))
}

fn execute_locality(cfg: &ExperimentConfig) -> Result<ExecutionReport, HarnessError> {
    let mut report = ExecutionReport::default();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for preset in &cfg.locality_presets {
        let runs = locality_distances(cfg, preset)?;
        let mut pooled = Vec::new();
        let mut per_seed = Vec::new();
        for (seed, r) in &runs {
            match r {
                Ok(d) => {
                    report.succeeded += 1;
                    pooled.extend_from_slice(d);
                    per_seed.push(quantiles(d).map(|q| q.1));
                    rows.extend(d.iter().enumerate().map(|(k, v)| {
                        vec![preset.clone(), seed.to_string(), k.to_string(), fmt_float(*v)]
                    }));
                }
                Err(_) => {
                    report.failed += 1;
                    per_seed.push(None);
                }
            }
        }
        summaries.push(LocalitySummary {
            preset: preset.clone(),
            seeds: runs.iter().map(|r| r.0).collect(),
            pooled_median_distance: quantiles(&pooled).map(|q| q.1),
            per_seed_median_distance: per_seed,
        });
    }
    let path = cfg.out.join("locality.csv");
    let table = format_table(cfg, &["preset", "seed", "guided_step", "dist_to_incumbent"], &rows)?;
    write_string(&path, &table).map_err(io_err(&path))?;
    report.files.push(path);
    let path = cfg.out.join("locality.json");
    write_json(&path, &summaries).map_err(io_err(&path))?;
    report.files.push(path);
    Ok(report)
}

/// Runs the configured command and writes its outputs under `cfg.out`.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExecutionReport, HarnessError> {
    match cfg.command {
        Command::Run => execute_run(cfg),
        Command::Mig => execute_mig(cfg),
        Command::Prop1 => execute_prop1(cfg),
        Command::Locality => execute_locality(cfg),
        Command::Report => {
            let mut report = ExecutionReport::default();
            let s = aggregate(cfg, &BTreeMap::new(), &mut report)?;
            report.succeeded = s.methods.values().map(|m| m.final_regret.len()).sum();
            Ok(report)
        }
    }
}
