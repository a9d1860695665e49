//! Flat TOML experiment configuration with named presets.
//!
//! Every key is optional. A `preset` selects a hyperprior family, then explicit
//! keys override individual values:
//!
//! ```toml
//! command = "run"
//! preset = "default"
//! benchmark = "hartmann6"
//! dim = 25
//! budget = 200
//! reps = 10
//! seed = 0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vanilla_bo::benchmarks::{BaseFunction, BENCHMARK_NOISE_STD};
use vanilla_bo::complexity::{ModelClassSpec, ModelVariant};
use vanilla_bo::engine::BoConfig;
use vanilla_bo::fit::{FitMode, HyperpriorSpec, LengthscalePrior, DEFAULT_MU0, DEFAULT_SIGMA0};
use vanilla_bo::gp::KernelFamily;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Run,
    Mig,
    Prop1,
    Locality,
    Report,
}

impl Command {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        Ok(match s {
            "run" => Command::Run,
            "mig" => Command::Mig,
            "prop1" => Command::Prop1,
            "locality" => Command::Locality,
            "report" => Command::Report,
            _ => return Err(invalid("command", format!("`{s}` is not one of run, mig, prop1, locality, report"))),
        })
    }
}

pub const PRESETS: [&str; 9] = [
    "default",
    "gamma-map",
    "gamma-scaled",
    "mle",
    "learned-signal-variance",
    "complexity-low",
    "complexity-high",
    "uncertainty-low",
    "uncertainty-high",
];

/// Shift of `μ0` in the complexity presets.
pub const COMPLEXITY_SHIFT: f64 = 0.5;
/// `σ0` of the low- and high-uncertainty presets.
pub const UNCERTAINTY_SIGMA0: (f64, f64) = (1.0, 2.0);

/// `μ0` keeping the lognormal mode `exp(μ0 - σ0²)` fixed when `σ0` changes.
pub fn mode_preserving_mu0(sigma0: f64) -> f64 {
    DEFAULT_MU0 + sigma0 * sigma0 - DEFAULT_SIGMA0 * DEFAULT_SIGMA0
}

/// Hyperpriors and fit mode of a named preset.
pub fn preset(name: &str) -> Result<(HyperpriorSpec, FitMode), ConfigError> {
    let spec = match name {
        "default" | "mle" => HyperpriorSpec::default(),
        "gamma-map" => HyperpriorSpec::gamma_3_6(),
        "gamma-scaled" => HyperpriorSpec::scaled_gamma_3_6(),
        "learned-signal-variance" => HyperpriorSpec::default().with_learned_signal_variance(),
        "complexity-low" => HyperpriorSpec::scaled_lognormal(DEFAULT_MU0 + COMPLEXITY_SHIFT, DEFAULT_SIGMA0),
        "complexity-high" => HyperpriorSpec::scaled_lognormal(DEFAULT_MU0 - COMPLEXITY_SHIFT, DEFAULT_SIGMA0),
        "uncertainty-low" => {
            let s = UNCERTAINTY_SIGMA0.0;
            HyperpriorSpec::scaled_lognormal(mode_preserving_mu0(s), s)
        }
        "uncertainty-high" => {
            let s = UNCERTAINTY_SIGMA0.1;
            HyperpriorSpec::scaled_lognormal(mode_preserving_mu0(s), s)
        }
        _ => return Err(invalid("preset", format!("unknown preset `{name}`"))),
    };
    let mode = if name == "mle" { FitMode::Mle } else { FitMode::Map };
    Ok((spec, mode))
}

/// Keys exactly as written in the file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Option<String>,
    preset: Option<String>,
    benchmark: Option<String>,
    dim: Option<i64>,
    budget: Option<i64>,
    n_init: Option<i64>,
    reps: Option<i64>,
    seed: Option<i64>,
    workers: Option<i64>,
    out: Option<String>,
    kernel: Option<String>,
    mu0: Option<f64>,
    sigma0: Option<f64>,
    lengthscale_prior: Option<String>,
    gamma_shape: Option<f64>,
    gamma_rate: Option<f64>,
    fit_mode: Option<String>,
    fit_restarts: Option<i64>,
    learn_signal_variance: Option<bool>,
    noise_std: Option<f64>,
    acq_global: Option<i64>,
    acq_local: Option<i64>,
    acq_refine: Option<i64>,
    local_scale: Option<f64>,
    record_wall_time: Option<bool>,
    sobol_baseline: Option<bool>,
    mig_variants: Option<Vec<String>>,
    mig_dims: Option<Vec<i64>>,
    mig_n: Option<i64>,
    mig_lengthscale: Option<f64>,
    mig_d_ref: Option<f64>,
    mig_noise: Option<f64>,
    mig_shrink: Option<f64>,
    mig_d_e: Option<i64>,
    mig_greedy: Option<bool>,
    prop1_points: Option<i64>,
    locality_presets: Option<Vec<String>>,
}

pub const KEYS: [&str; 37] = [
    "command",
    "preset",
    "benchmark",
    "dim",
    "budget",
    "n_init",
    "reps",
    "seed",
    "workers",
    "out",
    "kernel",
    "mu0",
    "sigma0",
    "lengthscale_prior",
    "gamma_shape",
    "gamma_rate",
    "fit_mode",
    "fit_restarts",
    "learn_signal_variance",
    "noise_std",
    "acq_global",
    "acq_local",
    "acq_refine",
    "local_scale",
    "record_wall_time",
    "sobol_baseline",
    "mig_variants",
    "mig_dims",
    "mig_n",
    "mig_lengthscale",
    "mig_d_ref",
    "mig_noise",
    "mig_shrink",
    "mig_d_e",
    "mig_greedy",
    "prop1_points",
    "locality_presets",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MigSettings {
    pub variants: Vec<String>,
    pub dims: Vec<usize>,
    pub n: usize,
    pub lengthscale: f64,
    pub d_ref: f64,
    pub noise_variance: f64,
    pub shrink: f64,
    pub d_e: usize,
    pub greedy: bool,
}

impl MigSettings {
    /// Model class for a variant name, seeded for the randomized variants.
    pub fn model_class(&self, name: &str, seed: u64) -> Result<ModelClassSpec, ConfigError> {
        let ell = self.lengthscale;
        let variant = match name {
            "independent" => ModelVariant::Independent,
            "fixed" => ModelVariant::FixedLengthscale { lengthscale: ell },
            "scaled" => ModelVariant::ScaledLengthscale {
                base: ell,
                d_ref: self.d_ref,
            },
            "addgp" => ModelVariant::AddGpRandomGroups { lengthscale: ell, seed },
            "local" => ModelVariant::LocalGpShrunk {
                lengthscale: ell,
                shrink: self.shrink,
            },
            "rembo" => ModelVariant::Rembo {
                d_e: self.d_e,
                base: ell,
                seed,
            },
            _ => return Err(invalid("mig_variants", format!("unknown model class `{name}`"))),
        };
        Ok(ModelClassSpec {
            variant,
            family: KernelFamily::Rbf,
            signal_variance: 1.0,
            noise_variance: self.noise_variance,
        })
    }
}

/// Fully resolved experiment description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    #[serde(skip)]
    pub command: Command,
    pub preset: String,
    pub benchmark: BaseFunction,
    pub dim: usize,
    pub noise_std: f64,
    /// BO settings; `bo.seed` is replaced by each repetition's seed.
    pub bo: BoConfig,
    pub reps: usize,
    pub seed: u64,
    pub record_wall_time: bool,
    pub sobol_baseline: bool,
    pub mig: MigSettings,
    pub prop1_points: usize,
    pub locality_presets: Vec<String>,
    #[serde(skip)]
    pub workers: Option<usize>,
    #[serde(skip)]
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        parse_config_str("").expect("empty config is valid")
    }
}

impl ExperimentConfig {
    /// Seed of repetition `i`.
    pub fn rep_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add(i as u64)
    }

    /// SHA-256 of the result-determining settings (not the command or output location),
    /// first 16 hex digits.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Copy with the hyperpriors and fit mode of another preset.
    pub fn with_preset(&self, name: &str) -> Result<Self, ConfigError> {
        let (spec, mode) = preset(name)?;
        let mut c = self.clone();
        c.preset = name.to_string();
        c.bo.hyperpriors = spec;
        c.bo.fit.mode = mode;
        Ok(c)
    }
}

fn count(key: &str, v: Option<i64>, min: i64) -> Result<Option<usize>, ConfigError> {
    match v {
        None => Ok(None),
        Some(x) if x < min => Err(invalid(key, format!("must be at least {min}, got {x}"))),
        Some(x) => Ok(Some(x as usize)),
    }
}

fn positive(key: &str, v: Option<f64>) -> Result<Option<f64>, ConfigError> {
    match v {
        Some(x) if !(x > 0.0) || !x.is_finite() => Err(invalid(key, format!("must be positive, got {x}"))),
        other => Ok(other),
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
    if let Some(k) = table.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(k.clone()));
    }
    let raw: RawConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let command = Command::parse(raw.command.as_deref().unwrap_or("run"))?;
    let preset_name = raw.preset.unwrap_or_else(|| "default".into());
    let (mut priors, mut fit_mode) = preset(&preset_name)?;

    let benchmark = match raw.benchmark.as_deref().unwrap_or("hartmann6") {
        "hartmann6" => BaseFunction::Hartmann6,
        "levy4" => BaseFunction::Levy4,
        other => return Err(invalid("benchmark", format!("unknown benchmark `{other}`"))),
    };
    let dim = count("dim", raw.dim, 1)?.unwrap_or(benchmark.effective_dim());
    if dim < benchmark.effective_dim() {
        return Err(invalid(
            "dim",
            format!("{dim} is below the {} effective dimension {}", benchmark.name(), benchmark.effective_dim()),
        ));
    }
    let budget = count("budget", raw.budget, 1)?.unwrap_or(100);
    let seed = match raw.seed {
        Some(s) if s < 0 => return Err(invalid("seed", "must be non-negative")),
        s => s.unwrap_or(0) as u64,
    };

    let mut bo = BoConfig::new(budget, seed);
    bo.n_init = count("n_init", raw.n_init, 1)?;
    if let Some(k) = raw.kernel.as_deref() {
        bo.kernel = match k {
            "rbf" => KernelFamily::Rbf,
            "matern52" => KernelFamily::Matern52,
            _ => return Err(invalid("kernel", format!("unknown kernel `{k}`"))),
        };
    }

    if let Some(p) = raw.lengthscale_prior.as_deref() {
        let (shape, rate) = (raw.gamma_shape.unwrap_or(3.0), raw.gamma_rate.unwrap_or(6.0));
        priors.lengthscale = match p {
            "scaled-lognormal" => LengthscalePrior::ScaledLogNormal {
                mu0: DEFAULT_MU0,
                sigma0: DEFAULT_SIGMA0,
            },
            "gamma" => LengthscalePrior::Gamma { shape, rate },
            "scaled-gamma" => LengthscalePrior::ScaledGamma { shape, rate },
            _ => return Err(invalid("lengthscale_prior", format!("unknown prior `{p}`"))),
        };
    } else if raw.gamma_shape.is_some() || raw.gamma_rate.is_some() {
        let (shape, rate) = (raw.gamma_shape.unwrap_or(3.0), raw.gamma_rate.unwrap_or(6.0));
        priors.lengthscale = match priors.lengthscale {
            LengthscalePrior::ScaledGamma { .. } => LengthscalePrior::ScaledGamma { shape, rate },
            _ => LengthscalePrior::Gamma { shape, rate },
        };
    }
    positive("gamma_shape", raw.gamma_shape)?;
    positive("gamma_rate", raw.gamma_rate)?;
    let mu0 = raw.mu0;
    if let Some(m) = mu0 {
        if !m.is_finite() {
            return Err(invalid("mu0", "must be finite"));
        }
    }
    let sigma0 = positive("sigma0", raw.sigma0)?;
    if mu0.is_some() || sigma0.is_some() {
        match &mut priors.lengthscale {
            LengthscalePrior::ScaledLogNormal { mu0: m, sigma0: s } => {
                *m = mu0.unwrap_or(*m);
                *s = sigma0.unwrap_or(*s);
            }
            _ => {
                let key = if mu0.is_some() { "mu0" } else { "sigma0" };
                return Err(invalid(key, "only applies to the scaled-lognormal lengthscale prior"));
            }
        }
    }
    if let Some(m) = raw.fit_mode.as_deref() {
        fit_mode = match m {
            "map" => FitMode::Map,
            "mle" => FitMode::Mle,
            _ => return Err(invalid("fit_mode", format!("unknown fit mode `{m}`"))),
        };
    }
    if raw.learn_signal_variance == Some(true) {
        priors = priors.with_learned_signal_variance();
    }
    bo.hyperpriors = priors;
    bo.fit.mode = fit_mode;
    if let Some(r) = count("fit_restarts", raw.fit_restarts, 1)? {
        bo.fit.n_restarts = r;
    }
    if let Some(v) = count("acq_global", raw.acq_global, 1)? {
        bo.acq.n_global_sobol = v;
    }
    if let Some(v) = count("acq_local", raw.acq_local, 1)? {
        bo.acq.n_local_gaussian = v;
    }
    if let Some(v) = count("acq_refine", raw.acq_refine, 1)? {
        bo.acq.n_refine = v;
    }
    if let Some(v) = positive("local_scale", raw.local_scale)? {
        bo.acq.local_scale = v;
    }
    bo.validate(dim).map_err(|e| invalid("budget", e.to_string()))?;

    let noise_std = match raw.noise_std {
        Some(v) if !(v >= 0.0) || !v.is_finite() => return Err(invalid("noise_std", "must be non-negative")),
        v => v.unwrap_or(BENCHMARK_NOISE_STD),
    };

    let mig = MigSettings {
        variants: raw
            .mig_variants
            .unwrap_or_else(|| ["independent", "fixed", "scaled"].map(String::from).to_vec()),
        dims: match raw.mig_dims {
            None => vec![6, 24],
            Some(v) => v
                .into_iter()
                .map(|d| count("mig_dims", Some(d), 1).map(|d| d.unwrap()))
                .collect::<Result<_, _>>()?,
        },
        n: count("mig_n", raw.mig_n, 1)?.unwrap_or(1000),
        lengthscale: positive("mig_lengthscale", raw.mig_lengthscale)?.unwrap_or(0.5),
        d_ref: positive("mig_d_ref", raw.mig_d_ref)?.unwrap_or(6.0),
        noise_variance: positive("mig_noise", raw.mig_noise)?.unwrap_or(1.0),
        shrink: positive("mig_shrink", raw.mig_shrink)?.unwrap_or(0.4),
        d_e: count("mig_d_e", raw.mig_d_e, 1)?.unwrap_or(4),
        greedy: raw.mig_greedy.unwrap_or(false),
    };
    for v in &mig.variants {
        mig.model_class(v, 0)?;
        if v == "rembo" && mig.dims.iter().any(|&d| d < mig.d_e) {
            return Err(invalid("mig_d_e", "exceeds one of mig_dims"));
        }
    }

    let locality_presets = raw
        .locality_presets
        .unwrap_or_else(|| vec!["gamma-map".into(), "default".into()]);
    for p in &locality_presets {
        preset(p).map_err(|_| invalid("locality_presets", format!("unknown preset `{p}`")))?;
    }

    Ok(ExperimentConfig {
        command,
        preset: preset_name,
        benchmark,
        dim,
        noise_std,
        bo,
        reps: count("reps", raw.reps, 1)?.unwrap_or(1),
        seed,
        record_wall_time: raw.record_wall_time.unwrap_or(false),
        sobol_baseline: raw.sobol_baseline.unwrap_or(false),
        mig,
        prop1_points: count("prop1_points", raw.prop1_points, 2)?.unwrap_or(30),
        locality_presets,
        workers: count("workers", raw.workers, 1)?,
        out: PathBuf::from(raw.out.unwrap_or_else(|| "results".into())),
    })
}
