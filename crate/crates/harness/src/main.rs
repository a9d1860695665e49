use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vbo_harness::{execute, parse_config, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "vbo", version, about = "Vanilla Bayesian optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Experiment config (flat TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; repetition i uses seed + i.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (overrides VBO_WORKERS).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// BO repetitions on a synthetic benchmark.
    Run,
    /// Information-gain curves for model classes.
    Mig,
    /// Correlation bound versus numerical EI maximizer.
    Prop1,
    /// Distance-to-incumbent comparison between presets.
    Locality,
    /// Re-aggregate existing run traces.
    Report,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, vbo_harness::ConfigError> {
    let mut cfg = match &cli.config {
        Some(p) => parse_config(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.command = match cli.command {
        Cmd::Run => Command::Run,
        Cmd::Mig => Command::Mig,
        Cmd::Prop1 => Command::Prop1,
        Cmd::Locality => Command::Locality,
        Cmd::Report => Command::Report,
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.reps {
        if r == 0 {
            return Err(vbo_harness::ConfigError::Invalid {
                key: "reps".into(),
                reason: "must be at least 1".into(),
            });
        }
        cfg.reps = r;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match execute(&cfg) {
        Ok(report) => {
            for f in &report.files {
                println!("{}", f.display());
            }
            if report.failed > 0 {
                eprintln!("{} of {} runs failed", report.failed, report.failed + report.succeeded);
            }
            if report.all_failed() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
