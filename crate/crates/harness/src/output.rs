//! CSV and JSON emission.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use vanilla_bo::engine::RunHistory;

use crate::config::ExperimentConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// `#`-prefixed provenance lines heading every CSV.
pub fn provenance(cfg: &ExperimentConfig, seed: Option<u64>) -> String {
    let mut s = format!("# vbo-harness {VERSION}\n# config_hash {}\n", cfg.hash());
    match seed {
        Some(v) => s.push_str(&format!("# seed {v}\n")),
        None => s.push_str(&format!("# seed_base {}\n", cfg.seed)),
    }
    s
}

pub fn trace_header(dim: usize) -> Vec<String> {
    let mut h = vec!["iteration".to_string()];
    h.extend((0..dim).map(|i| format!("x_{i}")));
    h.extend(
        [
            "y_raw",
            "y_true",
            "incumbent_value",
            "regret",
            "dist_to_incumbent",
            "min_dist_to_data",
            "ell_median",
            "sigma_eps2",
            "mean_c",
            "fit_restarts_used",
            "wall_ms",
        ]
        .map(String::from),
    );
    h
}

/// Renders a run trace. Regret is cumulative and uses the noiseless values.
pub fn format_trace(
    cfg: &ExperimentConfig,
    seed: u64,
    history: &RunHistory,
    known_optimum: Option<f64>,
) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(trace_header(history.dim))?;
    let nan = f64::NAN;
    let mut best_true = f64::NEG_INFINITY;
    for r in &history.records {
        let mut row = vec![r.iteration.to_string()];
        row.extend(r.x.iter().map(|&v| fmt_float(v)));
        let y_true = r.y_true.unwrap_or(nan);
        best_true = best_true.max(y_true);
        let regret = match known_optimum {
            Some(opt) if r.y_true.is_some() => (opt - best_true).max(0.0),
            _ => nan,
        };
        let h = r.hyper;
        row.extend(
            [
                r.y_raw,
                y_true,
                r.incumbent_value,
                regret,
                r.dist_to_incumbent,
                r.min_dist_to_data,
                h.map_or(nan, |h| h.ell_median),
                h.map_or(nan, |h| h.sigma_eps2),
                h.map_or(nan, |h| h.mean_c),
            ]
            .map(fmt_float),
        );
        row.push(h.map_or(0, |h| h.restarts_used).to_string());
        row.push(fmt_float(if cfg.record_wall_time { r.wall_ms } else { 0.0 }));
        w.write_record(&row)?;
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv");
    Ok(provenance(cfg, Some(seed)) + &body)
}

pub fn write_string(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    f.flush()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    write_string(path, &(s + "\n"))
}

/// CSV with provenance lines from pre-formatted rows.
pub fn format_table(cfg: &ExperimentConfig, header: &[&str], rows: &[Vec<String>]) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv");
    Ok(provenance(cfg, None) + &body)
}

/// Regret column of a trace file.
pub fn read_trace_regret(path: &Path) -> Result<Vec<f64>, Box<dyn std::error::Error + Send + Sync>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let col = r
        .headers()?
        .iter()
        .position(|h| h == "regret")
        .ok_or("trace has no regret column")?;
    let mut out = Vec::new();
    for rec in r.records() {
        out.push(rec?[col].parse::<f64>()?);
    }
    Ok(out)
}

/// Median and quartiles by linear interpolation.
pub fn quantiles(values: &[f64]) -> Option<(f64, f64, f64)> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    Some((q(0.25), q(0.5), q(0.75)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 12345.678] {
            assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn quantiles_of_small_sets() {
        assert_eq!(quantiles(&[3.0, 1.0, 2.0]), Some((1.5, 2.0, 2.5)));
        assert_eq!(quantiles(&[f64::NAN]), None);
    }
}
