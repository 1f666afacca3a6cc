//! CSV and JSON writers. Decimal values carry 12 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{HarnessError, RunResult};

/// Formats `x` like C's `%.12g`.
pub fn format_g12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// The value a reader of the formatted output would see.
pub fn printed(x: f64) -> f64 {
    format_g12(x).parse().expect("formatted float parses")
}

pub fn regret_csv(result: &RunResult) -> String {
    let mut out = String::from("algorithm,seed,checkpoint_t,cum_regret\n");
    for run in &result.runs {
        for (t, r) in result.checkpoints.iter().zip(&run.series) {
            writeln!(out, "{},{},{},{}", run.algorithm, run.seed, t, format_g12(*r)).unwrap();
        }
    }
    out
}

pub fn regret_mean_csv(result: &RunResult) -> String {
    let mut out = String::from("algorithm,checkpoint_t,mean,std\n");
    for agg in &result.aggregates {
        for ((t, m), s) in result.checkpoints.iter().zip(&agg.mean).zip(&agg.std) {
            writeln!(out, "{},{},{},{}", agg.algorithm, t, format_g12(*m), format_g12(*s)).unwrap();
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub config_digest: String,
    pub horizon: u64,
    pub comparator: String,
    pub seeds: usize,
    pub algorithms: Vec<AlgorithmSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    pub final_mean: f64,
    pub final_std: f64,
    pub corruption_total: u64,
}

pub fn summary(result: &RunResult) -> Summary {
    Summary {
        config_digest: result.config_digest.clone(),
        horizon: result.horizon,
        comparator: result.comparator.to_string(),
        seeds: result.seeds.len(),
        algorithms: result
            .aggregates
            .iter()
            .map(|a| AlgorithmSummary {
                algorithm: a.algorithm.clone(),
                final_mean: printed(*a.mean.last().unwrap_or(&0.0)),
                final_std: printed(*a.std.last().unwrap_or(&0.0)),
                corruption_total: a.corruption_total,
            })
            .collect(),
    }
}

pub fn summary_json(result: &RunResult) -> String {
    let mut s = serde_json::to_string_pretty(&summary(result)).expect("summary serializes");
    s.push('\n');
    s
}

/// Writes `regret.csv`, `regret_mean.csv` and `summary.json` into `dir`.
pub fn write_outputs(result: &RunResult, dir: &Path) -> Result<(), HarnessError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    for (name, body) in [
        ("regret.csv", regret_csv(result)),
        ("regret_mean.csv", regret_mean_csv(result)),
        ("summary.json", summary_json(result)),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(io(&path))?;
    }
    Ok(())
}
