//! Seeded benchmark runs over a grid of cells.

use std::path::Path;

use cfpose::simgen::gen_scene;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{BenchmarkConfig, Cell};
use crate::error::{CliError, CliResult};
use crate::trial::{run_trial, TrialReport};

/// Outcome of one trial: a report, or the reason the estimator gave up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub cell: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<TrialReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl TrialRecord {
    pub fn succeeded(&self) -> bool {
        self.report.as_ref().and_then(|r| r.success).unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub label: String,
    pub b_i: f64,
    pub b_p: f64,
    pub b_m: Option<f64>,
    pub samples: usize,
    pub trials: usize,
    pub successes: usize,
    /// Trials where the estimator returned an error.
    pub failures: usize,
    pub mean_runtime_ms: f64,
    pub median_error: Option<f64>,
    pub median_pre_ransac_error: Option<f64>,
    pub mean_iterations: f64,
}

/// Least-squares line `y = slope · x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl LinearFit {
    pub fn fit(x: &[f64], y: &[f64]) -> Option<Self> {
        let n = x.len() as f64;
        if x.len() != y.len() || x.len() < 2 {
            return None;
        }
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
        if sxx == 0.0 {
            return None;
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
        Some(Self { slope, intercept, r_squared })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub name: String,
    pub trials: usize,
    pub seed: u64,
    pub cells: Vec<CellSummary>,
    /// Mean runtime against sample count, for sample sweeps.
    pub runtime_fit: Option<LinearFit>,
    pub config: BenchmarkConfig,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Runs `trials` trials of one cell. Trials execute on the rayon pool unless
/// `sequential`; records come back in trial order either way.
pub fn run_cell(cell: &Cell, trials: usize, seed: u64, sequential: bool) -> CliResult<Vec<TrialRecord>> {
    let cfg = &cell.experiment;
    cfg.validate()?;
    let scene = gen_scene(&cfg.scene)?;
    let one = |i: usize| {
        let s = seed + i as u64;
        match run_trial(cfg, &scene, s) {
            Ok(report) => Ok(TrialRecord { cell: cell.label.clone(), seed: s, report: Some(report), failure: None }),
            Err(e) if e.kind == crate::error::ExitKind::Estimation => {
                Ok(TrialRecord { cell: cell.label.clone(), seed: s, report: None, failure: Some(e.message) })
            }
            Err(e) => Err(e),
        }
    };
    if sequential {
        (0..trials).map(one).collect()
    } else {
        (0..trials).into_par_iter().map(one).collect()
    }
}

pub fn summarize_cell(cell: &Cell, records: &[TrialRecord]) -> CellSummary {
    let reports: Vec<&TrialReport> = records.iter().filter_map(|r| r.report.as_ref()).collect();
    let n = reports.len().max(1) as f64;
    let cfg = &cell.experiment;
    CellSummary {
        label: cell.label.clone(),
        b_i: cfg.noise.b_i,
        b_p: cfg.noise.b_p,
        b_m: cfg.noise.b_m,
        samples: cfg.scene.samples,
        trials: records.len(),
        successes: records.iter().filter(|r| r.succeeded()).count(),
        failures: records.len() - reports.len(),
        mean_runtime_ms: reports.iter().map(|r| r.runtime_ms).sum::<f64>() / n,
        median_error: median(reports.iter().filter_map(|r| r.error).collect()),
        median_pre_ransac_error: median(reports.iter().filter_map(|r| r.pre_ransac_error).collect()),
        mean_iterations: reports.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
    }
}

/// Runs every cell in order.
pub fn run_benchmark(name: &str, cfg: &BenchmarkConfig) -> CliResult<(BenchmarkSummary, Vec<TrialRecord>)> {
    cfg.validate()?;
    let mut cells = Vec::new();
    let mut all = Vec::new();
    for cell in cfg.cells() {
        let records = run_cell(&cell, cfg.trials, cfg.seed, cfg.sequential())?;
        cells.push(summarize_cell(&cell, &records));
        all.extend(records);
    }
    let runtime_fit = if cfg.sequential() {
        let x: Vec<f64> = cells.iter().map(|c| c.samples as f64).collect();
        let y: Vec<f64> = cells.iter().map(|c| c.mean_runtime_ms).collect();
        LinearFit::fit(&x, &y)
    } else {
        None
    };
    let summary = BenchmarkSummary {
        name: name.to_string(),
        trials: cfg.trials,
        seed: cfg.seed,
        cells,
        runtime_fit,
        config: cfg.clone(),
    };
    Ok((summary, all))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per cell, with a header.
pub fn write_csv(summary: &BenchmarkSummary, path: &Path) -> CliResult<()> {
    let io = |e: csv::Error| CliError::io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record([
        "label",
        "b_i",
        "b_p",
        "b_m",
        "samples",
        "trials",
        "successes",
        "failures",
        "mean_runtime_ms",
        "median_error",
        "median_pre_ransac_error",
        "mean_iterations",
    ])
    .map_err(io)?;
    for c in &summary.cells {
        w.write_record([
            c.label.clone(),
            c.b_i.to_string(),
            c.b_p.to_string(),
            opt(c.b_m),
            c.samples.to_string(),
            c.trials.to_string(),
            c.successes.to_string(),
            c.failures.to_string(),
            c.mean_runtime_ms.to_string(),
            opt(c.median_error),
            opt(c.median_pre_ransac_error),
            c.mean_iterations.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}
