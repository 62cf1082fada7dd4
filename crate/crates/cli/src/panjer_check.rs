//! Monte Carlo versus Panjer recursion for one cell's aggregate loss.
//!
//! Draws `n_batches` independent batches of compound-Poisson sums, builds
//! their empirical distribution functions on the recursion's lattice, and
//! reports how the analytic distribution function sits inside the
//! cross-batch mean +- stdev band.

use std::fs;
use std::path::Path;
use std::time::Instant;

use clbacktest_core::distributions::CountDistribution;
use clbacktest_core::panjer::{panjer_adaptive, PanjerError};
use clbacktest_core::scenario_rng;
use serde::Serialize;

use crate::config::PanjerCheckSpec;
use crate::experiment::write_atomic;
use crate::fmt_f64;

/// Grid-level comparison data plus summary statistics.
#[derive(Debug, Clone)]
pub struct PanjerCheckReport {
    pub step: f64,
    pub analytic_cdf: Vec<f64>,
    pub analytic_mass: Vec<f64>,
    /// `batch_ecdf[batch][grid point]`.
    pub batch_ecdf: Vec<Vec<f64>>,
    pub ecdf_mean: Vec<f64>,
    pub ecdf_stdev: Vec<f64>,
    /// Largest gap between the mean empirical curve and the recursion.
    pub max_deviation: f64,
    /// Grid points where the batches disagree (positive stdev).
    pub band_points: usize,
    /// Of those, points where the recursion lies within mean +- 3 stdev.
    pub band_contained: usize,
    pub aggregate_truncation: f64,
    pub severity_truncation: f64,
    pub runtime_ms: u128,
}

impl PanjerCheckReport {
    pub fn band_fraction(&self) -> f64 {
        if self.band_points == 0 {
            1.0
        } else {
            self.band_contained as f64 / self.band_points as f64
        }
    }
}

pub fn run_panjer_check(spec: &PanjerCheckSpec) -> Result<PanjerCheckReport, PanjerError> {
    let start = Instant::now();
    let result = panjer_adaptive(
        spec.lambda,
        &spec.severity,
        spec.step,
        spec.target_mass,
        spec.max_points,
    )?;
    let analytic_cdf = result.aggregate.cdf();
    let grid_len = analytic_cdf.len();

    let poisson = CountDistribution::poisson(spec.lambda)
        .map_err(|_| PanjerError::InvalidLambda(spec.lambda))?;
    let mut batch_ecdf = Vec::with_capacity(spec.n_batches as usize);
    for batch in 0..spec.n_batches {
        let mut rng = scenario_rng(spec.seed, batch, 0);
        let mut samples = Vec::with_capacity(spec.n_samples as usize);
        for _ in 0..spec.n_samples {
            let claims = poisson.sample(&mut rng);
            let mut total = 0.0;
            for _ in 0..claims {
                total += spec.severity.sample(&mut rng);
            }
            samples.push(total);
        }
        samples.sort_by(|a, b| a.total_cmp(b));
        let n = samples.len() as f64;
        let ecdf: Vec<f64> = (0..grid_len)
            .map(|k| {
                let x = result.aggregate.point(k);
                samples.partition_point(|&s| s <= x) as f64 / n
            })
            .collect();
        batch_ecdf.push(ecdf);
    }

    let batches = batch_ecdf.len() as f64;
    let mut ecdf_mean = Vec::with_capacity(grid_len);
    let mut ecdf_stdev = Vec::with_capacity(grid_len);
    let mut max_deviation = 0.0f64;
    let mut band_points = 0usize;
    let mut band_contained = 0usize;
    for k in 0..grid_len {
        let mean = batch_ecdf.iter().map(|e| e[k]).sum::<f64>() / batches;
        let var = batch_ecdf
            .iter()
            .map(|e| (e[k] - mean) * (e[k] - mean))
            .sum::<f64>()
            / (batches - 1.0);
        let stdev = var.sqrt();
        max_deviation = max_deviation.max((analytic_cdf[k] - mean).abs());
        if stdev > 0.0 {
            band_points += 1;
            if (analytic_cdf[k] - mean).abs() <= 3.0 * stdev {
                band_contained += 1;
            }
        }
        ecdf_mean.push(mean);
        ecdf_stdev.push(stdev);
    }

    Ok(PanjerCheckReport {
        step: spec.step,
        analytic_mass: result.aggregate.masses().to_vec(),
        analytic_cdf,
        batch_ecdf,
        ecdf_mean,
        ecdf_stdev,
        max_deviation,
        band_points,
        band_contained,
        aggregate_truncation: result.aggregate.truncation_mass(),
        severity_truncation: result.severity.truncation_mass(),
        runtime_ms: start.elapsed().as_millis(),
    })
}

#[derive(Serialize)]
struct PanjerSummary<'a> {
    name: &'a str,
    seed: u64,
    lambda: f64,
    h: f64,
    n_batches: u32,
    n_samples: u32,
    target_mass: f64,
    grid_len: usize,
    aggregate_truncation: f64,
    severity_truncation: f64,
    max_deviation: f64,
    band_points: usize,
    band_contained: usize,
    band_fraction: f64,
    runtime_ms: u128,
}

/// Write `panjer_grid.csv` (lattice point, mass, analytic and empirical
/// distribution functions) and `panjer_summary.json`.
pub fn write_panjer_outputs(
    dir: &Path,
    spec: &PanjerCheckSpec,
    report: &PanjerCheckReport,
) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut csv = String::from("x,mass,analytic_cdf,ecdf_mean,ecdf_stdev");
    for batch in 0..report.batch_ecdf.len() {
        csv.push_str(&format!(",ecdf_b{batch}"));
    }
    csv.push('\n');
    for k in 0..report.analytic_cdf.len() {
        csv.push_str(&format!(
            "{},{},{},{},{}",
            fmt_f64(k as f64 * report.step),
            fmt_f64(report.analytic_mass[k]),
            fmt_f64(report.analytic_cdf[k]),
            fmt_f64(report.ecdf_mean[k]),
            fmt_f64(report.ecdf_stdev[k]),
        ));
        for ecdf in &report.batch_ecdf {
            csv.push(',');
            csv.push_str(&fmt_f64(ecdf[k]));
        }
        csv.push('\n');
    }
    write_atomic(&dir.join("panjer_grid.csv"), csv.as_bytes())?;

    let summary = PanjerSummary {
        name: &spec.name,
        seed: spec.seed,
        lambda: spec.lambda,
        h: spec.step,
        n_batches: spec.n_batches,
        n_samples: spec.n_samples,
        target_mass: spec.target_mass,
        grid_len: report.analytic_cdf.len(),
        aggregate_truncation: report.aggregate_truncation,
        severity_truncation: report.severity_truncation,
        max_deviation: report.max_deviation,
        band_points: report.band_points,
        band_contained: report.band_contained,
        band_fraction: report.band_fraction(),
        runtime_ms: report.runtime_ms,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_atomic(&dir.join("panjer_summary.json"), json.as_bytes())
}
