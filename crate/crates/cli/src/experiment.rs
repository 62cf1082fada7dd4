//! Sweep execution and artifact emission.
//!
//! Every configuration runs its replications sequentially (scenarios fan out
//! over the rayon pool inside `run_batch`), so the data files are a pure
//! function of the resolved experiment regardless of worker count. Files are
//! written to a temporary name and renamed into place.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clbacktest_core::scenario_rng;
use clbacktest_core::simulate::{run_batch, simulate_rectangle, SimError};
use clbacktest_core::stats::{aggregate_replications, PercentileReport, StatsError};
use serde::Serialize;
use thiserror::Error;

use crate::config::{OutputFormat, ResolvedConfig, ResolvedExperiment};
use crate::fmt_f64;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config {id}: {source}")]
    Config {
        id: String,
        #[source]
        source: SimError,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Everything one configuration produced.
#[derive(Debug, Clone)]
pub struct ConfigOutcome {
    pub id: String,
    pub report: PercentileReport,
    pub delta_metric: f64,
    pub resample_total: u64,
    pub runtime_ms: u128,
    pub config_seed: u64,
}

/// Run every configuration of the experiment, in file order.
pub fn run_experiment(experiment: &ResolvedExperiment) -> Result<Vec<ConfigOutcome>, RunError> {
    experiment
        .configs
        .iter()
        .map(|config| run_config(experiment, config))
        .collect()
}

pub fn run_config(
    experiment: &ResolvedExperiment,
    config: &ResolvedConfig,
) -> Result<ConfigOutcome, RunError> {
    let start = Instant::now();
    let mut batches = Vec::with_capacity(experiment.n_replications as usize);
    let mut resample_total = 0u64;
    for replication in 0..experiment.n_replications {
        let results =
            run_batch(&config.scenario, replication).map_err(|source| RunError::Config {
                id: config.id.clone(),
                source,
            })?;
        resample_total += results.iter().map(|r| r.resamples as u64).sum::<u64>();
        batches.push(results.iter().map(|r| r.delta).collect::<Vec<f64>>());
    }
    let report = aggregate_replications(&batches, &experiment.levels)?;
    Ok(ConfigOutcome {
        id: config.id.clone(),
        report,
        delta_metric: config.delta_metric,
        resample_total,
        runtime_ms: start.elapsed().as_millis(),
        config_seed: config.scenario.seed,
    })
}

// ---------------------------------------------------------------------------
// Artifact files
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Manifest<'a> {
    name: &'a str,
    seed: u64,
    spec_hash: String,
    code_version: &'static str,
    /// Wall-clock stamp; the single field allowed to differ between reruns.
    timestamp_unix_ms: u128,
    n_scenarios: u32,
    n_replications: u32,
    levels: &'a [f64],
    configs: Vec<ManifestConfig<'a>>,
}

#[derive(Serialize)]
struct ManifestConfig<'a> {
    id: &'a str,
    seed: u64,
    delta_metric: f64,
    resample_total: u64,
    runtime_ms: u128,
    e_delta_mean: f64,
    e_delta_stdev: f64,
}

/// Write `percentiles.csv`, `bias.csv`, `manifest.json` and (when requested)
/// `report.json` into `dir`.
pub fn write_outputs(
    dir: &Path,
    experiment: &ResolvedExperiment,
    outcomes: &[ConfigOutcome],
) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;

    let mut percentiles = String::from("config_id,level,q_mean,q_stdev\n");
    for outcome in outcomes {
        for (idx, &level) in outcome.report.levels.iter().enumerate() {
            percentiles.push_str(&format!(
                "{},{},{},{}\n",
                outcome.id,
                fmt_f64(level),
                fmt_f64(outcome.report.q_mean[idx]),
                fmt_f64(outcome.report.q_stdev[idx]),
            ));
        }
    }
    write_atomic(&dir.join("percentiles.csv"), percentiles.as_bytes())?;

    let mut bias = String::from("config_id,delta_mean,delta_stdev,Delta_metric,resample_total\n");
    for outcome in outcomes {
        bias.push_str(&format!(
            "{},{},{},{},{}\n",
            outcome.id,
            fmt_f64(outcome.report.e_delta_mean),
            fmt_f64(outcome.report.e_delta_stdev),
            fmt_f64(outcome.delta_metric),
            outcome.resample_total,
        ));
    }
    write_atomic(&dir.join("bias.csv"), bias.as_bytes())?;

    let manifest = Manifest {
        name: &experiment.name,
        seed: experiment.seed,
        spec_hash: format!("{:016x}", experiment.spec_hash),
        code_version: env!("CARGO_PKG_VERSION"),
        timestamp_unix_ms: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
        n_scenarios: experiment.n_scenarios,
        n_replications: experiment.n_replications,
        levels: &experiment.levels,
        configs: outcomes
            .iter()
            .map(|o| ManifestConfig {
                id: &o.id,
                seed: o.config_seed,
                delta_metric: o.delta_metric,
                resample_total: o.resample_total,
                runtime_ms: o.runtime_ms,
                e_delta_mean: o.report.e_delta_mean,
                e_delta_stdev: o.report.e_delta_stdev,
            })
            .collect(),
    };
    let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(&dir.join("manifest.json"), manifest_json.as_bytes())?;

    if experiment.formats.contains(&OutputFormat::Json) {
        #[derive(Serialize)]
        struct ReportRow<'a> {
            config_id: &'a str,
            levels: &'a [f64],
            q_mean: &'a [f64],
            q_stdev: &'a [f64],
            per_replication: &'a [Vec<f64>],
            e_delta_mean: f64,
            e_delta_stdev: f64,
            e_delta_per_replication: &'a [f64],
        }
        let rows: Vec<ReportRow> = outcomes
            .iter()
            .map(|o| ReportRow {
                config_id: &o.id,
                levels: &o.report.levels,
                q_mean: &o.report.q_mean,
                q_stdev: &o.report.q_stdev,
                per_replication: &o.report.per_replication,
                e_delta_mean: o.report.e_delta_mean,
                e_delta_stdev: o.report.e_delta_stdev,
                e_delta_per_replication: &o.report.e_delta_per_replication,
            })
            .collect();
        let json = serde_json::to_string_pretty(&rows).expect("report serializes");
        write_atomic(&dir.join("report.json"), json.as_bytes())?;
    }
    Ok(())
}

/// Dump the first `n` simulated rectangles (replication 0) of every
/// configuration, together with their cumulated upper triangles. These are
/// exactly the tables the run itself saw for those scenario indices.
pub fn dump_tables(dir: &Path, experiment: &ResolvedExperiment, n: u32) -> std::io::Result<()> {
    let tables_dir = dir.join("tables");
    fs::create_dir_all(&tables_dir)?;
    for config in &experiment.configs {
        for scenario in 0..n.min(experiment.n_scenarios) {
            let mut rng = scenario_rng(config.scenario.seed, 0, scenario);
            let table = simulate_rectangle(&config.scenario, &mut rng);
            let rect_path = tables_dir.join(format!("{}-s{scenario}-rectangle.csv", config.id));
            write_atomic(&rect_path, table.to_csv().as_bytes())?;
            let tri_path = tables_dir.join(format!("{}-s{scenario}-triangle.csv", config.id));
            write_atomic(&tri_path, table.cumulate_upper().to_csv().as_bytes())?;
        }
    }
    Ok(())
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)
}
