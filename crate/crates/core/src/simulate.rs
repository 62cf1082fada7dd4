//! Monte Carlo backtest: simulate full run-off rectangles under the
//! collective model, estimate reserves from the upper triangle only, and
//! score the estimate against the simulated truth.
//!
//! Every scenario owns a counter-based random stream keyed on
//! `(seed, replication, scenario)`, so batches are bit-reproducible no
//! matter how the work is scheduled across threads.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::chainladder;
use crate::distributions::{
    sample_multinomial, CountDistribution, DistError, RunOffPattern, SeverityDistribution,
};
use crate::rng::scenario_rng;
use crate::triangle::RunOffTable;

pub const DEFAULT_N_SCENARIOS: u32 = 1000;
pub const DEFAULT_N_REPLICATIONS: u32 = 10;
pub const DEFAULT_MAX_RESAMPLES: u32 = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("run-off pattern has {pattern} development years but the table has {years}")]
    PatternLengthMismatch { pattern: usize, years: usize },
    #[error("need at least one scenario and one replication")]
    EmptyBatch,
    #[error(transparent)]
    Distribution(#[from] DistError),
    #[error("scenario still degenerate after {resamples} redraws; parameters too sparse for chain ladder")]
    ScenarioExhausted { resamples: u32 },
    #[error("scenario {scenario}: degenerate after {resamples} redraws; parameters too sparse for chain ladder")]
    BatchExhausted { scenario: usize, resamples: u32 },
}

/// Full parameter set for one simulation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub years: usize,
    pub count: CountDistribution,
    pub pattern: RunOffPattern,
    pub severity: SeverityDistribution,
    pub n_scenarios: u32,
    pub n_replications: u32,
    pub seed: u64,
    pub max_resamples: u32,
}

impl ScenarioConfig {
    pub fn new(
        years: usize,
        count: CountDistribution,
        pattern: RunOffPattern,
        severity: SeverityDistribution,
        seed: u64,
    ) -> Result<Self, SimError> {
        if pattern.len() != years {
            return Err(SimError::PatternLengthMismatch {
                pattern: pattern.len(),
                years,
            });
        }
        Ok(Self {
            years,
            count,
            pattern,
            severity,
            n_scenarios: DEFAULT_N_SCENARIOS,
            n_replications: DEFAULT_N_REPLICATIONS,
            seed,
            max_resamples: DEFAULT_MAX_RESAMPLES,
        })
    }

    pub fn with_runs(mut self, n_scenarios: u32, n_replications: u32) -> Result<Self, SimError> {
        if n_scenarios == 0 || n_replications == 0 {
            return Err(SimError::EmptyBatch);
        }
        self.n_scenarios = n_scenarios;
        self.n_replications = n_replications;
        Ok(self)
    }

    pub fn with_max_resamples(mut self, max_resamples: u32) -> Self {
        self.max_resamples = max_resamples;
        self
    }
}

/// One backtested scenario: chain ladder reserve and mean square error from
/// the upper triangle, realized reserve from the simulated lower rectangle,
/// and the reserve error in units of estimated standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioResult {
    pub r_cl: f64,
    pub r_real: f64,
    pub mse: f64,
    pub delta: f64,
    /// Degenerate draws discarded before this scenario succeeded.
    pub resamples: u32,
}

/// Simulate one full rectangle: ultimate counts per occurrence year, a
/// multinomial spread over development years, and severity sums per cell.
pub fn simulate_rectangle<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> RunOffTable {
    let years = cfg.years;
    let mut cells = vec![0.0f64; years * years];
    for i in 0..years {
        let ultimate = cfg.count.sample(rng);
        let spread = sample_multinomial(ultimate, &cfg.pattern, rng);
        for (k, &n_ik) in spread.iter().enumerate() {
            let amount = match cfg.severity {
                SeverityDistribution::UnitClaim => n_ik as f64,
                severity => {
                    let mut sum = 0.0;
                    for _ in 0..n_ik {
                        sum += severity.sample(rng);
                    }
                    sum
                }
            };
            cells[i * years + k] = amount;
        }
    }
    RunOffTable::from_raw(years, cells)
}

/// Simulate until the triangle supports a chain ladder estimate, then score
/// it. Draws with a degenerate estimator or a vanishing mean square error
/// are discarded and counted.
pub fn run_scenario<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<ScenarioResult, SimError> {
    for attempt in 0..=cfg.max_resamples {
        let table = simulate_rectangle(cfg, rng);
        let triangle = table.cumulate_upper();
        let estimate = match chainladder::estimate(&triangle) {
            Ok(estimate) => estimate,
            Err(chainladder::ChainLadderError::DegenerateTriangle { .. }) => continue,
        };
        let mse = estimate.mse_total;
        if !(mse > 0.0 && mse.is_finite() && estimate.total_reserve.is_finite()) {
            continue;
        }
        let r_real = table.actual_reserves().total;
        let r_cl = estimate.total_reserve;
        return Ok(ScenarioResult {
            r_cl,
            r_real,
            mse,
            delta: (r_cl - r_real) / mse.sqrt(),
            resamples: attempt,
        });
    }
    Err(SimError::ScenarioExhausted {
        resamples: cfg.max_resamples,
    })
}

/// One replication: `n_scenarios` independent scenarios, fanned over the
/// current rayon pool. Results come back in scenario order and are a pure
/// function of `(seed, replication, scenario index)`.
pub fn run_batch(cfg: &ScenarioConfig, replication: u32) -> Result<Vec<ScenarioResult>, SimError> {
    let outcomes: Vec<Result<ScenarioResult, SimError>> = (0..cfg.n_scenarios)
        .into_par_iter()
        .map(|scenario| {
            let mut rng = scenario_rng(cfg.seed, replication, scenario);
            run_scenario(cfg, &mut rng)
        })
        .collect();
    let mut results = Vec::with_capacity(outcomes.len());
    for (scenario, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(result) => results.push(result),
            Err(SimError::ScenarioExhausted { resamples }) => {
                return Err(SimError::BatchExhausted {
                    scenario,
                    resamples,
                });
            }
            Err(other) => return Err(other),
        }
    }
    Ok(results)
}

/// Expected number of claims in the known (upper) triangle:
/// `E(N) * sum_j (I + 1 - j) pi_j` in 1-based notation.
pub fn expected_triangle_claims(cfg: &ScenarioConfig) -> f64 {
    let weight: f64 = cfg
        .pattern
        .probs()
        .iter()
        .enumerate()
        .map(|(j, &pi)| (cfg.years - j) as f64 * pi)
        .sum();
    cfg.count.mean() * weight
}
