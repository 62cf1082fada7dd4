//! Empirical distribution machinery for the backtest output: percentiles of
//! the delta samples, aggregation across replications, safety loadings and
//! percentile differences between severity models.

use crate::simulate::ScenarioResult;
use thiserror::Error;

/// Union of the percentile levels plotted for the claim-number and the
/// aggregate studies.
pub const DEFAULT_LEVELS: [f64; 7] = [0.05, 0.10, 0.20, 0.50, 0.80, 0.90, 0.95];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("probability level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("need at least one replication")]
    NoReplications,
    #[error("level {0} was not computed in this report")]
    LevelNotComputed(f64),
    #[error("reports carry different level sets")]
    LevelMismatch,
    #[error("nonpositive mean square error in batch")]
    NonPositiveMse,
}

/// Type-1 empirical quantile: the ceil(p*n)-th order statistic.
///
/// The product `p * n` is snapped to the nearest integer when it is within
/// rounding error of one, so that e.g. p = 0.05, n = 100 selects the 5th
/// order statistic rather than the 6th.
pub fn empirical_quantile(samples: &[f64], p: f64) -> Result<f64, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(StatsError::InvalidLevel(p));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(quantile_sorted(&sorted, p))
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len() as f64;
    let t = p * n;
    let nearest = t.round();
    let k = if (t - nearest).abs() <= 1e-9 * n.max(1.0) {
        nearest
    } else {
        t.ceil()
    };
    let index = (k as usize).clamp(1, sorted.len());
    sorted[index - 1]
}

/// Replicated percentile summary of the delta distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PercentileReport {
    pub levels: Vec<f64>,
    /// `per_replication[rep][level index]`.
    pub per_replication: Vec<Vec<f64>>,
    /// Cross-replication mean per level.
    pub q_mean: Vec<f64>,
    /// Cross-replication sample standard deviation per level (zero for a
    /// single replication).
    pub q_stdev: Vec<f64>,
    pub e_delta_per_replication: Vec<f64>,
    pub e_delta_mean: f64,
    pub e_delta_stdev: f64,
}

impl PercentileReport {
    fn level_index(&self, level: f64) -> Result<usize, StatsError> {
        self.levels
            .iter()
            .position(|&l| (l - level).abs() <= 1e-12)
            .ok_or(StatsError::LevelNotComputed(level))
    }
}

fn mean_stdev(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-level quantiles of each replication plus cross-replication mean and
/// sample standard deviation, and the same summary for the mean of delta.
pub fn aggregate_replications(
    batches: &[Vec<f64>],
    levels: &[f64],
) -> Result<PercentileReport, StatsError> {
    if batches.is_empty() {
        return Err(StatsError::NoReplications);
    }
    for level in levels {
        if !(*level > 0.0 && *level < 1.0) {
            return Err(StatsError::InvalidLevel(*level));
        }
    }
    let mut per_replication = Vec::with_capacity(batches.len());
    let mut e_delta_per_replication = Vec::with_capacity(batches.len());
    for batch in batches {
        if batch.is_empty() {
            return Err(StatsError::EmptySample);
        }
        let mut sorted = batch.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        per_replication.push(
            levels
                .iter()
                .map(|&p| quantile_sorted(&sorted, p))
                .collect(),
        );
        e_delta_per_replication.push(batch.iter().sum::<f64>() / batch.len() as f64);
    }
    let mut q_mean = Vec::with_capacity(levels.len());
    let mut q_stdev = Vec::with_capacity(levels.len());
    for idx in 0..levels.len() {
        let column: Vec<f64> = per_replication
            .iter()
            .map(|row: &Vec<f64>| row[idx])
            .collect();
        let (mean, stdev) = mean_stdev(&column);
        q_mean.push(mean);
        q_stdev.push(stdev);
    }
    let (e_delta_mean, e_delta_stdev) = mean_stdev(&e_delta_per_replication);
    Ok(PercentileReport {
        levels: levels.to_vec(),
        per_replication,
        q_mean,
        q_stdev,
        e_delta_per_replication,
        e_delta_mean,
        e_delta_stdev,
    })
}

/// Safety loading for a target underreserving risk: the reserve must be set
/// to the chain ladder reserve plus `loading * sqrt(mse)`, where
/// `loading = -q_risk(delta)`.
pub fn safety_loading(report: &PercentileReport, risk: f64) -> Result<f64, StatsError> {
    let idx = report.level_index(risk)?;
    Ok(-report.q_mean[idx])
}

/// Per-level quantile differences `a - b` with both cross-replication
/// spreads for judging significance.
#[derive(Debug, Clone, PartialEq)]
pub struct PercentileDiff {
    pub levels: Vec<f64>,
    pub diff: Vec<f64>,
    pub stdev_a: Vec<f64>,
    pub stdev_b: Vec<f64>,
}

pub fn percentile_diff(
    a: &PercentileReport,
    b: &PercentileReport,
) -> Result<PercentileDiff, StatsError> {
    if a.levels.len() != b.levels.len()
        || a.levels
            .iter()
            .zip(&b.levels)
            .any(|(x, y)| (x - y).abs() > 1e-12)
    {
        return Err(StatsError::LevelMismatch);
    }
    let diff = a.q_mean.iter().zip(&b.q_mean).map(|(x, y)| x - y).collect();
    Ok(PercentileDiff {
        levels: a.levels.clone(),
        diff,
        stdev_a: a.q_stdev.clone(),
        stdev_b: b.q_stdev.clone(),
    })
}

/// Sample version of the relative-bias identity
/// `E[delta] = E[R_CL - R_real] E[1/sqrt(mse)] + Cov[R_CL - R_real, 1/sqrt(mse)]`,
/// exact when the covariance uses 1/n normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasDecomposition {
    pub mean_delta: f64,
    pub product_term: f64,
    pub covariance_term: f64,
}

impl BiasDecomposition {
    pub fn rhs(&self) -> f64 {
        self.product_term + self.covariance_term
    }
}

pub fn relative_bias_decomposition(
    batch: &[ScenarioResult],
) -> Result<BiasDecomposition, StatsError> {
    if batch.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if batch.iter().any(|r| r.mse.is_nan() || r.mse <= 0.0) {
        return Err(StatsError::NonPositiveMse);
    }
    let n = batch.len() as f64;
    let errors: Vec<f64> = batch.iter().map(|r| r.r_cl - r.r_real).collect();
    let weights: Vec<f64> = batch.iter().map(|r| 1.0 / r.mse.sqrt()).collect();
    let mean_delta = errors.iter().zip(&weights).map(|(e, w)| e * w).sum::<f64>() / n;
    let mean_error = errors.iter().sum::<f64>() / n;
    let mean_weight = weights.iter().sum::<f64>() / n;
    let covariance = errors
        .iter()
        .zip(&weights)
        .map(|(e, w)| (e - mean_error) * (w - mean_weight))
        .sum::<f64>()
        / n;
    Ok(BiasDecomposition {
        mean_delta,
        product_term: mean_error * mean_weight,
        covariance_term: covariance,
    })
}
