//! Chain ladder estimation on a cumulative triangle: development factors,
//! forecasts, reserves, the sigma-squared variance parameters and the mean
//! square error of the per-year and total reserves.
//!
//! All indices here are 0-based: development factor `k` maps development
//! year `k` to `k+1`, rows run over occurrence years. The per-year vectors
//! (`reserves`, `mse_per_year`) start at occurrence year 1, the first year
//! with anything left to forecast.

use crate::triangle::CumulativeTriangle;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainLadderError {
    /// A development column needed by the estimator carries no volume.
    #[error("degenerate triangle at development year {dev}: zero denominator")]
    DegenerateTriangle { dev: usize },
}

/// Everything the chain ladder method produces from one triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct ClEstimate {
    /// Development factors, length `I - 1`.
    pub factors: Vec<f64>,
    /// Full I x I cumulative matrix: observed cells kept as-is, lower region
    /// filled with forecasts.
    pub projected: Vec<Vec<f64>>,
    /// Reserve per occurrence year `i = 1..I`, length `I - 1`.
    pub reserves: Vec<f64>,
    pub total_reserve: f64,
    /// Variance parameters, length `I - 1`; the last entry follows the tail
    /// extrapolation rule (see [`sigma_sq`]).
    pub sigma_sq: Vec<f64>,
    /// Mean square error per occurrence year `i = 1..I`, length `I - 1`.
    pub mse_per_year: Vec<f64>,
    /// Mean square error of the total reserve, including the cross-year
    /// covariance term.
    pub mse_total: f64,
}

/// Column sums over the rows that also have the next development year, i.e.
/// the denominators of the development factors.
fn factor_denominators(tri: &CumulativeTriangle) -> Vec<f64> {
    let years = tri.years();
    (0..years - 1)
        .map(|k| (0..years - 1 - k).map(|i| tri.cell(i, k)).sum())
        .collect()
}

/// Development factors as column-sum ratios.
pub fn dev_factors(tri: &CumulativeTriangle) -> Result<Vec<f64>, ChainLadderError> {
    let years = tri.years();
    let mut factors = Vec::with_capacity(years - 1);
    for k in 0..years - 1 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..years - 1 - k {
            num += tri.cell(i, k + 1);
            den += tri.cell(i, k);
        }
        if den <= 0.0 {
            return Err(ChainLadderError::DegenerateTriangle { dev: k });
        }
        factors.push(num / den);
    }
    Ok(factors)
}

/// Forecasts and reserves rolled forward from the last known diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub projected: Vec<Vec<f64>>,
    pub reserves: Vec<f64>,
    pub total_reserve: f64,
}

pub fn forecast(tri: &CumulativeTriangle, factors: &[f64]) -> Projection {
    let years = tri.years();
    let mut projected = Vec::with_capacity(years);
    let mut reserves = Vec::with_capacity(years - 1);
    let mut total_reserve = 0.0;
    for i in 0..years {
        let known = tri.row(i);
        let mut row = Vec::with_capacity(years);
        row.extend_from_slice(known);
        for k in known.len()..years {
            let next = row[k - 1] * factors[k - 1];
            row.push(next);
        }
        if i >= 1 {
            let reserve = row[years - 1] - tri.diagonal(i);
            reserves.push(reserve);
            total_reserve += reserve;
        }
        projected.push(row);
    }
    Projection {
        projected,
        reserves,
        total_reserve,
    }
}

/// Weighted variance of the observed development ratios around each factor.
///
/// The regular estimator divides by `I - k - 1` observations minus one and is
/// therefore undefined for the last factor; that entry is filled with Mack's
/// extrapolation `min(s4[I-2]/s2[I-3], s2[I-3], s2[I-2])` (1-based paper
/// notation) and set to zero whenever a referenced value is missing or zero.
pub fn sigma_sq(tri: &CumulativeTriangle, factors: &[f64]) -> Result<Vec<f64>, ChainLadderError> {
    let years = tri.years();
    let mut out = vec![0.0; years - 1];
    for k in 0..years.saturating_sub(2) {
        let n_rows = years - 1 - k;
        let mut sum = 0.0;
        for j in 0..n_rows {
            let c = tri.cell(j, k);
            if c <= 0.0 {
                return Err(ChainLadderError::DegenerateTriangle { dev: k });
            }
            let resid = tri.cell(j, k + 1) / c - factors[k];
            sum += c * resid * resid;
        }
        if n_rows >= 2 {
            out[k] = sum / (n_rows - 1) as f64;
        }
        // n_rows == 1 only happens at k = I - 2, handled below.
    }
    let tail = years - 2;
    out[tail] = if tail >= 2 && out[tail - 1] > 0.0 && out[tail - 2] > 0.0 {
        (out[tail - 1] * out[tail - 1] / out[tail - 2])
            .min(out[tail - 2])
            .min(out[tail - 1])
    } else {
        0.0
    };
    Ok(out)
}

/// Mean square error of each per-year reserve, length `I - 1` starting at
/// occurrence year 1. Terms with zero variance contribute nothing, so a
/// deterministic triangle yields exact zeros.
pub fn mse_per_year(
    tri: &CumulativeTriangle,
    factors: &[f64],
    sigma_sq: &[f64],
    projection: &Projection,
) -> Result<Vec<f64>, ChainLadderError> {
    let years = tri.years();
    let col_sums = factor_denominators(tri);
    let mut out = Vec::with_capacity(years - 1);
    for i in 1..years {
        let ultimate = projection.projected[i][years - 1];
        let mut sum = 0.0;
        for k in (years - 1 - i)..=(years - 2) {
            if sigma_sq[k] == 0.0 {
                continue;
            }
            let c_ik = projection.projected[i][k];
            if c_ik <= 0.0 {
                return Err(ChainLadderError::DegenerateTriangle { dev: k });
            }
            sum += sigma_sq[k] / (factors[k] * factors[k]) * (1.0 / c_ik + 1.0 / col_sums[k]);
        }
        out.push(ultimate * ultimate * sum);
    }
    Ok(out)
}

/// Mean square error of the total reserve: the per-year sum plus the
/// covariance term coupling occurrence years through shared factors.
pub fn mse_total(
    tri: &CumulativeTriangle,
    factors: &[f64],
    sigma_sq: &[f64],
    projection: &Projection,
    mse_per_year: &[f64],
) -> f64 {
    let years = tri.years();
    let col_sums = factor_denominators(tri);
    let ultimates: Vec<f64> = (0..years)
        .map(|i| projection.projected[i][years - 1])
        .collect();
    // suffix[i] = sum of ultimates for rows > i
    let mut suffix = vec![0.0; years + 1];
    for i in (0..years).rev() {
        suffix[i] = suffix[i + 1] + ultimates[i];
    }
    let mut total: f64 = mse_per_year.iter().sum();
    for i in 1..years - 1 {
        let mut inner = 0.0;
        for k in (years - 1 - i)..=(years - 2) {
            if sigma_sq[k] == 0.0 {
                continue;
            }
            inner += 2.0 * sigma_sq[k] / (factors[k] * factors[k]) / col_sums[k];
        }
        total += ultimates[i] * suffix[i + 1] * inner;
    }
    total
}

/// Run the whole estimator suite on one triangle.
pub fn estimate(tri: &CumulativeTriangle) -> Result<ClEstimate, ChainLadderError> {
    let factors = dev_factors(tri)?;
    let projection = forecast(tri, &factors);
    let sigma = sigma_sq(tri, &factors)?;
    let per_year = mse_per_year(tri, &factors, &sigma, &projection)?;
    let total = mse_total(tri, &factors, &sigma, &projection, &per_year);
    Ok(ClEstimate {
        factors,
        projected: projection.projected,
        reserves: projection.reserves,
        total_reserve: projection.total_reserve,
        sigma_sq: sigma,
        mse_per_year: per_year,
        mse_total: total,
    })
}
