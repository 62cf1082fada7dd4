//! Compound-Poisson aggregate loss on a lattice: severity discretization by
//! mass matching at midpoints, the Panjer recursion
//! `g_k = sum_{j=1..k} lambda (j/k) f_j g_{k-j}` started at
//! `g_0 = exp(-lambda (1 - f_0))`, and the comparison of the resulting
//! distribution function with Monte Carlo samples.

use crate::distributions::SeverityDistribution;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PanjerError {
    #[error("discretization step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("grid needs at least one point")]
    EmptyGrid,
    #[error("mass {index} must be a finite probability, got {value}")]
    BadMass { index: usize, value: f64 },
    #[error("total mass {0} exceeds 1")]
    MassExceedsOne(f64),
    #[error("g_0 = exp(-{lambda_eff}) underflows; rescale the step or use extended precision")]
    Underflow { lambda_eff: f64 },
}

/// Probability masses on the lattice `0, h, 2h, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePmf {
    step: f64,
    masses: Vec<f64>,
}

impl DiscretePmf {
    pub fn new(step: f64, masses: Vec<f64>) -> Result<Self, PanjerError> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(PanjerError::InvalidStep(step));
        }
        if masses.is_empty() {
            return Err(PanjerError::EmptyGrid);
        }
        let mut total = 0.0;
        for (index, &value) in masses.iter().enumerate() {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(PanjerError::BadMass { index, value });
            }
            total += value;
        }
        if total > 1.0 + 1e-9 {
            return Err(PanjerError::MassExceedsOne(total));
        }
        Ok(Self { step, masses })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Lattice point `k * h`.
    pub fn point(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Probability mass beyond the grid.
    pub fn truncation_mass(&self) -> f64 {
        (1.0 - self.total_mass()).max(0.0)
    }

    /// Mean of the on-grid mass, `sum_j j h f_j`.
    pub fn mean(&self) -> f64 {
        self.masses
            .iter()
            .enumerate()
            .map(|(j, &f)| j as f64 * self.step * f)
            .sum()
    }

    /// Running sums of the masses.
    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.masses
            .iter()
            .map(|&f| {
                acc += f;
                acc
            })
            .collect()
    }
}

/// Severity masses by the rounding method: `f_0 = F(h/2)` and
/// `f_j = F((j+1/2) h) - F((j-1/2) h)`. Mass beyond `points` lattice steps is
/// left off the grid and reported by [`DiscretePmf::truncation_mass`].
pub fn discretize_severity(
    dist: &SeverityDistribution,
    step: f64,
    points: usize,
) -> Result<DiscretePmf, PanjerError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(PanjerError::InvalidStep(step));
    }
    if points == 0 {
        return Err(PanjerError::EmptyGrid);
    }
    let mut masses = Vec::with_capacity(points);
    masses.push(dist.cdf(0.5 * step));
    let mut upper_prev = masses[0];
    for j in 1..points {
        let upper = dist.cdf((j as f64 + 0.5) * step);
        masses.push((upper - upper_prev).max(0.0));
        upper_prev = upper;
    }
    DiscretePmf::new(step, masses)
}

/// Panjer recursion for a compound Poisson sum with discretized severity,
/// evaluated on the first `points` lattice steps.
pub fn panjer_compound_poisson(
    lambda: f64,
    severity: &DiscretePmf,
    points: usize,
) -> Result<DiscretePmf, PanjerError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(PanjerError::InvalidLambda(lambda));
    }
    if points == 0 {
        return Err(PanjerError::EmptyGrid);
    }
    let weights = recursion_weights(lambda, severity.masses());
    let g0 = initial_mass(lambda, severity.masses()[0])?;
    let mut masses = Vec::with_capacity(points);
    masses.push(g0);
    for k in 1..points {
        masses.push(recursion_step(&weights, &masses, k));
    }
    DiscretePmf::new(severity.step(), masses)
}

/// Result of the adaptive recursion: the aggregate distribution plus the
/// severity lattice actually used (always as long as the aggregate grid).
#[derive(Debug, Clone, PartialEq)]
pub struct PanjerResult {
    pub aggregate: DiscretePmf,
    pub severity: DiscretePmf,
}

/// Run the recursion until the aggregate grid carries at least
/// `target_mass`, extending the severity lattice alongside, but never past
/// `max_points`. Inspect [`DiscretePmf::truncation_mass`] on the result to
/// see whether the target was reached.
pub fn panjer_adaptive(
    lambda: f64,
    dist: &SeverityDistribution,
    step: f64,
    target_mass: f64,
    max_points: usize,
) -> Result<PanjerResult, PanjerError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(PanjerError::InvalidLambda(lambda));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(PanjerError::InvalidStep(step));
    }
    if max_points == 0 {
        return Err(PanjerError::EmptyGrid);
    }
    let mut severity_masses = vec![dist.cdf(0.5 * step)];
    let mut severity_upper = severity_masses[0];
    let mut weights = vec![0.0f64];
    let g0 = initial_mass(lambda, severity_masses[0])?;
    let mut masses = vec![g0];
    let mut acc = g0;
    let mut k = 1usize;
    while acc < target_mass && k < max_points {
        if weights.len() <= k {
            let extend_to = (weights.len() * 2).clamp(k + 1, max_points);
            for j in weights.len()..extend_to {
                let upper = dist.cdf((j as f64 + 0.5) * step);
                let f_j = (upper - severity_upper).max(0.0);
                severity_upper = upper;
                severity_masses.push(f_j);
                weights.push(lambda * j as f64 * f_j);
            }
        }
        let g_k = recursion_step(&weights, &masses, k);
        masses.push(g_k);
        acc += g_k;
        k += 1;
    }
    severity_masses.resize(masses.len(), 0.0);
    Ok(PanjerResult {
        aggregate: DiscretePmf::new(step, masses)?,
        severity: DiscretePmf::new(step, severity_masses)?,
    })
}

fn initial_mass(lambda: f64, f0: f64) -> Result<f64, PanjerError> {
    let lambda_eff = lambda * (1.0 - f0);
    let g0 = (-lambda_eff).exp();
    if g0 == 0.0 {
        return Err(PanjerError::Underflow { lambda_eff });
    }
    Ok(g0)
}

fn recursion_weights(lambda: f64, severity_masses: &[f64]) -> Vec<f64> {
    severity_masses
        .iter()
        .enumerate()
        .map(|(j, &f)| lambda * j as f64 * f)
        .collect()
}

#[inline]
fn recursion_step(weights: &[f64], g: &[f64], k: usize) -> f64 {
    let m = k.min(weights.len() - 1);
    let dot: f64 = weights[1..=m]
        .iter()
        .zip(g[k - m..k].iter().rev())
        .map(|(w, gv)| w * gv)
        .sum();
    dot / k as f64
}

/// Largest gap between the lattice distribution function and the empirical
/// distribution function of `samples`, taken over the lattice points.
pub fn max_cdf_deviation(analytic: &DiscretePmf, samples: &[f64]) -> f64 {
    assert!(!samples.is_empty(), "empirical comparison needs samples");
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut acc = 0.0;
    let mut worst = 0.0f64;
    for (k, &mass) in analytic.masses().iter().enumerate() {
        acc += mass;
        let x = analytic.point(k);
        let below = sorted.partition_point(|&s| s <= x) as f64;
        worst = worst.max((acc - below / n).abs());
    }
    worst
}
