//! Count and severity distributions of the collective claim model.
//!
//! Claim counts per occurrence year are Poisson, binomial or negative
//! binomial; the ultimate count is spread over development years by a
//! multinomial split with a fixed run-off pattern; single claim sizes are
//! Pareto or shifted-exponential above a cut-off `r`, or exactly one
//! currency unit in the pure claim-number limit.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Open01, Poisson};
use thiserror::Error;

/// Default decay for the exponential run-off pattern.
pub const DEFAULT_EXPONENTIAL_DECAY: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("probability must lie strictly inside (0, 1), got {0}")]
    InvalidProbability(f64),
    #[error("binomial needs at least one trial")]
    ZeroTrials,
    #[error("rho must be positive and finite, got {0}")]
    InvalidRho(f64),
    #[error("pareto exponent must satisfy alpha > 2 (finite mean), got {0}")]
    InvalidAlpha(f64),
    #[error("minimum claim size must be positive and finite, got {0}")]
    InvalidMinClaim(f64),
    #[error("exponential rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("run-off pattern needs at least two development years, got {0}")]
    PatternTooShort(usize),
    #[error("pattern weight {index} must be nonnegative and finite, got {value}")]
    InvalidPatternWeight { index: usize, value: f64 },
    #[error("pattern weights must not all be zero")]
    ZeroPattern,
    #[error("exponential pattern decay must lie in (0, 1), got {0}")]
    InvalidDecay(f64),
    #[error("moment-matching fit needs a pareto severity")]
    NotPareto,
}

// ---------------------------------------------------------------------------
// Claim counts
// ---------------------------------------------------------------------------

/// Distribution of the ultimate aggregate claim number of one occurrence year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CountDistribution {
    Poisson { lambda: f64 },
    Binomial { trials: u64, p: f64 },
    NegBinomial { rho: f64, p: f64 },
}

impl CountDistribution {
    pub fn poisson(lambda: f64) -> Result<Self, DistError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(DistError::InvalidLambda(lambda));
        }
        Ok(Self::Poisson { lambda })
    }

    pub fn binomial(trials: u64, p: f64) -> Result<Self, DistError> {
        if trials == 0 {
            return Err(DistError::ZeroTrials);
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(DistError::InvalidProbability(p));
        }
        Ok(Self::Binomial { trials, p })
    }

    pub fn neg_binomial(rho: f64, p: f64) -> Result<Self, DistError> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(DistError::InvalidRho(rho));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(DistError::InvalidProbability(p));
        }
        Ok(Self::NegBinomial { rho, p })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Poisson { lambda } => lambda,
            Self::Binomial { trials, p } => trials as f64 * p,
            Self::NegBinomial { rho, p } => rho * (1.0 - p) / p,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Poisson { lambda } => lambda,
            Self::Binomial { trials, p } => trials as f64 * p * (1.0 - p),
            Self::NegBinomial { rho, p } => rho * (1.0 - p) / (p * p),
        }
    }

    /// Draw one claim count.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            Self::Poisson { lambda } => sample_poisson(lambda, rng),
            Self::Binomial { trials, p } => Binomial::new(trials, p)
                .expect("validated parameters")
                .sample(rng),
            Self::NegBinomial { rho, p } => {
                // Gamma-Poisson mixture: Lambda ~ Gamma(rho, (1-p)/p),
                // N | Lambda ~ Poisson(Lambda) has the stated pmf
                // C(rho+n-1, n) p^rho (1-p)^n.
                let scale = (1.0 - p) / p;
                let mixing = Gamma::new(rho, scale)
                    .expect("validated parameters")
                    .sample(rng);
                if mixing > 0.0 {
                    sample_poisson(mixing, rng)
                } else {
                    0
                }
            }
        }
    }
}

fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let draw: f64 = Poisson::new(lambda)
        .expect("positive finite lambda")
        .sample(rng);
    draw as u64
}

// ---------------------------------------------------------------------------
// Single claim sizes
// ---------------------------------------------------------------------------

/// Distribution of one claim amount.
///
/// Pareto density is `(alpha-1) r^(alpha-1) x^(-alpha)` on `x > r`, so the
/// survival function is `(r/x)^(alpha-1)`. The shifted exponential has
/// density `mu exp(-mu (x - r))` on `x > r`. `UnitClaim` is the pure
/// claim-number limit where every claim is one currency unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeverityDistribution {
    Pareto { alpha: f64, min_claim: f64 },
    ShiftedExponential { rate: f64, min_claim: f64 },
    UnitClaim,
}

impl SeverityDistribution {
    pub fn pareto(alpha: f64, min_claim: f64) -> Result<Self, DistError> {
        if !(alpha > 2.0 && alpha.is_finite()) {
            return Err(DistError::InvalidAlpha(alpha));
        }
        if !(min_claim > 0.0 && min_claim.is_finite()) {
            return Err(DistError::InvalidMinClaim(min_claim));
        }
        Ok(Self::Pareto { alpha, min_claim })
    }

    pub fn shifted_exponential(rate: f64, min_claim: f64) -> Result<Self, DistError> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(DistError::InvalidRate(rate));
        }
        if !(min_claim > 0.0 && min_claim.is_finite()) {
            return Err(DistError::InvalidMinClaim(min_claim));
        }
        Ok(Self::ShiftedExponential { rate, min_claim })
    }

    pub fn unit_claim() -> Self {
        Self::UnitClaim
    }

    /// First moment.
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Pareto { alpha, min_claim } => min_claim * (alpha - 1.0) / (alpha - 2.0),
            Self::ShiftedExponential { rate, min_claim } => min_claim + 1.0 / rate,
            Self::UnitClaim => 1.0,
        }
    }

    /// Second moment; `None` for a Pareto with `alpha <= 3`.
    pub fn second_moment(&self) -> Option<f64> {
        match *self {
            Self::Pareto { alpha, min_claim } => {
                if alpha > 3.0 {
                    Some(min_claim * min_claim * (alpha - 1.0) / (alpha - 3.0))
                } else {
                    None
                }
            }
            Self::ShiftedExponential { rate, min_claim } => {
                Some(min_claim * min_claim + 2.0 * min_claim / rate + 2.0 / (rate * rate))
            }
            Self::UnitClaim => Some(1.0),
        }
    }

    /// Distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Pareto { alpha, min_claim } => {
                if x <= min_claim {
                    0.0
                } else {
                    1.0 - (min_claim / x).powf(alpha - 1.0)
                }
            }
            Self::ShiftedExponential { rate, min_claim } => {
                if x <= min_claim {
                    0.0
                } else {
                    1.0 - (-rate * (x - min_claim)).exp()
                }
            }
            Self::UnitClaim => {
                if x < 1.0 {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Inverse distribution function for `p` in (0, 1).
    pub fn quantile(&self, p: f64) -> f64 {
        debug_assert!(p > 0.0 && p < 1.0);
        match *self {
            Self::Pareto { alpha, min_claim } => min_claim * (1.0 - p).powf(-1.0 / (alpha - 1.0)),
            Self::ShiftedExponential { rate, min_claim } => min_claim - (1.0 - p).ln() / rate,
            Self::UnitClaim => 1.0,
        }
    }

    /// Draw one claim amount; strictly above the cut-off for both
    /// continuous severities.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Pareto { alpha, min_claim } => {
                // Inversion of the survival function (r/x)^(alpha-1).
                let u: f64 = rng.sample(Open01);
                min_claim * (1.0 - u).powf(-1.0 / (alpha - 1.0))
            }
            Self::ShiftedExponential { rate, min_claim } => {
                let u: f64 = rng.sample(Open01);
                min_claim - u.ln() / rate
            }
            Self::UnitClaim => 1.0,
        }
    }
}

/// Shifted exponential with the same cut-off as `pareto` and the rate chosen
/// so the first moments coincide: `mu = (alpha - 2) / r`.
pub fn fit_exponential_to_pareto(
    pareto: &SeverityDistribution,
) -> Result<SeverityDistribution, DistError> {
    match *pareto {
        SeverityDistribution::Pareto { alpha, min_claim } => {
            SeverityDistribution::shifted_exponential((alpha - 2.0) / min_claim, min_claim)
        }
        _ => Err(DistError::NotPareto),
    }
}

// ---------------------------------------------------------------------------
// Run-off pattern and multinomial split
// ---------------------------------------------------------------------------

/// Probability vector spreading an occurrence year's claims over development
/// years. Normalized at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOffPattern {
    probs: Vec<f64>,
    /// tail[k] = probs[k..].sum(), built backward so tail[k] = 0 exactly
    /// once every later weight is zero.
    tail: Vec<f64>,
}

impl RunOffPattern {
    /// Normalized copy of arbitrary nonnegative weights.
    pub fn explicit(weights: &[f64]) -> Result<Self, DistError> {
        if weights.len() < 2 {
            return Err(DistError::PatternTooShort(weights.len()));
        }
        for (index, &value) in weights.iter().enumerate() {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(DistError::InvalidPatternWeight { index, value });
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(DistError::ZeroPattern);
        }
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut tail = vec![0.0; probs.len()];
        let mut acc = 0.0;
        for (t, &p) in tail.iter_mut().zip(probs.iter()).rev() {
            acc += p;
            *t = acc;
        }
        Ok(Self { probs, tail })
    }

    /// Weights proportional to `I+1-j`, j = 1..I.
    pub fn linear(years: usize) -> Result<Self, DistError> {
        if years < 2 {
            return Err(DistError::PatternTooShort(years));
        }
        let weights: Vec<f64> = (0..years).map(|j| (years - j) as f64).collect();
        Self::explicit(&weights)
    }

    /// Weights proportional to `decay^(j-1)`, j = 1..I, decay in (0, 1).
    pub fn exponential(years: usize, decay: f64) -> Result<Self, DistError> {
        if years < 2 {
            return Err(DistError::PatternTooShort(years));
        }
        if !(decay > 0.0 && decay < 1.0) {
            return Err(DistError::InvalidDecay(decay));
        }
        let weights: Vec<f64> = (0..years).map(|j| decay.powi(j as i32)).collect();
        Self::explicit(&weights)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Multinomial split of `n` claims over the pattern's development years,
/// realized as sequential conditional binomials. The components always sum
/// to `n` exactly.
pub fn sample_multinomial<R: Rng + ?Sized>(
    n: u64,
    pattern: &RunOffPattern,
    rng: &mut R,
) -> Vec<u64> {
    let mut out = vec![0u64; pattern.len()];
    let mut remaining = n;
    for k in 0..pattern.len() {
        if remaining == 0 {
            break;
        }
        let mass_after = pattern.tail.get(k + 1).copied().unwrap_or(0.0);
        if mass_after <= 0.0 {
            // Everything left belongs to this development year.
            out[k] = remaining;
            return out;
        }
        let p_k = pattern.probs[k];
        if p_k <= 0.0 {
            continue;
        }
        let conditional = p_k / pattern.tail[k];
        let draw = Binomial::new(remaining, conditional.min(1.0))
            .expect("conditional probability in [0, 1]")
            .sample(rng);
        out[k] = draw;
        remaining -= draw;
    }
    debug_assert_eq!(out.iter().sum::<u64>(), n);
    out
}
