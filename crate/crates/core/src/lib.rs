//! Monte Carlo backtesting of chain ladder reserving under the collective
//! model of risk theory.
//!
//! The crate simulates full run-off rectangles (claim counts spread over
//! development years, optional heavy-tailed severities), runs the chain
//! ladder estimator with Mack's mean square error on the upper triangle
//! only, and scores the reserve error in units of estimated standard error
//! (`delta`). A Panjer recursion provides an analytic oracle for the
//! per-cell aggregate loss distribution.

pub mod chainladder;
pub mod distributions;
pub mod panjer;
pub mod rng;
pub mod simulate;
pub mod stats;
pub mod triangle;

pub use chainladder::{estimate, ChainLadderError, ClEstimate};
pub use distributions::{
    fit_exponential_to_pareto, sample_multinomial, CountDistribution, DistError, RunOffPattern,
    SeverityDistribution, DEFAULT_EXPONENTIAL_DECAY,
};
pub use panjer::{
    discretize_severity, max_cdf_deviation, panjer_adaptive, panjer_compound_poisson, DiscretePmf,
    PanjerError, PanjerResult,
};
pub use rng::scenario_rng;
pub use simulate::{
    expected_triangle_claims, run_batch, run_scenario, simulate_rectangle, ScenarioConfig,
    ScenarioResult, SimError,
};
pub use stats::{
    aggregate_replications, empirical_quantile, percentile_diff, relative_bias_decomposition,
    safety_loading, BiasDecomposition, PercentileDiff, PercentileReport, StatsError,
    DEFAULT_LEVELS,
};
pub use triangle::{CumulativeTriangle, Reserves, RunOffTable, TriangleError};
