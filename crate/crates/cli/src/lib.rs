//! Batch front-end for chain ladder backtest experiments: TOML sweep
//! configs, deterministic experiment execution, CSV/JSON artifacts, and the
//! Panjer validation pipeline.

pub mod config;
pub mod experiment;
pub mod panjer_check;

pub use config::{
    parse_experiment, parse_panjer_check, ConfigError, PanjerCheckSpec, ResolvedConfig,
    ResolvedExperiment,
};
pub use experiment::{dump_tables, run_experiment, write_outputs, ConfigOutcome, RunError};
pub use panjer_check::{run_panjer_check, write_panjer_outputs, PanjerCheckReport};

/// 17 significant digits: round-trips every f64 exactly.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}
