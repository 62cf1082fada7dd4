//! Experiment configuration: TOML schema, sweep expansion and per-config
//! seed derivation.
//!
//! A sweep file carries one or more `[[grid]]` blocks; within a block the
//! `years`, `pattern`, `count` and `severity` axes are crossed, and blocks
//! are concatenated. Unknown keys anywhere are a hard error.

use clbacktest_core::distributions::{
    fit_exponential_to_pareto, CountDistribution, DistError, RunOffPattern, SeverityDistribution,
    DEFAULT_EXPONENTIAL_DECAY,
};
use clbacktest_core::simulate::{
    expected_triangle_claims, ScenarioConfig, SimError, DEFAULT_MAX_RESAMPLES,
    DEFAULT_N_REPLICATIONS, DEFAULT_N_SCENARIOS,
};
use clbacktest_core::stats::DEFAULT_LEVELS;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Distribution(#[from] DistError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error("grid block {0} has an empty `{1}` axis")]
    EmptyAxis(usize, &'static str),
    #[error("duplicate configuration id {0}")]
    Duplicate(String),
    #[error("explicit pattern has {got} weights for {years} years")]
    PatternLength { got: usize, years: usize },
    #[error("percentile level must lie in (0, 1), got {0}")]
    BadLevel(f64),
    #[error("years must be at least 2, got {0}")]
    BadYears(u32),
    #[error("need at least one scenario and one replication")]
    EmptyRuns,
}

fn default_n_scenarios() -> u32 {
    DEFAULT_N_SCENARIOS
}

fn default_n_replications() -> u32 {
    DEFAULT_N_REPLICATIONS
}

fn default_max_resamples() -> u32 {
    DEFAULT_MAX_RESAMPLES
}

fn default_levels() -> Vec<f64> {
    DEFAULT_LEVELS.to_vec()
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv]
}

fn default_decay() -> f64 {
    DEFAULT_EXPONENTIAL_DECAY
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// On-disk sweep description.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub name: String,
    pub seed: u64,
    #[serde(default = "default_n_scenarios")]
    pub n_scenarios: u32,
    #[serde(default = "default_n_replications")]
    pub n_replications: u32,
    #[serde(default = "default_max_resamples")]
    pub max_resamples: u32,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
    #[serde(default)]
    pub grid: Vec<GridBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub years: Vec<u32>,
    pub pattern: Vec<PatternSpec>,
    pub count: Vec<CountSpec>,
    pub severity: Vec<SeveritySpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatternSpec {
    Linear,
    Exponential {
        #[serde(default = "default_decay")]
        decay: f64,
    },
    Explicit {
        values: Vec<f64>,
    },
}

impl PatternSpec {
    fn build(&self, years: usize) -> Result<RunOffPattern, ConfigError> {
        match self {
            Self::Linear => Ok(RunOffPattern::linear(years)?),
            Self::Exponential { decay } => Ok(RunOffPattern::exponential(years, *decay)?),
            Self::Explicit { values } => {
                if values.len() != years {
                    return Err(ConfigError::PatternLength {
                        got: values.len(),
                        years,
                    });
                }
                Ok(RunOffPattern::explicit(values)?)
            }
        }
    }

    fn id_fragment(&self) -> String {
        match self {
            Self::Linear => "lin".to_string(),
            Self::Exponential { decay } => format!("exp{decay}"),
            Self::Explicit { values } => {
                let mut bytes = Vec::with_capacity(values.len() * 8);
                for v in values {
                    bytes.extend_from_slice(&v.to_bits().to_le_bytes());
                }
                format!("custom{:08x}", fnv1a64(&bytes) as u32)
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case", deny_unknown_fields)]
pub enum CountSpec {
    Poisson { lambda: f64 },
    Binomial { m: u64, p: f64 },
    NegBinomial { rho: f64, p: f64 },
}

impl CountSpec {
    fn build(&self) -> Result<CountDistribution, ConfigError> {
        Ok(match *self {
            Self::Poisson { lambda } => CountDistribution::poisson(lambda)?,
            Self::Binomial { m, p } => CountDistribution::binomial(m, p)?,
            Self::NegBinomial { rho, p } => CountDistribution::neg_binomial(rho, p)?,
        })
    }

    fn id_fragment(&self) -> String {
        match self {
            Self::Poisson { lambda } => format!("poi{lambda}"),
            Self::Binomial { m, p } => format!("bin{m}x{p}"),
            Self::NegBinomial { rho, p } => format!("nb{rho}x{p}"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeveritySpec {
    Unit,
    Pareto {
        alpha: f64,
        r: f64,
    },
    Exponential {
        mu: f64,
        r: f64,
    },
    /// Shifted exponential moment-matched to the given Pareto.
    ExponentialFit {
        alpha: f64,
        r: f64,
    },
}

impl SeveritySpec {
    fn build(&self) -> Result<SeverityDistribution, ConfigError> {
        Ok(match *self {
            Self::Unit => SeverityDistribution::unit_claim(),
            Self::Pareto { alpha, r } => SeverityDistribution::pareto(alpha, r)?,
            Self::Exponential { mu, r } => SeverityDistribution::shifted_exponential(mu, r)?,
            Self::ExponentialFit { alpha, r } => {
                fit_exponential_to_pareto(&SeverityDistribution::pareto(alpha, r)?)?
            }
        })
    }

    fn id_fragment(&self) -> String {
        match self {
            Self::Unit => "unit".to_string(),
            Self::Pareto { alpha, r } => format!("par{alpha}r{r}"),
            Self::Exponential { mu, r } => format!("xpo{mu}r{r}"),
            Self::ExponentialFit { alpha, r } => format!("xfit{alpha}r{r}"),
        }
    }
}

/// One fully built simulation configuration.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub id: String,
    pub scenario: ScenarioConfig,
    /// Expected claims in the known triangle, closed form.
    pub delta_metric: f64,
}

/// A parsed and expanded experiment, ready to run.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub name: String,
    pub seed: u64,
    pub n_scenarios: u32,
    pub n_replications: u32,
    pub levels: Vec<f64>,
    pub formats: Vec<OutputFormat>,
    pub configs: Vec<ResolvedConfig>,
    /// Hash over the resolved structure, recorded in the manifest.
    pub spec_hash: u64,
}

pub fn parse_experiment(
    text: &str,
    seed_override: Option<u64>,
) -> Result<ResolvedExperiment, ConfigError> {
    let file: ExperimentFile = toml::from_str(text)?;
    resolve_experiment(file, seed_override)
}

pub fn resolve_experiment(
    file: ExperimentFile,
    seed_override: Option<u64>,
) -> Result<ResolvedExperiment, ConfigError> {
    if file.n_scenarios == 0 || file.n_replications == 0 {
        return Err(ConfigError::EmptyRuns);
    }
    for &level in &file.levels {
        if !(level > 0.0 && level < 1.0) {
            return Err(ConfigError::BadLevel(level));
        }
    }
    let seed = seed_override.unwrap_or(file.seed);
    let mut configs: Vec<ResolvedConfig> = Vec::new();
    for (block_idx, block) in file.grid.iter().enumerate() {
        if block.years.is_empty() {
            return Err(ConfigError::EmptyAxis(block_idx, "years"));
        }
        if block.pattern.is_empty() {
            return Err(ConfigError::EmptyAxis(block_idx, "pattern"));
        }
        if block.count.is_empty() {
            return Err(ConfigError::EmptyAxis(block_idx, "count"));
        }
        if block.severity.is_empty() {
            return Err(ConfigError::EmptyAxis(block_idx, "severity"));
        }
        for &years in &block.years {
            if years < 2 {
                return Err(ConfigError::BadYears(years));
            }
            for pattern_spec in &block.pattern {
                for count_spec in &block.count {
                    for severity_spec in &block.severity {
                        let id = format!(
                            "I{years}-{}-{}-{}",
                            pattern_spec.id_fragment(),
                            count_spec.id_fragment(),
                            severity_spec.id_fragment()
                        );
                        if configs.iter().any(|c| c.id == id) {
                            return Err(ConfigError::Duplicate(id));
                        }
                        let scenario = ScenarioConfig::new(
                            years as usize,
                            count_spec.build()?,
                            pattern_spec.build(years as usize)?,
                            severity_spec.build()?,
                            config_seed(seed, &id),
                        )?
                        .with_runs(file.n_scenarios, file.n_replications)?
                        .with_max_resamples(file.max_resamples);
                        let delta_metric = expected_triangle_claims(&scenario);
                        configs.push(ResolvedConfig {
                            id,
                            scenario,
                            delta_metric,
                        });
                    }
                }
            }
        }
    }
    let spec_hash = hash_resolved(&file, seed, &configs);
    Ok(ResolvedExperiment {
        name: file.name,
        seed,
        n_scenarios: file.n_scenarios,
        n_replications: file.n_replications,
        levels: file.levels,
        formats: file.formats,
        configs,
        spec_hash,
    })
}

fn hash_resolved(file: &ExperimentFile, seed: u64, configs: &[ResolvedConfig]) -> u64 {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(file.name.as_bytes());
    bytes.extend_from_slice(&seed.to_le_bytes());
    bytes.extend_from_slice(&file.n_scenarios.to_le_bytes());
    bytes.extend_from_slice(&file.n_replications.to_le_bytes());
    bytes.extend_from_slice(&file.max_resamples.to_le_bytes());
    for level in &file.levels {
        bytes.extend_from_slice(&level.to_bits().to_le_bytes());
    }
    for config in configs {
        bytes.extend_from_slice(config.id.as_bytes());
        bytes.extend_from_slice(&config.scenario.seed.to_le_bytes());
    }
    fnv1a64(&bytes)
}

/// Per-configuration seed: stable under reordering of the sweep file.
pub fn config_seed(global_seed: u64, id: &str) -> u64 {
    splitmix64(global_seed.wrapping_add(fnv1a64(id.as_bytes())))
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// ---------------------------------------------------------------------------
// Panjer check configuration
// ---------------------------------------------------------------------------

fn default_n_batches() -> u32 {
    10
}

fn default_n_samples() -> u32 {
    1000
}

fn default_target_mass() -> f64 {
    0.999
}

fn default_max_points() -> usize {
    1 << 21
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanjerCheckFile {
    pub name: String,
    pub seed: u64,
    pub lambda: f64,
    pub h: f64,
    #[serde(default = "default_n_batches")]
    pub n_batches: u32,
    #[serde(default = "default_n_samples")]
    pub n_samples: u32,
    #[serde(default = "default_target_mass")]
    pub target_mass: f64,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
    pub severity: SeveritySpec,
}

/// Parsed and validated Panjer comparison setup.
#[derive(Debug, Clone)]
pub struct PanjerCheckSpec {
    pub name: String,
    pub seed: u64,
    pub lambda: f64,
    pub step: f64,
    pub n_batches: u32,
    pub n_samples: u32,
    pub target_mass: f64,
    pub max_points: usize,
    pub severity: SeverityDistribution,
}

pub fn parse_panjer_check(
    text: &str,
    seed_override: Option<u64>,
) -> Result<PanjerCheckSpec, ConfigError> {
    let file: PanjerCheckFile = toml::from_str(text)?;
    Ok(PanjerCheckSpec {
        severity: file.severity.build()?,
        name: file.name,
        seed: seed_override.unwrap_or(file.seed),
        lambda: file.lambda,
        step: file.h,
        n_batches: file.n_batches.max(2),
        n_samples: file.n_samples.max(1),
        target_mass: file.target_mass,
        max_points: file.max_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
name = "small"
seed = 7
n_scenarios = 10
n_replications = 2
levels = [0.05, 0.5, 0.95]

[[grid]]
years = [5, 10]
pattern = [{ kind = "linear" }, { kind = "exponential", decay = 0.5 }]
count = [{ dist = "poisson", lambda = 100.0 }]
severity = [{ kind = "unit" }]
"#;

    #[test]
    fn cross_product_expansion() {
        let exp = parse_experiment(SMALL, None).unwrap();
        assert_eq!(exp.configs.len(), 4);
        let ids: Vec<&str> = exp.configs.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(
            ids,
            vec![
                "I5-lin-poi100-unit",
                "I5-exp0.5-poi100-unit",
                "I10-lin-poi100-unit",
                "I10-exp0.5-poi100-unit",
            ]
        );
        assert_eq!(exp.configs[0].scenario.n_scenarios, 10);
        // Config seeds differ between configs but reproduce across parses.
        let again = parse_experiment(SMALL, None).unwrap();
        for (a, b) in exp.configs.iter().zip(&again.configs) {
            assert_eq!(a.scenario.seed, b.scenario.seed);
        }
        assert_ne!(exp.configs[0].scenario.seed, exp.configs[1].scenario.seed);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = SMALL.replace("n_scenarios = 10", "n_scenarios = 10\nextra = 1");
        assert!(matches!(
            parse_experiment(&text, None),
            Err(ConfigError::Parse(_))
        ));
        let text = SMALL.replace(
            "{ dist = \"poisson\", lambda = 100.0 }",
            "{ dist = \"poisson\", lambda = 100.0, typo = 3 }",
        );
        assert!(matches!(
            parse_experiment(&text, None),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn bad_values_are_rejected() {
        let text = SMALL.replace("[0.05, 0.5, 0.95]", "[0.05, 1.5]");
        assert!(matches!(
            parse_experiment(&text, None),
            Err(ConfigError::BadLevel(_))
        ));
        let text = SMALL.replace("years = [5, 10]", "years = [1]");
        assert!(matches!(
            parse_experiment(&text, None),
            Err(ConfigError::BadYears(1))
        ));
        let text = SMALL.replace("years = [5, 10]", "years = []");
        assert!(matches!(
            parse_experiment(&text, None),
            Err(ConfigError::EmptyAxis(0, "years"))
        ));
        let text = SMALL.replace("lambda = 100.0", "lambda = -3.0");
        assert!(matches!(
            parse_experiment(&text, None),
            Err(ConfigError::Distribution(_))
        ));
    }

    #[test]
    fn duplicate_combinations_are_rejected() {
        let text = SMALL.replace("years = [5, 10]", "years = [5, 5]");
        assert!(matches!(
            parse_experiment(&text, None),
            Err(ConfigError::Duplicate(_))
        ));
    }

    #[test]
    fn explicit_pattern_must_match_years() {
        let text = SMALL.replace(
            "[{ kind = \"linear\" }, { kind = \"exponential\", decay = 0.5 }]",
            "[{ kind = \"explicit\", values = [1.0, 1.0, 1.0] }]",
        );
        assert!(matches!(
            parse_experiment(&text, None),
            Err(ConfigError::PatternLength { got: 3, years: 5 })
        ));
    }

    #[test]
    fn seed_override_rederives_config_seeds() {
        let base = parse_experiment(SMALL, None).unwrap();
        let overridden = parse_experiment(SMALL, Some(99)).unwrap();
        assert_eq!(overridden.seed, 99);
        assert_ne!(
            base.configs[0].scenario.seed,
            overridden.configs[0].scenario.seed
        );
        assert_ne!(base.spec_hash, overridden.spec_hash);
    }

    #[test]
    fn moment_fit_severity_builds() {
        let text = r#"
name = "fit"
seed = 1

[[grid]]
years = [5]
pattern = [{ kind = "exponential" }]
count = [{ dist = "poisson", lambda = 100.0 }]
severity = [{ kind = "exponential_fit", alpha = 4.0, r = 1000.0 }]
"#;
        let exp = parse_experiment(text, None).unwrap();
        assert_eq!(exp.configs[0].id, "I5-exp0.5-poi100-xfit4r1000");
        match exp.configs[0].scenario.severity {
            SeverityDistribution::ShiftedExponential { rate, min_claim } => {
                assert!((rate - 0.002).abs() < 1e-15);
                assert_eq!(min_claim, 1000.0);
            }
            _ => panic!("expected fitted exponential"),
        }
    }

    #[test]
    fn panjer_file_parses() {
        let text = r#"
name = "fig-a"
seed = 3
lambda = 12.0
h = 5.0
severity = { kind = "pareto", alpha = 4.0, r = 1000.0 }
"#;
        let spec = parse_panjer_check(text, None).unwrap();
        assert_eq!(spec.n_batches, 10);
        assert_eq!(spec.n_samples, 1000);
        assert_eq!(spec.target_mass, 0.999);
        assert!(matches!(spec.severity, SeverityDistribution::Pareto { .. }));
        assert!(parse_panjer_check("name = \"x\"\nbogus = 1", None).is_err());
    }
}
