//! Run configuration: a sectioned key-value TOML file. Every section is
//! optional; unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use kilnopt_core::controller::{ControllerConfig, DEFAULT_RIDGE};
use kilnopt_core::econ::EconConfig;
use kilnopt_core::forecast::{ForecastConfig, SplitConfig};
use kilnopt_core::surrogate::{GbtParams, RegressorSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub generate: GenerateSection,
    pub preprocess: PreprocessSection,
    pub train: TrainSection,
    pub benchmark: BenchmarkSection,
    pub sweep_tau: SweepSection,
    pub forecast: ForecastSection,
    pub controller: ControllerSection,
    pub explain: ExplainSection,
    pub econ: EconSection,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerateSection {
    pub minutes: usize,
    pub n_params: usize,
    pub stress_fraction: f64,
    pub variability: f64,
}

impl Default for GenerateSection {
    fn default() -> Self {
        Self { minutes: 50_000, n_params: kilnopt_core::data::MIN_PARAMS, stress_fraction: 0.05, variability: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessSection {
    /// `column = min,max` lines; defaults derive from column units.
    pub rules: Option<PathBuf>,
    pub target: String,
    pub lower_percentile: f64,
    pub upper_percentile: f64,
    pub correlation_threshold: f64,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        Self {
            rules: None,
            target: "NOX".into(),
            lower_percentile: 0.01,
            upper_percentile: 99.99,
            correlation_threshold: 0.8,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub target: String,
    /// Process-history length; 0 trains on the instantaneous state.
    pub tau: usize,
    pub test_fraction: f64,
    pub cv_folds: usize,
    /// `shuffled` or `chronological`
    pub cv_mode: String,
    pub spec: Option<toml::Table>,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self { target: "NOX".into(), tau: 0, test_fraction: 0.2, cv_folds: 5, cv_mode: "chronological".into(), spec: None }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkSection {
    pub target: String,
    pub tau: usize,
    pub n_seeds: usize,
    pub test_fraction: f64,
    /// `None` benchmarks one default model per family.
    pub specs: Option<Vec<toml::Table>>,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        Self { target: "NOX".into(), tau: 0, n_seeds: 5, test_fraction: 0.2, specs: None }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub target: String,
    pub taus: Vec<usize>,
    pub test_fraction: f64,
    pub spec: Option<toml::Table>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { target: "NOX".into(), taus: (0..=30).step_by(5).collect(), test_fraction: 0.2, spec: None }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecastSection {
    pub channels: Vec<String>,
    pub lookback: usize,
    pub horizon: usize,
    pub n_events: usize,
    pub level: f64,
    pub train_fraction: f64,
    pub validation_fraction: f64,
    pub buffer_minutes: i64,
    pub spec: Option<toml::Table>,
}

impl Default for ForecastSection {
    fn default() -> Self {
        let f = ForecastConfig::default();
        Self {
            channels: vec!["CO".into(), "NOX".into(), "CO2".into()],
            lookback: f.lookback,
            horizon: f.horizon,
            n_events: f.n_events,
            level: f.level,
            train_fraction: f.split.train_fraction,
            validation_fraction: f.split.validation_fraction,
            buffer_minutes: f.split.buffer_minutes,
            spec: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerSection {
    pub delta: f64,
    pub w_corr: f64,
    pub w_operate: f64,
    pub iterations: usize,
    pub population: usize,
    pub hard_penalty: f64,
    pub mutation: f64,
    pub crossover: f64,
    pub ridge: f64,
    pub trials: usize,
    /// `normal`, `stress` or `both`
    pub scenario: String,
    /// Leading fraction of the preprocessed rows used to fit the models.
    pub train_fraction: f64,
    /// Unfiltered history for the correlation penalty; defaults to the input.
    pub history: Option<PathBuf>,
    pub spec: Option<toml::Table>,
}

impl Default for ControllerSection {
    fn default() -> Self {
        let c = ControllerConfig::default();
        Self {
            delta: c.delta,
            w_corr: c.w_corr,
            w_operate: c.w_operate,
            iterations: c.iterations,
            population: c.population,
            hard_penalty: c.hard_penalty,
            mutation: c.mutation,
            crossover: c.crossover,
            ridge: DEFAULT_RIDGE,
            trials: 500,
            scenario: "both".into(),
            train_fraction: 0.8,
            history: None,
            spec: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExplainSection {
    pub target: String,
    pub rows: usize,
    pub background: usize,
    pub spec: Option<toml::Table>,
}

impl Default for ExplainSection {
    fn default() -> Self {
        Self { target: "NOX".into(), rows: 200, background: 64, spec: None }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct EconSection {
    pub nsr: f64,
    pub m_nh3: f64,
    pub m_no2: f64,
    pub nh3_price: f64,
    pub eta_normal: f64,
    pub eta_stress: f64,
    pub stress_threshold: f64,
    pub molar_volume_l: f64,
    pub flue_gas_nm3_per_kg: f64,
}

impl Default for EconSection {
    fn default() -> Self {
        let e = EconConfig::default();
        Self {
            nsr: e.nsr,
            m_nh3: e.m_nh3,
            m_no2: e.m_no2,
            nh3_price: e.nh3_price,
            eta_normal: e.eta_normal,
            eta_stress: e.eta_stress,
            stress_threshold: e.stress_threshold,
            molar_volume_l: e.molar_volume_l,
            flue_gas_nm3_per_kg: e.flue_gas_nm3_per_kg,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Relative paths resolve against `base`, the config file's directory.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| anyhow::Error::new(ConfigError(e.to_string())))?;
        for p in [
            &mut cfg.input,
            &mut cfg.preprocess.rules,
            &mut cfg.controller.history,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
            if !p.exists() {
                bail!(ConfigError(format!("{} does not exist", p.display())));
            }
        }
        Ok(cfg)
    }

    /// Canonical text used for the manifest hash.
    pub fn canonical(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}

/// A configuration that cannot be used as written.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Converts a spec table such as `{ family = "GBT", n_rounds = 200 }`.
pub fn spec_from_table(table: &toml::Table) -> Result<RegressorSpec> {
    let pairs: Vec<(String, String)> = table
        .iter()
        .map(|(k, v)| {
            let text = match v {
                toml::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            (k.clone(), text)
        })
        .collect();
    Ok(RegressorSpec::from_pairs(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?)
}

pub fn spec_or(table: &Option<toml::Table>, default: RegressorSpec) -> Result<RegressorSpec> {
    table.as_ref().map_or(Ok(default), spec_from_table)
}

pub fn default_gbt() -> RegressorSpec {
    RegressorSpec::gbt(GbtParams::default())
}

pub fn controller_gbt() -> RegressorSpec {
    RegressorSpec::gbt(GbtParams { n_rounds: 200, learning_rate: 0.1, max_depth: Some(5), min_samples_leaf: 20 })
}

impl ForecastSection {
    pub fn to_config(&self, seed: u64) -> Result<ForecastConfig> {
        let base = ForecastConfig::default();
        let cfg = ForecastConfig {
            lookback: self.lookback,
            horizon: self.horizon,
            split: SplitConfig {
                train_fraction: self.train_fraction,
                validation_fraction: self.validation_fraction,
                buffer_minutes: self.buffer_minutes,
            },
            n_events: self.n_events,
            level: self.level,
            regressor: spec_or(&self.spec, base.regressor)?,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ControllerSection {
    pub fn to_config(&self, seed: u64) -> Result<ControllerConfig> {
        let cfg = ControllerConfig {
            delta: self.delta,
            w_corr: self.w_corr,
            w_operate: self.w_operate,
            iterations: self.iterations,
            population: self.population,
            hard_penalty: self.hard_penalty,
            mutation: self.mutation,
            crossover: self.crossover,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl EconSection {
    pub fn to_config(&self) -> Result<EconConfig> {
        let cfg = EconConfig {
            nsr: self.nsr,
            m_nh3: self.m_nh3,
            m_no2: self.m_no2,
            nh3_price: self.nh3_price,
            eta_normal: self.eta_normal,
            eta_stress: self.eta_stress,
            stress_threshold: self.stress_threshold,
            molar_volume_l: self.molar_volume_l,
            flue_gas_nm3_per_kg: self.flue_gas_nm3_per_kg,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
