//! Univariate autoregressive forecasting of emission channels: recursive
//! single-step and direct multi-step forecasters, horizon evaluation over
//! sampled test events, look-back sweep and residual-quantile bands.

mod evaluate;
mod models;
mod samples;

pub use evaluate::{
    effective_horizon, evaluate_horizon, sweep_lookback, uncertainty_bands, Bands, HorizonCurve, LookbackPoint,
    PLATEAU_STEPS, PLATEAU_TOLERANCE,
};
pub use models::{
    compound_error, fit_multi_step, fit_single_step, forecast_multi_step, recursive_forecast,
    recursive_forecast_perturbed, window_feature_names, ForecastKind, ForecastModel, Forecaster, Persistence,
};
pub use samples::{
    admissible_anchors, chronological_split, clip_segments, make_ar_samples, samples_at, split_samples, ArSamples,
    ChronoSplit, SampleSplit, SplitConfig,
};

use crate::data::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::surrogate::{GbtParams, RegressorSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastConfig {
    pub lookback: usize,
    pub horizon: usize,
    pub split: SplitConfig,
    pub n_events: usize,
    pub level: f64,
    pub regressor: RegressorSpec,
    pub seed: u64,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            lookback: 25,
            horizon: 60,
            split: SplitConfig::default(),
            n_events: 3000,
            level: 0.90,
            regressor: RegressorSpec::gbt(GbtParams {
                n_rounds: 100,
                learning_rate: 0.1,
                max_depth: Some(4),
                min_samples_leaf: 20,
            }),
            seed: 0,
        }
    }
}

impl ForecastConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lookback == 0 || self.horizon == 0 {
            return Err(Error::invalid("look-back and horizon must be at least 1"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::invalid("confidence level must lie in (0, 1)"));
        }
        if self.n_events == 0 {
            return Err(Error::invalid("n_events must be at least 1"));
        }
        self.regressor.validate()
    }
}

/// Both forecasters for one channel, evaluated on the same test events.
#[derive(Debug, Clone)]
pub struct ChannelForecast {
    pub channel: String,
    pub single: ForecastModel,
    pub multi: ForecastModel,
    pub single_curve: HorizonCurve,
    pub multi_curve: HorizonCurve,
    /// Bands of the multi-step model, if validation samples were available.
    pub bands: Option<Bands>,
    pub samples: SampleSplit,
}

pub fn run_channel(dataset: &TimeSeriesDataset, channel: &str, config: &ForecastConfig) -> Result<ChannelForecast> {
    config.validate()?;
    let series = dataset.channel_values(channel)?;
    if dataset.channel(channel).is_some_and(|c| c.valid.iter().any(|v| !v)) {
        return Err(Error::invalid(format!("channel `{channel}` has missing values; preprocess first")));
    }
    let samples = split_samples(series, dataset.timestamps(), config.lookback, config.horizon, &config.split)?;
    let single = fit_single_step(&config.regressor, &samples.fit, config.horizon)?;
    let multi = fit_multi_step(&config.regressor, &samples.fit)?;
    let single_curve = evaluate_horizon(&single, &samples.test, config.n_events, config.seed)?;
    let multi_curve = evaluate_horizon(&multi, &samples.test, config.n_events, config.seed)?;
    let bands = samples.validation.as_ref().map(|v| uncertainty_bands(&multi, v, config.level)).transpose()?;
    Ok(ChannelForecast { channel: channel.to_string(), single, multi, single_curve, multi_curve, bands, samples })
}
