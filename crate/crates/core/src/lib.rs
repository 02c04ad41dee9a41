//! Emission surrogates, temporal features, forecasting, constrained NOx
//! control, attribution and SNCR accounting for cement kiln data.

pub mod controller;
pub mod data;
pub mod econ;
pub mod error;
pub mod explain;
pub mod forecast;
pub mod metrics;
pub mod preprocess;
pub mod stats;
pub mod surrogate;
pub mod temporal;

pub use data::{ColumnMeta, TimeSeriesDataset};
pub use error::{Error, Result};
pub use controller::{ControllerConfig, DecisionVector};
pub use econ::{EconConfig, EconSummary};
pub use explain::ShapleyAttribution;
pub use forecast::ForecastConfig;
pub use metrics::MetricReport;
pub use preprocess::{PhysicalRuleSet, PreprocessConfig};
pub use surrogate::{Predictor, Regressor, RegressorSpec};
