//! Shared fixtures for the benchmarks.

use kilnopt_core::controller::DecisionVector;
use kilnopt_core::data::{channel, generate_synthetic_plant, SyntheticPlantSpec};
use kilnopt_core::TimeSeriesDataset;
use ndarray::Array2;

/// Seeded synthetic plant of `minutes` rows.
pub fn plant(minutes: usize) -> TimeSeriesDataset {
    generate_synthetic_plant(&SyntheticPlantSpec { seed: 42, duration_minutes: minutes, ..SyntheticPlantSpec::default() })
        .expect("default synthetic spec is valid")
}

/// Decision-variable matrix, NOx target and feature names.
pub fn dv_problem(ds: &TimeSeriesDataset) -> (Array2<f64>, Vec<f64>, Vec<String>) {
    let x = ds.param_matrix(&DecisionVector::NAMES).expect("synthetic plant has every DV");
    let y = ds.channel_values(channel::NOX).expect("synthetic plant has NOX").to_vec();
    (x, y, DecisionVector::NAMES.iter().map(|s| s.to_string()).collect())
}
