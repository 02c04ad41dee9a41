//! Constrained NOx minimisation over the seven controllable kiln parameters:
//! plausibility penalties, differential evolution inside a ±delta box with a
//! fuel ceiling, KPI validation and nearest-history similarity.

mod optimizer;
mod penalty;
mod trials;
mod validate;

pub use optimizer::{audit, bounds, optimize, ControlProblem, ControllerConfig, OptimizationOutcome, Violation};
pub use penalty::{PenaltyModel, DEFAULT_RIDGE};
pub use trials::{run_trials, BandSummary, ControllerModels, Scenario, TrialRecord, TrialSummary, STRESS_THRESHOLD_PPM};
pub use validate::{
    kpi_validate, manhattan_similarity, KpiFailure, KpiModels, KpiOutcome, SimilarityIndex, FCAO_RANGE,
    MAX_FLOW_CHANGE_PERCENT,
};

use crate::error::{Error, Result};

pub const N_DV: usize = 7;

/// Raw-meal columns held fixed during optimisation and fed to the KPI models.
pub const RAW_MEAL_COLUMNS: [&str; 3] = ["raw_meal_feed", "rm_lsf", "rm_silica_modulus"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionVector {
    pub primary_air: f64,
    pub cooling_air: f64,
    pub preheater_id_fan: f64,
    pub calciner_fuel: f64,
    pub kiln_fuel: f64,
    pub kiln_drive: f64,
    pub kiln_inlet_pressure: f64,
}

impl DecisionVector {
    pub const NAMES: [&'static str; N_DV] = [
        "primary_air",
        "cooling_air",
        "preheater_id_fan",
        "calciner_fuel",
        "kiln_fuel",
        "kiln_drive",
        "kiln_inlet_pressure",
    ];
    pub const UNITS: [&'static str; N_DV] = ["m3/h", "m3/h", "%", "t/h", "t/h", "kW", "mbar"];
    pub const FAN: usize = 2;
    pub const CALCINER_FUEL: usize = 3;
    pub const KILN_FUEL: usize = 4;

    pub fn from_array(v: [f64; N_DV]) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("decision vector entries must be finite"));
        }
        if !(0.0..=100.0).contains(&v[Self::FAN]) {
            return Err(Error::invalid(format!("preheater_id_fan = {} is not a percentage", v[Self::FAN])));
        }
        Ok(Self {
            primary_air: v[0],
            cooling_air: v[1],
            preheater_id_fan: v[2],
            calciner_fuel: v[3],
            kiln_fuel: v[4],
            kiln_drive: v[5],
            kiln_inlet_pressure: v[6],
        })
    }

    pub fn to_array(&self) -> [f64; N_DV] {
        [
            self.primary_air,
            self.cooling_air,
            self.preheater_id_fan,
            self.calciner_fuel,
            self.kiln_fuel,
            self.kiln_drive,
            self.kiln_inlet_pressure,
        ]
    }

    pub fn fuel_sum(v: &[f64; N_DV]) -> f64 {
        v[Self::CALCINER_FUEL] + v[Self::KILN_FUEL]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn array_round_trip_and_checks() {
        let a = [28000.0, 210000.0, 72.0, 14.5, 9.8, 410.0, 4.2];
        assert_eq!(DecisionVector::from_array(a).unwrap().to_array(), a);
        let mut bad = a;
        bad[2] = 120.0;
        assert!(DecisionVector::from_array(bad).is_err());
        bad[2] = f64::NAN;
        assert!(DecisionVector::from_array(bad).is_err());
        assert_eq!(DecisionVector::fuel_sum(&a), 24.3);
    }
}
