//! SNCR ammonia accounting: NOx mass from minute-level concentration and
//! clinker flow, the controller reduction factor, and the savings chain.

use std::fmt::Write as _;

use crate::data::{channel, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::stats::CompensatedSum;

pub const MINUTES_PER_YEAR: f64 = 525_600.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EconConfig {
    pub nsr: f64,
    /// g/mol
    pub m_nh3: f64,
    /// g/mol
    pub m_no2: f64,
    /// USD per tonne NH3.
    pub nh3_price: f64,
    pub eta_normal: f64,
    pub eta_stress: f64,
    /// PPM; concentrations at or below use `eta_normal`.
    pub stress_threshold: f64,
    /// Nm³ per mol.
    pub molar_volume_l: f64,
    /// Specific flue-gas volume, Nm³ per kg clinker. An assumed plant constant.
    pub flue_gas_nm3_per_kg: f64,
}

impl Default for EconConfig {
    fn default() -> Self {
        Self {
            nsr: 1.2,
            m_nh3: 17.03,
            m_no2: 46.01,
            nh3_price: 450.0,
            eta_normal: 0.34,
            eta_stress: 0.64,
            stress_threshold: 500.0,
            molar_volume_l: 22.414,
            flue_gas_nm3_per_kg: 0.54,
        }
    }
}

impl EconConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.nsr) {
            return Err(Error::invalid("NSR must be positive"));
        }
        if !(positive(self.m_nh3) && positive(self.m_no2) && positive(self.molar_volume_l)) {
            return Err(Error::invalid("molar masses and molar volume must be positive"));
        }
        if !(self.nh3_price >= 0.0 && self.nh3_price.is_finite()) {
            return Err(Error::invalid("ammonia price must be non-negative"));
        }
        for eta in [self.eta_normal, self.eta_stress] {
            if !(0.0..1.0).contains(&eta) {
                return Err(Error::invalid(format!("reduction factor {eta} outside [0, 1)")));
            }
        }
        if !positive(self.stress_threshold) {
            return Err(Error::invalid("stress threshold must be positive"));
        }
        if !positive(self.flue_gas_nm3_per_kg) {
            return Err(Error::invalid("flue-gas volume must be positive"));
        }
        Ok(())
    }

    /// mg/Nm³ of NO2-equivalent per PPM.
    pub fn ppm_to_mg_per_nm3(&self) -> f64 {
        self.m_no2 / self.molar_volume_l
    }

    pub fn eta(&self, concentration: f64) -> f64 {
        if concentration <= self.stress_threshold {
            self.eta_normal
        } else {
            self.eta_stress
        }
    }
}

/// kg NH3 per kg NOx removed.
pub fn alpha_nh3(config: &EconConfig) -> f64 {
    config.nsr * config.m_nh3 / config.m_no2
}

/// NOx intensity in mg per kg clinker for a concentration in PPM.
pub fn nox_intensity(ppm: f64, config: &EconConfig) -> f64 {
    ppm * config.ppm_to_mg_per_nm3() * config.flue_gas_nm3_per_kg
}

/// mg/min from PPM and clinker flow in t/h.
pub fn nox_mass_flow(concentration: &[f64], clinker_t_per_h: &[f64], config: &EconConfig) -> Result<Vec<f64>> {
    if concentration.len() != clinker_t_per_h.len() {
        return Err(Error::invalid("concentration and clinker-flow series differ in length"));
    }
    concentration
        .iter()
        .zip(clinker_t_per_h)
        .map(|(&c, &f)| {
            if !(f > 0.0 && f.is_finite()) || !c.is_finite() {
                return Err(Error::invalid(format!("non-physical sample: {c} PPM at {f} t/h")));
            }
            Ok(nox_intensity(c, config) * f * 1000.0 / 60.0)
        })
        .collect()
}

pub fn apply_controller_reduction(concentration: &[f64], config: &EconConfig) -> Vec<f64> {
    concentration.iter().map(|&c| c * (1.0 - config.eta(c))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EconSummary {
    /// t/yr
    pub clinker: f64,
    /// t/yr
    pub nox_base: f64,
    pub nox_ctrl: f64,
    /// kg per t clinker
    pub e_base: f64,
    pub e_ctrl: f64,
    pub delta_e_nox: f64,
    /// t/yr
    pub delta_m_nox: f64,
    pub alpha: f64,
    /// kg per t clinker
    pub delta_e_nh3: f64,
    /// t/yr
    pub delta_m_nh3: f64,
    pub savings_usd_per_t: f64,
    pub savings_usd_per_year: f64,
}

impl EconSummary {
    /// The arithmetic tail from annual tonnages.
    pub fn from_aggregates(nox_base: f64, nox_ctrl: f64, clinker: f64, config: &EconConfig) -> Result<Self> {
        config.validate()?;
        if !(clinker > 0.0 && clinker.is_finite()) || !(nox_base >= 0.0 && nox_ctrl >= 0.0) {
            return Err(Error::invalid("annual tonnages must be non-negative and clinker positive"));
        }
        let e_base = nox_base * 1000.0 / clinker;
        let e_ctrl = nox_ctrl * 1000.0 / clinker;
        let delta_m_nox = nox_base - nox_ctrl;
        let alpha = alpha_nh3(config);
        let delta_e_nh3 = alpha * (e_base - e_ctrl);
        let delta_m_nh3 = alpha * delta_m_nox;
        Ok(Self {
            clinker,
            nox_base,
            nox_ctrl,
            e_base,
            e_ctrl,
            delta_e_nox: e_base - e_ctrl,
            delta_m_nox,
            alpha,
            delta_e_nh3,
            delta_m_nh3,
            savings_usd_per_t: delta_e_nh3 / 1000.0 * config.nh3_price,
            savings_usd_per_year: delta_m_nh3 * config.nh3_price,
        })
    }

    pub fn fields(&self) -> [(&'static str, &'static str, f64); 12] {
        [
            ("M_clk", "t/yr", self.clinker),
            ("M_NOx_base", "t/yr", self.nox_base),
            ("M_NOx_ctrl", "t/yr", self.nox_ctrl),
            ("E_NOx_base", "kg/t", self.e_base),
            ("E_NOx_ctrl", "kg/t", self.e_ctrl),
            ("dE_NOx", "kg/t", self.delta_e_nox),
            ("dM_NOx", "t/yr", self.delta_m_nox),
            ("alpha_NH3", "kg/kg", self.alpha),
            ("dE_NH3", "kg/t", self.delta_e_nh3),
            ("dM_NH3", "t/yr", self.delta_m_nh3),
            ("savings", "USD/t", self.savings_usd_per_t),
            ("savings", "USD/yr", self.savings_usd_per_year),
        ]
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        for (name, unit, v) in self.fields() {
            let _ = writeln!(s, "{name:<12}{v:>16.6} {unit}");
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("quantity,unit,value\n");
        for (name, unit, v) in self.fields() {
            let _ = writeln!(s, "{name},{unit},{v}");
        }
        s
    }
}

/// Integrates base and reduced NOx mass over the dataset and scales to a
/// year. Every row counts as one minute of operation, so the annual figure
/// is the observed mean rate times the minutes in a year.
pub fn annual_summary(dataset: &TimeSeriesDataset, config: &EconConfig) -> Result<EconSummary> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::invalid("cannot annualize an empty dataset"));
    }
    let conc = dataset.channel_values(channel::NOX)?;
    let flow = dataset.channel_values(channel::CLINKER_FLOW)?;
    let base = nox_mass_flow(conc, flow, config)?;
    let ctrl = nox_mass_flow(&apply_controller_reduction(conc, config), flow, config)?;
    let total = |v: &mut dyn Iterator<Item = f64>| {
        let mut s = CompensatedSum::new();
        v.for_each(|x| s.add(x));
        s.total()
    };
    let scale = MINUTES_PER_YEAR / dataset.n_rows() as f64;
    // mg -> t
    let nox_base = total(&mut base.iter().copied()) * 1e-9 * scale;
    let nox_ctrl = total(&mut ctrl.iter().copied()) * 1e-9 * scale;
    // t/h over one minute
    let clinker = total(&mut flow.iter().map(|f| f / 60.0)) * scale;
    EconSummary::from_aggregates(nox_base, nox_ctrl, clinker, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_values() {
        let mut c = EconConfig::default();
        assert!((alpha_nh3(&c) - 0.444).abs() < 5e-4);
        c.nsr = 1.0;
        assert_eq!(alpha_nh3(&c), 17.03 / 46.01);
    }

    #[test]
    fn reduction_factor_branches() {
        let c = EconConfig::default();
        let out = apply_controller_reduction(&[400.0, 600.0, 500.0], &c);
        assert!((out[0] - 264.0).abs() < 1e-9);
        assert!((out[1] - 216.0).abs() < 1e-9);
        assert!((out[2] - 330.0).abs() < 1e-9);
    }

    #[test]
    fn mass_flow_is_linear_in_flow() {
        let c = EconConfig::default();
        let a = nox_mass_flow(&[300.0, 0.0], &[100.0, 100.0], &c).unwrap();
        let b = nox_mass_flow(&[300.0, 0.0], &[200.0, 200.0], &c).unwrap();
        assert_eq!(a[1], 0.0);
        assert!((b[0] - 2.0 * a[0]).abs() < 1e-9 * a[0]);
        assert!(nox_mass_flow(&[300.0], &[0.0], &c).is_err());
    }

    #[test]
    fn reference_aggregates() {
        let s = EconSummary::from_aggregates(838.39, 548.16, 2.35e6, &EconConfig::default()).unwrap();
        let close = |a: f64, b: f64| ((a - b) / b).abs() <= 0.005;
        assert!(close(s.delta_e_nox, 0.123));
        assert!(close(s.delta_m_nox, 290.23));
        assert!(close(s.delta_m_nh3, 128.9));
        assert!(close(s.savings_usd_per_t, 0.0246));
        assert!(close(s.savings_usd_per_year, 5.8e4));
        assert_eq!(s.delta_m_nh3, s.alpha * s.delta_m_nox);
    }

    #[test]
    fn config_checks() {
        assert!(EconConfig { eta_stress: 1.0, ..Default::default() }.validate().is_err());
        assert!(EconConfig { nsr: 0.0, ..Default::default() }.validate().is_err());
        assert!(EconConfig::default().validate().is_ok());
    }
}
