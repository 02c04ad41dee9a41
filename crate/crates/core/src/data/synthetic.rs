//! Seeded synthetic cement-kiln plant with known emission dynamics.
//!
//! Every process parameter is `nominal * (1 + u)` where the relative
//! deviation `u` is the sum of a fast AR(1) component, a slow AR(1)
//! component, a shared plant-load factor and any active regime offset.
//!
//! Ground truth, in terms of the deviations `u`:
//!
//! * NOx carries process memory: the linear drive, the thermal drive and the
//!   fuel-fan interaction are each convolved with the lag kernel before
//!   entering `NOX = 300 (1 + lin) + 40 exp(2.5 theta) + 6000 prod`.
//!   Most of the linear memory sits on the non-controllable temperatures; the
//!   thermal term is what the decision variables move, and it dominates under
//!   stress episodes.
//! * CO is a memoryless map of the combustion air/fuel balance with heavy noise.
//! * CO2 follows the slow raw-meal parameters with little noise.
//! * CLINKER_FLOW and FCAO are instantaneous KPI responses.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dataset::{channel, ColumnMeta, TimeSeriesDataset};
use crate::error::{Error, Result};

/// 2020-01-01T00:00 in epoch minutes.
pub const DEFAULT_START_MINUTE: i64 = 26_297_280;

/// Default lag depth of the NOx memory kernel.
pub const DEFAULT_KERNEL_LAGS: usize = 20;

struct ParamProfile {
    name: &'static str,
    unit: &'static str,
    nominal: f64,
    fast_sd: f64,
    slow_sd: f64,
    load: f64,
}

const fn p(name: &'static str, unit: &'static str, nominal: f64, fast_sd: f64, slow_sd: f64, load: f64) -> ParamProfile {
    ParamProfile { name, unit, nominal, fast_sd, slow_sd, load }
}

// The first seven are the controller's decision variables, in controller order.
const CATALOG: [ParamProfile; 12] = [
    p("primary_air", "m3/h", 28_000.0, 0.030, 0.005, 0.006),
    p("cooling_air", "m3/h", 210_000.0, 0.025, 0.005, 0.0075),
    p("preheater_id_fan", "%", 72.0, 0.025, 0.005, 0.0075),
    p("calciner_fuel", "t/h", 14.5, 0.030, 0.005, 0.009),
    p("kiln_fuel", "t/h", 9.8, 0.030, 0.005, 0.0075),
    p("kiln_drive", "kW", 410.0, 0.020, 0.005, 0.0045),
    p("kiln_inlet_pressure", "mbar", 4.2, 0.040, 0.005, 0.0045),
    p("raw_meal_feed", "t/h", 245.0, 0.002, 0.020, 0.009),
    p("rm_lsf", "-", 96.0, 0.002, 0.006, 0.0),
    p("rm_silica_modulus", "-", 2.5, 0.010, 0.010, 0.0),
    p("tertiary_air_temp", "degC", 880.0, 0.012, 0.002, 0.006),
    p("cyclone4_temp", "degC", 860.0, 0.012, 0.002, 0.0075),
];

const FAST_AR: f64 = 0.85;
const SLOW_AR: f64 = 0.998;
const LOAD_AR: f64 = 0.97;

/// Minimum number of parameters; the emission physics references all twelve
/// catalogue entries. Extra parameters are nuisance inputs named `aux_<k>`.
pub const MIN_PARAMS: usize = CATALOG.len();

/// Ground-truth emission physics, shared by the generator and by oracles.
#[derive(Debug, Clone, Copy)]
pub struct PlantPhysics;

impl PlantPhysics {
    /// Linear NOx sensitivities to the relative deviation of each catalogue parameter.
    pub const NOX_LINEAR: [f64; 12] = [0.3, -0.15, 0.25, 0.4, 0.2, 0.05, 0.1, -1.5, 1.0, 0.0, 9.0, 8.0];
    pub const NOX_BASE: f64 = 300.0;
    pub const THERMAL_SCALE: f64 = 40.0;
    pub const THERMAL_GAIN: f64 = 2.5;
    pub const INTERACTION: f64 = 6000.0;

    pub fn nominal(idx: usize) -> f64 {
        CATALOG.get(idx).map_or(100.0, |p| p.nominal)
    }

    pub fn name(idx: usize) -> String {
        CATALOG.get(idx).map_or_else(|| format!("aux_{}", idx - CATALOG.len()), |p| p.name.to_string())
    }

    pub fn unit(idx: usize) -> &'static str {
        CATALOG.get(idx).map_or("-", |p| p.unit)
    }

    fn deviations(values: &[f64]) -> [f64; 12] {
        let mut u = [0.0; 12];
        for (j, slot) in u.iter_mut().enumerate() {
            *slot = values[j] / CATALOG[j].nominal - 1.0;
        }
        u
    }

    fn linear_drive(u: &[f64; 12]) -> f64 {
        Self::NOX_LINEAR.iter().zip(u).map(|(a, x)| a * x).sum()
    }

    fn thermal_drive(u: &[f64; 12]) -> f64 {
        3.0 * u[4] + 2.5 * u[0] - 1.0 * u[1]
    }

    fn interaction(u: &[f64; 12]) -> f64 {
        u[3] * u[2]
    }

    fn nox_from_drives(lin: f64, theta: f64, prod: f64) -> f64 {
        Self::NOX_BASE * (1.0 + lin) + Self::THERMAL_SCALE * (Self::THERMAL_GAIN * theta).exp() + Self::INTERACTION * prod
    }

    /// Noise-free NOx once the given parameter values have been held long
    /// enough to fill the lag kernel (the kernel sums to one).
    pub fn steady_state_nox(values: &[f64]) -> f64 {
        let u = Self::deviations(values);
        Self::nox_from_drives(Self::linear_drive(&u), Self::thermal_drive(&u), Self::interaction(&u))
    }

    pub fn co(values: &[f64]) -> f64 {
        let u = Self::deviations(values);
        250.0 * (-4.0 * (u[0] + 0.5 * u[2] - 0.6 * u[3])).exp()
    }

    pub fn co2(values: &[f64]) -> f64 {
        let u = Self::deviations(values);
        300.0 * (1.0 + 0.5 * u[7] + 0.3 * u[8])
    }

    pub fn free_lime(values: &[f64]) -> f64 {
        let u = Self::deviations(values);
        1.0 - 2.0 * (u[4] + u[3]) + 2.0 * u[8]
    }

    pub fn clinker_flow(values: &[f64]) -> f64 {
        let u = Self::deviations(values);
        0.62 * CATALOG[7].nominal * (1.0 + u[7]) * (1.0 + 0.02 * u[5] + 0.01 * u[4])
    }

    /// Sign of d NOx / d x_j at nominal operation for the first seven
    /// (controllable) parameters.
    pub fn nox_sensitivity_at_nominal(idx: usize) -> f64 {
        let mut values: Vec<f64> = CATALOG.iter().map(|p| p.nominal).collect();
        let h = 1e-6 * values[idx];
        values[idx] += h;
        let up = Self::steady_state_nox(&values);
        values[idx] -= 2.0 * h;
        let down = Self::steady_state_nox(&values);
        (up - down) / (2.0 * h)
    }
}

/// Per-channel Gaussian noise standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSigma {
    pub nox: f64,
    pub co: f64,
    pub co2: f64,
    pub clinker_flow: f64,
    pub fcao: f64,
}

impl Default for NoiseSigma {
    fn default() -> Self {
        Self { nox: 4.0, co: 14.0, co2: 0.6, clinker_flow: 0.3, fcao: 0.05 }
    }
}

impl NoiseSigma {
    pub fn zero() -> Self {
        Self { nox: 0.0, co: 0.0, co2: 0.0, clinker_flow: 0.0, fcao: 0.0 }
    }
}

/// Relative parameter offsets applied over `[start, end)` minutes from the start.
#[derive(Debug, Clone, PartialEq)]
pub struct Regime {
    pub start: usize,
    pub end: usize,
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPlantSpec {
    pub seed: u64,
    pub duration_minutes: usize,
    pub n_params: usize,
    /// Weights over lags 0..=K minutes.
    pub nox_memory_kernel: Vec<f64>,
    pub noise_sigma: NoiseSigma,
    pub regime_schedule: Vec<Regime>,
    /// `[start, end)` minute offsets whose rows are dropped, like telemetry outages.
    pub gap_schedule: Vec<(usize, usize)>,
    /// Fraction of minutes spent in high-NOx stress episodes.
    pub stress_fraction: f64,
    /// Scales every stochastic parameter component; zero yields constant parameters.
    pub variability: f64,
    pub start_minute: i64,
}

impl Default for SyntheticPlantSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            duration_minutes: 50_000,
            n_params: MIN_PARAMS,
            nox_memory_kernel: exponential_kernel(DEFAULT_KERNEL_LAGS, 8.0),
            noise_sigma: NoiseSigma::default(),
            regime_schedule: Vec::new(),
            gap_schedule: Vec::new(),
            stress_fraction: 0.05,
            variability: 1.0,
            start_minute: DEFAULT_START_MINUTE,
        }
    }
}

impl SyntheticPlantSpec {
    pub fn with_seed(seed: u64, duration_minutes: usize) -> Self {
        Self { seed, duration_minutes, ..Self::default() }
    }
}

/// `exp(-k / decay)` for k = 0..=lags, normalised to sum to one.
pub fn exponential_kernel(lags: usize, decay: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..=lags).map(|k| (-(k as f64) / decay).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Relative offsets that push the thermal drive into the stress regime.
fn stress_offsets(n_params: usize) -> Vec<f64> {
    let mut off = vec![0.0; n_params];
    off[4] = 0.14; // kiln_fuel
    off[0] = 0.12; // primary_air
    off
}

pub fn generate_synthetic_plant(spec: &SyntheticPlantSpec) -> Result<TimeSeriesDataset> {
    if spec.duration_minutes == 0 {
        return Err(Error::invalid("duration must be positive"));
    }
    if spec.nox_memory_kernel.is_empty() {
        return Err(Error::invalid("NOx memory kernel is empty"));
    }
    if spec.nox_memory_kernel.iter().any(|w| !w.is_finite()) {
        return Err(Error::invalid("NOx memory kernel has non-finite weights"));
    }
    if spec.n_params < MIN_PARAMS {
        return Err(Error::invalid(format!("synthetic plant needs at least {MIN_PARAMS} parameters")));
    }
    if !(0.0..1.0).contains(&spec.stress_fraction) {
        return Err(Error::invalid("stress_fraction must lie in [0, 1)"));
    }
    for r in &spec.regime_schedule {
        if r.offsets.len() != spec.n_params {
            return Err(Error::invalid("regime offset vector length differs from n_params"));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_params;
    let warmup = spec.nox_memory_kernel.len() - 1;
    let total = spec.duration_minutes + warmup;

    let profile = |j: usize| -> (f64, f64, f64) {
        CATALOG.get(j).map_or((0.02, 0.01, 0.0), |p| (p.fast_sd, p.slow_sd, p.load))
    };
    let fast_innov = (1.0 - FAST_AR * FAST_AR).sqrt();
    let slow_innov = (1.0 - SLOW_AR * SLOW_AR).sqrt();
    let load_innov = (1.0 - LOAD_AR * LOAD_AR).sqrt();

    // relative deviations, rows include the kernel warm-up
    let mut dev = Array2::<f64>::zeros((total, n));
    let mut fast = vec![0.0; n];
    let mut slow = vec![0.0; n];
    let mut load = 0.0;
    let v = spec.variability;
    for t in 0..total {
        let z: f64 = StandardNormal.sample(&mut rng);
        load = LOAD_AR * load + load_innov * z;
        for j in 0..n {
            let (fsd, ssd, ld) = profile(j);
            let zf: f64 = StandardNormal.sample(&mut rng);
            let zs: f64 = StandardNormal.sample(&mut rng);
            fast[j] = FAST_AR * fast[j] + fast_innov * fsd * zf;
            slow[j] = SLOW_AR * slow[j] + slow_innov * ssd * zs;
            dev[[t, j]] = v * (fast[j] + slow[j] + ld * load);
        }
    }

    for r in &spec.regime_schedule {
        for t in r.start.min(spec.duration_minutes)..r.end.min(spec.duration_minutes) {
            for j in 0..n {
                dev[[t + warmup, j]] += r.offsets[j];
            }
        }
    }

    let target = (spec.stress_fraction * spec.duration_minutes as f64).round() as usize;
    if target > 0 {
        let off = stress_offsets(n);
        let mut stressed = vec![false; total];
        let mut count = 0;
        while count < target {
            let len = rng.random_range(120..=360usize).min(total);
            let start = rng.random_range(0..=total - len);
            for flag in &mut stressed[start..start + len] {
                if !*flag {
                    *flag = true;
                    count += 1;
                }
            }
        }
        for (t, _) in stressed.iter().enumerate().filter(|(_, s)| **s) {
            for j in 0..n {
                dev[[t, j]] += off[j];
            }
        }
    }

    let mut values = Array2::<f64>::zeros((total, n));
    for t in 0..total {
        for j in 0..n {
            values[[t, j]] = PlantPhysics::nominal(j) * (1.0 + dev[[t, j]]);
        }
    }

    let drives: Vec<(f64, f64, f64)> = (0..total)
        .map(|t| {
            let mut u = [0.0; 12];
            for (j, slot) in u.iter_mut().enumerate() {
                *slot = dev[[t, j]];
            }
            (PlantPhysics::linear_drive(&u), PlantPhysics::thermal_drive(&u), PlantPhysics::interaction(&u))
        })
        .collect();

    let kernel = &spec.nox_memory_kernel;
    let sigma = spec.noise_sigma;
    let mut keep_rows = Vec::with_capacity(spec.duration_minutes);
    let mut timestamps = Vec::with_capacity(spec.duration_minutes);
    let (mut nox, mut co, mut co2, mut clk, mut fcao) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for m in 0..spec.duration_minutes {
        let t = m + warmup;
        let (mut lin, mut theta, mut prod) = (0.0, 0.0, 0.0);
        for (k, w) in kernel.iter().enumerate() {
            let (a, b, c) = drives[t - k];
            lin += w * a;
            theta += w * b;
            prod += w * c;
        }
        let row: Vec<f64> = values.row(t).to_vec();
        // noise draws happen for every minute so gap placement never shifts the stream
        let mut noise = |s: f64| -> f64 {
            let z: f64 = StandardNormal.sample(&mut rng);
            s * z
        };
        let nox_v = PlantPhysics::nox_from_drives(lin, theta, prod) + noise(sigma.nox);
        let co_v = PlantPhysics::co(&row) + noise(sigma.co);
        let co2_v = PlantPhysics::co2(&row) + noise(sigma.co2);
        let clk_v = PlantPhysics::clinker_flow(&row) + noise(sigma.clinker_flow);
        let fcao_v = PlantPhysics::free_lime(&row) + noise(sigma.fcao);
        if spec.gap_schedule.iter().any(|&(s, e)| m >= s && m < e) {
            continue;
        }
        keep_rows.push(t);
        timestamps.push(spec.start_minute + m as i64);
        // concentrations are floored at 1 PPM so they stay strictly positive
        nox.push(nox_v.max(1.0));
        co.push(co_v.max(1.0));
        co2.push(co2_v.max(1.0));
        clk.push(clk_v.max(0.0));
        fcao.push(fcao_v.max(0.0));
    }

    let params = values.select(ndarray::Axis(0), &keep_rows);
    let meta = (0..n).map(|j| ColumnMeta::new(PlantPhysics::name(j), PlantPhysics::unit(j))).collect();
    TimeSeriesDataset::from_complete(
        timestamps,
        meta,
        params,
        vec![
            (ColumnMeta::new(channel::NOX, "PPM"), nox),
            (ColumnMeta::new(channel::CO, "PPM"), co),
            (ColumnMeta::new(channel::CO2, "PPM"), co2),
            (ColumnMeta::new(channel::CLINKER_FLOW, "t/h"), clk),
            (ColumnMeta::new(channel::FCAO, "wt%"), fcao),
        ],
    )
}

/// Mean absolute consecutive difference of a series.
pub fn mean_abs_step(series: &[f64]) -> f64 {
    if series.len() < 2 {
        return 0.0;
    }
    series.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (series.len() - 1) as f64
}
