use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::models::{fit_single_step, Forecaster};
use super::samples::{admissible_anchors, chronological_split, clip_segments, samples_at, ArSamples, SplitConfig};
use crate::data::segment_timestamps;
use crate::error::{Error, Result};
use crate::metrics::MetricReport;
use crate::stats::quantile_sorted;
use crate::surrogate::RegressorSpec;

/// Steps averaged to define the plateau of a horizon curve.
pub const PLATEAU_STEPS: usize = 10;
/// Relative distance to the plateau at which the horizon is reached.
pub const PLATEAU_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonCurve {
    /// Mean absolute percentage error per step, index 0 = one minute ahead.
    pub per_step_ape: Vec<f64>,
    /// 1-based step at which the curve first comes within tolerance of its plateau.
    pub effective_horizon: usize,
    pub n_events: usize,
    pub warning: Option<String>,
}

impl HorizonCurve {
    pub fn from_curve(per_step_ape: Vec<f64>, n_events: usize) -> Self {
        let effective_horizon = effective_horizon(&per_step_ape);
        Self { per_step_ape, effective_horizon, n_events, warning: None }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,mape\n");
        for (k, v) in self.per_step_ape.iter().enumerate() {
            s.push_str(&format!("{},{}\n", k + 1, v));
        }
        s
    }
}

pub fn effective_horizon(curve: &[f64]) -> usize {
    if curve.is_empty() {
        return 0;
    }
    let tail = &curve[curve.len().saturating_sub(PLATEAU_STEPS)..];
    let plateau = tail.iter().sum::<f64>() / tail.len() as f64;
    curve.iter().position(|c| (c - plateau).abs() <= PLATEAU_TOLERANCE * plateau.abs()).map_or(curve.len(), |k| k + 1)
}

/// Draws up to `n_events` test samples without replacement and averages the
/// per-step absolute percentage error. Events are visited in anchor order
/// so the sums do not depend on the draw order.
pub fn evaluate_horizon(model: &dyn Forecaster, test: &ArSamples, n_events: usize, seed: u64) -> Result<HorizonCurve> {
    if test.is_empty() {
        return Err(Error::invalid("no test events available"));
    }
    if test.lookback() != model.lookback() || test.horizon() < model.horizon() {
        return Err(Error::invalid("test samples do not match the model's look-back and horizon"));
    }
    let (chosen, warning) = if n_events >= test.len() {
        let warning = (n_events > test.len())
            .then(|| format!("only {} admissible events, {n_events} requested; using all", test.len()));
        ((0..test.len()).collect::<Vec<_>>(), warning)
    } else {
        let mut idx = sample(&mut ChaCha8Rng::seed_from_u64(seed), test.len(), n_events).into_vec();
        idx.sort_unstable();
        (idx, None)
    };
    let events = test.select(&chosen);
    let pred = model.forecast_batch(events.x.view());
    let h = model.horizon();
    let mut sums = vec![0.0; h];
    for i in 0..events.len() {
        for k in 0..h {
            let t = events.y[[i, k]];
            if t == 0.0 {
                return Err(Error::Numerical(format!("zero target at anchor {}", events.anchors[i] + k)));
            }
            sums[k] += ((pred[[i, k]] - t) / t).abs();
        }
    }
    let curve = sums.into_iter().map(|s| 100.0 * s / events.len() as f64).collect();
    let mut out = HorizonCurve::from_curve(curve, events.len());
    out.warning = warning;
    Ok(out)
}

/// Per-step residual quantiles (truth minus forecast) at `(1 -/+ level) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bands {
    pub level: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bands {
    pub fn apply(&self, trajectory: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let lo = trajectory.iter().zip(&self.lower).map(|(p, l)| p + l).collect();
        let hi = trajectory.iter().zip(&self.upper).map(|(p, u)| p + u).collect();
        (lo, hi)
    }

    /// Fraction of (event, step) pairs whose truth lies inside the band.
    pub fn coverage(&self, model: &dyn Forecaster, samples: &ArSamples) -> f64 {
        let pred = model.forecast_batch(samples.x.view());
        let mut inside = 0usize;
        for i in 0..samples.len() {
            for k in 0..self.lower.len() {
                let r = samples.y[[i, k]] - pred[[i, k]];
                if r >= self.lower[k] && r <= self.upper[k] {
                    inside += 1;
                }
            }
        }
        inside as f64 / (samples.len() * self.lower.len()) as f64
    }
}

pub fn uncertainty_bands(model: &dyn Forecaster, validation: &ArSamples, level: f64) -> Result<Bands> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("confidence level must lie in (0, 1)"));
    }
    if validation.is_empty() {
        return Err(Error::invalid("band calibration needs validation samples"));
    }
    let pred = model.forecast_batch(validation.x.view());
    let h = model.horizon();
    let (mut lower, mut upper) = (Vec::with_capacity(h), Vec::with_capacity(h));
    for k in 0..h {
        let mut r: Vec<f64> = (0..validation.len()).map(|i| validation.y[[i, k]] - pred[[i, k]]).collect();
        r.sort_unstable_by(f64::total_cmp);
        lower.push(quantile_sorted(&r, (1.0 - level) / 2.0));
        upper.push(quantile_sorted(&r, (1.0 + level) / 2.0));
    }
    Ok(Bands { level, lower, upper })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LookbackPoint {
    pub lookback: usize,
    pub mape: f64,
    pub mae: f64,
}

/// One single-step model per look-back, each scored one minute ahead on the
/// same test anchors (those admissible for the longest look-back).
pub fn sweep_lookback(
    series: &[f64],
    timestamps: &[i64],
    lookbacks: &[usize],
    spec: &RegressorSpec,
    split: &SplitConfig,
) -> Result<Vec<LookbackPoint>> {
    let Some(&max_l) = lookbacks.iter().max() else {
        return Err(Error::invalid("empty look-back grid"));
    };
    if lookbacks.contains(&0) {
        return Err(Error::invalid("look-back must be at least 1"));
    }
    let s = chronological_split(timestamps, split)?;
    let segments = segment_timestamps(timestamps, 1);
    let train_anchors = admissible_anchors(&clip_segments(&segments, 0..s.validation.end), max_l, 1);
    let test_anchors = admissible_anchors(&clip_segments(&segments, s.test.clone()), max_l, 1);
    if train_anchors.is_empty() || test_anchors.is_empty() {
        return Err(Error::invalid(format!("look-back {max_l} leaves no training or test samples")));
    }
    lookbacks
        .iter()
        .map(|&l| {
            let train = samples_at(series, &train_anchors, l, 1);
            let test = samples_at(series, &test_anchors, l, 1);
            let model = fit_single_step(spec, &train, 1)?;
            let pred = model.forecast_batch(test.x.view());
            let m = MetricReport::evaluate(&test.y.column(0).to_vec(), &pred.column(0).to_vec())?;
            Ok(LookbackPoint { lookback: l, mape: m.mape, mae: m.mae })
        })
        .collect()
}
