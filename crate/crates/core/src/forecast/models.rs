use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use super::samples::ArSamples;
use crate::error::{Error, Result};
use crate::surrogate::{Predictor, Regressor, RegressorSpec};

/// Maps look-back windows to forecast trajectories.
pub trait Forecaster: Sync {
    fn lookback(&self) -> usize;

    fn horizon(&self) -> usize;

    /// One trajectory row per window row.
    fn forecast_batch(&self, windows: ArrayView2<'_, f64>) -> Array2<f64>;

    fn forecast(&self, window: &[f64]) -> Result<Vec<f64>> {
        check_window(window, self.lookback())?;
        let w = ArrayView2::from_shape((1, window.len()), window).expect("contiguous window");
        Ok(self.forecast_batch(w).row(0).to_vec())
    }
}

fn check_window(window: &[f64], lookback: usize) -> Result<()> {
    if window.len() != lookback {
        return Err(Error::invalid(format!("window has {} values, model expects {lookback}", window.len())));
    }
    Ok(())
}

/// Feature names of a look-back window, oldest first.
pub fn window_feature_names(lookback: usize) -> Vec<String> {
    (0..lookback).map(|j| format!("y@t-{}", lookback - j)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForecastKind {
    SingleStep,
    MultiStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastModel {
    pub kind: ForecastKind,
    pub lookback: usize,
    pub horizon: usize,
    /// One regressor for single-step; `horizon` of them for multi-step.
    pub models: Vec<Regressor>,
}

pub fn fit_single_step(spec: &RegressorSpec, samples: &ArSamples, horizon: usize) -> Result<ForecastModel> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let names = window_feature_names(samples.lookback());
    let y = samples.y.column(0).to_vec();
    let model = Regressor::fit(spec, samples.x.view(), &y, &names)?;
    Ok(ForecastModel { kind: ForecastKind::SingleStep, lookback: samples.lookback(), horizon, models: vec![model] })
}

/// Direct strategy: sub-model `k` is trained on the step-`k` target alone.
pub fn fit_multi_step(spec: &RegressorSpec, samples: &ArSamples) -> Result<ForecastModel> {
    let names = window_feature_names(samples.lookback());
    let models = (0..samples.horizon())
        .into_par_iter()
        .map(|k| Regressor::fit(spec, samples.x.view(), &samples.y.column(k).to_vec(), &names))
        .collect::<Result<Vec<_>>>()?;
    Ok(ForecastModel { kind: ForecastKind::MultiStep, lookback: samples.lookback(), horizon: samples.horizon(), models })
}

/// Single-step recursion: each prediction is appended to the window and the
/// oldest value dropped. `perturbation[k]`, if present, is added to the
/// step-`k` prediction before it is fed back.
pub fn recursive_forecast_perturbed(
    model: &dyn Predictor,
    window: &[f64],
    horizon: usize,
    perturbation: &[f64],
) -> Vec<f64> {
    let mut buf = window.to_vec();
    let mut out = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let p = model.predict_row(&buf) + perturbation.get(k).copied().unwrap_or(0.0);
        out.push(p);
        buf.remove(0);
        buf.push(p);
    }
    out
}

pub fn recursive_forecast(model: &ForecastModel, window: &[f64], horizon: usize) -> Result<Vec<f64>> {
    if model.kind != ForecastKind::SingleStep {
        return Err(Error::invalid("recursive forecasting needs a single-step model"));
    }
    check_window(window, model.lookback)?;
    Ok(recursive_forecast_perturbed(&model.models[0], window, horizon, &[]))
}

pub fn forecast_multi_step(model: &ForecastModel, window: &[f64]) -> Result<Vec<f64>> {
    if model.kind != ForecastKind::MultiStep {
        return Err(Error::invalid("direct forecasting needs a multi-step model"));
    }
    check_window(window, model.lookback)?;
    Ok(model.models.iter().map(|m| m.predict_row(window)).collect())
}

impl Forecaster for ForecastModel {
    fn lookback(&self) -> usize {
        self.lookback
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn forecast_batch(&self, windows: ArrayView2<'_, f64>) -> Array2<f64> {
        let n = windows.nrows();
        let mut out = Array2::zeros((n, self.horizon));
        match self.kind {
            ForecastKind::MultiStep => {
                for (k, m) in self.models.iter().enumerate() {
                    out.column_mut(k).assign(&ndarray::Array1::from(m.predict_rows(windows)));
                }
            }
            ForecastKind::SingleStep => {
                let mut buf = windows.to_owned();
                let l = self.lookback;
                for k in 0..self.horizon {
                    let p = self.models[0].predict_rows(buf.view());
                    for (i, v) in p.into_iter().enumerate() {
                        out[[i, k]] = v;
                        for j in 1..l {
                            buf[[i, j - 1]] = buf[[i, j]];
                        }
                        buf[[i, l - 1]] = v;
                    }
                }
            }
        }
        out
    }
}

/// Repeats the last observed value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Persistence {
    pub lookback: usize,
    pub horizon: usize,
}

impl Forecaster for Persistence {
    fn lookback(&self) -> usize {
        self.lookback
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn forecast_batch(&self, windows: ArrayView2<'_, f64>) -> Array2<f64> {
        let last = windows.column(self.lookback - 1);
        Array2::from_shape_fn((windows.nrows(), self.horizon), |(i, _)| last[i])
    }
}

/// First-order propagation of local one-step errors through a recursion:
/// `e_k = sum_{i<=k} (prod_{j=i+1..k} J_j) eps_i`, with `jacobians[j]` the
/// sensitivity of step `j`'s output to step `j-1`'s.
pub fn compound_error(jacobians: &[f64], local_errors: &[f64]) -> Vec<f64> {
    let h = local_errors.len();
    (0..h)
        .map(|k| {
            (0..=k)
                .map(|i| {
                    let gain: f64 = (i + 1..=k).map(|j| jacobians[j]).product();
                    gain * local_errors[i]
                })
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::samples::make_ar_samples;
    use crate::data::Segment;
    use crate::surrogate::LinearModel;

    #[test]
    fn ar1_closed_form() {
        let m = LinearModel { coef: vec![0.5], intercept: 0.0 };
        let traj = recursive_forecast_perturbed(&m, &[1.0], 3, &[]);
        assert_eq!(traj, vec![0.5, 0.25, 0.125]);
    }

    #[test]
    fn injected_error_decays_geometrically() {
        let a = 0.5;
        let m = LinearModel { coef: vec![0.0, 0.0, a], intercept: 2.0 };
        let w = [3.0, 1.0, 4.0];
        let base = recursive_forecast_perturbed(&m, &w, 8, &[]);
        let eps = 0.3;
        let hit = recursive_forecast_perturbed(&m, &w, 8, &[eps]);
        for k in 0..8 {
            assert!((hit[k] - base[k] - a.powi(k as i32) * eps).abs() < 1e-12);
        }
    }

    #[test]
    fn compound_error_matches_recursion_for_many_local_errors() {
        let a = -0.8;
        let m = LinearModel { coef: vec![a], intercept: 1.0 };
        let eps = [0.1, -0.2, 0.05, 0.3, 0.0, -0.1];
        let base = recursive_forecast_perturbed(&m, &[2.0], eps.len(), &[]);
        let hit = recursive_forecast_perturbed(&m, &[2.0], eps.len(), &eps);
        let predicted = compound_error(&[a; 6], &eps);
        for k in 0..eps.len() {
            assert!((hit[k] - base[k] - predicted[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_series_gives_flat_forecasts() {
        let s = vec![7.0; 200];
        let samples = make_ar_samples(&s, 5, 4, &[Segment { start: 0, end: 199 }]).unwrap();
        let spec = RegressorSpec::ridge(1e-3);
        let single = fit_single_step(&spec, &samples, 4).unwrap();
        let multi = fit_multi_step(&spec, &samples).unwrap();
        assert_eq!(multi.models.len(), 4);
        for v in recursive_forecast(&single, &[7.0; 5], 4).unwrap() {
            assert!((v - 7.0).abs() < 1e-6);
        }
        for v in forecast_multi_step(&multi, &[7.0; 5]).unwrap() {
            assert!((v - 7.0).abs() < 1e-6);
        }
        assert!(recursive_forecast(&single, &[7.0; 4], 4).is_err());
        assert!(recursive_forecast(&multi, &[7.0; 5], 4).is_err());
    }

    #[test]
    fn batch_matches_single_window_paths() {
        let s: Vec<f64> = (0..300).map(|i| 50.0 + 10.0 * ((i as f64) / 7.0).sin()).collect();
        let samples = make_ar_samples(&s, 6, 5, &[Segment { start: 0, end: 299 }]).unwrap();
        let spec = RegressorSpec::ridge(0.1);
        let single = fit_single_step(&spec, &samples, 5).unwrap();
        let multi = fit_multi_step(&spec, &samples).unwrap();
        let batch_s = single.forecast_batch(samples.x.view());
        let batch_m = multi.forecast_batch(samples.x.view());
        for i in [0, 17, 120] {
            let w = samples.x.row(i).to_vec();
            assert_eq!(batch_s.row(i).to_vec(), recursive_forecast(&single, &w, 5).unwrap());
            assert_eq!(batch_m.row(i).to_vec(), forecast_multi_step(&multi, &w).unwrap());
        }
    }

    #[test]
    fn step_k_submodel_is_a_direct_fit() {
        let s: Vec<f64> = (0..200).map(|i| ((i * 37) % 23) as f64 + 1.0).collect();
        let samples = make_ar_samples(&s, 4, 3, &[Segment { start: 0, end: 199 }]).unwrap();
        let spec = RegressorSpec::ridge(0.5);
        let multi = fit_multi_step(&spec, &samples).unwrap();
        let direct = Regressor::fit(&spec, samples.x.view(), &samples.y.column(2).to_vec(), &window_feature_names(4)).unwrap();
        assert_eq!(multi.models[2], direct);
    }
}
