//! Design matrices from the instantaneous process state (EP) or from a
//! `tau`-minute history of it (EPH), and the sweep over `tau`.

use std::time::Instant;

use ndarray::Array2;

use crate::data::{segment_continuous, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::metrics::MetricReport;
use crate::surrogate::{Design, Predictor, Regressor, RegressorSpec};

pub const DEFAULT_TAU: usize = 20;

/// Rows are one minute apart inside a window.
const WINDOW_STEP_MINUTES: i64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub tau: usize,
    pub n_params: usize,
}

impl WindowSpec {
    pub fn dimension(&self) -> usize {
        self.n_params * (self.tau + 1)
    }
}

/// `name` for the current minute, `name@t-k` for lag `k`.
pub fn lag_name(param: &str, lag: usize) -> String {
    if lag == 0 {
        param.to_string()
    } else {
        format!("{param}@t-{lag}")
    }
}

pub fn build_ep_matrix(dataset: &TimeSeriesDataset, target: &str) -> Result<Design> {
    let y = dataset.channel_values(target)?.to_vec();
    if dataset.has_missing() {
        return Err(Error::invalid("design matrices need a dataset without missing values"));
    }
    Ok(Design {
        x: dataset.params().to_owned(),
        y,
        feature_names: dataset.param_names(),
        timestamps: dataset.timestamps().to_vec(),
    })
}

/// Rows whose whole `tau`-minute history lies inside one gap-free segment.
pub fn admissible_rows(dataset: &TimeSeriesDataset, tau: usize) -> Vec<usize> {
    segment_continuous(dataset, WINDOW_STEP_MINUTES)
        .into_iter()
        .filter(|s| s.len() > tau)
        .flat_map(|s| s.start + tau..=s.end)
        .collect()
}

/// EPH design over the given anchor rows; each row's history must be
/// admissible for `tau`.
fn eph_rows(dataset: &TimeSeriesDataset, y_all: &[f64], tau: usize, rows: &[usize]) -> Design {
    let n = dataset.n_params();
    let params = dataset.params();
    let mut x = Array2::zeros((rows.len(), n * (tau + 1)));
    for (i, &r) in rows.iter().enumerate() {
        for k in 0..=tau {
            let src = params.row(r - k);
            for j in 0..n {
                x[[i, k * n + j]] = src[j];
            }
        }
    }
    let names = dataset.param_names();
    let feature_names = (0..=tau).flat_map(|k| names.iter().map(move |p| lag_name(p, k))).collect();
    Design {
        x,
        y: rows.iter().map(|&r| y_all[r]).collect(),
        feature_names,
        timestamps: rows.iter().map(|&r| dataset.timestamps()[r]).collect(),
    }
}

fn check_windowable(dataset: &TimeSeriesDataset) -> Result<()> {
    if dataset.has_missing() {
        return Err(Error::invalid("design matrices need a dataset without missing values"));
    }
    if !dataset.is_strictly_increasing() {
        return Err(Error::invalid("lag windows need strictly increasing timestamps; run the consistency check first"));
    }
    Ok(())
}

/// Columns ordered `[PP(t), PP(t-1), ..., PP(t-tau)]`. The first `tau` rows
/// of every segment are dropped; segments no longer than `tau` contribute
/// nothing.
pub fn build_eph_matrix(dataset: &TimeSeriesDataset, target: &str, tau: usize) -> Result<Design> {
    let y_all = dataset.channel_values(target)?;
    check_windowable(dataset)?;
    let rows = admissible_rows(dataset, tau);
    if rows.is_empty() {
        return Err(Error::invalid(format!("tau = {tau} is not shorter than any gap-free segment")));
    }
    Ok(eph_rows(dataset, y_all, tau, &rows))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauPoint {
    pub tau: usize,
    pub mape: f64,
    pub mae: f64,
    pub r2: f64,
    pub dimension: usize,
    pub train_seconds: f64,
}

/// One model per `tau`, all trained and tested on the same rows: those
/// admissible for the largest `tau`, split chronologically so the last
/// `test_fraction` of them forms the test set.
pub fn sweep_tau(
    dataset: &TimeSeriesDataset,
    target: &str,
    spec: &RegressorSpec,
    taus: &[usize],
    test_fraction: f64,
) -> Result<Vec<TauPoint>> {
    let Some(&max_tau) = taus.iter().max() else {
        return Err(Error::invalid("empty tau grid"));
    };
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid("test fraction must lie in (0, 1)"));
    }
    let y_all = dataset.channel_values(target)?;
    check_windowable(dataset)?;
    let rows = admissible_rows(dataset, max_tau);
    let n_test = (rows.len() as f64 * test_fraction).round() as usize;
    if n_test == 0 || n_test >= rows.len() {
        return Err(Error::invalid(format!("{} admissible rows are too few to split", rows.len())));
    }
    let (train_rows, test_rows) = rows.split_at(rows.len() - n_test);
    taus.iter()
        .map(|&tau| {
            let train = eph_rows(dataset, y_all, tau, train_rows);
            let test = eph_rows(dataset, y_all, tau, test_rows);
            let clock = Instant::now();
            let model = Regressor::fit_design(spec, &train)?;
            let train_seconds = clock.elapsed().as_secs_f64();
            let m = MetricReport::evaluate(&test.y, &model.predict_rows(test.x.view()))?;
            Ok(TauPoint {
                tau,
                mape: m.mape,
                mae: m.mae,
                r2: m.r2,
                dimension: WindowSpec { tau, n_params: dataset.n_params() }.dimension(),
                train_seconds,
            })
        })
        .collect()
}

pub fn tau_curve_csv(points: &[TauPoint]) -> String {
    let mut s = String::from("tau,mape,mae,d,seconds\n");
    for p in points {
        s.push_str(&format!("{},{},{},{},{}\n", p.tau, p.mape, p.mae, p.dimension, p.train_seconds));
    }
    s
}
