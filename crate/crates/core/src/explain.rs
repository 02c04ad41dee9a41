//! Exact Shapley attribution by enumerating every coalition, with the
//! interventional value function `g(S) = mean_b f(x_S, b_{~S})` over a fixed
//! background sample.

use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stats::pearson;
use crate::surrogate::Predictor;

pub const MAX_EXACT_FEATURES: usize = 15;
pub const MAX_BACKGROUND_ROWS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyAttribution {
    pub phi: Vec<f64>,
    /// Mean model output over the background.
    pub baseline: f64,
    pub prediction: f64,
}

impl ShapleyAttribution {
    /// `|Σφ - (f(x) - baseline)|`
    pub fn efficiency_gap(&self) -> f64 {
        (self.phi.iter().sum::<f64>() - (self.prediction - self.baseline)).abs()
    }
}

/// `s! (d-s-1)! / d!` for a coalition of size `s` not containing the feature.
pub fn coalition_weight(d: usize, s: usize) -> f64 {
    assert!(s < d, "coalition of size {s} cannot exclude a feature out of {d}");
    // 1 / (d * C(d-1, s)), with the binomial built incrementally
    let mut binom = 1.0;
    for i in 0..s {
        binom = binom * (d - 1 - i) as f64 / (i + 1) as f64;
    }
    1.0 / (d as f64 * binom)
}

/// Seeded uniform sample of at most `max_rows` rows, kept in original order.
pub fn sample_background(rows: ArrayView2<'_, f64>, max_rows: usize, seed: u64) -> Array2<f64> {
    let n = rows.nrows();
    if n <= max_rows {
        return rows.to_owned();
    }
    let mut idx = sample(&mut ChaCha8Rng::seed_from_u64(seed), n, max_rows).into_vec();
    idx.sort_unstable();
    rows.select(ndarray::Axis(0), &idx)
}

fn coalition_values(model: &dyn Predictor, x: &[f64], background: ArrayView2<'_, f64>) -> Vec<f64> {
    let d = x.len();
    let full = (1usize << d) - 1;
    let nb = background.nrows() as f64;
    (0..=full)
        .into_par_iter()
        .map(|mask| {
            if mask == full {
                return model.predict_row(x);
            }
            let mut row = vec![0.0; d];
            let mut total = 0.0;
            for b in background.rows() {
                for j in 0..d {
                    row[j] = if mask >> j & 1 == 1 { x[j] } else { b[j] };
                }
                total += model.predict_row(&row);
            }
            total / nb
        })
        .collect()
}

pub fn exact_shapley(model: &dyn Predictor, x: &[f64], background: ArrayView2<'_, f64>) -> Result<ShapleyAttribution> {
    let d = x.len();
    if d == 0 || d > MAX_EXACT_FEATURES {
        return Err(Error::invalid(format!(
            "exact enumeration supports 1..={MAX_EXACT_FEATURES} features, got {d}"
        )));
    }
    if model.n_features() != d || background.ncols() != d {
        return Err(Error::Schema(format!(
            "model takes {} features, point has {d}, background has {}",
            model.n_features(),
            background.ncols()
        )));
    }
    if background.nrows() == 0 {
        return Err(Error::invalid("background set is empty"));
    }
    let g = coalition_values(model, x, background);
    let weights: Vec<f64> = (0..d).map(|s| coalition_weight(d, s)).collect();
    let phi: Vec<f64> = (0..d)
        .map(|k| {
            let bit = 1usize << k;
            let mut terms: Vec<f64> = (0..g.len())
                .filter(|m| m & bit == 0)
                .map(|m| weights[m.count_ones() as usize] * (g[m | bit] - g[m]))
                .collect();
            // value order, so interchangeable features sum identical terms identically
            terms.sort_unstable_by(f64::total_cmp);
            terms.iter().sum::<f64>()
        })
        .collect();
    Ok(ShapleyAttribution { phi, baseline: g[0], prediction: g[g.len() - 1] })
}

/// Explains every row of `rows` against the same background.
pub fn explain_rows(model: &dyn Predictor, rows: ArrayView2<'_, f64>, background: ArrayView2<'_, f64>) -> Result<Vec<ShapleyAttribution>> {
    rows.rows().into_iter().map(|r| exact_shapley(model, &r.to_vec(), background)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalImpact {
    pub feature: usize,
    /// Pearson r between the feature's value and its φ across rows; `None`
    /// when either is constant.
    pub r: Option<f64>,
    pub sign: i8,
    pub mean_abs_phi: f64,
}

fn sign_of(r: Option<f64>) -> i8 {
    match r {
        Some(v) if v > 0.0 => 1,
        Some(v) if v < 0.0 => -1,
        _ => 0,
    }
}

/// Sign of the φ-vs-value relationship for each feature.
pub fn directional_impact(rows: ArrayView2<'_, f64>, attributions: &[ShapleyAttribution]) -> Result<Vec<DirectionalImpact>> {
    if rows.nrows() != attributions.len() {
        return Err(Error::invalid("one attribution per row is required"));
    }
    let d = rows.ncols();
    Ok((0..d)
        .map(|k| {
            let phi: Vec<f64> = attributions.iter().map(|a| a.phi[k]).collect();
            let r = pearson(rows.column(k).iter().copied(), phi.iter().copied());
            let mean_abs_phi = if phi.is_empty() { 0.0 } else { phi.iter().map(|v| v.abs()).sum::<f64>() / phi.len() as f64 };
            DirectionalImpact { feature: k, r, sign: sign_of(r), mean_abs_phi }
        })
        .collect())
}

/// Sign of the plain Pearson correlation between each feature and `target`,
/// for comparison with the SHAP directions.
pub fn correlation_signs(rows: ArrayView2<'_, f64>, target: &[f64]) -> Vec<(Option<f64>, i8)> {
    (0..rows.ncols())
        .map(|k| {
            let r = pearson(rows.column(k).iter().copied(), target.iter().copied());
            (r, sign_of(r))
        })
        .collect()
}
