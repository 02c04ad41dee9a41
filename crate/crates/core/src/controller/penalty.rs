use nalgebra::DMatrix;
use ndarray::ArrayView2;

use crate::error::{Error, Result};

pub const DEFAULT_RIDGE: f64 = 1e-6;

/// Squared Mahalanobis distance on the standardized scale:
/// `z = (x - mean) / std`, `P(x) = zᵀ (C + λI)⁻¹ z` with `C` the covariance
/// (a correlation matrix) of the standardized history. Evaluated as
/// `‖L⁻¹z‖²` with `LLᵀ = C + λI`, a sum of squares.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyModel {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub ridge: f64,
    /// Row-major lower-triangular `L⁻¹`.
    pub whitening: Vec<f64>,
}

impl PenaltyModel {
    pub fn fit(history: ArrayView2<'_, f64>, ridge: f64) -> Result<Self> {
        let (n, p) = history.dim();
        if p == 0 {
            return Err(Error::invalid("penalty model needs at least one variable"));
        }
        if n < p + 1 {
            return Err(Error::invalid(format!("penalty model for {p} variables needs at least {} rows, got {n}", p + 1)));
        }
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(Error::invalid("ridge must be finite and non-negative"));
        }
        let nf = n as f64;
        let mean: Vec<f64> = (0..p).map(|j| history.column(j).sum() / nf).collect();
        let scale: Vec<f64> = (0..p)
            .map(|j| {
                let var = history.column(j).iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / nf;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let z = DMatrix::from_fn(n, p, |i, j| (history[[i, j]] - mean[j]) / scale[j]);
        let mut c = z.tr_mul(&z) / nf;
        for i in 0..p {
            for j in 0..i {
                let s = 0.5 * (c[(i, j)] + c[(j, i)]);
                c[(i, j)] = s;
                c[(j, i)] = s;
            }
            c[(i, i)] += ridge;
        }
        let rank_deficient = || Error::Numerical("history covariance is singular; use a positive ridge".into());
        let chol = c.cholesky().ok_or_else(rank_deficient)?;
        if ridge == 0.0 {
            let l = chol.l_dirty();
            if (0..p).any(|i| l[(i, i)] * l[(i, i)] < 1e-12) {
                return Err(rank_deficient());
            }
        }
        let l_inv = chol
            .l()
            .solve_lower_triangular(&DMatrix::identity(p, p))
            .ok_or_else(rank_deficient)?;
        let whitening = (0..p * p).map(|k| if k % p <= k / p { l_inv[(k / p, k % p)] } else { 0.0 }).collect();
        Ok(Self { mean, scale, ridge, whitening })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn penalty(&self, x: &[f64]) -> f64 {
        let p = self.dim();
        let z = self.standardize(x);
        (0..p)
            .map(|i| {
                let w: f64 = self.whitening[i * p..=i * p + i].iter().zip(&z).map(|(a, b)| a * b).sum();
                w * w
            })
            .sum()
    }
}
