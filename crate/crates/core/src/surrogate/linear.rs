use nalgebra::{DMatrix, DVector};
use ndarray::ArrayView2;

use crate::error::{Error, Result};

pub const LASSO_TOLERANCE: f64 = 1e-8;
pub const LASSO_MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub coef: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
}

struct Centered {
    x: DMatrix<f64>,
    y: DVector<f64>,
    x_mean: Vec<f64>,
    y_mean: f64,
}

fn center(x: ArrayView2<'_, f64>, y: &[f64]) -> Centered {
    let (n, p) = x.dim();
    let x_mean: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n as f64).collect();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let xc = DMatrix::from_fn(n, p, |i, j| x[[i, j]] - x_mean[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    Centered { x: xc, y: yc, x_mean, y_mean }
}

fn intercept(c: &Centered, coef: &[f64]) -> f64 {
    c.y_mean - c.x_mean.iter().zip(coef).map(|(m, b)| m * b).sum::<f64>()
}

/// Least squares with an intercept, optionally ridge-penalised. Solves the
/// centred normal equations `(XcᵀXc + λI) b = Xcᵀyc` by Cholesky after
/// diagonal rescaling. With `λ = 0` a (near-)singular system is an error.
pub fn fit_least_squares(x: ArrayView2<'_, f64>, y: &[f64], lambda: f64) -> Result<LinearModel> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::invalid("linear models need at least two rows"));
    }
    let c = center(x, y);
    let gram = c.x.tr_mul(&c.x);
    let rhs = c.x.tr_mul(&c.y);
    let p = gram.nrows();
    let singular = || {
        Error::Numerical(
            "normal equations are singular (collinear or constant features); run correlation pruning first or use RIDGE"
                .into(),
        )
    };
    let scale: Vec<f64> = (0..p)
        .map(|j| {
            let d = gram[(j, j)] + lambda;
            if d > 0.0 {
                Ok(d.sqrt())
            } else if lambda > 0.0 {
                Ok(1.0)
            } else {
                Err(singular())
            }
        })
        .collect::<Result<_>>()?;
    let m = DMatrix::from_fn(p, p, |i, j| {
        let a = gram[(i, j)] + if i == j { lambda } else { 0.0 };
        a / (scale[i] * scale[j])
    });
    let b = DVector::from_fn(p, |i, _| rhs[i] / scale[i]);
    let chol = m.cholesky().ok_or_else(singular)?;
    if lambda == 0.0 {
        let l = chol.l_dirty();
        if (0..p).any(|i| l[(i, i)] * l[(i, i)] < 1e-10) {
            return Err(singular());
        }
    }
    let z = chol.solve(&b);
    let coef: Vec<f64> = (0..p).map(|j| z[j] / scale[j]).collect();
    let intercept = intercept(&c, &coef);
    Ok(LinearModel { coef, intercept })
}

/// Cyclic coordinate descent; stops once no coefficient moves by more than
/// [`LASSO_TOLERANCE`] in a sweep.
pub fn fit_lasso(x: ArrayView2<'_, f64>, y: &[f64], lambda: f64) -> Result<(LinearModel, usize)> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::invalid("linear models need at least two rows"));
    }
    let c = center(x, y);
    let p = c.x.ncols();
    let nf = n as f64;
    let cols: Vec<&[f64]> = (0..p).map(|j| &c.x.as_slice()[j * n..(j + 1) * n]).collect();
    let z: Vec<f64> = cols.iter().map(|col| col.iter().map(|v| v * v).sum::<f64>() / nf).collect();
    let mut beta = vec![0.0; p];
    let mut resid: Vec<f64> = c.y.iter().copied().collect();
    let mut sweeps = 0;
    while sweeps < LASSO_MAX_SWEEPS {
        sweeps += 1;
        let mut max_step = 0.0f64;
        for j in 0..p {
            if z[j] == 0.0 {
                continue;
            }
            let rho = cols[j].iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / nf + z[j] * beta[j];
            let updated = soft_threshold(rho, lambda) / z[j];
            let step = updated - beta[j];
            if step != 0.0 {
                for (r, a) in resid.iter_mut().zip(cols[j]) {
                    *r -= a * step;
                }
                beta[j] = updated;
                max_step = max_step.max(step.abs());
            }
        }
        if max_step <= LASSO_TOLERANCE {
            break;
        }
    }
    let intercept = intercept(&c, &beta);
    Ok((LinearModel { coef: beta, intercept }, sweeps))
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}
