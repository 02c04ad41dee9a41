//! MAPE, MAE and R² as used throughout the benchmark and forecast reports.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    /// Percent.
    pub mape: f64,
    /// Target units.
    pub mae: f64,
    pub r2: f64,
    pub n: usize,
}

impl MetricReport {
    pub fn evaluate(y_true: &[f64], y_pred: &[f64]) -> Result<Self> {
        Ok(Self { mape: mape(y_true, y_pred)?, mae: mae(y_true, y_pred)?, r2: r2(y_true, y_pred)?, n: y_true.len() })
    }
}

fn check_lengths(y_true: &[f64], y_pred: &[f64]) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(Error::invalid(format!("length mismatch: {} targets, {} predictions", y_true.len(), y_pred.len())));
    }
    if y_true.is_empty() {
        return Err(Error::invalid("metrics need at least one sample"));
    }
    Ok(())
}

/// Mean absolute percentage error, in percent. Any zero target is an error.
pub fn mape(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check_lengths(y_true, y_pred)?;
    if let Some(i) = y_true.iter().position(|&y| y == 0.0) {
        return Err(Error::Numerical(format!("MAPE undefined: target {i} is zero")));
    }
    let total: f64 = y_true.iter().zip(y_pred).map(|(t, p)| ((p - t) / t).abs()).sum();
    Ok(100.0 * total / y_true.len() as f64)
}

pub fn mae(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check_lengths(y_true, y_pred)?;
    let total: f64 = y_true.iter().zip(y_pred).map(|(t, p)| (p - t).abs()).sum();
    Ok(total / y_true.len() as f64)
}

/// 1 - RSS/TSS with TSS taken about the mean of `y_true`.
pub fn r2(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check_lengths(y_true, y_pred)?;
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let tss: f64 = y_true.iter().map(|t| (t - mean) * (t - mean)).sum();
    if tss == 0.0 {
        return Err(Error::Numerical("R² undefined: targets have zero variance".into()));
    }
    let rss: f64 = y_true.iter().zip(y_pred).map(|(t, p)| (p - t) * (p - t)).sum();
    Ok(1.0 - rss / tss)
}
