//! Controlled corruption of a clean dataset, with a log of what was injected,
//! so cleaning stages can be checked against exact expected counts.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::{ColumnRef, TimeSeriesDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FaultSpec {
    pub seed: u64,
    /// Fraction of rows re-emitted as exact duplicates right after the original.
    pub duplicate_fraction: f64,
    /// Fraction of rows with one cell blanked.
    pub missing_fraction: f64,
    /// Fraction of rows with one non-negative parameter flipped negative.
    pub negative_fraction: f64,
    /// Parameters eligible for negative injection; empty means all.
    pub negative_columns: Vec<String>,
}

impl Default for FaultSpec {
    fn default() -> Self {
        Self { seed: 0, duplicate_fraction: 0.0, missing_fraction: 0.0, negative_fraction: 0.0, negative_columns: Vec::new() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InjectionLog {
    pub duplicates: usize,
    pub missing: usize,
    pub negatives: usize,
}

/// Corrupts disjoint sets of source rows so each fault is removed by exactly
/// one cleaning stage.
pub fn inject_faults(clean: &TimeSeriesDataset, spec: &FaultSpec) -> Result<(TimeSeriesDataset, InjectionLog)> {
    let n = clean.n_rows();
    let counts = [spec.duplicate_fraction, spec.missing_fraction, spec.negative_fraction]
        .map(|f| (f * n as f64).round() as usize);
    if counts.iter().sum::<usize>() > n {
        return Err(Error::invalid("fault fractions exceed the number of rows"));
    }
    let neg_cols: Vec<usize> = if spec.negative_columns.is_empty() {
        (0..clean.n_params()).collect()
    } else {
        spec.negative_columns
            .iter()
            .map(|c| clean.param_index(c).ok_or_else(|| Error::MissingColumn(c.clone())))
            .collect::<Result<_>>()?
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let (dup_rows, rest) = order.split_at(counts[0]);
    let (miss_rows, rest) = rest.split_at(counts[1]);
    let neg_rows = &rest[..counts[2]];

    let mut out = clean.clone();
    let columns = out.columns();
    for &r in miss_rows {
        let col = columns[rng.random_range(0..columns.len())];
        match col {
            ColumnRef::Param(j) => {
                out.param_valid[[r, j]] = false;
                out.params[[r, j]] = f64::NAN;
            }
            ColumnRef::Channel(c) => {
                out.channels[c].valid[r] = false;
                out.channels[c].values[r] = f64::NAN;
            }
        }
    }
    for &r in neg_rows {
        let j = neg_cols[rng.random_range(0..neg_cols.len())];
        let v = out.params[[r, j]];
        out.params[[r, j]] = -(v.abs().max(1.0));
    }

    let mut is_dup = vec![false; n];
    for &r in dup_rows {
        is_dup[r] = true;
    }
    let mut rows = Vec::with_capacity(n + counts[0]);
    for (r, dup) in is_dup.iter().enumerate() {
        rows.push(r);
        if *dup {
            rows.push(r);
        }
    }
    let out = out.select_rows(&rows);
    Ok((out, InjectionLog { duplicates: counts[0], missing: counts[1], negatives: counts[2] }))
}
