use std::collections::HashSet;
use std::ops::Range;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Well-known emission and KPI channel names.
pub mod channel {
    pub const NOX: &str = "NOX";
    pub const CO: &str = "CO";
    pub const CO2: &str = "CO2";
    pub const CLINKER_FLOW: &str = "CLINKER_FLOW";
    pub const FCAO: &str = "FCAO";

    /// Channels recognised as emissions/KPIs when reading a CSV with the default schema.
    pub const KNOWN: [&str; 5] = [NOX, CO, CO2, CLINKER_FLOW, FCAO];
}

/// Column identity: bare name plus unit string, rendered as `name [unit]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnMeta {
    pub name: String,
    pub unit: String,
}

impl ColumnMeta {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Self { name: name.into(), unit: unit.into() }
    }

    pub fn label(&self) -> String {
        if self.unit.is_empty() {
            self.name.clone()
        } else {
            format!("{} [{}]", self.name, self.unit)
        }
    }

    /// Parses `name [unit]`; a label without brackets has an empty unit.
    pub fn parse_label(label: &str) -> Self {
        let label = label.trim();
        match (label.rfind('['), label.ends_with(']')) {
            (Some(open), true) => Self::new(label[..open].trim(), label[open + 1..label.len() - 1].trim()),
            _ => Self::new(label, ""),
        }
    }

    pub fn matches(&self, key: &str) -> bool {
        self.name == key || self.label() == key
    }
}

/// An emission or KPI channel with its own validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub meta: ColumnMeta,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl Channel {
    pub fn complete(meta: ColumnMeta, values: Vec<f64>) -> Self {
        let valid = vec![true; values.len()];
        Self { meta, values, valid }
    }
}

/// Reference to one numeric column of a dataset, parameter or channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnRef {
    Param(usize),
    Channel(usize),
}

/// Minute-resolution table of process parameters and emission channels.
///
/// Timestamps are minutes since the Unix epoch. Raw data may carry duplicate
/// timestamps until the consistency stage consolidates them, so construction
/// only requires them to be non-decreasing; [`TimeSeriesDataset::is_strictly_increasing`]
/// checks the stronger invariant needed by the temporal modules.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    pub(crate) timestamps: Vec<i64>,
    pub(crate) param_meta: Vec<ColumnMeta>,
    pub(crate) params: Array2<f64>,
    pub(crate) param_valid: Array2<bool>,
    pub(crate) channels: Vec<Channel>,
}

impl TimeSeriesDataset {
    pub fn new(
        timestamps: Vec<i64>,
        param_meta: Vec<ColumnMeta>,
        params: Array2<f64>,
        param_valid: Option<Array2<bool>>,
        channels: Vec<Channel>,
    ) -> Result<Self> {
        let n = timestamps.len();
        if params.nrows() != n || params.ncols() != param_meta.len() {
            return Err(Error::invalid(format!(
                "parameter matrix is {}x{}, expected {}x{}",
                params.nrows(),
                params.ncols(),
                n,
                param_meta.len()
            )));
        }
        let param_valid = param_valid.unwrap_or_else(|| Array2::from_elem(params.dim(), true));
        if param_valid.dim() != params.dim() {
            return Err(Error::invalid("validity mask shape differs from parameter matrix"));
        }
        for ch in &channels {
            if ch.values.len() != n || ch.valid.len() != n {
                return Err(Error::invalid(format!(
                    "channel `{}` has {} values, expected {n}",
                    ch.meta.name,
                    ch.values.len()
                )));
            }
        }
        let mut seen = HashSet::new();
        for name in param_meta.iter().map(|m| &m.name).chain(channels.iter().map(|c| &c.meta.name)) {
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("duplicate column name `{name}`")));
            }
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::invalid(format!("timestamps decrease at row {}", i + 1)));
        }
        Ok(Self { timestamps, param_meta, params, param_valid, channels })
    }

    /// Builds a dataset with every entry valid.
    pub fn from_complete(
        timestamps: Vec<i64>,
        param_meta: Vec<ColumnMeta>,
        params: Array2<f64>,
        channels: Vec<(ColumnMeta, Vec<f64>)>,
    ) -> Result<Self> {
        let channels = channels.into_iter().map(|(m, v)| Channel::complete(m, v)).collect();
        Self::new(timestamps, param_meta, params, None, channels)
    }

    pub fn n_rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn n_params(&self) -> usize {
        self.param_meta.len()
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn param_meta(&self) -> &[ColumnMeta] {
        &self.param_meta
    }

    pub fn param_names(&self) -> Vec<String> {
        self.param_meta.iter().map(|m| m.name.clone()).collect()
    }

    pub fn params(&self) -> ArrayView2<'_, f64> {
        self.params.view()
    }

    pub fn param_valid(&self) -> ArrayView2<'_, bool> {
        self.param_valid.view()
    }

    pub fn param_row(&self, row: usize) -> ArrayView1<'_, f64> {
        self.params.row(row)
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.param_meta.iter().position(|m| m.matches(name))
    }

    pub fn param_column(&self, idx: usize) -> ArrayView1<'_, f64> {
        self.params.column(idx)
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.meta.matches(name))
    }

    pub fn channel_values(&self, name: &str) -> Result<&[f64]> {
        self.channel(name)
            .map(|c| c.values.as_slice())
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Resolves a parameter or channel by bare name or full label.
    pub fn find_column(&self, key: &str) -> Option<ColumnRef> {
        self.param_index(key)
            .map(ColumnRef::Param)
            .or_else(|| self.channels.iter().position(|c| c.meta.matches(key)).map(ColumnRef::Channel))
    }

    /// All numeric columns in CSV order: parameters first, then channels.
    pub fn columns(&self) -> Vec<ColumnRef> {
        (0..self.n_params())
            .map(ColumnRef::Param)
            .chain((0..self.channels.len()).map(ColumnRef::Channel))
            .collect()
    }

    pub fn column_meta(&self, col: ColumnRef) -> &ColumnMeta {
        match col {
            ColumnRef::Param(j) => &self.param_meta[j],
            ColumnRef::Channel(c) => &self.channels[c].meta,
        }
    }

    pub fn value(&self, col: ColumnRef, row: usize) -> f64 {
        match col {
            ColumnRef::Param(j) => self.params[[row, j]],
            ColumnRef::Channel(c) => self.channels[c].values[row],
        }
    }

    pub fn is_valid(&self, col: ColumnRef, row: usize) -> bool {
        match col {
            ColumnRef::Param(j) => self.param_valid[[row, j]],
            ColumnRef::Channel(c) => self.channels[c].valid[row],
        }
    }

    pub fn column_values(&self, col: ColumnRef) -> Vec<f64> {
        match col {
            ColumnRef::Param(j) => self.params.column(j).to_vec(),
            ColumnRef::Channel(c) => self.channels[c].values.clone(),
        }
    }

    pub fn is_row_complete(&self, row: usize) -> bool {
        self.param_valid.row(row).iter().all(|&v| v) && self.channels.iter().all(|c| c.valid[row])
    }

    pub fn has_missing(&self) -> bool {
        (0..self.n_rows()).any(|r| !self.is_row_complete(r))
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.timestamps.windows(2).all(|w| w[1] > w[0])
    }

    /// Keeps the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            timestamps: rows.iter().map(|&r| self.timestamps[r]).collect(),
            param_meta: self.param_meta.clone(),
            params: self.params.select(Axis(0), rows),
            param_valid: self.param_valid.select(Axis(0), rows),
            channels: self
                .channels
                .iter()
                .map(|c| Channel {
                    meta: c.meta.clone(),
                    values: rows.iter().map(|&r| c.values[r]).collect(),
                    valid: rows.iter().map(|&r| c.valid[r]).collect(),
                })
                .collect(),
        }
    }

    pub fn slice_rows(&self, range: Range<usize>) -> Self {
        let rows: Vec<usize> = range.collect();
        self.select_rows(&rows)
    }

    /// Keeps only the parameter columns with the given indices, in that order.
    pub fn select_params(&self, keep: &[usize]) -> Self {
        Self {
            timestamps: self.timestamps.clone(),
            param_meta: keep.iter().map(|&j| self.param_meta[j].clone()).collect(),
            params: self.params.select(Axis(1), keep),
            param_valid: self.param_valid.select(Axis(1), keep),
            channels: self.channels.clone(),
        }
    }

    /// Parameter columns gathered into a dense row-major matrix, by name.
    pub fn param_matrix(&self, names: &[&str]) -> Result<Array2<f64>> {
        let idx = names
            .iter()
            .map(|n| self.param_index(n).ok_or_else(|| Error::MissingColumn(n.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.params.select(Axis(1), &idx))
    }
}
