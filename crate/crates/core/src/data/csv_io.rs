//! CSV boundary: `timestamp` (ISO-8601, minute resolution), parameter columns
//! `name [unit]`, then channel columns such as `NOX [PPM]`. Empty cells are
//! read as missing.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use ndarray::Array2;

use super::dataset::{channel, Channel, ColumnMeta, TimeSeriesDataset};
use crate::error::{Error, Result};

const TIMESTAMP_FORMATS: [&str; 4] = ["%Y-%m-%dT%H:%M", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%d %H:%M:%S"];

/// Which columns are channels rather than process parameters, and which
/// columns must be present.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub channels: Vec<String>,
    pub required: Vec<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self { channels: channel::KNOWN.iter().map(|s| s.to_string()).collect(), required: Vec::new() }
    }
}

impl CsvSchema {
    pub fn requiring<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.required.extend(names.into_iter().map(Into::into));
        self
    }
}

pub fn format_timestamp(minutes: i64) -> String {
    DateTime::from_timestamp(minutes * 60, 0)
        .map(|dt| dt.naive_utc().format("%Y-%m-%dT%H:%M").to_string())
        .unwrap_or_else(|| minutes.to_string())
}

pub fn parse_timestamp(text: &str) -> Option<i64> {
    let text = text.trim().trim_end_matches('Z');
    let dt = TIMESTAMP_FORMATS.iter().find_map(|f| NaiveDateTime::parse_from_str(text, f).ok())?;
    let secs = dt.and_utc().timestamp();
    (secs % 60 == 0).then_some(secs.div_euclid(60))
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<TimeSeriesDataset> {
    read_csv(File::open(path)?, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<TimeSeriesDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?.clone();
    if headers.get(0) != Some("timestamp") {
        return Err(Error::Parse { line: 1, msg: "first column must be `timestamp`".into() });
    }
    let metas: Vec<ColumnMeta> = headers.iter().skip(1).map(ColumnMeta::parse_label).collect();
    for req in &schema.required {
        if !metas.iter().any(|m| m.matches(req)) {
            return Err(Error::MissingColumn(req.clone()));
        }
    }
    let is_channel: Vec<bool> = metas.iter().map(|m| schema.channels.iter().any(|c| m.matches(c))).collect();

    let mut timestamps = Vec::new();
    let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::new(); metas.len()];
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        if record.len() != metas.len() + 1 {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, found {}", metas.len() + 1, record.len()),
            });
        }
        let ts = parse_timestamp(&record[0])
            .ok_or_else(|| Error::Parse { line, msg: format!("unparseable timestamp `{}`", &record[0]) })?;
        if let Some(&prev) = timestamps.last() {
            if ts < prev {
                return Err(Error::Parse { line, msg: format!("timestamp `{}` goes backwards", &record[0]) });
            }
        }
        timestamps.push(ts);
        for (j, field) in record.iter().skip(1).enumerate() {
            let cell = if field.is_empty() {
                None
            } else {
                Some(field.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("column `{}`: `{field}` is not a number", metas[j].label()),
                })?)
            };
            cells[j].push(cell);
        }
    }

    let n = timestamps.len();
    let param_cols: Vec<usize> = (0..metas.len()).filter(|&j| !is_channel[j]).collect();
    let mut params = Array2::zeros((n, param_cols.len()));
    let mut valid = Array2::from_elem((n, param_cols.len()), true);
    for (k, &j) in param_cols.iter().enumerate() {
        for (r, cell) in cells[j].iter().enumerate() {
            match cell {
                Some(v) => params[[r, k]] = *v,
                None => {
                    params[[r, k]] = f64::NAN;
                    valid[[r, k]] = false;
                }
            }
        }
    }
    let channels = (0..metas.len())
        .filter(|&j| is_channel[j])
        .map(|j| Channel {
            meta: metas[j].clone(),
            values: cells[j].iter().map(|c| c.unwrap_or(f64::NAN)).collect(),
            valid: cells[j].iter().map(Option::is_some).collect(),
        })
        .collect();
    let param_meta = param_cols.iter().map(|&j| metas[j].clone()).collect();
    TimeSeriesDataset::new(timestamps, param_meta, params, Some(valid), channels)
}

pub fn write_csv(dataset: &TimeSeriesDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut file = File::create(path)?;
    emit_csv(dataset, &mut file)?;
    file.flush()?;
    Ok(())
}

pub fn emit_csv<W: Write>(dataset: &TimeSeriesDataset, writer: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    let cols = dataset.columns();
    let mut header = vec!["timestamp".to_string()];
    header.extend(cols.iter().map(|&c| dataset.column_meta(c).label()));
    wtr.write_record(&header).map_err(csv_err)?;
    let mut row = Vec::with_capacity(header.len());
    for r in 0..dataset.n_rows() {
        row.clear();
        row.push(format_timestamp(dataset.timestamps()[r]));
        for &c in &cols {
            row.push(if dataset.is_valid(c, r) { dataset.value(c, r).to_string() } else { String::new() });
        }
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}
