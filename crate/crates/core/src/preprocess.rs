//! Four-stage cleaning: consistency, physical validation, percentile outlier
//! removal, then pruning of inter-correlated parameters. Each stage reports
//! how much it removed.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::data::{ColumnRef, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::stats::{pearson, percentile};

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalRule {
    pub column: String,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl PhysicalRule {
    pub fn new(column: impl Into<String>, min: Option<f64>, max: Option<f64>) -> Self {
        Self { column: column.into(), min, max }
    }

    fn admits(&self, v: f64) -> bool {
        self.min.is_none_or(|m| v >= m) && self.max.is_none_or(|m| v <= m)
    }
}

/// Admissible ranges per column, read from `column = min,max` lines. Either
/// bound may be left empty for "unbounded".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhysicalRuleSet {
    pub rules: Vec<PhysicalRule>,
}

impl PhysicalRuleSet {
    pub fn parse(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: &str| Error::Parse { line: i + 1, msg: msg.to_string() };
            let (col, range) = line.split_once('=').ok_or_else(|| parse_err("expected `column = min,max`"))?;
            let (lo, hi) = range.split_once(',').ok_or_else(|| parse_err("expected `min,max`"))?;
            let bound = |s: &str| -> Result<Option<f64>> {
                let s = s.trim();
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|_| parse_err(&format!("`{s}` is not a number")))
                }
            };
            rules.push(PhysicalRule::new(col.trim(), bound(lo)?, bound(hi)?));
        }
        Ok(Self { rules })
    }

    pub fn render(&self) -> String {
        let fmt = |b: Option<f64>| b.map(|v| v.to_string()).unwrap_or_default();
        self.rules.iter().map(|r| format!("{} = {},{}\n", r.column, fmt(r.min), fmt(r.max))).collect()
    }

    /// Non-negativity for every column, plus [0, 100] for percentage units.
    pub fn default_for(dataset: &TimeSeriesDataset) -> Self {
        let rules = dataset
            .columns()
            .into_iter()
            .map(|c| {
                let meta = dataset.column_meta(c);
                let max = matches!(meta.unit.as_str(), "%" | "wt%").then_some(100.0);
                PhysicalRule::new(meta.name.clone(), Some(0.0), max)
            })
            .collect();
        Self { rules }
    }
}

/// Consolidates duplicate timestamps (first occurrence kept) and drops rows
/// with any missing entry.
pub fn consistency_check(dataset: &TimeSeriesDataset) -> (TimeSeriesDataset, usize) {
    let mut seen = HashSet::new();
    let keep: Vec<usize> = (0..dataset.n_rows())
        .filter(|&r| seen.insert(dataset.timestamps()[r]))
        .filter(|&r| dataset.is_row_complete(r))
        .collect();
    let removed = dataset.n_rows() - keep.len();
    (dataset.select_rows(&keep), removed)
}

pub fn physical_validation(dataset: &TimeSeriesDataset, rules: &PhysicalRuleSet) -> Result<(TimeSeriesDataset, usize)> {
    let resolved = rules
        .rules
        .iter()
        .map(|r| dataset.find_column(&r.column).map(|c| (c, r)).ok_or_else(|| Error::MissingColumn(r.column.clone())))
        .collect::<Result<Vec<_>>>()?;
    let keep: Vec<usize> = (0..dataset.n_rows())
        .filter(|&row| resolved.iter().all(|(c, rule)| rule.admits(dataset.value(*c, row))))
        .collect();
    let removed = dataset.n_rows() - keep.len();
    Ok((dataset.select_rows(&keep), removed))
}

/// Empirical `[lo, hi]` percentile band of one column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierBand {
    pub column: ColumnRef,
    pub lower: f64,
    pub upper: f64,
}

/// Bands for every numeric column, computed on the given data.
pub fn outlier_bands(dataset: &TimeSeriesDataset, lo: f64, hi: f64) -> Result<Vec<OutlierBand>> {
    if !(0.0..100.0).contains(&lo) || hi > 100.0 || lo >= hi {
        return Err(Error::invalid(format!("percentile bounds must satisfy 0 <= lo < hi <= 100, got {lo}, {hi}")));
    }
    if dataset.n_rows() < 2 {
        return Err(Error::invalid("outlier filtering needs at least two rows"));
    }
    Ok(dataset
        .columns()
        .into_iter()
        .map(|c| {
            let values = dataset.column_values(c);
            OutlierBand { column: c, lower: percentile(&values, lo), upper: percentile(&values, hi) }
        })
        .collect())
}

/// Drops every row with a value outside its column's band.
pub fn apply_outlier_bands(dataset: &TimeSeriesDataset, bands: &[OutlierBand]) -> (TimeSeriesDataset, usize) {
    let keep: Vec<usize> = (0..dataset.n_rows())
        .filter(|&row| {
            bands.iter().all(|b| {
                let v = dataset.value(b.column, row);
                v >= b.lower && v <= b.upper
            })
        })
        .collect();
    let removed = dataset.n_rows() - keep.len();
    (dataset.select_rows(&keep), removed)
}

/// Bands computed once on the stage input, then a single deletion pass.
pub fn outlier_filter(dataset: &TimeSeriesDataset, lo: f64, hi: f64) -> Result<(TimeSeriesDataset, usize)> {
    let bands = outlier_bands(dataset, lo, hi)?;
    Ok(apply_outlier_bands(dataset, &bands))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PruneOutcome {
    /// (removed parameter, retained representative of its group)
    pub pruned: Vec<(String, String)>,
    /// Parameters with zero variance: kept, but excluded from correlation.
    pub zero_variance: Vec<String>,
}

/// Groups parameters into connected components of the `|r| > threshold`
/// graph and keeps, per group, the member most correlated with the target.
/// Ties within 1e-12 go to the lexicographically smaller name.
pub fn prune_correlated(
    dataset: &TimeSeriesDataset,
    target: &str,
    threshold: f64,
) -> Result<(TimeSeriesDataset, PruneOutcome)> {
    let y = dataset.channel_values(target)?;
    if dataset.n_rows() < 2 {
        return Err(Error::invalid("correlation pruning needs at least two rows"));
    }
    let p = dataset.n_params();
    let names = dataset.param_names();
    let cols: Vec<Vec<f64>> = (0..p).map(|j| dataset.param_column(j).to_vec()).collect();
    let degenerate: Vec<bool> = cols.iter().map(|c| c.iter().all(|v| *v == c[0])).collect();

    let target_r: Vec<f64> = cols
        .iter()
        .map(|c| pearson(c.iter().copied(), y.iter().copied()).map_or(0.0, f64::abs))
        .collect();
    let mut adjacent = vec![vec![false; p]; p];
    for i in 0..p {
        for j in i + 1..p {
            if degenerate[i] || degenerate[j] {
                continue;
            }
            let r = pearson(cols[i].iter().copied(), cols[j].iter().copied()).unwrap_or(0.0);
            if r.abs() > threshold {
                adjacent[i][j] = true;
                adjacent[j][i] = true;
            }
        }
    }

    let mut component = vec![usize::MAX; p];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for start in 0..p {
        if component[start] != usize::MAX {
            continue;
        }
        let id = groups.len();
        let mut stack = vec![start];
        let mut members = Vec::new();
        component[start] = id;
        while let Some(v) = stack.pop() {
            members.push(v);
            for w in 0..p {
                if adjacent[v][w] && component[w] == usize::MAX {
                    component[w] = id;
                    stack.push(w);
                }
            }
        }
        members.sort_unstable();
        groups.push(members);
    }

    let mut outcome = PruneOutcome {
        zero_variance: (0..p).filter(|&j| degenerate[j]).map(|j| names[j].clone()).collect(),
        ..Default::default()
    };
    let mut keep = Vec::new();
    for members in &groups {
        let best = *members
            .iter()
            .reduce(|a, b| {
                let diff = target_r[*b] - target_r[*a];
                if diff > 1e-12 || (diff.abs() <= 1e-12 && names[*b] < names[*a]) {
                    b
                } else {
                    a
                }
            })
            .expect("components are non-empty");
        keep.push(best);
        for &m in members.iter().filter(|&&m| m != best) {
            outcome.pruned.push((names[m].clone(), names[best].clone()));
        }
    }
    keep.sort_unstable();
    outcome.pruned.sort();
    Ok((dataset.select_params(&keep), outcome))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub rules: PhysicalRuleSet,
    pub lower_percentile: f64,
    pub upper_percentile: f64,
    pub target: String,
    pub correlation_threshold: f64,
}

impl PreprocessConfig {
    pub fn new(rules: PhysicalRuleSet, target: impl Into<String>) -> Self {
        Self { rules, lower_percentile: 0.01, upper_percentile: 99.99, target: target.into(), correlation_threshold: 0.80 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessReport {
    pub rows_raw: usize,
    pub rows_after_consistency: usize,
    pub rows_after_physical: usize,
    pub rows_after_outlier: usize,
    pub params_raw: usize,
    pub params_after_pruning: usize,
    pub pruned: Vec<(String, String)>,
    pub zero_variance: Vec<String>,
}

impl PreprocessReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<28}{:>12}", "stage", "rows");
        let _ = writeln!(s, "{:<28}{:>12}", "raw", self.rows_raw);
        let _ = writeln!(s, "{:<28}{:>12}", "after consistency check", self.rows_after_consistency);
        let _ = writeln!(s, "{:<28}{:>12}", "after physical validation", self.rows_after_physical);
        let _ = writeln!(s, "{:<28}{:>12}", "after outlier removal", self.rows_after_outlier);
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<28}{:>12}", "process parameters (raw)", self.params_raw);
        let _ = writeln!(s, "{:<28}{:>12}", "used in study", self.params_after_pruning);
        for (gone, kept) in &self.pruned {
            let _ = writeln!(s, "  pruned {gone} (retained {kept})");
        }
        for name in &self.zero_variance {
            let _ = writeln!(s, "  zero variance: {name}");
        }
        s
    }
}

/// Runs the stages in their fixed order.
pub fn run_pipeline(dataset: &TimeSeriesDataset, config: &PreprocessConfig) -> Result<(TimeSeriesDataset, PreprocessReport)> {
    let (d1, _) = consistency_check(dataset);
    let (d2, _) = physical_validation(&d1, &config.rules)?;
    let (d3, _) = outlier_filter(&d2, config.lower_percentile, config.upper_percentile)?;
    let (d4, outcome) = prune_correlated(&d3, &config.target, config.correlation_threshold)?;
    let report = PreprocessReport {
        rows_raw: dataset.n_rows(),
        rows_after_consistency: d1.n_rows(),
        rows_after_physical: d2.n_rows(),
        rows_after_outlier: d3.n_rows(),
        params_raw: dataset.n_params(),
        params_after_pruning: d4.n_params(),
        pruned: outcome.pruned,
        zero_variance: outcome.zero_variance,
    };
    Ok((d4, report))
}
