use std::ops::Range;

use ndarray::Array2;

use crate::data::{segment_timestamps, Segment};
use crate::error::{Error, Result};

/// Lag windows and the horizons that follow them. Row `i` of `x` holds
/// `y[a-L..a]` (oldest first) and row `i` of `y` holds `y[a..a+H]`, where
/// `a = anchors[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArSamples {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub anchors: Vec<usize>,
}

impl ArSamples {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn lookback(&self) -> usize {
        self.x.ncols()
    }

    pub fn horizon(&self) -> usize {
        self.y.ncols()
    }

    pub fn select(&self, rows: &[usize]) -> ArSamples {
        ArSamples {
            x: self.x.select(ndarray::Axis(0), rows),
            y: self.y.select(ndarray::Axis(0), rows),
            anchors: rows.iter().map(|&r| self.anchors[r]).collect(),
        }
    }
}

/// Anchors whose whole `[a-L, a+H)` span sits inside one segment.
pub fn admissible_anchors(segments: &[Segment], lookback: usize, horizon: usize) -> Vec<usize> {
    segments
        .iter()
        .filter(|s| s.len() >= lookback + horizon)
        .flat_map(|s| s.start + lookback..=s.end + 1 - horizon)
        .collect()
}

pub fn samples_at(series: &[f64], anchors: &[usize], lookback: usize, horizon: usize) -> ArSamples {
    let mut x = Array2::zeros((anchors.len(), lookback));
    let mut y = Array2::zeros((anchors.len(), horizon));
    for (i, &a) in anchors.iter().enumerate() {
        for j in 0..lookback {
            x[[i, j]] = series[a - lookback + j];
        }
        for k in 0..horizon {
            y[[i, k]] = series[a + k];
        }
    }
    ArSamples { x, y, anchors: anchors.to_vec() }
}

/// Samples from every segment long enough to hold `L + H` points. Shorter
/// segments are skipped; it is an error if none qualifies.
pub fn make_ar_samples(series: &[f64], lookback: usize, horizon: usize, segments: &[Segment]) -> Result<ArSamples> {
    if lookback == 0 || horizon == 0 {
        return Err(Error::invalid("look-back and horizon must be at least 1"));
    }
    if let Some(s) = segments.iter().find(|s| s.end >= series.len()) {
        return Err(Error::invalid(format!("segment {}..={} exceeds the series length {}", s.start, s.end, series.len())));
    }
    let anchors = admissible_anchors(segments, lookback, horizon);
    if anchors.is_empty() {
        return Err(Error::invalid(format!("no segment holds look-back {lookback} plus horizon {horizon} points")));
    }
    Ok(samples_at(series, &anchors, lookback, horizon))
}

/// Restricts segments to the given row range.
pub fn clip_segments(segments: &[Segment], rows: Range<usize>) -> Vec<Segment> {
    segments
        .iter()
        .filter_map(|s| {
            let start = s.start.max(rows.start);
            let end = s.end.min(rows.end.checked_sub(1)?);
            (start <= end).then_some(Segment { start, end })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    /// Leading fraction of rows available for fitting and band calibration.
    pub train_fraction: f64,
    /// Trailing fraction of the training region held out to calibrate bands.
    pub validation_fraction: f64,
    /// Minutes between the last training timestamp and the first test one.
    pub buffer_minutes: i64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { train_fraction: 0.6, validation_fraction: 0.15, buffer_minutes: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChronoSplit {
    pub fit: Range<usize>,
    pub validation: Range<usize>,
    pub test: Range<usize>,
}

/// Row ranges in time order: fit, validation, then (after the buffer) test.
pub fn chronological_split(timestamps: &[i64], cfg: &SplitConfig) -> Result<ChronoSplit> {
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(Error::invalid("train fraction must lie in (0, 1)"));
    }
    if !(0.0..1.0).contains(&cfg.validation_fraction) {
        return Err(Error::invalid("validation fraction must lie in [0, 1)"));
    }
    if cfg.buffer_minutes < 0 {
        return Err(Error::invalid("buffer must be non-negative"));
    }
    let n = timestamps.len();
    let train_end = (n as f64 * cfg.train_fraction).round() as usize;
    if train_end == 0 || train_end >= n {
        return Err(Error::invalid(format!("{n} rows are too few for a chronological split")));
    }
    let limit = timestamps[train_end - 1] + cfg.buffer_minutes;
    let test_start = timestamps.partition_point(|&t| t <= limit);
    if test_start >= n {
        return Err(Error::invalid("no rows remain after the train/test buffer"));
    }
    let val_start = train_end - (train_end as f64 * cfg.validation_fraction).round() as usize;
    let split = ChronoSplit { fit: 0..val_start, validation: val_start..train_end, test: test_start..n };
    assert!(timestamps[train_end - 1] + cfg.buffer_minutes < timestamps[split.test.start]);
    Ok(split)
}

/// Fit, validation and test samples of one series, each drawn from its own
/// region of a chronological split.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSplit {
    pub fit: ArSamples,
    pub validation: Option<ArSamples>,
    pub test: ArSamples,
}

pub fn split_samples(
    series: &[f64],
    timestamps: &[i64],
    lookback: usize,
    horizon: usize,
    cfg: &SplitConfig,
) -> Result<SampleSplit> {
    if series.len() != timestamps.len() {
        return Err(Error::invalid("series and timestamps differ in length"));
    }
    let split = chronological_split(timestamps, cfg)?;
    let segments = segment_timestamps(timestamps, 1);
    let region = |rows: Range<usize>| make_ar_samples(series, lookback, horizon, &clip_segments(&segments, rows));
    Ok(SampleSplit {
        fit: region(split.fit.clone())?,
        validation: if split.validation.is_empty() { None } else { region(split.validation.clone()).ok() },
        test: region(split.test.clone())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_sample() {
        let s: Vec<f64> = (1..=10).map(f64::from).collect();
        let seg = [Segment { start: 0, end: 9 }];
        let a = make_ar_samples(&s, 3, 2, &seg).unwrap();
        assert_eq!(a.x.row(0).to_vec(), vec![1.0, 2.0, 3.0]);
        assert_eq!(a.y.row(0).to_vec(), vec![4.0, 5.0]);
        assert_eq!(a.len(), 6);
    }

    #[test]
    fn exact_length_segment_gives_one_sample() {
        let s = vec![0.0; 5];
        assert_eq!(make_ar_samples(&s, 3, 2, &[Segment { start: 0, end: 4 }]).unwrap().len(), 1);
        assert!(make_ar_samples(&s, 3, 3, &[Segment { start: 0, end: 4 }]).is_err());
    }

    #[test]
    fn split_respects_buffer() {
        let ts: Vec<i64> = (0..1000).collect();
        let cfg = SplitConfig { train_fraction: 0.5, validation_fraction: 0.2, buffer_minutes: 100 };
        let s = chronological_split(&ts, &cfg).unwrap();
        assert_eq!(s.fit, 0..400);
        assert_eq!(s.validation, 400..500);
        assert_eq!(s.test, 600..1000);
        let too_big = SplitConfig { buffer_minutes: 10_000, ..cfg };
        assert!(chronological_split(&ts, &too_big).is_err());
    }

    proptest! {
        #[test]
        fn sample_count_matches_enumeration(lens in proptest::collection::vec(1usize..30, 1..6), l in 1usize..5, h in 1usize..5) {
            let mut segs = Vec::new();
            let mut start = 0;
            for len in &lens {
                segs.push(Segment { start, end: start + len - 1 });
                start += len;
            }
            let series: Vec<f64> = (0..start).map(|i| i as f64).collect();
            let expected: usize = lens.iter().map(|&n| (n + 1).saturating_sub(l + h)).sum();
            match make_ar_samples(&series, l, h, &segs) {
                Ok(a) => {
                    prop_assert_eq!(a.len(), expected);
                    for (i, &anchor) in a.anchors.iter().enumerate() {
                        prop_assert_eq!(a.x[[i, l - 1]], (anchor - 1) as f64);
                        prop_assert_eq!(a.y[[i, h - 1]], (anchor + h - 1) as f64);
                        let seg = segs.iter().find(|s| s.start <= anchor && anchor <= s.end).unwrap();
                        prop_assert!(anchor - l >= seg.start && anchor + h - 1 <= seg.end);
                    }
                }
                Err(_) => prop_assert_eq!(expected, 0),
            }
        }
    }
}
