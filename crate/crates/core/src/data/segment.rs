use super::dataset::TimeSeriesDataset;

/// Inclusive row range with no internal timestamp step larger than the
/// `max_gap` it was built with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rows(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

/// Splits rows into maximal runs whose consecutive timestamps differ by at
/// most `max_gap_minutes`.
pub fn segment_continuous(dataset: &TimeSeriesDataset, max_gap_minutes: i64) -> Vec<Segment> {
    segment_timestamps(dataset.timestamps(), max_gap_minutes)
}

pub fn segment_timestamps(timestamps: &[i64], max_gap_minutes: i64) -> Vec<Segment> {
    assert!(max_gap_minutes >= 1, "max_gap must be at least one minute");
    if timestamps.is_empty() {
        return Vec::new();
    }
    let mut segments = Vec::new();
    let mut start = 0;
    for i in 1..timestamps.len() {
        if timestamps[i] - timestamps[i - 1] > max_gap_minutes {
            segments.push(Segment { start, end: i - 1 });
            start = i;
        }
    }
    segments.push(Segment { start, end: timestamps.len() - 1 });
    segments
}
