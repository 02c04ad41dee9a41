use ndarray::ArrayView2;

use super::N_DV;
use crate::error::{Error, Result};
use crate::surrogate::Predictor;

pub const MAX_FLOW_CHANGE_PERCENT: f64 = 0.5;
pub const FCAO_RANGE: (f64, f64) = (0.5, 1.5);

#[derive(Debug, Clone, PartialEq)]
pub enum KpiFailure {
    /// Relative clinker-flow change in percent.
    Throughput(f64),
    /// Predicted free lime in wt%.
    Quality(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpiOutcome {
    pub flow_change_percent: f64,
    pub fcao: f64,
    pub failures: Vec<KpiFailure>,
}

impl KpiOutcome {
    /// Flow change strictly below the limit, f-CaO inside the closed band.
    pub fn judge(flow_initial: f64, flow_new: f64, fcao: f64) -> Self {
        let flow_change_percent = 100.0 * (flow_new - flow_initial).abs() / flow_initial.abs();
        let mut failures = Vec::new();
        // negated so NaN fails
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(flow_change_percent < MAX_FLOW_CHANGE_PERCENT) {
            failures.push(KpiFailure::Throughput(flow_change_percent));
        }
        if !(fcao >= FCAO_RANGE.0 && fcao <= FCAO_RANGE.1) {
            failures.push(KpiFailure::Quality(fcao));
        }
        Self { flow_change_percent, fcao, failures }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn reason(&self) -> String {
        if self.passed() {
            return "pass".into();
        }
        self.failures
            .iter()
            .map(|f| match f {
                KpiFailure::Throughput(c) => format!("throughput ({c:.3}% flow change)"),
                KpiFailure::Quality(v) => format!("quality (f-CaO {v:.3} wt%)"),
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Clinker-flow and f-CaO surrogates over the 7 DVs followed by the frozen
/// raw-meal columns.
pub struct KpiModels<'a> {
    pub clinker: &'a dyn Predictor,
    pub fcao: &'a dyn Predictor,
}

pub fn kpi_validate(dv: &[f64; N_DV], initial: &[f64; N_DV], raw_meal: &[f64], models: &KpiModels<'_>) -> KpiOutcome {
    let row = |x: &[f64; N_DV]| x.iter().chain(raw_meal).copied().collect::<Vec<_>>();
    let new = row(dv);
    let flow0 = models.clinker.predict_row(&row(initial));
    let flow1 = models.clinker.predict_row(&new);
    KpiOutcome::judge(flow0, flow1, models.fcao.predict_row(&new))
}

/// Min-max scaled copy of the history for nearest-neighbour agreement.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityIndex {
    min: Vec<f64>,
    range: Vec<f64>,
    rows: Vec<f64>,
    dim: usize,
}

impl SimilarityIndex {
    pub fn fit(history: ArrayView2<'_, f64>) -> Result<Self> {
        let (n, dim) = history.dim();
        if n == 0 || dim == 0 {
            return Err(Error::invalid("similarity needs a non-empty history"));
        }
        let min: Vec<f64> = (0..dim).map(|j| history.column(j).iter().copied().fold(f64::INFINITY, f64::min)).collect();
        let max: Vec<f64> = (0..dim).map(|j| history.column(j).iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
        let range: Vec<f64> = min.iter().zip(&max).map(|(a, b)| b - a).collect();
        let mut rows = Vec::with_capacity(n * dim);
        for r in history.rows() {
            for j in 0..dim {
                rows.push(if range[j] > 0.0 { (r[j] - min[j]) / range[j] } else { 0.0 });
            }
        }
        Ok(Self { min, range, rows, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn scale(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|j| if self.range[j] > 0.0 { (x[j] - self.min[j]) / self.range[j] } else { 0.0 }).collect()
    }

    /// `(1 - D/p) * 100` for the nearest row under Manhattan distance `D`,
    /// with its index. Ties go to the earliest row.
    pub fn score(&self, x: &[f64]) -> Result<(f64, usize)> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!("point has {} coordinates, index has {}", x.len(), self.dim)));
        }
        let q = self.scale(x);
        let (best, dist) = self
            .rows
            .chunks_exact(self.dim)
            .map(|r| r.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>())
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, d)| if d < acc.1 { (i, d) } else { acc });
        Ok(((1.0 - dist / self.dim as f64) * 100.0, best))
    }
}

/// Similarity of a single point against a single reference, both given on
/// the min-max scale already.
pub fn manhattan_similarity(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    (1.0 - d / a.len() as f64) * 100.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn kpi_boundaries() {
        assert!(KpiOutcome::judge(100.0, 100.0, 1.0).passed());
        assert_eq!(KpiOutcome::judge(100.0, 100.0, 1.6).failures, vec![KpiFailure::Quality(1.6)]);
        assert!(KpiOutcome::judge(100.0, 100.0, 1.5).passed());
        assert!(KpiOutcome::judge(100.0, 100.0, 0.5).passed());
        let half = KpiOutcome::judge(200.0, 201.0, 1.0);
        assert_eq!(half.flow_change_percent, 0.5);
        assert!(!half.passed());
        assert!(KpiOutcome::judge(200.0, 200.99, 1.0).passed());
    }

    #[test]
    fn exact_match_scores_100() {
        let h = Array2::from_shape_fn((20, 8), |(i, j)| (i * (j + 1)) as f64 + j as f64);
        let idx = SimilarityIndex::fit(h.view()).unwrap();
        let (s, k) = idx.score(h.row(7).as_slice().unwrap()).unwrap();
        assert_eq!(s, 100.0);
        assert_eq!(k, 7);
    }

    #[test]
    fn eight_hundredths() {
        let a = [0.2; 8];
        let b = [0.21; 8];
        assert!((manhattan_similarity(&a, &b) - 99.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_coordinate_is_ignored() {
        let h = Array2::from_shape_fn((5, 2), |(i, j)| if j == 0 { i as f64 } else { 3.0 });
        let idx = SimilarityIndex::fit(h.view()).unwrap();
        assert_eq!(idx.score(&[2.0, 1000.0]).unwrap(), (100.0, 2));
    }

    #[test]
    fn nearest_row_survives_reordering() {
        let h = Array2::from_shape_fn((30, 3), |(i, j)| ((i * 7 + j * 11) % 17) as f64);
        let rev = Array2::from_shape_fn((30, 3), |(i, j)| h[[29 - i, j]]);
        let x = [4.2, 9.1, 3.3];
        let (a, _) = SimilarityIndex::fit(h.view()).unwrap().score(&x).unwrap();
        let (b, _) = SimilarityIndex::fit(rev.view()).unwrap().score(&x).unwrap();
        assert_eq!(a, b);
    }
}
