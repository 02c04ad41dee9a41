use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::regressor::{Design, Predictor, Regressor};
use super::spec::RegressorSpec;
use crate::error::{Error, Result};
use crate::metrics::MetricReport;
use crate::stats::{mean, sample_std};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvMode {
    Shuffled,
    /// Rows split into `k + 1` contiguous blocks; fold `i` trains on blocks
    /// `0..=i` and validates block `i + 1`. Block 0 is never validated.
    Chronological,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

fn blocks(n: usize, k: usize) -> Vec<std::ops::Range<usize>> {
    (0..k).map(|i| i * n / k..(i + 1) * n / k).collect()
}

pub fn cv_folds(n: usize, k: usize, mode: CvMode, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::invalid("cross-validation needs k >= 2"));
    }
    match mode {
        CvMode::Shuffled => {
            if k > n {
                return Err(Error::invalid(format!("k = {k} exceeds the {n} available rows")));
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            Ok(blocks(n, k)
                .into_iter()
                .map(|b| {
                    let mut validation = order[b.clone()].to_vec();
                    let mut train: Vec<usize> = order[..b.start].iter().chain(&order[b.end..]).copied().collect();
                    validation.sort_unstable();
                    train.sort_unstable();
                    Fold { train, validation }
                })
                .collect())
        }
        CvMode::Chronological => {
            if k + 1 > n {
                return Err(Error::invalid(format!("chronological k = {k} needs at least {} rows, got {n}", k + 1)));
            }
            let b = blocks(n, k + 1);
            Ok((1..=k).map(|i| Fold { train: (0..b[i].start).collect(), validation: b[i].clone().collect() }).collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    /// Metrics over all validated rows pooled together.
    pub pooled: MetricReport,
    pub fold_mape: Vec<f64>,
}

pub fn cross_validate(spec: &RegressorSpec, design: &Design, k: usize, mode: CvMode, seed: u64) -> Result<CvReport> {
    let folds = cv_folds(design.n_rows(), k, mode, seed)?;
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    let mut fold_mape = Vec::with_capacity(folds.len());
    for fold in &folds {
        let train = design.select_rows(&fold.train);
        let valid = design.select_rows(&fold.validation);
        let model = Regressor::fit_design(spec, &train)?;
        let p = model.predict_rows(valid.x.view());
        fold_mape.push(crate::metrics::mape(&valid.y, &p)?);
        truth.extend_from_slice(&valid.y);
        pred.extend(p);
    }
    Ok(CvReport { pooled: MetricReport::evaluate(&truth, &pred)?, fold_mape })
}

/// Picks the candidate with the lowest pooled CV MAPE; ties keep the earlier
/// candidate.
pub fn grid_search(
    candidates: &[RegressorSpec],
    design: &Design,
    k: usize,
    mode: CvMode,
    seed: u64,
) -> Result<(RegressorSpec, Vec<(RegressorSpec, CvReport)>)> {
    if candidates.is_empty() {
        return Err(Error::invalid("empty hyperparameter grid"));
    }
    let scored = candidates
        .iter()
        .map(|s| cross_validate(s, design, k, mode, seed).map(|r| (*s, r)))
        .collect::<Result<Vec<_>>>()?;
    let best = scored
        .iter()
        .reduce(|a, b| if b.1.pooled.mape < a.1.pooled.mape { b } else { a })
        .map(|(s, _)| *s)
        .expect("non-empty");
    Ok((best, scored))
}

/// Shuffled hold-out: the first `round(test_fraction * n)` rows of a seeded
/// permutation form the test set.
pub fn holdout_split(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid("test fraction must lie in (0, 1)"));
    }
    let n_test = ((n as f64) * test_fraction).round() as usize;
    if n_test == 0 || n_test == n {
        return Err(Error::invalid(format!("{n} rows cannot be split with test fraction {test_fraction}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureScore {
    pub name: String,
    pub spec: RegressorSpec,
    pub per_seed: Vec<MetricReport>,
    pub mape_mean: f64,
    pub mape_std: f64,
    pub mae_mean: f64,
    pub mae_std: f64,
    pub r2_mean: f64,
    pub r2_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkResult {
    /// Sorted by name.
    pub scores: Vec<ArchitectureScore>,
    pub winner: String,
}

impl BenchmarkResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("model,mape_mean,mape_std,mae_mean,mae_std,r2_mean,r2_std\n");
        for a in &self.scores {
            s.push_str(&format!(
                "\"{}\",{},{},{},{},{},{}\n",
                a.name, a.mape_mean, a.mape_std, a.mae_mean, a.mae_std, a.r2_mean, a.r2_std
            ));
        }
        s
    }
}

/// Trains every spec on the same seeded hold-out splits (one per seed) and
/// reports mean and sample standard deviation over seeds. The winner has the
/// lowest mean MAPE, ties going to the smaller name.
pub fn benchmark(specs: &[RegressorSpec], design: &Design, n_seeds: usize, test_fraction: f64) -> Result<BenchmarkResult> {
    if specs.is_empty() {
        return Err(Error::invalid("benchmark needs at least one model spec"));
    }
    if n_seeds == 0 {
        return Err(Error::invalid("benchmark needs at least one seed"));
    }
    let splits = (0..n_seeds as u64)
        .map(|s| holdout_split(design.n_rows(), test_fraction, s))
        .collect::<Result<Vec<_>>>()?;
    let mut scores = Vec::with_capacity(specs.len());
    for spec in specs {
        let mut per_seed = Vec::with_capacity(n_seeds);
        for (s, (train, test)) in splits.iter().enumerate() {
            let tr = design.select_rows(train);
            let te = design.select_rows(test);
            let model = Regressor::fit_design(&spec.with_seed(spec.seed.wrapping_add(s as u64)), &tr)?;
            per_seed.push(MetricReport::evaluate(&te.y, &model.predict_rows(te.x.view()))?);
        }
        let summary = |f: fn(&MetricReport) -> f64| {
            let v: Vec<f64> = per_seed.iter().map(f).collect();
            (mean(&v), if v.len() > 1 { sample_std(&v) } else { 0.0 })
        };
        let (mape_mean, mape_std) = summary(|m| m.mape);
        let (mae_mean, mae_std) = summary(|m| m.mae);
        let (r2_mean, r2_std) = summary(|m| m.r2);
        scores.push(ArchitectureScore {
            name: spec.label(),
            spec: *spec,
            per_seed,
            mape_mean,
            mape_std,
            mae_mean,
            mae_std,
            r2_mean,
            r2_std,
        });
    }
    scores.sort_by(|a, b| a.name.cmp(&b.name));
    let winner = scores
        .iter()
        .reduce(|best, s| if s.mape_mean < best.mape_mean { s } else { best })
        .map(|s| s.name.clone())
        .expect("non-empty");
    Ok(BenchmarkResult { scores, winner })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::spec::GbtParams;
    use ndarray::Array2;

    fn design(n: usize) -> Design {
        let x = Array2::from_shape_fn((n, 2), |(i, j)| ((i * (j + 3) * 7) % 19) as f64 + 1.0);
        let y = (0..n).map(|i| 10.0 + x[[i, 0]] * x[[i, 1]]).collect();
        Design { x, y, feature_names: vec!["a".into(), "b".into()], timestamps: (0..n as i64).collect() }
    }

    #[test]
    fn every_row_validated_once_when_shuffled() {
        let folds = cv_folds(23, 4, CvMode::Shuffled, 3).unwrap();
        let mut seen: Vec<usize> = folds.iter().flat_map(|f| f.validation.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..23).collect::<Vec<_>>());
        for f in &folds {
            assert_eq!(f.train.len() + f.validation.len(), 23);
        }
    }

    #[test]
    fn leave_one_out() {
        let folds = cv_folds(5, 5, CvMode::Shuffled, 0).unwrap();
        assert_eq!(folds.len(), 5);
        assert!(folds.iter().all(|f| f.validation.len() == 1));
        assert!(cv_folds(5, 6, CvMode::Shuffled, 0).is_err());
        assert!(cv_folds(5, 1, CvMode::Shuffled, 0).is_err());
    }

    #[test]
    fn chronological_validation_follows_training() {
        for f in cv_folds(100, 4, CvMode::Chronological, 0).unwrap() {
            let last_train = *f.train.iter().max().unwrap();
            assert!(f.validation.iter().all(|&v| v > last_train));
        }
    }

    #[test]
    fn single_spec_wins_and_order_does_not_matter() {
        let d = design(120);
        let single = benchmark(&[RegressorSpec::linear()], &d, 2, 0.25).unwrap();
        assert_eq!(single.winner, "LINEAR");
        let gbt = RegressorSpec::gbt(GbtParams { n_rounds: 60, min_samples_leaf: 2, max_depth: Some(3), learning_rate: 0.2 });
        let a = benchmark(&[RegressorSpec::linear(), gbt], &d, 2, 0.25).unwrap();
        let b = benchmark(&[gbt, RegressorSpec::linear()], &d, 2, 0.25).unwrap();
        assert_eq!(a, b);
        assert!(a.winner.starts_with("GBT"));
        assert!(benchmark(&[], &d, 2, 0.25).is_err());
    }

    #[test]
    fn grid_search_prefers_lower_error() {
        let d = design(120);
        let weak = RegressorSpec::gbt(GbtParams { n_rounds: 1, learning_rate: 0.1, max_depth: Some(1), min_samples_leaf: 2 });
        let strong = RegressorSpec::gbt(GbtParams { n_rounds: 80, learning_rate: 0.2, max_depth: Some(3), min_samples_leaf: 2 });
        let (best, all) = grid_search(&[weak, strong], &d, 4, CvMode::Shuffled, 0).unwrap();
        assert_eq!(best, strong);
        assert_eq!(all.len(), 2);
    }
}
