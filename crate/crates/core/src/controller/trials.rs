use std::fmt::Write as _;

use ndarray::Array2;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::optimizer::{optimize, ControlProblem, ControllerConfig, Violation};
use super::penalty::PenaltyModel;
use super::validate::{kpi_validate, KpiModels, KpiOutcome, SimilarityIndex};
use super::{DecisionVector, N_DV, RAW_MEAL_COLUMNS};
use crate::data::{channel, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::stats::{mean, quantile_sorted};
use crate::surrogate::{Predictor, Regressor, RegressorSpec};

pub const STRESS_THRESHOLD_PPM: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Initial NOx at most 500 PPM.
    Normal,
    /// Initial NOx above 500 PPM.
    Stress,
}

impl Scenario {
    pub fn admits(self, nox: f64) -> bool {
        match self {
            Scenario::Normal => nox <= STRESS_THRESHOLD_PPM,
            Scenario::Stress => nox > STRESS_THRESHOLD_PPM,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Normal => "NORMAL",
            Scenario::Stress => "STRESS",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NORMAL" => Ok(Scenario::Normal),
            "STRESS" => Ok(Scenario::Stress),
            other => Err(Error::invalid(format!("unknown scenario `{other}` (NORMAL or STRESS)"))),
        }
    }
}

fn columns(dataset: &TimeSeriesDataset, names: &[&str]) -> Result<Array2<f64>> {
    dataset.param_matrix(names)
}

fn with_channel(mut x: Array2<f64>, values: &[f64]) -> Array2<f64> {
    x.push_column(ndarray::ArrayView1::from(values)).expect("row counts agree");
    x
}

/// Everything a trial needs, fitted once from history.
pub struct ControllerModels {
    pub surrogate: Regressor,
    pub clinker: Regressor,
    pub fcao: Regressor,
    pub corr: PenaltyModel,
    pub operate: PenaltyModel,
    pub similarity: SimilarityIndex,
}

impl ControllerModels {
    /// `full_history` (all regimes) fits the correlation penalty;
    /// `operating` (preprocessed) fits everything else.
    pub fn fit(full_history: &TimeSeriesDataset, operating: &TimeSeriesDataset, spec: &RegressorSpec, ridge: f64) -> Result<Self> {
        let dv_names: Vec<String> = DecisionVector::NAMES.iter().map(|s| s.to_string()).collect();
        let kpi_names: Vec<&str> = DecisionVector::NAMES.iter().chain(RAW_MEAL_COLUMNS.iter()).copied().collect();
        let kpi_names_owned: Vec<String> = kpi_names.iter().map(|s| s.to_string()).collect();

        let dv = columns(operating, &DecisionVector::NAMES)?;
        let kpi_x = columns(operating, &kpi_names)?;
        let nox = operating.channel_values(channel::NOX)?;
        let surrogate = Regressor::fit(spec, dv.view(), nox, &dv_names)?;
        let clinker = Regressor::fit(spec, kpi_x.view(), operating.channel_values(channel::CLINKER_FLOW)?, &kpi_names_owned)?;
        let fcao = Regressor::fit(spec, kpi_x.view(), operating.channel_values(channel::FCAO)?, &kpi_names_owned)?;
        let corr = PenaltyModel::fit(columns(full_history, &DecisionVector::NAMES)?.view(), ridge)?;
        let operate = PenaltyModel::fit(dv.view(), ridge)?;
        let similarity = SimilarityIndex::fit(with_channel(dv, nox).view())?;
        Ok(Self { surrogate, clinker, fcao, corr, operate, similarity })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub row: usize,
    pub timestamp: i64,
    pub initial: [f64; N_DV],
    pub best: [f64; N_DV],
    pub nox_measured: f64,
    /// Surrogate prediction at the initial DV.
    pub nox_before: f64,
    pub nox_after: f64,
    pub reduction_percent: f64,
    pub trace: Vec<f64>,
    pub violations: Vec<Violation>,
    pub kpi: KpiOutcome,
    pub similarity: f64,
    pub nearest_row: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandSummary {
    pub label: &'static str,
    pub count: usize,
    pub mean_reduction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub scenario: Scenario,
    pub records: Vec<TrialRecord>,
    /// Over all trials.
    pub mean_reduction: Option<f64>,
    /// Over trials that passed KPI validation.
    pub mean_reduction_kpi_pass: Option<f64>,
    pub kpi_failures: usize,
    pub constraint_failures: usize,
    /// min, median, max
    pub similarity: Option<(f64, f64, f64)>,
    pub bands: Vec<BandSummary>,
}

impl TrialSummary {
    pub fn n_trials(&self) -> usize {
        self.records.len()
    }

    pub fn kpi_failure_rate(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.kpi_failures as f64 / self.records.len() as f64
        }
    }

    fn from_records(scenario: Scenario, records: Vec<TrialRecord>) -> Self {
        let avg = |v: Vec<f64>| (!v.is_empty()).then(|| mean(&v));
        let mean_reduction = avg(records.iter().map(|r| r.reduction_percent).collect());
        let mean_reduction_kpi_pass = avg(records.iter().filter(|r| r.kpi.passed()).map(|r| r.reduction_percent).collect());
        let mut sims: Vec<f64> = records.iter().map(|r| r.similarity).collect();
        sims.sort_unstable_by(f64::total_cmp);
        let similarity = (!sims.is_empty()).then(|| (sims[0], quantile_sorted(&sims, 0.5), sims[sims.len() - 1]));
        let bands = [("<250", 0.0, 250.0), ("250-500", 250.0, 500.0), (">500", 500.0, f64::INFINITY)]
            .into_iter()
            .map(|(label, lo, hi)| {
                let inside: Vec<f64> = records
                    .iter()
                    .filter(|r| r.nox_measured >= lo && (r.nox_measured < hi || (hi == 500.0 && r.nox_measured == 500.0)))
                    .map(|r| r.reduction_percent)
                    .collect();
                BandSummary { label, count: inside.len(), mean_reduction: avg(inside) }
            })
            .collect();
        Self {
            scenario,
            kpi_failures: records.iter().filter(|r| !r.kpi.passed()).count(),
            constraint_failures: records.iter().filter(|r| !r.violations.is_empty()).count(),
            records,
            mean_reduction,
            mean_reduction_kpi_pass,
            similarity,
            bands,
        }
    }

    pub fn to_table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
        let mut s = String::new();
        let _ = writeln!(s, "scenario                      {}", self.scenario.name());
        let _ = writeln!(s, "trials                        {}", self.n_trials());
        let _ = writeln!(s, "mean NOx reduction [%]        {}", opt(self.mean_reduction));
        let _ = writeln!(s, "  KPI-passing trials [%]      {}", opt(self.mean_reduction_kpi_pass));
        let _ = writeln!(s, "KPI failures                  {}", self.kpi_failures);
        let _ = writeln!(s, "hard-constraint failures      {}", self.constraint_failures);
        if let Some((lo, med, hi)) = self.similarity {
            let _ = writeln!(s, "similarity min/median/max [%] {lo:.2} / {med:.2} / {hi:.2}");
        }
        let _ = writeln!(s, "\ninitial NOx [PPM]   trials   mean reduction [%]");
        for b in &self.bands {
            let _ = writeln!(s, "{:<20}{:>6}   {:>18}", b.label, b.count, opt(b.mean_reduction));
        }
        s
    }
}

/// Optimizes from up to `n_trials` initial states drawn without replacement
/// from `test` rows matching the scenario. Raw-meal columns stay frozen at
/// the initial row's values.
pub fn run_trials(
    models: &ControllerModels,
    test: &TimeSeriesDataset,
    scenario: Scenario,
    n_trials: usize,
    config: &ControllerConfig,
) -> Result<TrialSummary> {
    config.validate()?;
    let dv = columns(test, &DecisionVector::NAMES)?;
    let rm = columns(test, &RAW_MEAL_COLUMNS)?;
    let nox = test.channel_values(channel::NOX)?;
    let candidates: Vec<usize> = (0..test.n_rows()).filter(|&r| scenario.admits(nox[r])).collect();
    let rows: Vec<usize> = if candidates.len() <= n_trials {
        candidates
    } else {
        let mut picked: Vec<usize> = sample(&mut ChaCha8Rng::seed_from_u64(config.seed), candidates.len(), n_trials)
            .into_iter()
            .map(|i| candidates[i])
            .collect();
        picked.sort_unstable();
        picked
    };
    let kpi_models = KpiModels { clinker: &models.clinker, fcao: &models.fcao };

    let records = rows
        .par_iter()
        .enumerate()
        .map(|(k, &row)| {
            let initial: [f64; N_DV] = std::array::from_fn(|i| dv[[row, i]]);
            let cfg = ControllerConfig { seed: config.seed.wrapping_add(k as u64 + 1), ..*config };
            let problem = ControlProblem::new(&models.surrogate, Some(&models.corr), Some(&models.operate), cfg, initial)?;
            let out = optimize(&problem);
            let nox_before = models.surrogate.predict_row(&initial);
            let nox_after = models.surrogate.predict_row(&out.best);
            let raw_meal = rm.row(row).to_vec();
            let kpi = kpi_validate(&out.best, &initial, &raw_meal, &kpi_models);
            let mut point = out.best.to_vec();
            point.push(nox_after);
            let (similarity, nearest_row) = models.similarity.score(&point)?;
            Ok(TrialRecord {
                row,
                timestamp: test.timestamps()[row],
                initial,
                best: out.best,
                nox_measured: nox[row],
                nox_before,
                nox_after,
                reduction_percent: 100.0 * (nox_before - nox_after) / nox_before,
                trace: out.trace,
                violations: out.violations,
                kpi,
                similarity,
                nearest_row,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialSummary::from_records(scenario, records))
}
