use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use kilnopt_core::controller::{run_trials, ControllerModels, DecisionVector, Scenario, TrialSummary};
use kilnopt_core::data::{generate_synthetic_plant, load_csv, write_csv, CsvSchema, SyntheticPlantSpec};
use kilnopt_core::econ::annual_summary;
use kilnopt_core::explain::{correlation_signs, directional_impact, explain_rows, sample_background};
use kilnopt_core::forecast::run_channel;
use kilnopt_core::preprocess::{consistency_check, outlier_filter, physical_validation, run_pipeline, PhysicalRuleSet, PreprocessConfig};
use kilnopt_core::surrogate::{
    benchmark, cross_validate, holdout_split, save_model, CvMode, Design, ForestParams, GbtParams, Predictor, Regressor,
    RegressorSpec,
};
use kilnopt_core::temporal::{build_eph_matrix, sweep_tau, tau_curve_csv};
use kilnopt_core::{MetricReport, TimeSeriesDataset};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{controller_gbt, default_gbt, spec_from_table, spec_or, RunConfig};
use crate::manifest::{read_manifest, RunRecord};
use crate::svg;
use crate::UsageError;

/// Everything a subcommand needs after flags, environment and config file
/// have been merged.
pub struct Ctx {
    pub cfg: RunConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub input: Option<PathBuf>,
    pub threads: usize,
    pub args: Vec<String>,
}

impl Ctx {
    fn record(&self, command: &str) -> Result<RunRecord> {
        RunRecord::new(&self.out, command, self.args.clone(), self.seed, self.threads, &self.cfg.canonical())
    }

    fn load_input(&self, rec: &mut RunRecord) -> Result<TimeSeriesDataset> {
        let path = self.input.as_ref().ok_or_else(|| UsageError("this command needs --input <csv> (or `input` in the config)".into()))?;
        load(path, rec)
    }
}

fn load(path: &Path, rec: &mut RunRecord) -> Result<TimeSeriesDataset> {
    rec.input(path)?;
    load_csv(path, &CsvSchema::default()).with_context(|| format!("loading {}", path.display()))
}

fn rules_for(ctx: &Ctx, ds: &TimeSeriesDataset, rec: &mut RunRecord) -> Result<PhysicalRuleSet> {
    match &ctx.cfg.preprocess.rules {
        Some(p) => {
            rec.input(p)?;
            Ok(PhysicalRuleSet::parse(&std::fs::read_to_string(p)?)?)
        }
        None => Ok(PhysicalRuleSet::default_for(ds)),
    }
}

/// Row stages only (consistency, physical limits, percentile bands); the
/// column set is left intact for modules that need specific parameters.
fn clean_rows(ctx: &Ctx, ds: &TimeSeriesDataset, rec: &mut RunRecord) -> Result<TimeSeriesDataset> {
    let rules = rules_for(ctx, ds, rec)?;
    let (d, _) = consistency_check(ds);
    let (d, _) = physical_validation(&d, &rules)?;
    let (d, _) = outlier_filter(&d, ctx.cfg.preprocess.lower_percentile, ctx.cfg.preprocess.upper_percentile)?;
    Ok(d)
}

pub fn generate(ctx: &Ctx, minutes: Option<usize>) -> Result<()> {
    let mut rec = ctx.record("generate")?;
    let g = &ctx.cfg.generate;
    let spec = SyntheticPlantSpec {
        seed: ctx.seed,
        duration_minutes: minutes.unwrap_or(g.minutes),
        n_params: g.n_params,
        stress_fraction: g.stress_fraction,
        variability: g.variability,
        ..SyntheticPlantSpec::default()
    };
    let ds = generate_synthetic_plant(&spec)?;
    let path = ctx.out.join("plant.csv");
    write_csv(&ds, &path)?;
    rec.record(&path)?;
    println!("wrote {} rows x {} parameters to {}", ds.n_rows(), ds.n_params(), path.display());
    rec.finish()?;
    Ok(())
}

pub fn preprocess(ctx: &Ctx) -> Result<()> {
    let mut rec = ctx.record("preprocess")?;
    let ds = ctx.load_input(&mut rec)?;
    let p = &ctx.cfg.preprocess;
    let rules = rules_for(ctx, &ds, &mut rec)?;
    let cfg = PreprocessConfig {
        rules: rules.clone(),
        lower_percentile: p.lower_percentile,
        upper_percentile: p.upper_percentile,
        target: p.target.clone(),
        correlation_threshold: p.correlation_threshold,
    };
    let (clean, report) = run_pipeline(&ds, &cfg)?;
    let path = ctx.out.join("clean.csv");
    write_csv(&clean, &path)?;
    rec.record(&path)?;
    rec.write("rules.txt", rules.render())?;
    let table = report.to_table();
    rec.write("preprocess_report.txt", &table)?;
    print!("{table}");
    rec.finish()?;
    Ok(())
}

fn design_for(ds: &TimeSeriesDataset, target: &str, tau: usize) -> Result<Design> {
    // tau = 0 is the instantaneous design
    Ok(build_eph_matrix(ds, target, tau)?)
}

fn metrics_line(name: &str, m: &MetricReport) -> String {
    format!("{name:<24} MAPE {:>8.3}%  MAE {:>10.4}  R2 {:>7.4}  n {}\n", m.mape, m.mae, m.r2, m.n)
}

pub fn train(ctx: &Ctx) -> Result<()> {
    let mut rec = ctx.record("train")?;
    let ds = ctx.load_input(&mut rec)?;
    let t = &ctx.cfg.train;
    let spec = spec_or(&t.spec, default_gbt())?.with_seed(ctx.seed);
    let design = design_for(&ds, &t.target, t.tau)?;
    let mode = match t.cv_mode.as_str() {
        "shuffled" => CvMode::Shuffled,
        "chronological" => CvMode::Chronological,
        other => return Err(UsageError(format!("cv_mode must be `shuffled` or `chronological`, got `{other}`")).into()),
    };

    let (train_rows, test_rows) = holdout_split(design.n_rows(), t.test_fraction, ctx.seed)?;
    let tr = design.select_rows(&train_rows);
    let te = design.select_rows(&test_rows);
    let holdout = Regressor::fit_design(&spec, &tr)?;
    let m_train = MetricReport::evaluate(&tr.y, &holdout.predict_rows(tr.x.view()))?;
    let m_test = MetricReport::evaluate(&te.y, &holdout.predict_rows(te.x.view()))?;
    let cv = cross_validate(&spec, &design, t.cv_folds, mode, ctx.seed)?;
    let model = Regressor::fit_design(&spec, &design)?;
    let path = ctx.out.join("model.txt");
    save_model(&model, &path)?;
    rec.record(&path)?;

    let mut s = String::new();
    let _ = writeln!(s, "model    {}", spec.label());
    let _ = writeln!(s, "target   {}  tau {}  features {}", t.target, t.tau, design.feature_names.len());
    s.push_str(&metrics_line("hold-out train", &m_train));
    s.push_str(&metrics_line("hold-out test", &m_test));
    s.push_str(&metrics_line(&format!("{}-fold CV (pooled)", t.cv_folds), &cv.pooled));
    let folds: Vec<String> = cv.fold_mape.iter().map(|v| format!("{v:.3}")).collect();
    let _ = writeln!(s, "fold MAPE [%]            {}", folds.join(" "));
    rec.write("train_metrics.txt", &s)?;
    print!("{s}");
    rec.finish()?;
    Ok(())
}

fn default_benchmark_specs() -> Vec<RegressorSpec> {
    vec![
        RegressorSpec::linear(),
        RegressorSpec::ridge(1.0),
        RegressorSpec::lasso(0.01),
        RegressorSpec::forest(ForestParams::default()),
        RegressorSpec::gbt(GbtParams::default()),
    ]
}

pub fn run_benchmark(ctx: &Ctx) -> Result<()> {
    let b = &ctx.cfg.benchmark;
    let specs = match &b.specs {
        None => default_benchmark_specs(),
        Some(list) if list.is_empty() => {
            return Err(UsageError("benchmark needs at least one model: add [[benchmark.specs]] tables or remove `specs`".into()).into())
        }
        Some(list) => list.iter().map(spec_from_table).collect::<Result<Vec<_>>>()?,
    };
    let specs: Vec<RegressorSpec> = specs.into_iter().map(|s| s.with_seed(ctx.seed)).collect();
    let mut rec = ctx.record("benchmark")?;
    let ds = ctx.load_input(&mut rec)?;
    let design = design_for(&ds, &b.target, b.tau)?;
    let result = benchmark(&specs, &design, b.n_seeds, b.test_fraction)?;
    rec.write("benchmark.csv", result.to_csv())?;
    let bars: Vec<(String, f64, Option<f64>)> =
        result.scores.iter().map(|a| (a.spec.family().to_string(), a.mape_mean, Some(a.mape_std))).collect();
    rec.write("benchmark.svg", svg::bar_chart(&format!("{} test MAPE over {} seeds", b.target, b.n_seeds), "MAPE [%]", &bars))?;
    for a in &result.scores {
        println!("{:<60} MAPE {:>8.3} ± {:.3}%  R2 {:.4}", a.name, a.mape_mean, a.mape_std, a.r2_mean);
    }
    println!("winner: {}", result.winner);
    rec.finish()?;
    Ok(())
}

pub fn run_sweep_tau(ctx: &Ctx) -> Result<()> {
    let mut rec = ctx.record("sweep-tau")?;
    let ds = ctx.load_input(&mut rec)?;
    let s = &ctx.cfg.sweep_tau;
    let spec = spec_or(&s.spec, RegressorSpec::ridge(1e-3))?.with_seed(ctx.seed);
    let points = sweep_tau(&ds, &s.target, &spec, &s.taus, s.test_fraction)?;
    rec.write("tau_curve.csv", tau_curve_csv(&points))?;
    let line: Vec<(f64, f64)> = points.iter().map(|p| (p.tau as f64, p.mape)).collect();
    rec.write("tau_curve.svg", svg::line_chart(&format!("{} test MAPE vs history length", s.target), "tau [min]", "MAPE [%]", &[("MAPE", line)]))?;
    for p in &points {
        println!("tau {:>3}  D {:>5}  MAPE {:>8.3}%  MAE {:>9.4}  fit {:.2}s", p.tau, p.dimension, p.mape, p.mae, p.train_seconds);
    }
    rec.finish()?;
    Ok(())
}

pub fn run_forecast(ctx: &Ctx, channels: &[String]) -> Result<()> {
    let mut rec = ctx.record("forecast")?;
    let ds = ctx.load_input(&mut rec)?;
    let f = &ctx.cfg.forecast;
    let cfg = f.to_config(ctx.seed)?;
    let channels = if channels.is_empty() { f.channels.clone() } else { channels.to_vec() };
    let mut summary = String::from("channel  effective horizon [min]  APE@1 [%]  APE@H multi [%]  APE@H recursive [%]  band coverage\n");
    for ch in &channels {
        let r = run_channel(&ds, ch, &cfg)?;
        let h = cfg.horizon;
        let mut csv = String::from("step,multi_step_ape,recursive_ape\n");
        for k in 0..h {
            let _ = writeln!(csv, "{},{},{}", k + 1, r.multi_curve.per_step_ape[k], r.single_curve.per_step_ape[k]);
        }
        let lower = ch.to_lowercase();
        rec.write(&format!("forecast_{lower}.csv"), csv)?;
        let curve = |c: &[f64]| c.iter().enumerate().map(|(k, v)| ((k + 1) as f64, *v)).collect::<Vec<_>>();
        rec.write(
            &format!("forecast_{lower}.svg"),
            svg::line_chart(
                &format!("{ch} forecast error by lead time"),
                "lead time [min]",
                "APE [%]",
                &[("multi-step", curve(&r.multi_curve.per_step_ape)), ("recursive", curve(&r.single_curve.per_step_ape))],
            ),
        )?;
        if let Some(b) = &r.bands {
            let mut bands = String::from("step,lower,upper\n");
            for k in 0..h {
                let _ = writeln!(bands, "{},{},{}", k + 1, b.lower[k], b.upper[k]);
            }
            rec.write(&format!("bands_{lower}.csv"), bands)?;
        }
        let coverage = r.bands.as_ref().map_or_else(|| "-".to_string(), |b| format!("{:.3}", b.coverage(&r.multi, &r.samples.test)));
        let _ = writeln!(
            summary,
            "{ch:<8} {:>23}  {:>9.3}  {:>15.3}  {:>19.3}  {coverage}",
            r.multi_curve.effective_horizon,
            r.multi_curve.per_step_ape[0],
            r.multi_curve.per_step_ape[h - 1],
            r.single_curve.per_step_ape[h - 1]
        );
        if let Some(w) = &r.multi_curve.warning {
            let _ = writeln!(summary, "  warning: {w}");
        }
    }
    rec.write("forecast_summary.txt", &summary)?;
    print!("{summary}");
    rec.finish()?;
    Ok(())
}

fn trials_csv(summary: &TrialSummary) -> String {
    let mut s = String::from("row,timestamp,nox_measured,nox_before,nox_after,reduction_percent,kpi,flow_change_percent,fcao,similarity,nearest_row,violations");
    for name in DecisionVector::NAMES {
        let _ = write!(s, ",{name}_initial,{name}_best");
    }
    s.push('\n');
    for r in &summary.records {
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.row,
            kilnopt_core::data::format_timestamp(r.timestamp),
            r.nox_measured,
            r.nox_before,
            r.nox_after,
            r.reduction_percent,
            r.kpi.reason().replace(',', ";"),
            r.kpi.flow_change_percent,
            r.kpi.fcao,
            r.similarity,
            r.nearest_row,
            r.violations.len()
        );
        for i in 0..DecisionVector::NAMES.len() {
            let _ = write!(s, ",{},{}", r.initial[i], r.best[i]);
        }
        s.push('\n');
    }
    s
}

pub fn optimize(ctx: &Ctx, trials: Option<usize>, scenario: Option<String>) -> Result<()> {
    let mut rec = ctx.record("optimize")?;
    let raw = ctx.load_input(&mut rec)?;
    let c = &ctx.cfg.controller;
    let history = match &c.history {
        Some(p) => consistency_check(&load(p, &mut rec)?).0,
        None => consistency_check(&raw).0,
    };
    let clean = clean_rows(ctx, &raw, &mut rec)?;
    let cut = ((clean.n_rows() as f64) * c.train_fraction).round() as usize;
    if cut == 0 || cut >= clean.n_rows() {
        return Err(kilnopt_core::Error::InvalidInput(format!("train_fraction {} leaves no rows on one side", c.train_fraction)).into());
    }
    let fit_rows = clean.slice_rows(0..cut);
    let test_rows = clean.slice_rows(cut..clean.n_rows());
    let spec = spec_or(&c.spec, controller_gbt())?.with_seed(ctx.seed);
    let models = ControllerModels::fit(&history, &fit_rows, &spec, c.ridge)?;
    let cfg = c.to_config(ctx.seed)?;
    let n = trials.unwrap_or(c.trials);
    let which = scenario.unwrap_or_else(|| c.scenario.clone());
    let scenarios = match which.to_ascii_lowercase().as_str() {
        "both" => vec![Scenario::Normal, Scenario::Stress],
        other => vec![Scenario::parse(other)?],
    };
    let mut text = format!("controller surrogate {}\nfit rows {}  test rows {}\n\n", spec.label(), fit_rows.n_rows(), test_rows.n_rows());
    for sc in scenarios {
        let summary = run_trials(&models, &test_rows, sc, n, &cfg)?;
        let name = sc.name().to_lowercase();
        rec.write(&format!("trials_{name}.csv"), trials_csv(&summary))?;
        if let Some(first) = summary.records.first() {
            let line: Vec<(f64, f64)> = first.trace.iter().enumerate().map(|(k, v)| ((k + 1) as f64, *v)).collect();
            rec.write(
                &format!("convergence_{name}.svg"),
                svg::line_chart(&format!("{} trial objective, first trial", sc.name()), "generation", "best objective", &[("J", line)]),
            )?;
        }
        text.push_str(&summary.to_table());
        text.push('\n');
    }
    rec.write("controller_summary.txt", &text)?;
    print!("{text}");
    rec.finish()?;
    Ok(())
}

pub fn explain(ctx: &Ctx) -> Result<()> {
    let mut rec = ctx.record("explain")?;
    let raw = ctx.load_input(&mut rec)?;
    let clean = clean_rows(ctx, &raw, &mut rec)?;
    let e = &ctx.cfg.explain;
    let x = clean.param_matrix(&DecisionVector::NAMES)?;
    let y = clean.channel_values(&e.target)?;
    let names: Vec<String> = DecisionVector::NAMES.iter().map(|s| s.to_string()).collect();
    let spec = spec_or(&e.spec, controller_gbt())?.with_seed(ctx.seed);
    let model = Regressor::fit(&spec, x.view(), y, &names)?;
    let background = sample_background(x.view(), e.background.min(kilnopt_core::explain::MAX_BACKGROUND_ROWS), ctx.seed);
    let n = e.rows.min(x.nrows());
    let mut idx = sample(&mut ChaCha8Rng::seed_from_u64(ctx.seed.wrapping_add(1)), x.nrows(), n).into_vec();
    idx.sort_unstable();
    let rows = x.select(ndarray::Axis(0), &idx);
    let attributions = explain_rows(&model, rows.view(), background.view())?;

    let mut csv = String::from("row");
    for nm in &names {
        let _ = write!(csv, ",phi_{nm}");
    }
    csv.push_str(",baseline,prediction\n");
    for (r, a) in idx.iter().zip(&attributions) {
        let _ = write!(csv, "{r}");
        for v in &a.phi {
            let _ = write!(csv, ",{v}");
        }
        let _ = writeln!(csv, ",{},{}", a.baseline, a.prediction);
    }
    rec.write("shap.csv", csv)?;

    let directions = directional_impact(rows.view(), &attributions)?;
    let ys: Vec<f64> = idx.iter().map(|&r| y[r]).collect();
    let pearson = correlation_signs(rows.view(), &ys);
    let opt = |v: Option<f64>| v.map_or_else(|| String::from(""), |x| format!("{x}"));
    let mut dir_csv = String::from("feature,mean_abs_phi,shap_r,shap_sign,pearson_r,pearson_sign,agree\n");
    let mut table = format!("{:<22}{:>14}{:>11}{:>14}{:>8}\n", "feature", "mean |phi|", "SHAP dir", "Pearson dir", "agree");
    let sign = |s: i8| match s {
        1 => "+",
        -1 => "-",
        _ => "0",
    };
    for (d, (pr, ps)) in directions.iter().zip(&pearson) {
        let agree = d.sign == *ps;
        let _ = writeln!(dir_csv, "{},{},{},{},{},{},{}", names[d.feature], d.mean_abs_phi, opt(d.r), d.sign, opt(*pr), ps, agree);
        let _ = writeln!(table, "{:<22}{:>14.4}{:>11}{:>14}{:>8}", names[d.feature], d.mean_abs_phi, sign(d.sign), sign(*ps), if agree { "yes" } else { "no" });
    }
    rec.write("directions.csv", dir_csv)?;
    let worst = attributions.iter().map(|a| a.efficiency_gap()).fold(0.0, f64::max);
    let _ = writeln!(table, "\n{} explanations, background {} rows, max |sum(phi) - (f(x) - baseline)| = {worst:.2e}", attributions.len(), background.nrows());
    rec.write("explain_summary.txt", &table)?;
    print!("{table}");
    rec.finish()?;
    Ok(())
}

pub fn econ(ctx: &Ctx) -> Result<()> {
    let mut rec = ctx.record("econ")?;
    let ds = ctx.load_input(&mut rec)?;
    let cfg = ctx.cfg.econ.to_config()?;
    let summary = annual_summary(&ds, &cfg)?;
    let mut text = format!(
        "{} one-minute rows annualized; flue gas {} Nm3/kg clinker (assumed)\n\n",
        ds.n_rows(),
        cfg.flue_gas_nm3_per_kg
    );
    text.push_str(&summary.to_table());
    rec.write("econ.txt", &text)?;
    rec.write("econ.csv", summary.to_csv())?;
    print!("{text}");
    rec.finish()?;
    Ok(())
}

/// Verifies every manifest in the output directory and writes `report.md`.
pub fn report(ctx: &Ctx) -> Result<()> {
    let mut manifests: Vec<PathBuf> = std::fs::read_dir(&ctx.out)
        .with_context(|| format!("reading {}", ctx.out.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("manifest-") && n.ends_with(".json")))
        .filter(|p| !p.ends_with("manifest-report.json"))
        .collect();
    manifests.sort();
    if manifests.is_empty() {
        return Err(UsageError(format!("no manifests in {}; run other subcommands first", ctx.out.display())).into());
    }
    let mut rec = ctx.record("report")?;
    let mut md = String::from("# kilnopt run report\n");
    let mut mismatches = 0;
    for path in &manifests {
        let m = read_manifest(path)?;
        let _ = writeln!(md, "\n## {}\n\n`kilnopt {}`  \nseed {}, threads {}, config sha256 `{}`\n", m.command, m.args.join(" "), m.seed, m.threads, &m.config_sha256[..16]);
        md.push_str("| file | bytes | sha256 | status |\n|---|---|---|---|\n");
        for o in &m.outputs {
            let status = match crate::manifest::digest(&ctx.out.join(&o.path)) {
                Ok(d) if d.sha256 == o.sha256 => "ok",
                Ok(_) => {
                    mismatches += 1;
                    "changed"
                }
                Err(_) => {
                    mismatches += 1;
                    "missing"
                }
            };
            let _ = writeln!(md, "| {} | {} | `{}` | {status} |", o.path, o.bytes, &o.sha256[..16]);
        }
        for o in m.outputs.iter().filter(|o| o.path.ends_with(".txt")) {
            if let Ok(text) = std::fs::read_to_string(ctx.out.join(&o.path)) {
                let _ = write!(md, "\n`{}`\n\n```\n{}```\n", o.path, text);
            }
        }
    }
    rec.write("report.md", &md)?;
    println!("{} manifests, {mismatches} artifact(s) changed or missing; wrote {}", manifests.len(), ctx.out.join("report.md").display());
    rec.finish()?;
    if mismatches > 0 {
        return Err(kilnopt_core::Error::InvalidInput(format!("{mismatches} artifact(s) no longer match their manifest")).into());
    }
    Ok(())
}
