use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use kilnopt_bench::{dv_problem, plant};
use kilnopt_core::controller::{optimize, ControlProblem, ControllerConfig, PenaltyModel, DEFAULT_RIDGE};
use kilnopt_core::explain::{exact_shapley, sample_background};
use kilnopt_core::surrogate::{GbtParams, Regressor, RegressorSpec};

fn gbt_fit(c: &mut Criterion) {
    let ds = plant(10_000);
    let (x, y, names) = dv_problem(&ds);
    let spec = RegressorSpec::gbt(GbtParams { n_rounds: 100, ..GbtParams::default() });
    let mut g = c.benchmark_group("gbt");
    g.sample_size(10);
    g.bench_function("fit 10k x 7, 100 rounds", |b| b.iter(|| Regressor::fit(&spec, black_box(x.view()), &y, &names).unwrap()));
    g.finish();
}

fn shapley(c: &mut Criterion) {
    let ds = plant(5_000);
    let (x, y, names) = dv_problem(&ds);
    let model = Regressor::fit(&RegressorSpec::gbt(GbtParams { n_rounds: 100, ..GbtParams::default() }), x.view(), &y, &names).unwrap();
    let background = sample_background(x.view(), 64, 1);
    let row = x.row(100).to_vec();
    c.bench_function("exact shapley, 7 features, 64 background rows", |b| {
        b.iter(|| exact_shapley(&model, black_box(&row), background.view()).unwrap())
    });
}

fn differential_evolution(c: &mut Criterion) {
    let ds = plant(5_000);
    let (x, y, names) = dv_problem(&ds);
    let model = Regressor::fit(&RegressorSpec::gbt(GbtParams { n_rounds: 100, ..GbtParams::default() }), x.view(), &y, &names).unwrap();
    let corr = PenaltyModel::fit(x.view(), DEFAULT_RIDGE).unwrap();
    let mut initial = [0.0; 7];
    initial.iter_mut().zip(x.row(200)).for_each(|(a, b)| *a = *b);
    let problem = ControlProblem::new(&model, Some(&corr), Some(&corr), ControllerConfig::default(), initial).unwrap();
    let mut g = c.benchmark_group("controller");
    g.sample_size(10);
    g.bench_function("DE, default budget", |b| b.iter(|| optimize(black_box(&problem))));
    g.finish();
}

criterion_group!(benches, gbt_fit, shapley, differential_evolution);
criterion_main!(benches);
