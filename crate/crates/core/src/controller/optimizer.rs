use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::penalty::PenaltyModel;
use super::{DecisionVector, N_DV};
use crate::error::{Error, Result};
use crate::surrogate::Predictor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    /// Half-width of the box around the initial DV, relative to it.
    pub delta: f64,
    pub w_corr: f64,
    pub w_operate: f64,
    /// Generations.
    pub iterations: usize,
    pub population: usize,
    pub hard_penalty: f64,
    pub mutation: f64,
    pub crossover: f64,
    pub seed: u64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            delta: 0.05,
            w_corr: 0.20,
            w_operate: 0.15,
            iterations: 35,
            population: 32,
            hard_penalty: 1e6,
            mutation: 0.7,
            crossover: 0.9,
            seed: 0,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid("delta must be positive"));
        }
        if !(self.w_corr >= 0.0 && self.w_operate >= 0.0) {
            return Err(Error::invalid("penalty weights must be non-negative"));
        }
        if self.population < 4 {
            return Err(Error::invalid("differential evolution needs a population of at least 4"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("at least one iteration is required"));
        }
        if !(self.mutation > 0.0 && self.mutation <= 2.0) || !(0.0..=1.0).contains(&self.crossover) {
            return Err(Error::invalid("mutation must lie in (0, 2] and crossover in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// DV index, value, allowed interval.
    OutsideBox { index: usize, value: f64, lower: f64, upper: f64 },
    FuelIncrease { initial: f64, proposed: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::OutsideBox { index, value, lower, upper } => {
                write!(f, "{} = {value} outside [{lower}, {upper}]", DecisionVector::NAMES[*index])
            }
            Violation::FuelIncrease { initial, proposed } => {
                write!(f, "total fuel {proposed} exceeds initial {initial}")
            }
        }
    }
}

/// The ±delta box around `initial`, ordered correctly for negative entries.
pub fn bounds(initial: &[f64; N_DV], delta: f64) -> ([f64; N_DV], [f64; N_DV]) {
    let mut lo = [0.0; N_DV];
    let mut hi = [0.0; N_DV];
    for i in 0..N_DV {
        let a = initial[i] * (1.0 - delta);
        let b = initial[i] * (1.0 + delta);
        lo[i] = a.min(b);
        hi[i] = a.max(b);
    }
    (lo, hi)
}

/// Independent check of the hard constraints.
pub fn audit(dv: &[f64; N_DV], initial: &[f64; N_DV], delta: f64) -> Vec<Violation> {
    let (lo, hi) = bounds(initial, delta);
    let mut out: Vec<Violation> = (0..N_DV)
        .filter(|&i| !(dv[i] >= lo[i] && dv[i] <= hi[i]))
        .map(|i| Violation::OutsideBox { index: i, value: dv[i], lower: lo[i], upper: hi[i] })
        .collect();
    let f0 = DecisionVector::fuel_sum(initial);
    let f1 = DecisionVector::fuel_sum(dv);
    // written negated so a NaN sum is a violation
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(f1 <= f0) {
        out.push(Violation::FuelIncrease { initial: f0, proposed: f1 });
    }
    out
}

/// `J = f(dv) + W_corr P_corr(dv) + W_operate P_operate(dv)`, plus the hard
/// penalty when the box or the fuel ceiling is violated.
pub struct ControlProblem<'a> {
    pub surrogate: &'a dyn Predictor,
    pub corr: Option<&'a PenaltyModel>,
    pub operate: Option<&'a PenaltyModel>,
    pub config: ControllerConfig,
    pub initial: [f64; N_DV],
}

impl<'a> ControlProblem<'a> {
    pub fn new(
        surrogate: &'a dyn Predictor,
        corr: Option<&'a PenaltyModel>,
        operate: Option<&'a PenaltyModel>,
        config: ControllerConfig,
        initial: [f64; N_DV],
    ) -> Result<Self> {
        config.validate()?;
        if surrogate.n_features() != N_DV {
            return Err(Error::Schema(format!("surrogate takes {} inputs, the controller has {N_DV} DVs", surrogate.n_features())));
        }
        for m in [corr, operate].into_iter().flatten() {
            if m.dim() != N_DV {
                return Err(Error::Schema(format!("penalty model has {} variables, expected {N_DV}", m.dim())));
            }
        }
        if initial.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("initial DV is not finite"));
        }
        Ok(Self { surrogate, corr, operate, config, initial })
    }

    pub fn soft_objective(&self, dv: &[f64; N_DV]) -> f64 {
        let mut j = self.surrogate.predict_row(dv);
        if let Some(m) = self.corr {
            if self.config.w_corr != 0.0 {
                j += self.config.w_corr * m.penalty(dv);
            }
        }
        if let Some(m) = self.operate {
            if self.config.w_operate != 0.0 {
                j += self.config.w_operate * m.penalty(dv);
            }
        }
        j
    }

    pub fn objective(&self, dv: &[f64; N_DV]) -> f64 {
        let j = self.soft_objective(dv);
        if audit(dv, &self.initial, self.config.delta).is_empty() {
            j
        } else {
            j + self.config.hard_penalty
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationOutcome {
    pub best: [f64; N_DV],
    pub objective_initial: f64,
    pub objective_best: f64,
    /// Best-so-far objective after each generation.
    pub trace: Vec<f64>,
    /// Hard-constraint audit of `best`; empty when feasible.
    pub violations: Vec<Violation>,
    pub evaluations: usize,
}

/// Differential evolution, rand/1/bin, with mutants clipped to the box and
/// the population drawn uniformly inside it. The initial DV competes with the
/// final population, so the result never scores worse than the status quo.
pub fn optimize(problem: &ControlProblem<'_>) -> OptimizationOutcome {
    let cfg = problem.config;
    let (lo, hi) = bounds(&problem.initial, cfg.delta);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let np = cfg.population;
    let mut pop: Vec<[f64; N_DV]> = (0..np)
        .map(|_| {
            let mut x = [0.0; N_DV];
            for i in 0..N_DV {
                x[i] = if hi[i] > lo[i] { rng.random_range(lo[i]..=hi[i]) } else { lo[i] };
            }
            x
        })
        .collect();
    let mut fit: Vec<f64> = pop.iter().map(|x| problem.objective(x)).collect();
    let mut evaluations = np;
    let mut trace = Vec::with_capacity(cfg.iterations);
    let mut best_so_far = fit.iter().copied().fold(f64::INFINITY, f64::min);

    for _ in 0..cfg.iterations {
        for i in 0..np {
            // three distinct members other than i
            let picks: Vec<usize> =
                sample(&mut rng, np - 1, 3).into_iter().map(|k| if k >= i { k + 1 } else { k }).collect();
            let (a, b, c) = (picks[0], picks[1], picks[2]);
            let forced = rng.random_range(0..N_DV);
            let mut trial = pop[i];
            for d in 0..N_DV {
                if d == forced || rng.random::<f64>() < cfg.crossover {
                    let m = pop[a][d] + cfg.mutation * (pop[b][d] - pop[c][d]);
                    trial[d] = m.clamp(lo[d], hi[d]);
                }
            }
            let f = problem.objective(&trial);
            evaluations += 1;
            if f <= fit[i] {
                pop[i] = trial;
                fit[i] = f;
            }
        }
        best_so_far = best_so_far.min(fit.iter().copied().fold(f64::INFINITY, f64::min));
        trace.push(best_so_far);
    }

    let objective_initial = problem.objective(&problem.initial);
    let k = (0..np).fold(0, |k, i| if fit[i] < fit[k] { i } else { k });
    let (best, objective_best) = if fit[k] < objective_initial && fit[k] < cfg.hard_penalty {
        (pop[k], fit[k])
    } else {
        (problem.initial, objective_initial)
    };
    let violations = audit(&best, &problem.initial, cfg.delta);
    OptimizationOutcome { best, objective_initial, objective_best, trace, violations, evaluations }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fn7<F: Fn(&[f64]) -> f64 + Sync>(F);

    impl<F: Fn(&[f64]) -> f64 + Sync> Predictor for Fn7<F> {
        fn n_features(&self) -> usize {
            N_DV
        }
        fn predict_row(&self, x: &[f64]) -> f64 {
            (self.0)(x)
        }
    }

    const X0: [f64; N_DV] = [28000.0, 210000.0, 72.0, 14.5, 9.8, 410.0, 4.2];

    #[test]
    fn interior_minimum_at_initial_is_kept() {
        let f = Fn7(|x: &[f64]| 300.0 + x.iter().zip(X0).map(|(v, c)| ((v - c) / c).powi(2) * 1e4).sum::<f64>());
        let p = ControlProblem::new(&f, None, None, ControllerConfig::default(), X0).unwrap();
        let out = optimize(&p);
        for i in 0..N_DV {
            assert!(((out.best[i] - X0[i]) / X0[i]).abs() <= 1e-3);
        }
    }

    #[test]
    fn increasing_linear_goes_to_lower_corner() {
        let f = Fn7(|x: &[f64]| x.iter().zip(X0).map(|(v, c)| v / c).sum::<f64>());
        let p = ControlProblem::new(&f, None, None, ControllerConfig { iterations: 80, ..Default::default() }, X0).unwrap();
        let out = optimize(&p);
        let (lo, _) = bounds(&X0, 0.05);
        for i in 0..N_DV {
            assert!((out.best[i] - lo[i]).abs() <= 1e-3 * X0[i], "dv {i}: {} vs {}", out.best[i], lo[i]);
        }
        assert!(out.violations.is_empty());
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(out.trace.len(), 80);
    }

    #[test]
    fn fuel_ceiling_holds_when_fuel_is_rewarded() {
        // more fuel lowers the objective, so the optimum sits on the ceiling
        let f = Fn7(|x: &[f64]| 100.0 - x[3] - 2.0 * x[4]);
        let p = ControlProblem::new(&f, None, None, ControllerConfig::default(), X0).unwrap();
        let out = optimize(&p);
        assert!(DecisionVector::fuel_sum(&out.best) <= DecisionVector::fuel_sum(&X0));
        assert!(out.violations.is_empty());
    }

    #[test]
    fn objective_cases() {
        let f = Fn7(|x: &[f64]| x[0] / 100.0);
        let p = ControlProblem::new(&f, None, None, ControllerConfig::default(), X0).unwrap();
        assert_eq!(p.objective(&X0), 280.0);
        let mut up = X0;
        up[3] *= 1.01 * (X0[3] + X0[4]) / X0[3] - X0[4] / X0[3];
        assert!(p.objective(&up) >= 1e6);
        let mut neg = X0;
        neg[6] = -4.2;
        let (lo, hi) = bounds(&neg, 0.05);
        assert!(lo[6] < hi[6] && lo[6] < -4.2 && hi[6] > -4.2);
    }

    #[test]
    fn wrong_arity_rejected() {
        struct Two;
        impl Predictor for Two {
            fn n_features(&self) -> usize {
                2
            }
            fn predict_row(&self, _: &[f64]) -> f64 {
                0.0
            }
        }
        assert!(ControlProblem::new(&Two, None, None, ControllerConfig::default(), X0).is_err());
    }
}
