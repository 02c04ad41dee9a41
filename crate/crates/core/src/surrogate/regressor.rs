use ndarray::{Array2, ArrayView2};

use super::ensemble::{Forest, Gbt};
use super::linear::{fit_lasso, fit_least_squares, LinearModel};
use super::spec::{ModelKind, RegressorSpec};
use crate::error::{Error, Result};

/// Anything that maps a feature row to a scalar.
pub trait Predictor: Sync {
    fn n_features(&self) -> usize;

    fn predict_row(&self, x: &[f64]) -> f64;

    fn predict_rows(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        let mut buf = vec![0.0; x.ncols()];
        x.rows()
            .into_iter()
            .map(|r| {
                buf.iter_mut().zip(r).for_each(|(b, v)| *b = *v);
                self.predict_row(&buf)
            })
            .collect()
    }
}

/// Feature matrix, target and row timestamps, with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub x: Array2<f64>,
    pub y: Vec<f64>,
    pub feature_names: Vec<String>,
    pub timestamps: Vec<i64>,
}

impl Design {
    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Design {
        Design {
            x: self.x.select(ndarray::Axis(0), rows),
            y: rows.iter().map(|&r| self.y[r]).collect(),
            feature_names: self.feature_names.clone(),
            timestamps: rows.iter().map(|&r| self.timestamps[r]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Linear(LinearModel),
    Forest(Forest),
    Gbt(Gbt),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regressor {
    pub(crate) spec: RegressorSpec,
    pub(crate) schema: Vec<String>,
    pub(crate) model: FittedModel,
}

impl Regressor {
    pub fn fit(spec: &RegressorSpec, x: ArrayView2<'_, f64>, y: &[f64], feature_names: &[String]) -> Result<Self> {
        spec.validate()?;
        let (n, p) = x.dim();
        if n != y.len() {
            return Err(Error::invalid(format!("{n} feature rows but {} targets", y.len())));
        }
        if p != feature_names.len() {
            return Err(Error::invalid(format!("{p} feature columns but {} names", feature_names.len())));
        }
        if n == 0 || p == 0 {
            return Err(Error::invalid("training needs at least one row and one feature"));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::invalid("training data contains missing or non-finite values"));
        }
        let model = match &spec.kind {
            ModelKind::Linear => FittedModel::Linear(fit_least_squares(x, y, 0.0)?),
            ModelKind::Ridge { lambda } => FittedModel::Linear(fit_least_squares(x, y, *lambda)?),
            ModelKind::Lasso { lambda } => FittedModel::Linear(fit_lasso(x, y, *lambda)?.0),
            ModelKind::RandomForest(p) => FittedModel::Forest(Forest::fit(x, y, p, spec.seed)),
            ModelKind::Gbt(p) => FittedModel::Gbt(Gbt::fit(x, y, p, spec.seed)),
        };
        Ok(Self { spec: *spec, schema: feature_names.to_vec(), model })
    }

    pub fn fit_design(spec: &RegressorSpec, design: &Design) -> Result<Self> {
        Self::fit(spec, design.x.view(), &design.y, &design.feature_names)
    }

    pub fn spec(&self) -> &RegressorSpec {
        &self.spec
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn model(&self) -> &FittedModel {
        &self.model
    }

    pub fn check_schema(&self, names: &[String]) -> Result<()> {
        if names != self.schema.as_slice() {
            let first = names.iter().zip(&self.schema).position(|(a, b)| a != b).unwrap_or(names.len().min(self.schema.len()));
            return Err(Error::Schema(format!(
                "model expects {} features, got {}; first difference at position {first}",
                self.schema.len(),
                names.len()
            )));
        }
        Ok(())
    }

    /// Predicts after checking that the columns match the training schema.
    pub fn predict(&self, x: ArrayView2<'_, f64>, feature_names: &[String]) -> Result<Vec<f64>> {
        self.check_schema(feature_names)?;
        if x.ncols() != self.schema.len() {
            return Err(Error::Schema(format!("{} columns for a {}-feature model", x.ncols(), self.schema.len())));
        }
        Ok(self.predict_rows(x))
    }

    pub fn predict_design(&self, design: &Design) -> Result<Vec<f64>> {
        self.predict(design.x.view(), &design.feature_names)
    }
}

impl Predictor for Regressor {
    fn n_features(&self) -> usize {
        self.schema.len()
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        match &self.model {
            FittedModel::Linear(m) => m.predict_row(x),
            FittedModel::Forest(m) => m.predict_row(x),
            FittedModel::Gbt(m) => m.predict_row(x),
        }
    }
}

impl Predictor for LinearModel {
    fn n_features(&self) -> usize {
        self.coef.len()
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        LinearModel::predict_row(self, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::spec::{ForestParams, GbtParams};
    use ndarray::Array2;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn schema_mismatch_rejected() {
        let x = Array2::from_shape_fn((20, 2), |(i, j)| (i * (j + 1)) as f64 + (i % 3) as f64 * j as f64);
        let y: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let m = Regressor::fit(&RegressorSpec::ridge(0.1), x.view(), &y, &names(2)).unwrap();
        assert!(m.predict(x.view(), &names(2)).is_ok());
        let swapped = vec!["f1".to_string(), "f0".to_string()];
        assert!(matches!(m.predict(x.view(), &swapped), Err(Error::Schema(_))));
        assert!(m.predict(x.view(), &names(3)).is_err());
    }

    #[test]
    fn non_finite_training_data_rejected() {
        let mut x = Array2::from_elem((5, 1), 1.0);
        x[[2, 0]] = f64::NAN;
        assert!(Regressor::fit(&RegressorSpec::linear(), x.view(), &[1.0; 5], &names(1)).is_err());
    }

    #[test]
    fn repeated_fit_is_identical() {
        let x = Array2::from_shape_fn((150, 3), |(i, j)| ((i * 31 + j * 17) % 53) as f64);
        let y: Vec<f64> = (0..150).map(|i| (x[[i, 0]] - x[[i, 2]]).abs() + x[[i, 1]]).collect();
        for spec in [
            RegressorSpec::gbt(GbtParams { n_rounds: 30, ..Default::default() }).with_seed(4),
            RegressorSpec::forest(ForestParams { n_trees: 5, ..Default::default() }).with_seed(4),
        ] {
            let a = Regressor::fit(&spec, x.view(), &y, &names(3)).unwrap();
            let b = Regressor::fit(&spec, x.view(), &y, &names(3)).unwrap();
            assert_eq!(a.predict_rows(x.view()), b.predict_rows(x.view()));
            assert_eq!(a.predict_rows(x.view()), a.predict_rows(x.view()));
        }
    }
}
