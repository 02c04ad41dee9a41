//! Tabular regressors (linear family, random forest, gradient boosting),
//! cross-validation, the seeded benchmark harness and model persistence.

mod ensemble;
mod linear;
mod persist;
mod regressor;
mod spec;
mod tree;
mod validation;

pub use ensemble::{Forest, Gbt};
pub use linear::{fit_lasso, fit_least_squares, LinearModel, LASSO_MAX_SWEEPS, LASSO_TOLERANCE};
pub use persist::{from_text, load_model, save_model, to_text, FORMAT_VERSION};
pub use regressor::{Design, FittedModel, Predictor, Regressor};
pub use spec::{Family, ForestParams, GbtParams, ModelKind, RegressorSpec};
pub use tree::{Node, Tree, MAX_BINS};
pub use validation::{
    benchmark, cross_validate, cv_folds, grid_search, holdout_split, ArchitectureScore, BenchmarkResult, CvMode,
    CvReport, Fold,
};
