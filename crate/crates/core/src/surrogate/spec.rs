use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Linear,
    Ridge,
    Lasso,
    RandomForest,
    Gbt,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Linear => "LINEAR",
            Family::Ridge => "RIDGE",
            Family::Lasso => "LASSO",
            Family::RandomForest => "RANDOM_FOREST",
            Family::Gbt => "GBT",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LINEAR" => Ok(Family::Linear),
            "RIDGE" => Ok(Family::Ridge),
            "LASSO" => Ok(Family::Lasso),
            "RANDOM_FOREST" | "RF" => Ok(Family::RandomForest),
            "GBT" => Ok(Family::Gbt),
            other => Err(Error::invalid(format!("unknown model family `{other}`"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or hit `min_samples_leaf`.
    pub max_depth: Option<usize>,
    /// Fraction of features considered at each split.
    pub feature_subsample: f64,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: Some(12), feature_subsample: 0.5, min_samples_leaf: 5, bootstrap: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self { n_rounds: 400, learning_rate: 0.1, max_depth: Some(6), min_samples_leaf: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Linear,
    Ridge { lambda: f64 },
    /// Objective `1/(2n) |y - Xb - c|^2 + lambda |b|_1`.
    Lasso { lambda: f64 },
    RandomForest(ForestParams),
    Gbt(GbtParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressorSpec {
    pub kind: ModelKind,
    pub seed: u64,
}

impl RegressorSpec {
    pub fn linear() -> Self {
        Self { kind: ModelKind::Linear, seed: 0 }
    }

    pub fn ridge(lambda: f64) -> Self {
        Self { kind: ModelKind::Ridge { lambda }, seed: 0 }
    }

    pub fn lasso(lambda: f64) -> Self {
        Self { kind: ModelKind::Lasso { lambda }, seed: 0 }
    }

    pub fn forest(params: ForestParams) -> Self {
        Self { kind: ModelKind::RandomForest(params), seed: 0 }
    }

    pub fn gbt(params: GbtParams) -> Self {
        Self { kind: ModelKind::Gbt(params), seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn family(&self) -> Family {
        match self.kind {
            ModelKind::Linear => Family::Linear,
            ModelKind::Ridge { .. } => Family::Ridge,
            ModelKind::Lasso { .. } => Family::Lasso,
            ModelKind::RandomForest(_) => Family::RandomForest,
            ModelKind::Gbt(_) => Family::Gbt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(format!("{}: {m}", self.family())));
        match self.kind {
            ModelKind::Linear => Ok(()),
            ModelKind::Ridge { lambda } | ModelKind::Lasso { lambda } => {
                if lambda.is_finite() && lambda >= 0.0 {
                    Ok(())
                } else {
                    bad("penalty must be finite and non-negative")
                }
            }
            ModelKind::RandomForest(p) => {
                if p.n_trees == 0 {
                    bad("n_trees must be at least 1")
                } else if !(p.feature_subsample > 0.0 && p.feature_subsample <= 1.0) {
                    bad("feature_subsample must lie in (0, 1]")
                } else if p.min_samples_leaf == 0 || p.max_depth == Some(0) {
                    bad("min_samples_leaf and max_depth must be at least 1")
                } else {
                    Ok(())
                }
            }
            ModelKind::Gbt(p) => {
                if p.n_rounds == 0 {
                    bad("n_rounds must be at least 1")
                } else if !(p.learning_rate > 0.0 && p.learning_rate <= 1.0) {
                    bad("learning_rate must lie in (0, 1]")
                } else if p.min_samples_leaf == 0 || p.max_depth == Some(0) {
                    bad("min_samples_leaf and max_depth must be at least 1")
                } else {
                    Ok(())
                }
            }
        }
    }

    /// `key=value` pairs, family first. The inverse of [`RegressorSpec::from_pairs`].
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let depth = |d: Option<usize>| d.map_or_else(|| "none".to_string(), |d| d.to_string());
        let mut out = vec![("family".to_string(), self.family().to_string())];
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        match self.kind {
            ModelKind::Linear => {}
            ModelKind::Ridge { lambda } | ModelKind::Lasso { lambda } => push("lambda", lambda.to_string()),
            ModelKind::RandomForest(p) => {
                push("n_trees", p.n_trees.to_string());
                push("max_depth", depth(p.max_depth));
                push("feature_subsample", p.feature_subsample.to_string());
                push("min_samples_leaf", p.min_samples_leaf.to_string());
                push("bootstrap", p.bootstrap.to_string());
            }
            ModelKind::Gbt(p) => {
                push("n_rounds", p.n_rounds.to_string());
                push("learning_rate", p.learning_rate.to_string());
                push("max_depth", depth(p.max_depth));
                push("min_samples_leaf", p.min_samples_leaf.to_string());
            }
        }
        push("seed", self.seed.to_string());
        out
    }

    /// Builds a spec from `key=value` pairs. Unspecified hyperparameters take
    /// the family defaults; unknown keys are rejected.
    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let pairs: Vec<(&str, &str)> = pairs.into_iter().map(|(k, v)| (k.trim(), v.trim())).collect();
        let family = pairs
            .iter()
            .find(|(k, _)| *k == "family")
            .map(|(_, v)| Family::parse(v))
            .ok_or_else(|| Error::invalid("model spec needs a `family`"))??;
        let mut spec = match family {
            Family::Linear => Self::linear(),
            Family::Ridge => Self::ridge(1.0),
            Family::Lasso => Self::lasso(0.01),
            Family::RandomForest => Self::forest(ForestParams::default()),
            Family::Gbt => Self::gbt(GbtParams::default()),
        };
        for &(key, value) in &pairs {
            let num = |v: &str| v.parse::<f64>().map_err(|_| Error::invalid(format!("`{key}`: `{v}` is not a number")));
            let int = |v: &str| v.parse::<usize>().map_err(|_| Error::invalid(format!("`{key}`: `{v}` is not an integer")));
            let depth = |v: &str| if v == "none" { Ok(None) } else { int(v).map(Some) };
            match (&mut spec.kind, key) {
                (_, "family") => {}
                (_, "seed") => {
                    spec.seed = value.parse().map_err(|_| Error::invalid(format!("`seed`: `{value}` is not an integer")))?
                }
                (ModelKind::Ridge { lambda } | ModelKind::Lasso { lambda }, "lambda") => *lambda = num(value)?,
                (ModelKind::RandomForest(p), "n_trees") => p.n_trees = int(value)?,
                (ModelKind::RandomForest(p), "max_depth") => p.max_depth = depth(value)?,
                (ModelKind::RandomForest(p), "feature_subsample") => p.feature_subsample = num(value)?,
                (ModelKind::RandomForest(p), "min_samples_leaf") => p.min_samples_leaf = int(value)?,
                (ModelKind::RandomForest(p), "bootstrap") => {
                    p.bootstrap = value.parse().map_err(|_| Error::invalid(format!("`bootstrap`: `{value}`")))?
                }
                (ModelKind::Gbt(p), "n_rounds") => p.n_rounds = int(value)?,
                (ModelKind::Gbt(p), "learning_rate") => p.learning_rate = num(value)?,
                (ModelKind::Gbt(p), "max_depth") => p.max_depth = depth(value)?,
                (ModelKind::Gbt(p), "min_samples_leaf") => p.min_samples_leaf = int(value)?,
                _ => return Err(Error::invalid(format!("`{key}` is not a {family} hyperparameter"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Human-readable identifier, also used to break benchmark ties.
    pub fn label(&self) -> String {
        let body: Vec<String> =
            self.to_pairs().into_iter().skip(1).filter(|(k, _)| k != "seed").map(|(k, v)| format!("{k}={v}")).collect();
        if body.is_empty() {
            self.family().to_string()
        } else {
            format!("{}({})", self.family(), body.join(","))
        }
    }
}
