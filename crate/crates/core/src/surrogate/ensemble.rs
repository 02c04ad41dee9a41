use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::spec::{ForestParams, GbtParams};
use super::tree::{grow_tree, Binned, Tree, TreeConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Each tree gets its own stream derived from `seed`, so the result does
    /// not depend on how the trees are scheduled.
    pub(crate) fn fit(x: ArrayView2<'_, f64>, y: &[f64], params: &ForestParams, seed: u64) -> Self {
        let binned = Binned::new(x);
        let n = y.len();
        let cfg = TreeConfig {
            max_depth: params.max_depth,
            min_samples_leaf: params.min_samples_leaf,
            feature_subsample: params.feature_subsample,
        };
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                let mut rows: Vec<u32> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n as u32)).collect()
                } else {
                    (0..n as u32).collect()
                };
                grow_tree(&binned, y, &mut rows, cfg, &mut rng, None)
            })
            .collect();
        Self { trees }
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(x)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Squared-loss gradient boosting: `base + lr * sum_r tree_r(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gbt {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    /// Training MSE before the first round and after each round.
    pub training_loss: Vec<f64>,
}

impl Gbt {
    pub(crate) fn fit(x: ArrayView2<'_, f64>, y: &[f64], params: &GbtParams, seed: u64) -> Self {
        let binned = Binned::new(x);
        let n = y.len();
        let base_score = y.iter().sum::<f64>() / n as f64;
        let cfg = TreeConfig { max_depth: params.max_depth, min_samples_leaf: params.min_samples_leaf, feature_subsample: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pred = vec![base_score; n];
        let mut resid = vec![0.0; n];
        let mut leaf = vec![0.0; n];
        let mut rows: Vec<u32> = (0..n as u32).collect();
        let mse = |pred: &[f64]| pred.iter().zip(y).map(|(p, t)| (t - p) * (t - p)).sum::<f64>() / n as f64;
        let mut training_loss = vec![mse(&pred)];
        let mut trees = Vec::with_capacity(params.n_rounds);
        for _ in 0..params.n_rounds {
            for i in 0..n {
                resid[i] = y[i] - pred[i];
            }
            let tree = grow_tree(&binned, &resid, &mut rows, cfg, &mut rng, Some(&mut leaf));
            for i in 0..n {
                pred[i] += params.learning_rate * leaf[i];
            }
            training_loss.push(mse(&pred));
            trees.push(tree);
        }
        Self { base_score, learning_rate: params.learning_rate, trees, training_loss }
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.predict_row_staged(x, self.trees.len())
    }

    /// Prediction using only the first `rounds` trees.
    pub fn predict_row_staged(&self, x: &[f64], rounds: usize) -> f64 {
        self.base_score + self.learning_rate * self.trees[..rounds].iter().map(|t| t.predict_row(x)).sum::<f64>()
    }
}
