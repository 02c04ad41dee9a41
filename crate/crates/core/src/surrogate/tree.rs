//! Histogram-binned regression trees shared by the forest and the boosted
//! ensemble. Features are quantised to at most 256 bins; a split at bin `b`
//! sends `x <= edge[b]` left.

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::Rng;

pub const MAX_BINS: usize = 256;

/// Column-major bin codes plus the upper edge of every bin but the last.
pub(crate) struct Binned {
    n_rows: usize,
    codes: Vec<u8>,
    edges: Vec<Vec<f64>>,
}

impl Binned {
    pub fn new(x: ArrayView2<'_, f64>) -> Self {
        let (n, p) = x.dim();
        let mut codes = vec![0u8; n * p];
        let mut edges = Vec::with_capacity(p);
        for j in 0..p {
            let col = x.column(j);
            let e = bin_edges(col.iter().copied().collect());
            for (i, v) in col.iter().enumerate() {
                codes[j * n + i] = e.partition_point(|edge| edge < v) as u8;
            }
            edges.push(e);
        }
        Self { n_rows: n, codes, edges }
    }

    fn n_features(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    fn code(&self, feature: usize, row: u32) -> usize {
        self.codes[feature * self.n_rows + row as usize] as usize
    }
}

/// Midpoints between distinct values when there are few enough of them,
/// otherwise (deduplicated) empirical quantiles.
fn bin_edges(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_unstable_by(f64::total_cmp);
    let mut distinct = values.clone();
    distinct.dedup();
    if distinct.len() <= MAX_BINS {
        return distinct
            .windows(2)
            .map(|w| {
                let mid = w[0] + (w[1] - w[0]) / 2.0;
                if mid < w[1] {
                    mid
                } else {
                    w[0]
                }
            })
            .collect();
    }
    let n = values.len();
    let top = values[n - 1];
    let mut edges: Vec<f64> = (1..MAX_BINS).map(|k| values[k * n / MAX_BINS]).filter(|v| *v < top).collect();
    edges.dedup();
    edges
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeConfig {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub feature_subsample: f64,
}

struct Hist {
    sum: Vec<f64>,
    cnt: Vec<u32>,
}

impl Hist {
    fn zeros(p: usize) -> Self {
        Self { sum: vec![0.0; p * MAX_BINS], cnt: vec![0; p * MAX_BINS] }
    }

    fn subtract(&mut self, other: &Hist) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a -= b;
        }
        for (a, b) in self.cnt.iter_mut().zip(&other.cnt) {
            *a -= b;
        }
    }
}

struct Grower<'a, R: Rng> {
    binned: &'a Binned,
    targets: &'a [f64],
    cfg: TreeConfig,
    rng: &'a mut R,
    nodes: Vec<Node>,
    leaf_out: Option<&'a mut [f64]>,
}

/// Fits one tree to `targets` over the given rows (duplicates allowed). If
/// `leaf_out` is given, each row's leaf value is written into it.
pub(crate) fn grow_tree<R: Rng>(
    binned: &Binned,
    targets: &[f64],
    rows: &mut [u32],
    cfg: TreeConfig,
    rng: &mut R,
    leaf_out: Option<&mut [f64]>,
) -> Tree {
    let mut g = Grower { binned, targets, cfg, rng, nodes: Vec::new(), leaf_out };
    let hist = g.histogram(rows);
    g.grow(rows, 0, hist);
    Tree { nodes: g.nodes }
}

impl<R: Rng> Grower<'_, R> {
    fn histogram(&self, rows: &[u32]) -> Hist {
        let p = self.binned.n_features();
        let mut h = Hist::zeros(p);
        for f in 0..p {
            let base = f * MAX_BINS;
            for &r in rows {
                let b = base + self.binned.code(f, r);
                h.sum[b] += self.targets[r as usize];
                h.cnt[b] += 1;
            }
        }
        h
    }

    fn leaf(&mut self, rows: &[u32]) -> usize {
        let value = rows.iter().map(|&r| self.targets[r as usize]).sum::<f64>() / rows.len() as f64;
        if let Some(out) = self.leaf_out.as_deref_mut() {
            for &r in rows {
                out[r as usize] = value;
            }
        }
        self.nodes.push(Node::Leaf { value });
        self.nodes.len() - 1
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let p = self.binned.n_features();
        if self.cfg.feature_subsample >= 1.0 {
            return (0..p).collect();
        }
        let k = ((self.cfg.feature_subsample * p as f64).round() as usize).clamp(1, p);
        let mut chosen = sample(self.rng, p, k).into_vec();
        chosen.sort_unstable();
        chosen
    }

    fn grow(&mut self, rows: &mut [u32], depth: usize, hist: Hist) -> usize {
        let n = rows.len();
        let total: f64 = hist.sum[..MAX_BINS].iter().sum();
        let min_leaf = self.cfg.min_samples_leaf;
        let depth_ok = self.cfg.max_depth.is_none_or(|d| depth < d);
        let first = self.targets[rows[0] as usize];
        let pure = rows.iter().all(|&r| self.targets[r as usize] == first);
        if !depth_ok || pure || n < 2 * min_leaf {
            return self.leaf(rows);
        }

        let parent_score = total * total / n as f64;
        let mut best: Option<(f64, usize, usize)> = None;
        for f in self.candidate_features() {
            let base = f * MAX_BINS;
            let n_edges = self.binned.edges[f].len();
            let (mut sl, mut nl) = (0.0, 0usize);
            for b in 0..n_edges {
                let c = hist.cnt[base + b] as usize;
                if c == 0 {
                    continue;
                }
                sl += hist.sum[base + b];
                nl += c;
                if nl < min_leaf {
                    continue;
                }
                let nr = n - nl;
                if nr < min_leaf {
                    break;
                }
                let sr = total - sl;
                let gain = sl * sl / nl as f64 + sr * sr / nr as f64 - parent_score;
                if gain > 0.0 && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, f, b));
                }
            }
        }
        let Some((_, feature, bin)) = best else {
            return self.leaf(rows);
        };

        let mut split = 0;
        for i in 0..n {
            if self.binned.code(feature, rows[i]) <= bin {
                rows.swap(i, split);
                split += 1;
            }
        }
        let (left_rows, right_rows) = rows.split_at_mut(split);
        let (left_hist, right_hist) = if left_rows.len() <= right_rows.len() {
            let small = self.histogram(left_rows);
            let mut large = hist;
            large.subtract(&small);
            (small, large)
        } else {
            let small = self.histogram(right_rows);
            let mut large = hist;
            large.subtract(&small);
            (large, small)
        };

        let idx = self.nodes.len();
        self.nodes.push(Node::Leaf { value: f64::NAN });
        let threshold = self.binned.edges[feature][bin];
        let left = self.grow(left_rows, depth + 1, left_hist);
        let right = self.grow(right_rows, depth + 1, right_hist);
        self.nodes[idx] = Node::Split { feature, threshold, left, right };
        idx
    }
}
