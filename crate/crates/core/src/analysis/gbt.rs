//! Histogram gradient-boosted regression trees on log-loss.
//!
//! Each round fits a depth-limited tree to the residuals `y - p` with
//! variance-reduction splits over pre-binned features. Leaf values are a
//! Newton step on the leaf's log-loss, shrunk by the learning rate and
//! halved until that leaf's loss does not increase, so the training loss is
//! non-increasing round over round.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::design::Design;
use crate::error::{Error, Result};
use crate::math::{logit, sigmoid, softplus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
    /// At most 256.
    pub max_bins: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            n_trees: 300,
            max_depth: 5,
            learning_rate: 0.1,
            min_leaf: 5,
            max_bins: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Contribution to the logit, learning rate included.
    Leaf(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if row[feature] <= threshold { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    /// Logit of the training base rate.
    pub base_score: f64,
    pub trees: Vec<Tree>,
    /// Mean training log-loss before the first round and after each round.
    pub training_loss: Vec<f64>,
}

impl GbtModel {
    pub fn predict_logit_row(&self, row: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }
}

/// Predicted probabilities.
pub fn predict_gbt(model: &GbtModel, design: &Design) -> Vec<f64> {
    (0..design.n_rows)
        .map(|i| sigmoid(model.predict_logit_row(design.row(i))))
        .collect()
}

#[inline]
fn point_loss(f: f64, y: u8) -> f64 {
    if y != 0 {
        softplus(-f)
    } else {
        softplus(f)
    }
}

fn mean_loss(logits: &[f64], labels: &[u8]) -> f64 {
    logits.iter().zip(labels).map(|(&f, &y)| point_loss(f, y)).sum::<f64>() / labels.len() as f64
}

struct Binned {
    /// Column-major bin indices, `[feature * n + row]`.
    bins: Vec<u8>,
    /// Upper edges per feature; bin `b` holds values `<= edges[b]`.
    edges: Vec<Vec<f64>>,
    n: usize,
}

fn bin_features(design: &Design, max_bins: usize) -> Binned {
    let n = design.n_rows;
    let p = design.n_cols();
    let mut bins = vec![0u8; n * p];
    let mut edges = Vec::with_capacity(p);
    let mut column = vec![0.0; n];
    for j in 0..p {
        for (i, c) in column.iter_mut().enumerate() {
            *c = design.row(i)[j];
        }
        let mut sorted = column.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        let mut unique = sorted.clone();
        unique.dedup();
        let mut e: Vec<f64> = if unique.len() <= max_bins {
            unique.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0).collect()
        } else {
            let mut cuts: Vec<f64> = (1..max_bins)
                .map(|k| {
                    let (lo, hi) = (sorted[k * n / max_bins - 1], sorted[k * n / max_bins]);
                    if lo < hi {
                        lo + (hi - lo) / 2.0
                    } else {
                        hi
                    }
                })
                .collect();
            cuts.dedup();
            cuts
        };
        let max = *unique.last().unwrap_or(&0.0);
        e.retain(|&x| x < max);
        for (i, &x) in column.iter().enumerate() {
            bins[j * n + i] = e.partition_point(|&edge| edge < x) as u8;
        }
        edges.push(e);
    }
    Binned { bins, edges, n }
}

struct Grower<'a> {
    binned: &'a Binned,
    residuals: &'a [f64],
    logits: &'a [f64],
    labels: &'a [u8],
    params: &'a GbtParams,
    nodes: Vec<Node>,
    /// (leaf node, its rows) for the leaf-value pass.
    leaves: Vec<(usize, Vec<usize>)>,
    hist_sum: Vec<f64>,
    hist_count: Vec<usize>,
}

impl Grower<'_> {
    fn best_split(&mut self, rows: &[usize]) -> Option<(usize, usize, Vec<usize>, Vec<usize>)> {
        let n = self.binned.n;
        let total: f64 = rows.iter().map(|&i| self.residuals[i]).sum();
        let count = rows.len() as f64;
        let parent = total * total / count;
        let mut best: Option<(f64, usize, usize)> = None;
        for (j, edges) in self.binned.edges.iter().enumerate() {
            if edges.is_empty() {
                continue;
            }
            let nb = edges.len() + 1;
            self.hist_sum[..nb].iter_mut().for_each(|v| *v = 0.0);
            self.hist_count[..nb].iter_mut().for_each(|v| *v = 0);
            let col = &self.binned.bins[j * n..(j + 1) * n];
            for &i in rows {
                let b = col[i] as usize;
                self.hist_sum[b] += self.residuals[i];
                self.hist_count[b] += 1;
            }
            let mut left_sum = 0.0;
            let mut left_count = 0usize;
            for b in 0..nb - 1 {
                left_sum += self.hist_sum[b];
                left_count += self.hist_count[b];
                let right_count = rows.len() - left_count;
                if left_count < self.params.min_leaf || right_count < self.params.min_leaf {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / left_count as f64
                    + right_sum * right_sum / right_count as f64
                    - parent;
                if gain > 1e-12 && best.map_or(true, |(g, _, _)| gain > g) {
                    best = Some((gain, j, b));
                }
            }
        }
        let (_, j, b) = best?;
        let col = &self.binned.bins[j * n..(j + 1) * n];
        let (left, right): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| (col[i] as usize) <= b);
        Some((j, b, left, right))
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(0.0));
        if depth < self.params.max_depth && rows.len() >= 2 * self.params.min_leaf.max(1) {
            if let Some((feature, bin, left_rows, right_rows)) = self.best_split(&rows) {
                let threshold = self.binned.edges[feature][bin];
                let left = self.grow(left_rows, depth + 1);
                let right = self.grow(right_rows, depth + 1);
                self.nodes[id] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                return id;
            }
        }
        self.leaves.push((id, rows));
        id
    }

    fn leaf_value(&self, rows: &[usize]) -> f64 {
        let mut g = 0.0;
        let mut h = 0.0;
        for &i in rows {
            let p = sigmoid(self.logits[i]);
            g += self.residuals[i];
            h += p * (1.0 - p);
        }
        if h < 1e-12 {
            return 0.0;
        }
        let loss_at = |delta: f64| -> f64 {
            rows.iter()
                .map(|&i| point_loss(self.logits[i] + delta, self.labels[i]))
                .sum()
        };
        let current = loss_at(0.0);
        let mut delta = self.params.learning_rate * g / h;
        for _ in 0..40 {
            if loss_at(delta) <= current {
                return delta;
            }
            delta /= 2.0;
        }
        0.0
    }
}

pub fn fit_gbt(design: &Design, labels: &[u8], params: &GbtParams) -> Result<GbtModel> {
    if labels.len() != design.n_rows || labels.is_empty() {
        return Err(Error::InvalidParameter("labels and design rows differ".into()));
    }
    if !(params.learning_rate > 0.0) || params.max_bins < 2 || params.max_bins > 256 {
        return Err(Error::InvalidParameter(
            "learning_rate must be positive and max_bins within 2..=256".into(),
        ));
    }
    let n = labels.len();
    let positives = labels.iter().filter(|&&y| y != 0).count();
    let rate = positives as f64 / n as f64;
    if positives == 0 || positives == n {
        let base_score = logit(rate.clamp(1e-9, 1.0 - 1e-9));
        let logits = vec![base_score; n];
        return Ok(GbtModel {
            base_score,
            trees: Vec::new(),
            training_loss: vec![mean_loss(&logits, labels)],
        });
    }

    let base_score = logit(rate);
    let binned = bin_features(design, params.max_bins);
    let mut logits = vec![base_score; n];
    let mut residuals = vec![0.0; n];
    let mut training_loss = vec![mean_loss(&logits, labels)];
    let mut trees = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        for i in 0..n {
            residuals[i] = f64::from(labels[i]) - sigmoid(logits[i]);
        }
        let mut grower = Grower {
            binned: &binned,
            residuals: &residuals,
            logits: &logits,
            labels,
            params,
            nodes: Vec::new(),
            leaves: Vec::new(),
            hist_sum: vec![0.0; 257],
            hist_count: vec![0; 257],
        };
        grower.grow((0..n).collect(), 0);
        let mut updates = Vec::with_capacity(grower.leaves.len());
        for (id, rows) in &grower.leaves {
            updates.push((*id, grower.leaf_value(rows)));
        }
        let leaves = core::mem::take(&mut grower.leaves);
        let mut nodes = grower.nodes;
        for ((id, value), (_, rows)) in updates.into_iter().zip(leaves) {
            nodes[id] = Node::Leaf(value);
            for i in rows {
                logits[i] += value;
            }
        }
        training_loss.push(mean_loss(&logits, labels));
        trees.push(Tree { nodes });
    }
    Ok(GbtModel {
        base_score,
        trees,
        training_loss,
    })
}
