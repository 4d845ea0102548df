//! Second-order gradient boosting on squared error.
//!
//! With `g = prediction - target` and unit hessians, a split is scored as
//!
//! ```text
//! gain = 0.5 * (GL²/(HL+λ) + GR²/(HR+λ) - G²/(H+λ)) - γ
//! ```
//!
//! and a leaf takes weight `-G/(H+λ)`. Nodes whose best gain is not positive
//! stay leaves. The two split modes differ only in where thresholds may sit:
//! `Exact` scans every boundary between observed values in the node,
//! `Histogram` restricts candidates to equal-frequency bin edges computed once
//! per training column. Both accumulate gradients per distinct value (or
//! bin) in row order, so with one bin per distinct value they build the same
//! trees bit for bit.

mod binning;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelError, ModelKind, ModelParams, TrainedModel, TrainingMeta};
use crate::features::FeatureMatrix;

pub use binning::{bin_of, distinct_counts, midpoint, quantile_edges};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitMode {
    Exact,
    Histogram,
}

impl SplitMode {
    pub fn kind(self) -> ModelKind {
        match self {
            SplitMode::Exact => ModelKind::GbtExact,
            SplitMode::Histogram => ModelKind::GbtHistogram,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbtParams {
    pub learning_rate: f64,
    pub max_depth: usize,
    pub n_estimators: usize,
    pub subsample_ratio: f64,
    pub reg_lambda: f64,
    pub gamma: f64,
    /// Histogram mode only.
    pub n_bins: usize,
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_depth: 5,
            n_estimators: 100,
            subsample_ratio: 1.0,
            reg_lambda: 1.0,
            gamma: 0.0,
            n_bins: 64,
            seed: 0,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidSpec(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if self.max_depth < 1 {
            return bad("max_depth must be >= 1".into());
        }
        if !(self.subsample_ratio > 0.0 && self.subsample_ratio <= 1.0) {
            return bad(format!("subsample_ratio must be in (0, 1], got {}", self.subsample_ratio));
        }
        if self.n_bins < 2 {
            return bad("n_bins must be >= 2".into());
        }
        if !(self.reg_lambda >= 0.0 && self.gamma >= 0.0) {
            return bad("reg_lambda and gamma must be >= 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeNode {
    Leaf {
        weight: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: usize,
        right: usize,
    },
}

/// A regression tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    /// Leaf weight reached by `row`; `x < threshold` goes left.
    pub fn leaf_weight(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { weight } => return weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if row[feature] < threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbtEnsemble {
    pub mode: SplitMode,
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl GbtEnsemble {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut f = self.base_score;
        for t in &self.trees {
            f += self.learning_rate * t.leaf_weight(row);
        }
        f
    }

    /// Split gain summed per feature over all trees and normalised to sum
    /// to one. `None` when no tree ever split.
    pub fn gain_importance(&self, n_features: usize) -> Option<Vec<f64>> {
        let mut gains = vec![0.0; n_features];
        for t in &self.trees {
            for node in &t.nodes {
                if let TreeNode::Split { feature, gain, .. } = node {
                    gains[*feature] += gain;
                }
            }
        }
        let total: f64 = gains.iter().sum();
        (total > 0.0).then(|| gains.iter().map(|g| g / total).collect())
    }

    /// The first `n` trees as an ensemble of their own.
    pub fn truncated(&self, n: usize) -> GbtEnsemble {
        GbtEnsemble {
            trees: self.trees[..n.min(self.trees.len())].to_vec(),
            ..self.clone()
        }
    }
}

struct Grower<'a> {
    x: &'a FeatureMatrix,
    grad: &'a [f64],
    params: &'a GbtParams,
    mode: SplitMode,
    /// Sorted distinct training values per feature (exact mode).
    distinct: &'a [Vec<f64>],
    /// Bin edges per feature and each row's bin, feature-major (histogram mode).
    edges: &'a [Vec<f64>],
    bins: &'a [Vec<u32>],
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Grower<'_> {
    fn split_gain(&self, gl: f64, hl: f64, g: f64, h: f64) -> f64 {
        let lambda = self.params.reg_lambda;
        let gr = g - gl;
        let hr = h - hl;
        0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda))
            - self.params.gamma
    }

    fn grow(&mut self, rows: &[usize], depth: usize, nodes: &mut Vec<TreeNode>) -> usize {
        let mut g = 0.0;
        for &r in rows {
            g += self.grad[r];
        }
        let h = rows.len() as f64;
        let at = nodes.len();
        nodes.push(TreeNode::Leaf {
            weight: -g / (h + self.params.reg_lambda),
        });
        if depth >= self.params.max_depth || rows.len() < 2 {
            return at;
        }

        let mut best: Option<Candidate> = None;
        for f in 0..self.x.n_cols() {
            match self.mode {
                SplitMode::Exact => self.scan_exact(f, rows, g, h, &mut best),
                SplitMode::Histogram => self.scan_histogram(f, rows, g, h, &mut best),
            }
        }
        let Some(best) = best else {
            return at;
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x.get(r, best.feature) < best.threshold);
        let left = self.grow(&left_rows, depth + 1, nodes);
        let right = self.grow(&right_rows, depth + 1, nodes);
        nodes[at] = TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            gain: best.gain,
            left,
            right,
        };
        at
    }

    fn consider(best: &mut Option<Candidate>, feature: usize, threshold: f64, gain: f64) {
        let current = best.as_ref().map_or(0.0, |b| b.gain);
        if gain > current {
            *best = Some(Candidate {
                feature,
                threshold,
                gain,
            });
        }
    }

    fn scan_exact(&self, f: usize, rows: &[usize], g: f64, h: f64, best: &mut Option<Candidate>) {
        let mut order = rows.to_vec();
        // Stable: equal values keep ascending row order.
        order.sort_by(|&a, &b| self.x.get(a, f).total_cmp(&self.x.get(b, f)));
        let (mut gl, mut hl) = (0.0, 0.0);
        let mut i = 0;
        while i < order.len() {
            let v = self.x.get(order[i], f);
            let mut group = 0.0;
            let mut count = 0usize;
            while i < order.len() && self.x.get(order[i], f) == v {
                group += self.grad[order[i]];
                count += 1;
                i += 1;
            }
            gl += group;
            hl += count as f64;
            if i == order.len() {
                break;
            }
            let column = &self.distinct[f];
            let next = column[column.partition_point(|d| *d <= v)];
            let gain = self.split_gain(gl, hl, g, h);
            Self::consider(best, f, midpoint(v, next), gain);
        }
    }

    fn scan_histogram(
        &self,
        f: usize,
        rows: &[usize],
        g: f64,
        h: f64,
        best: &mut Option<Candidate>,
    ) {
        let edges = &self.edges[f];
        let bins = &self.bins[f];
        let mut sums = vec![0.0; edges.len() + 1];
        let mut counts = vec![0usize; edges.len() + 1];
        for &r in rows {
            let b = bins[r] as usize;
            sums[b] += self.grad[r];
            counts[b] += 1;
        }
        let (mut gl, mut hl) = (0.0, 0.0);
        let mut seen = 0;
        for b in 0..sums.len() {
            if counts[b] == 0 {
                continue;
            }
            gl += sums[b];
            hl += counts[b] as f64;
            seen += counts[b];
            if seen == rows.len() {
                break;
            }
            let gain = self.split_gain(gl, hl, g, h);
            Self::consider(best, f, edges[b], gain);
        }
    }
}

/// Fits a boosted ensemble. Deterministic for a fixed `params.seed`.
pub fn fit_ensemble(
    train: &FeatureMatrix,
    params: &GbtParams,
    mode: SplitMode,
) -> Result<GbtEnsemble, ModelError> {
    params.validate()?;
    let n = train.n_rows();
    if n == 0 {
        return Err(ModelError::EmptyTraining);
    }
    let p = train.n_cols();
    let y = train.target();
    let base_score = y.iter().sum::<f64>() / n as f64;

    let columns: Vec<Vec<f64>> = (0..p).map(|f| train.column(f)).collect();
    let (distinct, edges, bins) = match mode {
        SplitMode::Exact => (
            columns
                .iter()
                .map(|c| distinct_counts(c).into_iter().map(|(v, _)| v).collect())
                .collect(),
            Vec::new(),
            Vec::new(),
        ),
        SplitMode::Histogram => {
            let edges: Vec<Vec<f64>> = columns
                .iter()
                .map(|c| quantile_edges(c, params.n_bins))
                .collect();
            let bins = columns
                .iter()
                .zip(&edges)
                .map(|(c, e)| c.iter().map(|&v| bin_of(e, v) as u32).collect())
                .collect();
            (Vec::new(), edges, bins)
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut pred = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_estimators);
    let all_rows: Vec<usize> = (0..n).collect();
    for _ in 0..params.n_estimators {
        for i in 0..n {
            grad[i] = pred[i] - y[i];
        }
        let sampled;
        let rows: &[usize] = if params.subsample_ratio < 1.0 {
            let m = ((params.subsample_ratio * n as f64).round() as usize).clamp(1, n);
            let mut s = rand::seq::index::sample(&mut rng, n, m).into_vec();
            s.sort_unstable();
            sampled = s;
            &sampled
        } else {
            &all_rows
        };
        let mut nodes = Vec::new();
        let mut grower = Grower {
            x: train,
            grad: &grad,
            params,
            mode,
            distinct: &distinct,
            edges: &edges,
            bins: &bins,
        };
        grower.grow(rows, 0, &mut nodes);
        let tree = Tree { nodes };
        for (i, pi) in pred.iter_mut().enumerate() {
            *pi += params.learning_rate * tree.leaf_weight(train.row(i));
        }
        trees.push(tree);
    }
    Ok(GbtEnsemble {
        mode,
        base_score,
        learning_rate: params.learning_rate,
        trees,
    })
}

pub fn train_gbt(
    train: &FeatureMatrix,
    params: &GbtParams,
    mode: SplitMode,
) -> Result<TrainedModel, ModelError> {
    let ensemble = fit_ensemble(train, params, mode)?;
    Ok(wrap(ensemble, train.columns(), params))
}

pub(crate) fn wrap(ensemble: GbtEnsemble, columns: &[String], params: &GbtParams) -> TrainedModel {
    TrainedModel {
        kind: ensemble.mode.kind(),
        columns: columns.to_vec(),
        feature_importances: ensemble.gain_importance(columns.len()),
        params: ModelParams::Gbt(ensemble),
        meta: TrainingMeta {
            hyperparameters: serde_json::to_value(params).expect("plain struct"),
            ..TrainingMeta::default()
        },
    }
}
