//! Validation-MAE grid search over boosting hyperparameters.
//!
//! Configurations are enumerated in lexicographic order of
//! (learning_rate, max_depth, n_estimators, subsample_ratio) as listed in the
//! grid, and the first configuration with the lowest validation MAE wins.
//! Configurations that differ only in `n_estimators` share one fit: the
//! trees of a shorter ensemble are exactly the prefix of a longer one with
//! the same seed, so each prefix is scored without refitting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gbt::{fit_ensemble, wrap, GbtParams, SplitMode};
use super::{clip_pct, ModelError, TrainedModel};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GbtGrid {
    pub learning_rates: Vec<f64>,
    pub max_depths: Vec<usize>,
    pub n_estimators: Vec<usize>,
    pub subsample_ratios: Vec<f64>,
    pub reg_lambda: f64,
    pub gamma: f64,
    pub n_bins: usize,
    pub seed: u64,
}

impl Default for GbtGrid {
    fn default() -> Self {
        Self {
            learning_rates: vec![0.05, 0.1, 0.3],
            max_depths: vec![3, 5, 7],
            n_estimators: vec![100, 300],
            subsample_ratios: vec![0.8, 1.0],
            reg_lambda: 1.0,
            gamma: 0.0,
            n_bins: GbtParams::default().n_bins,
            seed: 0,
        }
    }
}

impl GbtGrid {
    /// Every configuration, in selection order.
    pub fn configurations(&self) -> Vec<GbtParams> {
        let mut out = Vec::new();
        for &learning_rate in &self.learning_rates {
            for &max_depth in &self.max_depths {
                for &n_estimators in &self.n_estimators {
                    for &subsample_ratio in &self.subsample_ratios {
                        out.push(GbtParams {
                            learning_rate,
                            max_depth,
                            n_estimators,
                            subsample_ratio,
                            reg_lambda: self.reg_lambda,
                            gamma: self.gamma,
                            n_bins: self.n_bins,
                            seed: self.seed,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub params: GbtParams,
    pub val_mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: GbtParams,
    pub best_val_mae: f64,
    /// One entry per configuration, in selection order.
    pub scores: Vec<GridScore>,
}

fn staged_val_mae(
    ensemble: &super::GbtEnsemble,
    val: &FeatureMatrix,
    stages: &[usize],
) -> Vec<f64> {
    let mut running: Vec<f64> = vec![ensemble.base_score; val.n_rows()];
    let mut out = Vec::with_capacity(stages.len());
    let mut done = 0;
    for &stage in stages {
        for tree in &ensemble.trees[done..stage] {
            for (i, r) in running.iter_mut().enumerate() {
                *r += ensemble.learning_rate * tree.leaf_weight(val.row(i));
            }
        }
        done = stage;
        let total: f64 = running
            .iter()
            .zip(val.target())
            .map(|(p, t)| (clip_pct(*p) - t).abs())
            .sum();
        out.push(total / val.n_rows() as f64);
    }
    out
}

/// Searches the grid and returns the winning model fitted on `train`.
pub fn grid_search(
    train: &FeatureMatrix,
    val: &FeatureMatrix,
    grid: &GbtGrid,
    mode: SplitMode,
) -> Result<(TrainedModel, GridSearchResult), ModelError> {
    let configs = grid.configurations();
    if configs.is_empty() {
        return Err(ModelError::InvalidSpec("empty hyperparameter grid".into()));
    }
    if val.n_rows() == 0 {
        return Err(ModelError::InvalidSpec("grid search needs validation rows".into()));
    }
    for c in &configs {
        c.validate()?;
    }

    // Group by everything except n_estimators; fit the longest once.
    let mut stages: Vec<usize> = grid.n_estimators.clone();
    stages.sort_unstable();
    stages.dedup();
    let longest = *stages.last().expect("non-empty grid");
    let mut groups: Vec<GbtParams> = Vec::new();
    for c in &configs {
        let key = GbtParams {
            n_estimators: longest,
            ..c.clone()
        };
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    let fitted: Vec<_> = groups
        .par_iter()
        .map(|p| {
            let e = fit_ensemble(train, p, mode)?;
            let maes = staged_val_mae(&e, val, &stages);
            Ok((p.clone(), e, maes))
        })
        .collect::<Result<_, ModelError>>()?;

    let lookup = |c: &GbtParams| {
        let key = GbtParams {
            n_estimators: longest,
            ..c.clone()
        };
        let (_, e, maes) = fitted.iter().find(|(p, _, _)| *p == key).expect("grouped");
        let stage = stages.binary_search(&c.n_estimators).expect("listed stage");
        (e, maes[stage])
    };

    let mut scores = Vec::with_capacity(configs.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in configs.iter().enumerate() {
        let (_, mae) = lookup(c);
        scores.push(GridScore {
            params: c.clone(),
            val_mae: mae,
        });
        if best.is_none_or(|(_, b)| mae < b) {
            best = Some((i, mae));
        }
    }
    let (best_idx, best_val_mae) = best.expect("non-empty grid");
    let best_params = configs[best_idx].clone();
    let (ensemble, _) = lookup(&best_params);
    let mut model = wrap(
        ensemble.truncated(best_params.n_estimators),
        train.columns(),
        &best_params,
    );
    model.meta.val_mae_trace = vec![best_val_mae];
    Ok((
        model,
        GridSearchResult {
            best: best_params,
            best_val_mae,
            scores,
        },
    ))
}
