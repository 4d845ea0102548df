//! Ordinary least squares and ridge regression via the normal equations.
//!
//! Columns and target are centred before solving, which makes the intercept
//! unpenalised and keeps the Gram matrix well conditioned when a raw column
//! such as `year` sits far from zero.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{clip_pct, ModelError, ModelKind, ModelParams, TrainedModel, TrainingMeta};
use crate::features::FeatureMatrix;

/// Diagonal jitter added when the Gram matrix is not positive definite.
pub const SINGULAR_JITTER: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub lambda: f64,
}

impl LinearModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .weights
                .iter()
                .zip(row)
                .map(|(w, x)| w * x)
                .sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RidgeSpec {
    pub lambda_grid: Vec<f64>,
    pub cv_folds: usize,
}

impl Default for RidgeSpec {
    fn default() -> Self {
        Self {
            lambda_grid: vec![0.01, 0.1, 1.0, 10.0, 100.0, 1000.0],
            cv_folds: 5,
        }
    }
}

impl RidgeSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.lambda_grid.is_empty() {
            return Err(ModelError::InvalidSpec("lambda_grid is empty".into()));
        }
        if let Some(l) = self.lambda_grid.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
            return Err(ModelError::InvalidSpec(format!("lambda {l} is not a finite non-negative value")));
        }
        if self.cv_folds < 2 {
            return Err(ModelError::InvalidSpec("cv_folds must be at least 2".into()));
        }
        Ok(())
    }
}

/// Solves `(Xcᵀ Xc + λI) w = Xcᵀ yc` over the rows in `idx`.
pub fn fit_weights(x: &FeatureMatrix, idx: &[usize], lambda: f64) -> Result<LinearModel, ModelError> {
    let p = x.n_cols();
    let n = idx.len();
    if n < p + 1 {
        return Err(ModelError::DegenerateDesign { rows: n, features: p });
    }
    let mut x_mean = vec![0.0; p];
    let mut y_mean = 0.0;
    for &i in idx {
        for (m, v) in x_mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
        y_mean += x.target()[i];
    }
    x_mean.iter_mut().for_each(|m| *m /= n as f64);
    y_mean /= n as f64;

    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    let mut centred = vec![0.0; p];
    for &i in idx {
        for (c, (v, m)) in centred.iter_mut().zip(x.row(i).iter().zip(&x_mean)) {
            *c = v - m;
        }
        let yc = x.target()[i] - y_mean;
        for a in 0..p {
            rhs[a] += centred[a] * yc;
            for b in a..p {
                gram[(a, b)] += centred[a] * centred[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
        gram[(a, a)] += lambda;
    }

    let w = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => {
            let mut jittered = gram;
            for a in 0..p {
                jittered[(a, a)] += SINGULAR_JITTER;
            }
            match jittered.clone().cholesky() {
                Some(ch) => ch.solve(&rhs),
                None => jittered.lu().solve(&rhs).ok_or(ModelError::DegenerateDesign {
                    rows: n,
                    features: p,
                })?,
            }
        }
    };
    let weights: Vec<f64> = w.iter().copied().collect();
    let intercept = y_mean - weights.iter().zip(&x_mean).map(|(w, m)| w * m).sum::<f64>();
    Ok(LinearModel {
        intercept,
        weights,
        lambda,
    })
}

pub fn train_linear(train: &FeatureMatrix) -> Result<TrainedModel, ModelError> {
    let idx: Vec<usize> = (0..train.n_rows()).collect();
    let model = fit_weights(train, &idx, 0.0)?;
    Ok(TrainedModel {
        kind: ModelKind::Linear,
        columns: train.columns().to_vec(),
        params: ModelParams::Linear(model),
        feature_importances: None,
        meta: TrainingMeta::default(),
    })
}

/// Contiguous fold boundaries: fold `f` holds rows `[f*n/k, (f+1)*n/k)`.
pub fn fold_bounds(n: usize, k: usize) -> Vec<(usize, usize)> {
    (0..k).map(|f| (f * n / k, (f + 1) * n / k)).collect()
}

/// Mean held-out MAE of a ridge fit across contiguous folds.
pub fn cv_mae(train: &FeatureMatrix, lambda: f64, folds: usize) -> Result<f64, ModelError> {
    let n = train.n_rows();
    let mut total = 0.0;
    for (lo, hi) in fold_bounds(n, folds) {
        let fit_idx: Vec<usize> = (0..lo).chain(hi..n).collect();
        let model = fit_weights(train, &fit_idx, lambda)?;
        let mut abs = 0.0;
        for i in lo..hi {
            abs += (clip_pct(model.predict_row(train.row(i))) - train.target()[i]).abs();
        }
        total += if hi > lo { abs / (hi - lo) as f64 } else { 0.0 };
    }
    Ok(total / folds as f64)
}

/// Picks λ by lowest mean fold MAE (ties go to the smaller λ), then refits
/// on all training rows.
pub fn train_ridge(train: &FeatureMatrix, spec: &RidgeSpec) -> Result<TrainedModel, ModelError> {
    spec.validate()?;
    if train.n_rows() < spec.cv_folds {
        return Err(ModelError::DegenerateDesign {
            rows: train.n_rows(),
            features: train.n_cols(),
        });
    }
    let mut scores = Vec::with_capacity(spec.lambda_grid.len());
    let mut best: Option<(f64, f64)> = None;
    for &lambda in &spec.lambda_grid {
        let mae = cv_mae(train, lambda, spec.cv_folds)?;
        scores.push(json!({ "lambda": lambda, "cv_mae": mae }));
        best = match best {
            Some((bl, bm)) if bm < mae || (bm == mae && bl <= lambda) => Some((bl, bm)),
            _ => Some((lambda, mae)),
        };
    }
    let (lambda, _) = best.expect("non-empty grid");
    let idx: Vec<usize> = (0..train.n_rows()).collect();
    let model = fit_weights(train, &idx, lambda)?;
    Ok(TrainedModel {
        kind: ModelKind::Ridge,
        columns: train.columns().to_vec(),
        params: ModelParams::Linear(model),
        feature_importances: None,
        meta: TrainingMeta {
            hyperparameters: json!({
                "lambda": lambda,
                "cv_folds": spec.cv_folds,
                "cv_scores": scores,
            }),
            ..TrainingMeta::default()
        },
    })
}
