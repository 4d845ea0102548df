//! The six forecasting models behind one train/predict contract.
//!
//! | kind            | learner                                          |
//! |-----------------|--------------------------------------------------|
//! | `Naive`         | prior-year resistance, no parameters             |
//! | `Linear`        | OLS on all encoded columns                       |
//! | `Ridge`         | L2-penalised OLS, penalty picked by k-fold CV    |
//! | `GbtExact`      | second-order boosted trees, exact split search   |
//! | `GbtHistogram`  | same booster, quantile-binned split candidates   |
//! | `Lstm`          | single LSTM cell over length-1 sequences, Adam   |
//!
//! All predictions are clipped to `[0, 100]`.

pub mod gbt;
pub mod grid;
pub mod io;
pub mod linear;
pub mod lstm;
pub mod zoo;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::features::{FeatureColumn, FeatureMatrix};

pub use gbt::{GbtEnsemble, GbtParams, SplitMode, Tree, TreeNode};
pub use grid::{grid_search, GbtGrid, GridSearchResult};
pub use linear::{train_linear, train_ridge, LinearModel, RidgeSpec};
pub use lstm::{train_lstm, LstmModel, LstmNet, LstmSpec};
pub use zoo::{train_all, ZooConfig};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("degenerate design: {rows} rows for {features} features (need at least features + 1)")]
    DegenerateDesign { rows: usize, features: usize },
    #[error("column layout mismatch: model expects {expected:?}, got {actual:?}")]
    ColumnMismatch {
        expected: Vec<String>,
        actual: Vec<String>,
    },
    #[error("required column `{0}` is absent")]
    MissingColumn(&'static str),
    #[error("{0} models have no feature importances")]
    UnsupportedModel(ModelKind),
    #[error("invalid hyperparameters: {0}")]
    InvalidSpec(String),
    #[error("non-finite loss at epoch {epoch}: {detail}")]
    NonFiniteLoss { epoch: usize, detail: String },
    #[error("empty training matrix")]
    EmptyTraining,
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    Naive,
    Linear,
    Ridge,
    GbtExact,
    GbtHistogram,
    Lstm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Naive,
        ModelKind::Linear,
        ModelKind::Ridge,
        ModelKind::GbtExact,
        ModelKind::GbtHistogram,
        ModelKind::Lstm,
    ];

    /// Short identifier used in file names and JSON.
    pub fn id(self) -> &'static str {
        match self {
            ModelKind::Naive => "naive",
            ModelKind::Linear => "linear",
            ModelKind::Ridge => "ridge",
            ModelKind::GbtExact => "gbt_exact",
            ModelKind::GbtHistogram => "gbt_histogram",
            ModelKind::Lstm => "lstm",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Naive => "Naive Baseline",
            ModelKind::Linear => "Linear Regression",
            ModelKind::Ridge => "Ridge Regression",
            ModelKind::GbtExact => "Gradient Boosting (exact, XGBoost-style)",
            ModelKind::GbtHistogram => "Gradient Boosting (histogram, LightGBM-style)",
            ModelKind::Lstm => "LSTM",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.id() == id)
    }

    pub fn is_tree(self) -> bool {
        matches!(self, ModelKind::GbtExact | ModelKind::GbtHistogram)
    }

    pub(crate) fn tag(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Naive { lag_column: usize },
    Linear(LinearModel),
    Gbt(GbtEnsemble),
    Lstm(LstmModel),
}

/// Hyperparameters actually used plus training traces.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub hyperparameters: serde_json::Value,
    pub epochs_run: Option<usize>,
    #[serde(default)]
    pub val_mae_trace: Vec<f64>,
    #[serde(default)]
    pub train_mae_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub columns: Vec<String>,
    pub params: ModelParams,
    /// Normalised gain per column, present for tree ensembles that split.
    pub feature_importances: Option<Vec<f64>>,
    pub meta: TrainingMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub feature: String,
    pub importance: f64,
}

pub(crate) fn clip_pct(v: f64) -> f64 {
    v.clamp(0.0, 100.0)
}

impl TrainedModel {
    fn check_columns(&self, x: &FeatureMatrix) -> Result<(), ModelError> {
        if x.columns() != self.columns.as_slice() {
            return Err(ModelError::ColumnMismatch {
                expected: self.columns.clone(),
                actual: x.columns().to_vec(),
            });
        }
        Ok(())
    }

    /// Unclipped model output, one value per row.
    pub fn predict_raw(&self, x: &FeatureMatrix) -> Result<Vec<f64>, ModelError> {
        self.check_columns(x)?;
        Ok(match &self.params {
            ModelParams::Naive { lag_column } => x.column(*lag_column),
            ModelParams::Linear(m) => x.rows().map(|r| m.predict_row(r)).collect(),
            ModelParams::Gbt(m) => x.rows().map(|r| m.predict_row(r)).collect(),
            ModelParams::Lstm(m) => x.rows().map(|r| m.predict_row(r)).collect(),
        })
    }

    /// Predictions clipped to `[0, 100]`.
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>, ModelError> {
        Ok(self.predict_raw(x)?.into_iter().map(clip_pct).collect())
    }

    /// Gain importances labelled with display names, sorted descending.
    pub fn feature_importance(&self) -> Result<Vec<ImportanceEntry>, ModelError> {
        if !self.kind.is_tree() {
            return Err(ModelError::UnsupportedModel(self.kind));
        }
        let Some(imp) = &self.feature_importances else {
            return Ok(Vec::new());
        };
        let mut table: Vec<ImportanceEntry> = self
            .columns
            .iter()
            .zip(imp)
            .map(|(name, &importance)| ImportanceEntry {
                feature: display_label(name),
                importance,
            })
            .collect();
        table.sort_by(|a, b| b.importance.total_cmp(&a.importance));
        Ok(table)
    }
}

fn display_label(column: &str) -> String {
    crate::features::FEATURE_COLUMNS
        .iter()
        .find(|c| c.name() == column)
        .map(|c| c.label().to_string())
        .unwrap_or_else(|| column.to_string())
}

/// The parameter-free baseline: predicts last year's resistance.
pub fn train_naive(train: &FeatureMatrix) -> Result<TrainedModel, ModelError> {
    let lag_column = train
        .column_index(FeatureColumn::ResistanceLag1.name())
        .ok_or(ModelError::MissingColumn("resistance_lag1"))?;
    Ok(TrainedModel {
        kind: ModelKind::Naive,
        columns: train.columns().to_vec(),
        params: ModelParams::Naive { lag_column },
        feature_importances: None,
        meta: TrainingMeta::default(),
    })
}
