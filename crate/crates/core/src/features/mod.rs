//! Design-matrix construction: prior-year lag, per-pair median imputation,
//! smoothed target encoding and the calendar-year split.
//!
//! Every statistic is fitted on the training partition only and then applied
//! unchanged to validation and test rows.

mod encode;
mod impute;
mod matrix;
mod split;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Observation};

pub use encode::{apply_encoder, fit_target_encoder, EncoderState, DEFAULT_SMOOTHING_K};
pub use impute::{apply_imputation, fit_imputation, ImputationStats};
pub use matrix::{FeatureColumn, FeatureMatrix, FEATURE_COLUMNS};
pub use split::{temporal_split, Partitions, SplitSpec};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FeatureError {
    #[error("no observed resistance values in the training partition")]
    NoObservedValues,
    #[error("training partition is empty")]
    EmptyTraining,
    #[error("{0} partition has no rows")]
    EmptyPartition(&'static str),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("row {row}: {field} is missing; impute before encoding")]
    NotImputed { row: usize, field: &'static str },
    #[error("smoothing_k must be finite and >= 0, got {0}")]
    InvalidSmoothing(f64),
}

/// An observation together with its prior-year resistance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaggedRow {
    pub obs: Observation,
    pub resistance_lag1: Option<f64>,
}

/// Attaches `resistance_lag1`: the same series' resistance one year earlier,
/// or `None` when that row is absent or its value is missing. Output order
/// matches `d.rows`.
pub fn compute_lag(d: &Dataset) -> Vec<LaggedRow> {
    lag_rows(&d.rows)
}

pub fn lag_rows(rows: &[Observation]) -> Vec<LaggedRow> {
    let by_key: HashMap<((&str, &str, &str), i32), Option<f64>> = rows
        .iter()
        .map(|r| ((r.series_key(), r.year), r.resistance_pct))
        .collect();
    rows.iter()
        .map(|r| LaggedRow {
            obs: r.clone(),
            resistance_lag1: by_key
                .get(&(r.series_key(), r.year - 1))
                .copied()
                .flatten(),
        })
        .collect()
}

/// Imputation and encoder statistics fitted on one training partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub imputation: ImputationStats,
    pub encoder: EncoderState,
}

impl FittedPipeline {
    pub fn fit(train: &[LaggedRow], smoothing_k: f64) -> Result<Self, FeatureError> {
        let imputation = fit_imputation(train)?;
        let imputed = apply_imputation(train, &imputation);
        let encoder = fit_target_encoder(&imputed, smoothing_k)?;
        Ok(Self {
            imputation,
            encoder,
        })
    }

    /// Imputes and encodes `rows`, returning the imputed rows alongside the
    /// matrix built from them.
    pub fn transform(
        &self,
        rows: &[LaggedRow],
    ) -> Result<(Vec<LaggedRow>, FeatureMatrix), FeatureError> {
        let imputed = apply_imputation(rows, &self.imputation);
        let matrix = apply_encoder(&imputed, &self.encoder)?;
        Ok((imputed, matrix))
    }
}

#[derive(Debug, Clone)]
pub struct PreparedPartition {
    pub rows: Vec<LaggedRow>,
    pub matrix: FeatureMatrix,
}

impl PreparedPartition {
    pub fn regions(&self) -> Vec<crate::data::WhoRegion> {
        self.rows.iter().map(|r| r.obs.who_region).collect()
    }
}

#[derive(Debug, Clone)]
pub struct PreparedData {
    pub spec: SplitSpec,
    pub fitted: FittedPipeline,
    pub train: PreparedPartition,
    pub val: PreparedPartition,
    pub test: PreparedPartition,
}

/// Lag, split, fit on train, and transform all three partitions.
pub fn prepare(
    d: &Dataset,
    spec: &SplitSpec,
    smoothing_k: f64,
) -> Result<PreparedData, FeatureError> {
    let lagged = compute_lag(d);
    let parts = temporal_split(&lagged, spec)?;
    let fitted = FittedPipeline::fit(&parts.train, smoothing_k)?;
    let build = |rows: &[LaggedRow]| -> Result<PreparedPartition, FeatureError> {
        let (rows, matrix) = fitted.transform(rows)?;
        Ok(PreparedPartition { rows, matrix })
    };
    let train = build(&parts.train)?;
    let val = build(&parts.val)?;
    let test = build(&parts.test)?;
    Ok(PreparedData {
        spec: spec.clone(),
        fitted,
        train,
        val,
        test,
    })
}
