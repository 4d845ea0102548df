use serde::{Deserialize, Serialize};

use super::gbt::SplitMode;
use super::grid::{grid_search, GbtGrid};
use super::linear::{train_linear, train_ridge, RidgeSpec};
use super::lstm::{train_lstm, LstmSpec};
use super::{train_naive, ModelError, ModelKind, TrainedModel};
use crate::features::PreparedData;

/// Hyperparameters for every model in the zoo.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZooConfig {
    pub ridge: RidgeSpec,
    pub gbt_grid: GbtGrid,
    pub lstm: LstmSpec,
}

pub fn train_one(
    kind: ModelKind,
    data: &PreparedData,
    config: &ZooConfig,
) -> Result<TrainedModel, ModelError> {
    let train = &data.train.matrix;
    let val = &data.val.matrix;
    match kind {
        ModelKind::Naive => train_naive(train),
        ModelKind::Linear => train_linear(train),
        ModelKind::Ridge => train_ridge(train, &config.ridge),
        ModelKind::GbtExact => grid_search(train, val, &config.gbt_grid, SplitMode::Exact).map(|r| r.0),
        ModelKind::GbtHistogram => {
            grid_search(train, val, &config.gbt_grid, SplitMode::Histogram).map(|r| r.0)
        }
        ModelKind::Lstm => train_lstm(train, val, &config.lstm),
    }
}

/// Trains all six models, in `ModelKind::ALL` order.
pub fn train_all(data: &PreparedData, config: &ZooConfig) -> Result<Vec<TrainedModel>, ModelError> {
    ModelKind::ALL
        .into_iter()
        .map(|kind| {
            let started = std::time::Instant::now();
            let model = train_one(kind, data, config)?;
            log::info!("trained {} in {:.2?}", kind.id(), started.elapsed());
            Ok(model)
        })
        .collect()
}
