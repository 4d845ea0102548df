//! Test-set metrics, regional breakdown, the evaluation report and
//! plot-ready figure data.

mod figures;
mod metrics;
mod regional;
mod report;

pub use figures::{emit_figure_data, FIGURE_FILES};
pub use metrics::{compute_metrics, improvement_vs_naive, mae, r2, rmse, round1, Metrics};
pub use regional::{regional_mae, RegionalEntry, RegionalTable};
pub use report::{
    build_report, current_timestamp, render_report, EvalReport, Evaluation, ModelRow,
    RegionalModelTable, ResidualRow, SplitEcho, REPORT_VERSION,
};

use crate::models::{ModelError, ModelKind};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("length mismatch: {expected} targets but {actual} values")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("cannot evaluate an empty set")]
    Empty,
    #[error("naive MAE is zero; improvement is undefined")]
    ZeroNaiveMae,
    #[error("report needs a trained {0} model")]
    MissingModel(ModelKind),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("figure data: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
