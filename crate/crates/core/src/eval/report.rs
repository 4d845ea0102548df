use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, improvement_vs_naive, mae};
use super::regional::{regional_mae, RegionalEntry};
use super::EvalError;
use crate::features::PreparedData;
use crate::models::{ImportanceEntry, ModelKind, TrainedModel};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    /// Kind identifier, e.g. `gbt_exact`.
    pub model: String,
    pub name: String,
    pub mae: f64,
    pub rmse: f64,
    pub r2: Option<f64>,
    pub improvement_vs_naive_pct: f64,
    pub val_mae: Option<f64>,
    pub hyperparameters: serde_json::Value,
    pub epochs_run: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEcho {
    pub train_years: Vec<i32>,
    pub val_years: Vec<i32>,
    pub test_years: Vec<i32>,
    /// True when validation years are also training years.
    pub overlapping_validation: bool,
    pub train_rows: usize,
    pub val_rows: usize,
    pub test_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionalModelTable {
    pub model: String,
    pub is_best: bool,
    pub entries: Vec<RegionalEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub report_version: u32,
    pub generated_at: String,
    pub split: SplitEcho,
    /// One row per model in canonical order.
    pub models: Vec<ModelRow>,
    pub best_model: String,
    /// Regional MAE of the best model.
    pub regional: Vec<RegionalEntry>,
    pub excluded_regions: Vec<String>,
    pub regional_by_model: Vec<RegionalModelTable>,
    /// The boosting model the importances come from.
    pub importance_model: String,
    pub importance: Vec<ImportanceEntry>,
}

impl EvalReport {
    pub fn model(&self, id: &str) -> Option<&ModelRow> {
        self.models.iter().find(|m| m.model == id)
    }

    pub fn best(&self) -> &ModelRow {
        self.model(&self.best_model).expect("best model is listed")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub country: String,
    pub region: String,
    pub pathogen: String,
    pub antibiotic: String,
    pub year: i32,
    pub actual: f64,
    pub predicted: f64,
    pub residual: f64,
}

/// A report plus the best model's per-row test residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    pub residuals: Vec<ResidualRow>,
}

/// RFC 3339 time from `SOURCE_DATE_EPOCH` when set, otherwise now.
pub fn current_timestamp() -> String {
    let at = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|s| time::OffsetDateTime::from_unix_timestamp(s).ok())
        .unwrap_or_else(time::OffsetDateTime::now_utc);
    at.format(&time::format_description::well_known::Rfc3339)
        .expect("UTC timestamps are representable")
}

fn find(models: &[TrainedModel], kind: ModelKind) -> Result<&TrainedModel, EvalError> {
    models
        .iter()
        .find(|m| m.kind == kind)
        .ok_or(EvalError::MissingModel(kind))
}

/// Scores all six models on the test partition. The best model is the
/// lowest test MAE (first in canonical order on ties); importances come from
/// the better of the two boosting models.
pub fn build_report(
    models: &[TrainedModel],
    data: &PreparedData,
    generated_at: String,
) -> Result<Evaluation, EvalError> {
    let test = &data.test.matrix;
    let y = test.target();
    let regions = data.test.regions();

    let mut rows = Vec::with_capacity(ModelKind::ALL.len());
    let mut predictions = Vec::with_capacity(ModelKind::ALL.len());
    for kind in ModelKind::ALL {
        let model = find(models, kind)?;
        let p = model.predict(test)?;
        let metrics = compute_metrics(y, &p)?;
        let val_mae = if data.val.matrix.n_rows() > 0 {
            Some(mae(data.val.matrix.target(), &model.predict(&data.val.matrix)?)?)
        } else {
            None
        };
        rows.push(ModelRow {
            model: kind.id().to_string(),
            name: kind.display_name().to_string(),
            mae: metrics.mae,
            rmse: metrics.rmse,
            r2: metrics.r2,
            improvement_vs_naive_pct: 0.0,
            val_mae,
            hyperparameters: model.meta.hyperparameters.clone(),
            epochs_run: model.meta.epochs_run,
        });
        predictions.push(p);
    }
    let naive_mae = rows[0].mae;
    for row in &mut rows[1..] {
        row.improvement_vs_naive_pct = improvement_vs_naive(row.mae, naive_mae)?;
    }

    let mut best = 0;
    for (i, row) in rows.iter().enumerate() {
        if row.mae < rows[best].mae {
            best = i;
        }
    }

    let mut regional_by_model = Vec::with_capacity(rows.len());
    let mut excluded_regions = Vec::new();
    for (i, p) in predictions.iter().enumerate() {
        let table = regional_mae(y, p, &regions)?;
        if i == best {
            excluded_regions = table.excluded.clone();
        }
        regional_by_model.push(RegionalModelTable {
            model: rows[i].model.clone(),
            is_best: i == best,
            entries: table.entries,
        });
    }

    let exact = find(models, ModelKind::GbtExact)?;
    let hist = find(models, ModelKind::GbtHistogram)?;
    let exact_mae = rows[ModelKind::GbtExact as usize].mae;
    let hist_mae = rows[ModelKind::GbtHistogram as usize].mae;
    let importance_source = if hist_mae < exact_mae { hist } else { exact };

    let residuals = data
        .test
        .rows
        .iter()
        .zip(y)
        .zip(&predictions[best])
        .map(|((row, &actual), &predicted)| ResidualRow {
            country: row.obs.country.clone(),
            region: row.obs.who_region.label().to_string(),
            pathogen: row.obs.pathogen.clone(),
            antibiotic: row.obs.antibiotic.clone(),
            year: row.obs.year,
            actual,
            predicted,
            residual: actual - predicted,
        })
        .collect();

    let spec = &data.spec;
    let report = EvalReport {
        report_version: REPORT_VERSION,
        generated_at,
        split: SplitEcho {
            train_years: spec.train_years.iter().copied().collect(),
            val_years: spec.val_years.iter().copied().collect(),
            test_years: spec.test_years.iter().copied().collect(),
            overlapping_validation: !spec.train_years.is_disjoint(&spec.val_years),
            train_rows: data.train.matrix.n_rows(),
            val_rows: data.val.matrix.n_rows(),
            test_rows: test.n_rows(),
        },
        best_model: rows[best].model.clone(),
        regional: regional_by_model[best].entries.clone(),
        excluded_regions,
        regional_by_model,
        importance_model: importance_source.kind.id().to_string(),
        importance: importance_source.feature_importance()?,
        models: rows,
    };
    Ok(Evaluation { report, residuals })
}

fn fmt_r2(r2: Option<f64>) -> String {
    r2.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"))
}

/// Plain-text rendering for terminals and logs.
pub fn render_report(report: &EvalReport) -> String {
    let mut out = String::new();
    let years = |y: &[i32]| {
        y.iter()
            .map(i32::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    };
    let s = &report.split;
    let _ = writeln!(
        out,
        "Evaluation report (generated {})\nSplit: train [{}] ({} rows), validation [{}] ({} rows), test [{}] ({} rows){}",
        report.generated_at,
        years(&s.train_years),
        s.train_rows,
        years(&s.val_years),
        s.val_rows,
        years(&s.test_years),
        s.test_rows,
        if s.overlapping_validation {
            "; validation overlaps training"
        } else {
            ""
        }
    );
    let _ = writeln!(out, "\nModel performance on the test set");
    let _ = writeln!(
        out,
        "{:<48} {:>8} {:>8} {:>8}",
        "Model", "MAE", "RMSE", "R2"
    );
    for m in &report.models {
        let marker = if m.model == report.best_model { " *" } else { "" };
        let _ = writeln!(
            out,
            "{:<48} {:>8.2} {:>8.2} {:>8}",
            format!("{}{marker}", m.name),
            m.mae,
            m.rmse,
            fmt_r2(m.r2)
        );
        if m.model == ModelKind::Naive.id() {
            let _ = writeln!(out, "    improvement vs naive: reference");
        } else {
            let _ = writeln!(out, "    improvement vs naive: {:.1}%", m.improvement_vs_naive_pct);
        }
    }
    let _ = writeln!(out, "(* best model)");

    let _ = writeln!(out, "\nFeature importance (gain, {})", report.importance_model);
    if report.importance.is_empty() {
        let _ = writeln!(out, "  no splits were made");
    }
    for (rank, e) in report.importance.iter().enumerate() {
        let _ = writeln!(out, "  {:>2}. {:<24} {:>5.1}%", rank + 1, e.feature, 100.0 * e.importance);
    }

    let _ = writeln!(out, "\nTest MAE by WHO region ({})", report.best_model);
    for e in &report.regional {
        let _ = writeln!(out, "  {:<32} {:>6.2}  n={}", e.region, e.mae, e.n_observations);
    }
    for r in &report.excluded_regions {
        let _ = writeln!(out, "  {r}: excluded, no observations in the test set");
    }
    out
}
