use std::path::{Path, PathBuf};

use super::report::Evaluation;
use super::EvalError;

/// File names written by [`emit_figure_data`].
pub const FIGURE_FILES: [&str; 4] = [
    "model_comparison.csv",
    "feature_importance.csv",
    "regional_mae.csv",
    "residuals.csv",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes headered CSV files for the comparison, importance, regional and
/// residual plots into `dir`, returning their paths.
pub fn emit_figure_data(eval: &Evaluation, dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    std::fs::create_dir_all(dir)?;
    let report = &eval.report;
    let paths: Vec<PathBuf> = FIGURE_FILES.iter().map(|f| dir.join(f)).collect();

    let mut w = csv::Writer::from_path(&paths[0])?;
    w.write_record([
        "model",
        "name",
        "val_mae",
        "test_mae",
        "test_rmse",
        "test_r2",
        "improvement_vs_naive_pct",
        "is_best",
    ])?;
    for m in &report.models {
        w.write_record([
            m.model.clone(),
            m.name.clone(),
            opt(m.val_mae),
            m.mae.to_string(),
            m.rmse.to_string(),
            opt(m.r2),
            m.improvement_vs_naive_pct.to_string(),
            (m.model == report.best_model).to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&paths[1])?;
    w.write_record(["rank", "feature", "importance"])?;
    for (i, e) in report.importance.iter().enumerate() {
        w.write_record([(i + 1).to_string(), e.feature.clone(), e.importance.to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&paths[2])?;
    w.write_record(["model", "is_best", "region", "mae", "n_observations"])?;
    for t in &report.regional_by_model {
        for e in &t.entries {
            w.write_record([
                t.model.clone(),
                t.is_best.to_string(),
                e.region.clone(),
                e.mae.to_string(),
                e.n_observations.to_string(),
            ])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&paths[3])?;
    w.write_record([
        "country",
        "region",
        "pathogen",
        "antibiotic",
        "year",
        "actual",
        "predicted",
        "residual",
    ])?;
    for r in &eval.residuals {
        w.write_record([
            r.country.clone(),
            r.region.clone(),
            r.pathogen.clone(),
            r.antibiotic.clone(),
            r.year.to_string(),
            r.actual.to_string(),
            r.predicted.to_string(),
            r.residual.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(paths)
}
