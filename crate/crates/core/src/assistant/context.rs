use sha2::{Digest, Sha256};

use super::AssistantError;
use crate::eval::{round1, EvalReport};

/// Forecast findings injected into every prompt, rendered from one report.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastContext {
    pub importance_lines: Vec<String>,
    pub regional_lines: Vec<String>,
    pub comparison_lines: Vec<String>,
}

pub const NO_REGIONAL: &str = "no regional breakdown available";

fn pct(v: f64) -> String {
    format!("{:.1}%", round1(v))
}

pub fn build_context(report: &EvalReport) -> Result<ForecastContext, AssistantError> {
    if report.models.is_empty() {
        return Err(AssistantError::IncompleteReport("no model rows".into()));
    }
    if report.model(&report.best_model).is_none() {
        return Err(AssistantError::IncompleteReport(format!(
            "best model `{}` has no row",
            report.best_model
        )));
    }
    let importance_lines = report
        .importance
        .iter()
        .take(5)
        .map(|e| format!("{}: {}", e.feature, pct(100.0 * e.importance)))
        .collect();

    let mut regional_lines: Vec<String> = report
        .regional
        .iter()
        .map(|e| format!("{}: MAE {} (n={})", e.region, pct(e.mae), e.n_observations))
        .collect();
    if regional_lines.is_empty() {
        regional_lines.push(NO_REGIONAL.to_string());
    } else {
        regional_lines.extend(
            report
                .excluded_regions
                .iter()
                .map(|r| format!("{r}: excluded, no test observations")),
        );
    }

    let comparison_lines = report
        .models
        .iter()
        .map(|m| {
            let r2 = m.r2.map_or_else(|| "n/a".to_string(), |v| format!("{:.1}", round1(v)));
            let vs = if m.model == "naive" {
                "reference".to_string()
            } else {
                pct(m.improvement_vs_naive_pct)
            };
            let best = if m.model == report.best_model { " (best)" } else { "" };
            format!(
                "{}{best}: MAE {}, RMSE {}, R2 {r2}, improvement vs naive {vs}",
                m.name,
                pct(m.mae),
                pct(m.rmse)
            )
        })
        .collect();

    Ok(ForecastContext {
        importance_lines,
        regional_lines,
        comparison_lines,
    })
}

impl ForecastContext {
    pub fn render(&self) -> String {
        let mut out = String::from("Feature importance (top 5, gain):\n");
        if self.importance_lines.is_empty() {
            out.push_str("- none recorded\n");
        }
        for l in &self.importance_lines {
            out.push_str(&format!("- {l}\n"));
        }
        out.push_str("Test MAE by WHO region (best model):\n");
        for l in &self.regional_lines {
            out.push_str(&format!("- {l}\n"));
        }
        out.push_str("Model comparison (test set):\n");
        for l in &self.comparison_lines {
            out.push_str(&format!("- {l}\n"));
        }
        out
    }

    /// SHA-256 of the rendered block, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.render().as_bytes()))
    }
}
