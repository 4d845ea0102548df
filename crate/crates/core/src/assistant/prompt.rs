use super::context::ForecastContext;
use super::AssistantError;
use crate::rag::{RetrievalHit, VectorIndex};

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub system_text: String,
    pub user_text: String,
    /// Retrieved labels in hit order.
    pub labels: Vec<String>,
}

impl PromptBundle {
    /// System and user text joined for single-prompt endpoints.
    pub fn full_prompt(&self) -> String {
        format!("{}\n\n{}", self.system_text, self.user_text)
    }
}

pub fn citation_token(label: &str) -> String {
    format!("[Source: {label}]")
}

pub fn assemble_prompt(
    question: &str,
    hits: &[RetrievalHit],
    index: &VectorIndex,
    ctx: &ForecastContext,
) -> Result<PromptBundle, AssistantError> {
    if hits.is_empty() {
        return Err(AssistantError::NoHits);
    }
    let labels: Vec<String> = hits.iter().map(|h| h.label.clone()).collect();
    let allowed = labels.join(", ");
    let system_text = format!(
        "You are a public-health policy assistant for antimicrobial resistance surveillance. \
         Answer only from the retrieved sources and the forecast context provided. \
         Support every claim with a citation written exactly as [Source: LABEL]. \
         You may cite only these labels: {allowed}. \
         Do not cite any label outside {{{allowed}}}, and do not invent documents, authors or publications."
    );

    let mut user_text = format!("{question}\n\nForecast context:\n{}\nRetrieved sources:\n", ctx.render());
    for hit in hits {
        let chunk = index
            .chunk(hit.id)
            .ok_or_else(|| AssistantError::IncompleteReport(format!("hit `{}` not in index", hit.label)))?;
        user_text.push_str(&format!("\n{}\n{}\n", citation_token(&hit.label), chunk.text.trim_end()));
    }
    Ok(PromptBundle {
        system_text,
        user_text,
        labels,
    })
}

/// Instruction appended when a generated answer cited unretrieved labels.
pub fn corrective_prompt(bundle: &PromptBundle, bad_labels: &[String]) -> String {
    format!(
        "{}\n\nYour previous answer cited labels that were not retrieved: {}. \
         Answer again and cite only these labels: {}.",
        bundle.full_prompt(),
        bad_labels.join(", "),
        bundle.labels.join(", ")
    )
}
