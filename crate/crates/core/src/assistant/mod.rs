//! Grounded question answering: retrieval, injected forecast context,
//! generation or extractive fallback, and citation verification.

mod context;
mod fallback;
mod generate;
mod prompt;
mod verify;

pub use context::{build_context, ForecastContext, NO_REGIONAL};
pub use fallback::{extractive_fallback, leading_sentences, FALLBACK_SENTENCES};
pub use generate::{
    GenerationConfig, GenerationError, Generator, HttpGenerator, DEFAULT_TIMEOUT_SECS, ENV_MODEL,
    ENV_URL,
};
pub use prompt::{assemble_prompt, citation_token, corrective_prompt, PromptBundle};
pub use verify::{parse_citations, verify_citations, Verdict};

use serde::{Deserialize, Serialize};

use crate::eval::EvalReport;
use crate::rag::{Embedder, RagError, RetrievalHit, VectorIndex};

/// Chunks retrieved per question.
pub const TOP_K: usize = 3;

/// Built-in evaluation questions.
pub const POLICY_QUESTIONS: [&str; 5] = [
    "Which antibiotics should Southeast Asia prioritize preserving based on resistance forecasts?",
    "What treatment guidance applies to carbapenem-resistant ESKAPE pathogen infections?",
    "Why are resistance forecasts less certain in some WHO regions than others?",
    "How do resistance trends differ between high-income and low-income countries?",
    "Where should surveillance investment go in low- and middle-income countries?",
];

#[derive(Debug, thiserror::Error)]
pub enum AssistantError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("retrieval returned no chunks")]
    NoHits,
    #[error("incomplete report: {0}")]
    IncompleteReport(String),
    #[error(transparent)]
    Rag(#[from] RagError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnswerMode {
    Generated,
    Extractive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedSource {
    pub id: u64,
    pub label: String,
    pub score: f64,
    pub source_title: String,
    pub excerpt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundedAnswer {
    pub question: String,
    pub answer: String,
    pub mode: AnswerMode,
    /// `Accepted`, `Rejected` or `Uncited`.
    pub verdict: String,
    pub cited_labels: Vec<String>,
    /// Cited labels absent from the retrieved set; empty unless rejected.
    pub rejected_labels: Vec<String>,
    pub retrieved: Vec<RetrievedSource>,
    pub context_digest: String,
    /// Generation attempts made (0 for extractive answers).
    pub attempts: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warning: Option<String>,
}

impl GroundedAnswer {
    pub fn retrieved_labels(&self) -> Vec<String> {
        self.retrieved.iter().map(|r| r.label.clone()).collect()
    }

    pub fn verdict(&self) -> Verdict {
        match self.verdict.as_str() {
            "Accepted" => Verdict::Accepted,
            "Uncited" => Verdict::Uncited,
            _ => Verdict::Rejected(self.rejected_labels.clone()),
        }
    }
}

/// Behaviour when a generator is configured but fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnGenerationError {
    /// Answer extractively and record a warning.
    Fallback,
    /// Return the error.
    Fail,
}

fn finish(
    question: &str,
    answer: String,
    mode: AnswerMode,
    hits: &[RetrievalHit],
    index: &VectorIndex,
    digest: String,
    attempts: u32,
    warning: Option<String>,
) -> GroundedAnswer {
    let labels: Vec<String> = hits.iter().map(|h| h.label.clone()).collect();
    let (cited_labels, verdict) = verify_citations(&answer, &labels);
    let rejected_labels = match &verdict {
        Verdict::Rejected(bad) => bad.clone(),
        _ => Vec::new(),
    };
    let retrieved = hits
        .iter()
        .map(|h| {
            let chunk = index.chunk(h.id).expect("hit comes from this index");
            RetrievedSource {
                id: h.id,
                label: h.label.clone(),
                score: h.score,
                source_title: chunk.source_title.clone(),
                excerpt: chunk.text.clone(),
            }
        })
        .collect();
    GroundedAnswer {
        question: question.to_string(),
        answer,
        mode,
        verdict: verdict.name().to_string(),
        cited_labels,
        rejected_labels,
        retrieved,
        context_digest: digest,
        attempts,
        warning,
    }
}

/// Retrieves the top three chunks, injects the forecast context and either
/// generates (with one corrective retry on a rejected answer) or answers
/// extractively when no generator is given.
pub fn answer_question(
    question: &str,
    index: &VectorIndex,
    embedder: &dyn Embedder,
    report: &EvalReport,
    generator: Option<&dyn Generator>,
    on_error: OnGenerationError,
) -> Result<GroundedAnswer, AssistantError> {
    let question = question.trim();
    if question.is_empty() {
        return Err(AssistantError::EmptyQuestion);
    }
    let hits = index.query(question, TOP_K, embedder)?;
    if hits.is_empty() {
        return Err(AssistantError::NoHits);
    }
    let ctx = build_context(report)?;
    let digest = ctx.digest();
    let bundle = assemble_prompt(question, &hits, index, &ctx)?;

    let Some(generator) = generator else {
        let text = extractive_fallback(&hits, index)?;
        return Ok(finish(question, text, AnswerMode::Extractive, &hits, index, digest, 0, None));
    };

    let first = match generator.generate(&bundle.full_prompt()) {
        Ok(t) => t,
        Err(e) if on_error == OnGenerationError::Fallback => {
            log::warn!("generation failed, answering extractively: {e}");
            let text = extractive_fallback(&hits, index)?;
            let warning = Some(format!("{e}; extractive fallback used"));
            return Ok(finish(question, text, AnswerMode::Extractive, &hits, index, digest, 1, warning));
        }
        Err(e) => return Err(e.into()),
    };
    let (_, verdict) = verify_citations(&first, &bundle.labels);
    let Verdict::Rejected(bad) = verdict else {
        return Ok(finish(question, first, AnswerMode::Generated, &hits, index, digest, 1, None));
    };
    match generator.generate(&corrective_prompt(&bundle, &bad)) {
        Ok(second) => Ok(finish(question, second, AnswerMode::Generated, &hits, index, digest, 2, None)),
        Err(e) if on_error == OnGenerationError::Fallback => {
            // Keep the rejected first answer rather than hide the failure.
            let warning = Some(format!("corrective retry failed: {e}"));
            Ok(finish(question, first, AnswerMode::Generated, &hits, index, digest, 2, warning))
        }
        Err(e) => Err(e.into()),
    }
}

/// Answers the five built-in questions.
pub fn eval_rag(
    index: &VectorIndex,
    embedder: &dyn Embedder,
    report: &EvalReport,
    generator: Option<&dyn Generator>,
    on_error: OnGenerationError,
) -> Result<Vec<GroundedAnswer>, AssistantError> {
    POLICY_QUESTIONS
        .iter()
        .map(|q| answer_question(q, index, embedder, report, generator, on_error))
        .collect()
}
