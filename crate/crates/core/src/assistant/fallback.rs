use super::prompt::citation_token;
use super::AssistantError;
use crate::rag::{RetrievalHit, VectorIndex};

pub const FALLBACK_SENTENCES: usize = 3;

/// Leading sentences of `text`, at most `n`.
pub fn leading_sentences(text: &str, n: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = text.trim().chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        let ends = matches!(c, '.' | '!' | '?') && chars.peek().is_none_or(|n| n.is_whitespace());
        if ends {
            let s = current.split_whitespace().collect::<Vec<_>>().join(" ");
            if !s.is_empty() {
                out.push(s);
            }
            current.clear();
            if out.len() == n {
                return out;
            }
        }
    }
    let tail = current.split_whitespace().collect::<Vec<_>>().join(" ");
    if !tail.is_empty() && out.len() < n {
        out.push(tail);
    }
    out
}

/// Answer built only from retrieved text: up to three leading sentences of
/// each hit, in hit order, each followed by its citation. A leading fragment
/// that starts in lowercase is skipped.
pub fn extractive_fallback(hits: &[RetrievalHit], index: &VectorIndex) -> Result<String, AssistantError> {
    if hits.is_empty() {
        return Err(AssistantError::NoHits);
    }
    let mut parts = Vec::new();
    for hit in hits {
        let chunk = index
            .chunk(hit.id)
            .ok_or_else(|| AssistantError::IncompleteReport(format!("hit `{}` not in index", hit.label)))?;
        let token = citation_token(&hit.label);
        let mut sentences = leading_sentences(&chunk.text, FALLBACK_SENTENCES + 1);
        // Overlapping chunks can start mid-sentence; skip that fragment.
        if sentences.len() > 1 && sentences[0].starts_with(|c: char| c.is_lowercase()) {
            sentences.remove(0);
        }
        for s in sentences.into_iter().take(FALLBACK_SENTENCES) {
            parts.push(format!("{s} {token}"));
        }
    }
    Ok(parts.join(" "))
}
