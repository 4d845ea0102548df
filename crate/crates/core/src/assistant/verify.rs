use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

static CITATION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\[Source:[ \t]*([^\]\n]*?)[ \t]*\]").expect("valid pattern"));

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Accepted,
    /// Cited labels that were not retrieved, in order of first citation.
    Rejected(Vec<String>),
    Uncited,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Accepted => "Accepted",
            Verdict::Rejected(_) => "Rejected",
            Verdict::Uncited => "Uncited",
        }
    }
}

/// Labels of every `[Source: LABEL]` token, deduplicated, in order of first
/// appearance. Matching is case-sensitive.
pub fn parse_citations(answer: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for cap in CITATION.captures_iter(answer) {
        let label = cap[1].to_string();
        if !out.contains(&label) {
            out.push(label);
        }
    }
    out
}

/// Parses citations and judges them against the retrieved labels.
pub fn verify_citations(answer: &str, retrieved: &[String]) -> (Vec<String>, Verdict) {
    let cited = parse_citations(answer);
    let verdict = if cited.is_empty() {
        Verdict::Uncited
    } else {
        let bad: Vec<String> = cited
            .iter()
            .filter(|l| !retrieved.contains(l))
            .cloned()
            .collect();
        if bad.is_empty() {
            Verdict::Accepted
        } else {
            Verdict::Rejected(bad)
        }
    };
    (cited, verdict)
}
