use serde::{Deserialize, Serialize};

use super::RagError;

/// Chunking parameters, measured in characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChunkSpec {
    pub max_chars: usize,
    pub overlap: usize,
}

impl Default for ChunkSpec {
    fn default() -> Self {
        Self {
            max_chars: 800,
            overlap: 100,
        }
    }
}

fn is_sentence_end(chars: &[char], at: usize) -> bool {
    // `at` is the index just past a candidate terminator.
    matches!(chars[at - 1], '.' | '!' | '?') && chars.get(at).is_none_or(|c| c.is_whitespace())
}

/// Splits `text` into chunks of at most `max_chars` characters. A chunk ends
/// at the last sentence end that fits, else at the hard limit; the next chunk
/// restarts `overlap` characters earlier. Dropping the first `overlap`
/// characters of every chunk but the first and concatenating gives `text`
/// back.
pub fn chunk_document(text: &str, spec: ChunkSpec) -> Result<Vec<String>, RagError> {
    if spec.max_chars == 0 || spec.overlap >= spec.max_chars {
        return Err(RagError::InvalidChunkSpec {
            max_chars: spec.max_chars,
            overlap: spec.overlap,
        });
    }
    if text.trim().is_empty() {
        return Err(RagError::EmptyDocument);
    }
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut out = Vec::new();
    let mut start = 0;
    loop {
        if n - start <= spec.max_chars {
            out.push(chars[start..].iter().collect());
            return Ok(out);
        }
        let limit = start + spec.max_chars;
        let floor = start + spec.overlap;
        let cut = (floor + 1..=limit)
            .rev()
            .find(|&b| is_sentence_end(&chars, b))
            .unwrap_or(limit);
        out.push(chars[start..cut].iter().collect());
        start = cut - spec.overlap;
    }
}
