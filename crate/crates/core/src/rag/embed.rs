use std::hash::Hasher;
use std::time::Duration;

use fnv::FnvHasher;
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use super::RagError;

pub const EMBEDDING_DIM: usize = 384;

/// Turns text into unit-length vectors. Implementations must be
/// deterministic for a given tag.
pub trait Embedder: Send + Sync {
    /// Identity stored in indexes; queries must use the same tag.
    fn tag(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, RagError>;

    fn embed(&self, text: &str) -> Result<Vec<f64>, RagError> {
        Ok(self.embed_batch(&[text])?.remove(0))
    }
}

/// Scales `v` to unit length; `None` for the zero vector.
pub fn l2_normalise(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lowercased runs of alphanumeric characters.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

const BUCKET_KEY: u64 = 0x9e37_79b9_7f4a_7c15;
const SIGN_KEY: u64 = 0xc2b2_ae3d_27d4_eb4f;

fn fnv(key: u64, token: &str) -> u64 {
    let mut h = FnvHasher::with_key(key);
    h.write(token.as_bytes());
    h.finish()
}

/// Signed feature hashing over word tokens, L2-normalised.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashingEmbedder;

impl HashingEmbedder {
    pub const TAG: &'static str = "hashing-fnv1a-384-v1";

    pub fn embed_text(&self, text: &str) -> Result<Vec<f64>, RagError> {
        let mut v = vec![0.0; EMBEDDING_DIM];
        for token in tokenize(text) {
            let bucket = (fnv(BUCKET_KEY, &token) % EMBEDDING_DIM as u64) as usize;
            let sign = if fnv(SIGN_KEY, &token) & 1 == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign;
        }
        l2_normalise(v).ok_or(RagError::EmptyText)
    }
}

impl Embedder for HashingEmbedder {
    fn tag(&self) -> &str {
        Self::TAG
    }

    fn dim(&self) -> usize {
        EMBEDDING_DIM
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, RagError> {
        texts.iter().map(|t| self.embed_text(t)).collect()
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// Remote embedder: POSTs `{"texts": [...]}` to the configured URL and
/// expects `{"vectors": [[...], ...]}` back. Returned vectors are
/// re-normalised.
pub struct HttpEmbedder {
    url: String,
    tag: String,
    agent: ureq::Agent,
    // One request in flight at a time.
    gate: Mutex<()>,
}

impl HttpEmbedder {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let url = url.into();
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            tag: format!("http:{url}"),
            url,
            agent,
            gate: Mutex::new(()),
        }
    }
}

impl Embedder for HttpEmbedder {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn dim(&self) -> usize {
        EMBEDDING_DIM
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, RagError> {
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(RagError::EmptyText);
        }
        let _guard = self.gate.lock();
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(EmbedRequest { texts })
            .map_err(|e| RagError::Embedder(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(RagError::Embedder(format!("HTTP {}", resp.status())));
        }
        let body: EmbedResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| RagError::Embedder(format!("malformed response: {e}")))?;
        if body.vectors.len() != texts.len() {
            return Err(RagError::Embedder(format!(
                "expected {} vectors, got {}",
                texts.len(),
                body.vectors.len()
            )));
        }
        body.vectors
            .into_iter()
            .map(|v| {
                if v.len() != EMBEDDING_DIM {
                    return Err(RagError::DimensionMismatch {
                        expected: EMBEDDING_DIM,
                        actual: v.len(),
                    });
                }
                l2_normalise(v).ok_or_else(|| RagError::Embedder("zero vector returned".into()))
            })
            .collect()
    }
}
