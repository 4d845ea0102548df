use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::chunk::{chunk_document, ChunkSpec};
use super::embed::{Embedder, HashingEmbedder};
use super::index::{DocChunk, VectorIndex};
use super::RagError;

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const MANIFEST_HEADER: [&str; 3] = ["label", "source_title", "filename"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub label: String,
    pub source_title: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct ManifestRow {
    label: String,
    source_title: String,
    filename: String,
}

const DEFAULT_MANIFEST: &str = include_str!("../../corpus/manifest.csv");
const DEFAULT_FILES: [(&str, &str); 6] = [
    ("carbapenem_eskape.txt", include_str!("../../corpus/carbapenem_eskape.txt")),
    ("global_action_plan.txt", include_str!("../../corpus/global_action_plan.txt")),
    ("aware_classification.txt", include_str!("../../corpus/aware_classification.txt")),
    ("lmic_surveillance.txt", include_str!("../../corpus/lmic_surveillance.txt")),
    ("glass_trends_asia.txt", include_str!("../../corpus/glass_trends_asia.txt")),
    ("glass_trends_emr_afr.txt", include_str!("../../corpus/glass_trends_emr_afr.txt")),
];

fn parse_manifest(text: &str) -> Result<Vec<ManifestRow>, RagError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| RagError::Manifest(e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
        return Err(RagError::Manifest(format!(
            "header must be `{}`",
            MANIFEST_HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    let mut labels = HashSet::new();
    for (i, rec) in reader.deserialize::<ManifestRow>().enumerate() {
        let row = rec.map_err(|e| RagError::Manifest(format!("line {}: {e}", i + 2)))?;
        if row.label.trim().is_empty() {
            return Err(RagError::Manifest(format!("line {}: empty label", i + 2)));
        }
        let name = Path::new(&row.filename);
        if name.is_absolute() || name.components().count() != 1 {
            return Err(RagError::Manifest(format!(
                "line {}: filename `{}` must be a plain file name",
                i + 2,
                row.filename
            )));
        }
        if !labels.insert(row.label.clone()) {
            return Err(RagError::DuplicateLabel(row.label));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(RagError::Manifest("no documents listed".into()));
    }
    Ok(rows)
}

/// Reads `manifest.csv` and the text files it lists from `dir`.
pub fn load_corpus(dir: &Path) -> Result<Vec<Document>, RagError> {
    let manifest = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
    parse_manifest(&manifest)?
        .into_iter()
        .map(|row| {
            let text = std::fs::read_to_string(dir.join(&row.filename))?;
            Ok(Document {
                label: row.label,
                source_title: row.source_title,
                text,
            })
        })
        .collect()
}

/// The six bundled policy excerpts.
pub fn default_corpus() -> Vec<Document> {
    parse_manifest(DEFAULT_MANIFEST)
        .expect("bundled manifest is valid")
        .into_iter()
        .map(|row| {
            let text = DEFAULT_FILES
                .iter()
                .find(|(f, _)| *f == row.filename)
                .map(|(_, t)| t.to_string())
                .expect("bundled file listed in manifest");
            Document {
                label: row.label,
                source_title: row.source_title,
                text,
            }
        })
        .collect()
}

/// Writes the bundled corpus (manifest and text files) into `dir`.
pub fn write_default_corpus(dir: &Path) -> Result<(), RagError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(MANIFEST_FILE), DEFAULT_MANIFEST)?;
    for (name, text) in DEFAULT_FILES {
        std::fs::write(dir.join(name), text)?;
    }
    Ok(())
}

/// Chunks and embeds every document. Chunk labels are the document label
/// plus a 1-based chunk number (`AWARE-1`, `AWARE-2`, ...); ids run from 0
/// in corpus order.
pub fn build_index(
    documents: &[Document],
    embedder: &dyn Embedder,
    spec: ChunkSpec,
) -> Result<VectorIndex, RagError> {
    let mut chunks = Vec::new();
    for doc in documents {
        for (i, text) in chunk_document(&doc.text, spec)?.into_iter().enumerate() {
            chunks.push(DocChunk {
                id: chunks.len() as u64,
                label: format!("{}-{}", doc.label, i + 1),
                source_title: doc.source_title.clone(),
                text,
            });
        }
    }
    let texts: Vec<&str> = chunks.iter().map(|c| c.text.as_str()).collect();
    let vectors = embedder.embed_batch(&texts)?;
    let mut index = VectorIndex::for_embedder(embedder);
    for (chunk, v) in chunks.into_iter().zip(vectors) {
        index.insert(chunk, v)?;
    }
    Ok(index)
}

/// The bundled corpus under the built-in embedder and default chunking.
pub fn default_index() -> Result<VectorIndex, RagError> {
    build_index(&default_corpus(), &HashingEmbedder, ChunkSpec::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_corpus_has_six_documents() {
        let docs = default_corpus();
        assert_eq!(docs.len(), 6);
        assert!(docs.iter().all(|d| !d.text.trim().is_empty()));
        let idx = default_index().unwrap();
        assert!(idx.len() >= 6);
        assert!(idx.chunk_by_label("AWARE-1").is_some());
    }

    #[test]
    fn written_corpus_loads_back() {
        let dir = tempfile::tempdir().unwrap();
        write_default_corpus(dir.path()).unwrap();
        assert_eq!(load_corpus(dir.path()).unwrap(), default_corpus());
    }

    #[test]
    fn manifest_validation() {
        assert!(parse_manifest("name,title,file\nA,B,c.txt\n").is_err());
        assert!(parse_manifest("label,source_title,filename\n").is_err());
        assert!(parse_manifest("label,source_title,filename\nA,B,../c.txt\n").is_err());
        assert!(matches!(
            parse_manifest("label,source_title,filename\nA,B,c.txt\nA,C,d.txt\n"),
            Err(RagError::DuplicateLabel(_))
        ));
    }

    #[test]
    fn policy_question_retrieves_aware_and_regional_trends() {
        let idx = default_index().unwrap();
        let hits = idx
            .query(
                "Which antibiotics should Southeast Asia prioritize preserving based on resistance forecasts?",
                3,
                &HashingEmbedder,
            )
            .unwrap();
        let labels: Vec<&str> = hits.iter().map(|h| h.label.as_str()).collect();
        assert!(labels.iter().any(|l| l.starts_with("AWARE-")), "{labels:?}");
        assert!(labels.iter().any(|l| l.starts_with("GLASS-ASIA-")), "{labels:?}");
    }
}
