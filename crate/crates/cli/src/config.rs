//! Run configuration: one JSON file, unknown keys rejected. Relative paths
//! are resolved against the directory holding the file.

use std::path::{Path, PathBuf};

use amr_core::assistant::GenerationConfig;
use amr_core::data::SynthConfig;
use amr_core::features::{SplitSpec, DEFAULT_SMOOTHING_K};
use amr_core::models::ZooConfig;
use amr_core::rag::ChunkSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_BIND: &str = "127.0.0.1:8787";
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSource {
    pub seed: u64,
    pub config: SynthConfig,
}

impl Default for SynthSource {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            config: SynthConfig::default(),
        }
    }
}

/// Where observations come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// A GLASS-schema CSV file.
    Csv(PathBuf),
    /// Generated in memory.
    Synth(SynthSource),
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synth(SynthSource::default())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RagConfig {
    /// Directory with `manifest.csv`; the bundled excerpts when absent.
    pub corpus_dir: Option<PathBuf>,
    pub chunk: ChunkSpec,
    /// External embedder URL; the built-in hashing embedder when absent.
    pub embedder_url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServiceConfig {
    pub bind: String,
    /// Answer extractively (with a warning) when generation fails instead of
    /// returning 502.
    pub fallback_on_generation_error: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: DEFAULT_BIND.to_string(),
            fallback_on_generation_error: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: DataSource,
    /// Explicit partition years; the default split when absent.
    pub split: Option<SplitSpec>,
    /// Use train 2021 / validation 2022 / test 2023 with no shared year.
    pub disjoint_validation: bool,
    pub smoothing_k: f64,
    pub models: ZooConfig,
    pub rag: RagConfig,
    pub generation: Option<GenerationConfig>,
    pub service: ServiceConfig,
    pub artifacts_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: DataSource::default(),
            split: None,
            disjoint_validation: false,
            smoothing_k: DEFAULT_SMOOTHING_K,
            models: ZooConfig::default(),
            rag: RagConfig::default(),
            generation: None,
            service: ServiceConfig::default(),
            artifacts_dir: PathBuf::from("artifacts"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        cfg.resolve_paths(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::ConfigInvalid(format!("cannot read {}: {e}", path.display()))
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let DataSource::Csv(p) = &mut self.data {
            join(p);
        }
        if let Some(p) = &mut self.rag.corpus_dir {
            join(p);
        }
        join(&mut self.artifacts_dir);
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::ConfigInvalid(m));
        if self.disjoint_validation && self.split.is_some() {
            return bad("give either `split` or `disjoint_validation`, not both".into());
        }
        self.split_spec()
            .validate()
            .map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        if !(self.smoothing_k >= 0.0 && self.smoothing_k.is_finite()) {
            return bad(format!("smoothing_k must be >= 0, got {}", self.smoothing_k));
        }
        self.models
            .ridge
            .validate()
            .and_then(|_| self.models.lstm.validate())
            .map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        for p in self.models.gbt_grid.configurations() {
            p.validate().map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        }
        if self.models.gbt_grid.configurations().is_empty() {
            return bad("models.gbt_grid has no configurations".into());
        }
        let c = self.rag.chunk;
        if c.max_chars == 0 || c.overlap >= c.max_chars {
            return bad("rag.chunk.max_chars must exceed rag.chunk.overlap".into());
        }
        if self.service.bind.parse::<std::net::SocketAddr>().is_err() {
            return bad(format!("service.bind `{}` is not an address:port", self.service.bind));
        }
        Ok(())
    }

    pub fn split_spec(&self) -> SplitSpec {
        if self.disjoint_validation {
            SplitSpec::disjoint_validation()
        } else {
            self.split.clone().unwrap_or_default()
        }
    }

    /// Generation endpoint after `AMR_LLM_URL` / `AMR_LLM_MODEL` overrides.
    pub fn generation_endpoint(&self) -> Option<GenerationConfig> {
        GenerationConfig::with_env_overrides(self.generation.clone())
    }

    pub fn layout(&self) -> ArtifactLayout {
        ArtifactLayout::new(&self.artifacts_dir)
    }
}

/// Files under the artifacts directory.
#[derive(Debug, Clone)]
pub struct ArtifactLayout {
    pub root: PathBuf,
}

impl ArtifactLayout {
    pub fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
        }
    }

    pub fn models_dir(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn model_file(&self, id: &str) -> PathBuf {
        self.models_dir().join(format!("{id}.amrmodel"))
    }

    pub fn pipeline_file(&self) -> PathBuf {
        self.models_dir().join("pipeline.json")
    }

    pub fn report_file(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn figures_dir(&self) -> PathBuf {
        self.root.join("figures")
    }

    pub fn index_file(&self) -> PathBuf {
        self.root.join("index.amridx")
    }

    pub fn rag_eval_file(&self) -> PathBuf {
        self.root.join("rag_eval.json")
    }

    pub fn summary_file(&self) -> PathBuf {
        self.root.join("dataset_summary.json")
    }
}
