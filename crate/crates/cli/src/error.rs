use amr_core::assistant::AssistantError;
use amr_core::data::DataError;
use amr_core::eval::EvalError;
use amr_core::features::FeatureError;
use amr_core::models::ModelError;
use amr_core::rag::RagError;
use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("missing artifact {path}: {hint}")]
    ArtifactMissing { path: String, hint: &'static str },
    #[error("artifacts are out of date: {0}")]
    ArtifactStale(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Rag(#[from] RagError),
    #[error(transparent)]
    Assistant(#[from] AssistantError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::ConfigInvalid(_) => "config_invalid",
            CliError::ArtifactMissing { .. } => "artifact_missing",
            CliError::ArtifactStale(_) => "artifact_stale",
            CliError::Data(_) => "data_error",
            CliError::Feature(_) => "feature_error",
            CliError::Model(_) => "model_error",
            CliError::Eval(_) => "evaluation_error",
            CliError::Rag(_) => "retrieval_error",
            CliError::Assistant(AssistantError::Generation(_)) => "generation_failed",
            CliError::Assistant(_) => "assistant_error",
            CliError::Io { .. } => "io_error",
            CliError::Json(_) => "json_error",
        }
    }

    /// `{"error":{"code":...,"message":...}}` on a single line.
    pub fn to_json_line(&self) -> String {
        json!({ "error": { "code": self.code(), "message": self.to_string() } }).to_string()
    }

    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}
