//! One function per subcommand. Each returns the text to print on stdout.

use std::path::Path;
use std::time::Duration;

use amr_core::assistant::{
    answer_question, eval_rag, GroundedAnswer, Generator, HttpGenerator, OnGenerationError,
};
use amr_core::data::{
    dataset_summary, parse_dataset, render_dataset, synthesize_dataset, Dataset, SynthConfig,
};
use amr_core::eval::{build_report, current_timestamp, emit_figure_data, render_report, EvalReport};
use amr_core::features::{prepare, PreparedData};
use amr_core::models::{io as model_io, train_all, ModelKind, TrainedModel};
use amr_core::rag::{
    build_index, default_corpus, index_from_bytes, index_to_bytes, load_corpus, Embedder,
    HashingEmbedder, HttpEmbedder, VectorIndex,
};
use serde_json::json;

use crate::config::{ArtifactLayout, DataSource, RunConfig};
use crate::error::CliError;

const EMBEDDER_TIMEOUT: Duration = Duration::from_secs(120);

/// Writes through a temporary sibling and a rename so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(CliError::io(format!("create {}", dir.display())))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, bytes).map_err(CliError::io(format!("write {}", path.display())))?;
    std::fs::rename(&tmp, path).map_err(CliError::io(format!("rename into {}", path.display())))
}

fn read_required(path: &Path, hint: &'static str) -> Result<Vec<u8>, CliError> {
    match std::fs::read(path) {
        Ok(b) => Ok(b),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(CliError::ArtifactMissing {
            path: path.display().to_string(),
            hint,
        }),
        Err(e) => Err(CliError::io(format!("read {}", path.display()))(e)),
    }
}

fn pretty(value: &impl serde::Serialize) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    match &cfg.data {
        DataSource::Csv(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(CliError::io(format!("read {}", path.display())))?;
            Ok(parse_dataset(&text)?)
        }
        DataSource::Synth(s) => Ok(synthesize_dataset(&s.config, s.seed)?),
    }
}

pub fn prepare_data(cfg: &RunConfig) -> Result<PreparedData, CliError> {
    let dataset = load_dataset(cfg)?;
    Ok(prepare(&dataset, &cfg.split_spec(), cfg.smoothing_k)?)
}

/// Everything the trained models depend on, serialised deterministically.
fn pipeline_json(cfg: &RunConfig, data: &PreparedData) -> Result<String, CliError> {
    pretty(&json!({
        "split": data.spec,
        "smoothing_k": cfg.smoothing_k,
        "models": cfg.models,
        "fitted": data.fitted,
    }))
}

pub fn make_embedder(cfg: &RunConfig) -> Box<dyn Embedder> {
    match &cfg.rag.embedder_url {
        Some(url) => Box::new(HttpEmbedder::new(url.clone(), EMBEDDER_TIMEOUT)),
        None => Box::new(HashingEmbedder),
    }
}

pub fn make_generator(cfg: &RunConfig) -> Option<Box<dyn Generator>> {
    cfg.generation_endpoint()
        .map(|c| Box::new(HttpGenerator::new(&c)) as Box<dyn Generator>)
}

pub fn on_generation_error(cfg: &RunConfig) -> OnGenerationError {
    if cfg.service.fallback_on_generation_error {
        OnGenerationError::Fallback
    } else {
        OnGenerationError::Fail
    }
}

/// `amr synth`: writes a synthetic GLASS-schema CSV.
pub fn synth(config: &SynthConfig, seed: u64, out: &Path) -> Result<String, CliError> {
    let dataset = synthesize_dataset(config, seed)?;
    write_atomic(out, render_dataset(&dataset.rows).as_bytes())?;
    let summary = dataset_summary(&dataset.rows);
    Ok(json!({
        "path": out.display().to_string(),
        "seed": seed,
        "rows": summary.total_rows,
        "countries": summary.countries,
    })
    .to_string()
        + "\n")
}

/// `amr ingest`: validates the configured (or given) CSV and records its
/// summary.
pub fn ingest(cfg: &RunConfig, csv: Option<&Path>) -> Result<String, CliError> {
    let dataset = match csv {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(CliError::io(format!("read {}", path.display())))?;
            parse_dataset(&text)?
        }
        None => load_dataset(cfg)?,
    };
    let out = pretty(&dataset_summary(&dataset.rows))?;
    write_atomic(&cfg.layout().summary_file(), out.as_bytes())?;
    Ok(out)
}

/// `amr train`: fits all six models and persists them with the fitted
/// feature pipeline.
pub fn train(cfg: &RunConfig) -> Result<String, CliError> {
    let data = prepare_data(cfg)?;
    let models = train_all(&data, &cfg.models)?;
    let layout = cfg.layout();
    for model in &models {
        write_atomic(&layout.model_file(model.kind.id()), &model_io::to_bytes(model))?;
    }
    write_atomic(&layout.pipeline_file(), pipeline_json(cfg, &data)?.as_bytes())?;
    let rows: Vec<_> = models
        .iter()
        .map(|m| json!({ "model": m.kind.id(), "hyperparameters": m.meta.hyperparameters }))
        .collect();
    Ok(json!({
        "models_dir": layout.models_dir().display().to_string(),
        "train_rows": data.train.matrix.n_rows(),
        "models": rows,
    })
    .to_string()
        + "\n")
}

pub fn load_models(layout: &ArtifactLayout) -> Result<Vec<TrainedModel>, CliError> {
    ModelKind::ALL
        .iter()
        .map(|kind| {
            let path = layout.model_file(kind.id());
            let bytes = read_required(&path, "run `amr train` first")?;
            let model = model_io::from_bytes(&bytes)?;
            if model.kind != *kind {
                return Err(CliError::ArtifactStale(format!(
                    "{} holds a {} model",
                    path.display(),
                    model.kind.id()
                )));
            }
            Ok(model)
        })
        .collect()
}

/// `amr evaluate`: scores the persisted models and writes the report and
/// figure data.
pub fn evaluate(cfg: &RunConfig) -> Result<String, CliError> {
    let layout = cfg.layout();
    let data = prepare_data(cfg)?;
    let stored = read_required(&layout.pipeline_file(), "run `amr train` first")?;
    if stored != pipeline_json(cfg, &data)?.as_bytes() {
        return Err(CliError::ArtifactStale(
            "data, split or model settings changed since training; rerun `amr train`".into(),
        ));
    }
    let models = load_models(&layout)?;
    let mut evaluation = build_report(&models, &data, current_timestamp())?;

    // Keep the earlier timestamp when nothing else changed, so repeated runs
    // leave the file untouched.
    if let Ok(bytes) = std::fs::read(layout.report_file()) {
        if let Ok(previous) = serde_json::from_slice::<EvalReport>(&bytes) {
            let mut candidate = evaluation.report.clone();
            candidate.generated_at = previous.generated_at.clone();
            if candidate == previous {
                evaluation.report = candidate;
            }
        }
    }
    write_atomic(&layout.report_file(), pretty(&evaluation.report)?.as_bytes())?;
    emit_figure_data(&evaluation, &layout.figures_dir())?;
    Ok(render_report(&evaluation.report))
}

pub fn load_report(layout: &ArtifactLayout) -> Result<(EvalReport, Vec<u8>), CliError> {
    let bytes = read_required(&layout.report_file(), "run `amr evaluate` first")?;
    let report = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::ArtifactStale(format!("report.json: {e}")))?;
    Ok((report, bytes))
}

/// `amr report`: prints the stored report as text, or verbatim JSON.
pub fn report(cfg: &RunConfig, as_json: bool) -> Result<String, CliError> {
    let (report, bytes) = load_report(&cfg.layout())?;
    if as_json {
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    } else {
        Ok(render_report(&report))
    }
}

/// `amr index`: chunks and embeds the policy corpus.
pub fn index(cfg: &RunConfig) -> Result<String, CliError> {
    let documents = match &cfg.rag.corpus_dir {
        Some(dir) => load_corpus(dir)?,
        None => default_corpus(),
    };
    let embedder = make_embedder(cfg);
    let index = build_index(&documents, embedder.as_ref(), cfg.rag.chunk)?;
    let path = cfg.layout().index_file();
    write_atomic(&path, &index_to_bytes(&index))?;
    Ok(json!({
        "path": path.display().to_string(),
        "documents": documents.len(),
        "chunks": index.len(),
        "embedder": index.embedder_tag(),
    })
    .to_string()
        + "\n")
}

pub fn load_index(layout: &ArtifactLayout) -> Result<VectorIndex, CliError> {
    let bytes = read_required(&layout.index_file(), "run `amr index` first")?;
    Ok(index_from_bytes(&bytes)?)
}

fn assistant_inputs(cfg: &RunConfig) -> Result<(EvalReport, VectorIndex), CliError> {
    let layout = cfg.layout();
    let index = load_index(&layout)?;
    let (report, _) = load_report(&layout)?;
    Ok((report, index))
}

/// `amr ask`: answers one question and prints the grounded answer JSON.
pub fn ask(cfg: &RunConfig, question: &str) -> Result<String, CliError> {
    let (report, index) = assistant_inputs(cfg)?;
    let embedder = make_embedder(cfg);
    let generator = make_generator(cfg);
    let answer = answer_question(
        question,
        &index,
        embedder.as_ref(),
        &report,
        generator.as_deref(),
        on_generation_error(cfg),
    )?;
    pretty(&answer)
}

/// `amr eval-rag`: answers the built-in questions and writes them to
/// `rag_eval.json`.
pub fn eval_rag_cmd(cfg: &RunConfig) -> Result<(String, Vec<GroundedAnswer>), CliError> {
    let (report, index) = assistant_inputs(cfg)?;
    let embedder = make_embedder(cfg);
    let generator = make_generator(cfg);
    let answers = eval_rag(
        &index,
        embedder.as_ref(),
        &report,
        generator.as_deref(),
        on_generation_error(cfg),
    )?;
    let out = pretty(&answers)?;
    write_atomic(&cfg.layout().rag_eval_file(), out.as_bytes())?;
    Ok((out, answers))
}
