//! The experiment harness: dataset ingestion, deterministic stratified
//! nested cross-validation with grid search, metrics, and report emission.

mod config;
mod cv;
mod dataset;
mod folds;
mod metrics;
mod report;

pub use config::RunConfig;
pub use cv::{
    check_id_disjoint, expected_representation, nested_cv, FoldResult, GridPoint, HyperGrid,
    ModelEval, ModelKind, PredictionRecord, Representation,
};
pub use dataset::{ingest, Dataset, ParsedDataset, Quarantine, Record, TableFormat};
pub use folds::{stratified_folds, stratified_folds_from_labels, FoldPlan};
pub use metrics::{accuracy, log_loss, PROB_CLAMP};
pub use report::{
    parse_csv, render_csv, render_csv_rows, render_fold_jsonl, render_markdown, CsvRow,
};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::augment::AugmentConfig;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("io error: {0}")]
    Io(String),
    #[error("format error in row {row}: {message}")]
    Format { row: usize, message: String },
    #[error("{rejected} of {total} rows failed to parse; this does not look like a SMILES table")]
    TooManyRejects { rejected: usize, total: usize },
    #[error("dataset must contain both classes")]
    EmptyClass,
    #[error("duplicate record id {0}")]
    DuplicateId(String),
    #[error("fold count {0} is too small")]
    BadFoldCount(usize),
    #[error("class {class} has {size} members, fewer than {k} folds")]
    ClassSmallerThanFolds { class: u8, size: usize, k: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("leakage detected: record {0} appears in both train and test")]
    LeakDetected(String),
    #[error("bad config value for {key}: {value}")]
    BadConfig { key: String, value: String },
    #[error("model {model} expects a different representation than {repr}")]
    ReprMismatch { model: String, repr: String },
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("model failure: {0}")]
    Model(String),
    #[error("neural failure: {0}")]
    Neural(String),
}

/// Inputs of one `evaluate` invocation.
#[derive(Debug, Clone)]
pub struct EvaluateArgs {
    pub data: PathBuf,
    pub model: ModelKind,
    pub representation: Representation,
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
}

/// What `evaluate` produced and where.
#[derive(Debug)]
pub struct EvaluateSummary {
    pub eval: ModelEval,
    pub quarantined: usize,
    pub report_md: PathBuf,
    pub report_csv: PathBuf,
    pub folds_jsonl: PathBuf,
    pub quarantine_file: PathBuf,
}

impl EvaluateSummary {
    pub fn all_folds_ok(&self) -> bool {
        self.eval.all_folds_ok()
    }
}

/// The whole `evaluate` pipeline: ingest, nested CV, artifact emission.
/// Deterministic: identical (data, config, seed) produce byte-identical
/// `report.csv`.
pub fn run_evaluate(args: &EvaluateArgs) -> Result<EvaluateSummary, HarnessError> {
    let run_cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let format = TableFormat::infer(&args.data);
    let (dataset, quarantine) = ingest(&args.data, format)?;
    let parsed = ParsedDataset::from_dataset(dataset);

    let grid = HyperGrid::for_model(args.model, &run_cfg);
    let augment = AugmentConfig {
        train_walks_per_molecule: run_cfg.train_walks,
        predict_walks_per_molecule: run_cfg.predict_walks,
        seed: args.seed,
    };
    let eval = nested_cv(
        &parsed,
        args.model,
        args.representation,
        &grid,
        &augment,
        &run_cfg,
        args.seed,
    )?;

    std::fs::create_dir_all(&args.out).map_err(|e| HarnessError::Io(e.to_string()))?;
    let write = |name: &str, content: &str| -> Result<PathBuf, HarnessError> {
        let path = args.out.join(name);
        std::fs::write(&path, content).map_err(|e| HarnessError::Io(e.to_string()))?;
        Ok(path)
    };
    let evals = [eval];
    let report_md = write("report.md", &render_markdown(&evals))?;
    let report_csv = write("report.csv", &render_csv(&evals))?;
    let folds_jsonl = write("folds.jsonl", &render_fold_jsonl(&evals))?;
    let quarantine_file = write("quarantine.txt", &quarantine.to_text())?;
    let [eval] = evals;

    Ok(EvaluateSummary {
        eval,
        quarantined: quarantine.rows.len(),
        report_md,
        report_csv,
        folds_jsonl,
        quarantine_file,
    })
}

/// Convenience for tests and examples: evaluate an in-memory dataset.
pub fn evaluate_dataset(
    parsed: &ParsedDataset,
    model: ModelKind,
    representation: Representation,
    run_cfg: &RunConfig,
    seed: u64,
) -> Result<ModelEval, HarnessError> {
    let grid = HyperGrid::for_model(model, run_cfg);
    let augment = AugmentConfig {
        train_walks_per_molecule: run_cfg.train_walks,
        predict_walks_per_molecule: run_cfg.predict_walks,
        seed,
    };
    nested_cv(parsed, model, representation, &grid, &augment, run_cfg, seed)
}

/// Writes a dataset as the canonical CSV format (`smiles,label,id`).
pub fn write_dataset_csv(dataset: &Dataset, path: &Path) -> Result<(), HarnessError> {
    let mut out = String::from("smiles,label,id\n");
    for r in dataset.records() {
        out.push_str(&format!("{},{},{}\n", r.smiles, r.label, r.id));
    }
    std::fs::write(path, out).map_err(|e| HarnessError::Io(e.to_string()))
}
