//! Report emission: a markdown table grouped by representation and model
//! with datasets as columns, a flat CSV for machines, and per-fold JSONL
//! logs. The CSV is canonical: parsing and re-rendering reproduces it byte
//! for byte.

use std::fmt::Write as _;

use super::cv::{ModelEval, ModelKind, Representation};
use super::HarnessError;

fn cell_text(eval: &ModelEval) -> String {
    match (eval.mean_log_loss, eval.std_log_loss) {
        (Some(mean), Some(std)) => format!("{:.3}±{:.3}", mean, std),
        _ => "—".to_string(),
    }
}

/// Markdown table: rows grouped by representation then model, datasets as
/// columns, best (lowest mean log loss) cell per column in bold.
pub fn render_markdown(evals: &[ModelEval]) -> String {
    let mut datasets: Vec<&str> = Vec::new();
    for e in evals {
        if !datasets.contains(&e.dataset.as_str()) {
            datasets.push(&e.dataset);
        }
    }
    let mut groups: Vec<(Representation, ModelKind)> = Vec::new();
    for e in evals {
        let key = (e.representation, e.model);
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    groups.sort_by_key(|&(repr, model)| (repr_order(repr), model.to_string()));

    let best_per_dataset: Vec<Option<f64>> = datasets
        .iter()
        .map(|&d| {
            evals
                .iter()
                .filter(|e| e.dataset == d)
                .filter_map(|e| e.mean_log_loss)
                .fold(None, |acc: Option<f64>, v| {
                    Some(acc.map_or(v, |a| a.min(v)))
                })
        })
        .collect();

    let mut out = String::new();
    let _ = writeln!(out, "# Log-loss (± std) per model and representation");
    if let Some(first) = evals.first() {
        let _ = writeln!(
            out,
            "\nseed: {}  \nconfig: {:016x}",
            first.seed, first.config_hash
        );
    }
    out.push('\n');
    let _ = write!(out, "| representation | model |");
    for d in &datasets {
        let _ = write!(out, " {} |", d);
    }
    out.push('\n');
    let _ = write!(out, "|---|---|");
    for _ in &datasets {
        let _ = write!(out, "---|");
    }
    out.push('\n');
    for &(repr, model) in &groups {
        let _ = write!(out, "| {} | {} |", repr, model);
        for (di, &d) in datasets.iter().enumerate() {
            let cell = evals
                .iter()
                .find(|e| e.dataset == d && e.representation == repr && e.model == model);
            match cell {
                None => {
                    let _ = write!(out, " |");
                }
                Some(e) => {
                    let text = cell_text(e);
                    let bold = match (e.mean_log_loss, best_per_dataset[di]) {
                        (Some(m), Some(best)) => (m - best).abs() < 5e-13,
                        _ => false,
                    };
                    if bold {
                        let _ = write!(out, " **{}** |", text);
                    } else {
                        let _ = write!(out, " {} |", text);
                    }
                }
            }
        }
        out.push('\n');
    }
    out
}

fn repr_order(repr: Representation) -> usize {
    match repr {
        Representation::Symbols => 0,
        Representation::Ngram => 1,
    }
}

const CSV_HEADER: &str =
    "dataset,representation,model,folds,mean_log_loss,std_log_loss,mean_accuracy,seed,config_hash";

fn float_field(v: Option<f64>) -> String {
    v.map(|x| format!("{:.6}", x)).unwrap_or_default()
}

/// Flat summary CSV. Deterministic: identical evaluations render to
/// identical bytes. Runtimes live in the JSONL fold logs, not here.
pub fn render_csv(evals: &[ModelEval]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for e in evals {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:016x}",
            e.dataset,
            e.representation,
            e.model,
            e.folds.len(),
            float_field(e.mean_log_loss),
            float_field(e.std_log_loss),
            float_field(e.mean_accuracy),
            e.seed,
            e.config_hash
        );
    }
    out
}

/// One parsed summary row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub dataset: String,
    pub representation: Representation,
    pub model: ModelKind,
    pub folds: usize,
    pub mean_log_loss: Option<f64>,
    pub std_log_loss: Option<f64>,
    pub mean_accuracy: Option<f64>,
    pub seed: u64,
    pub config_hash: u64,
}

/// Parses a summary CSV produced by [`render_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, HarnessError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(HarnessError::Format {
                row: 0,
                message: format!("unexpected report header {:?}", other),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(HarnessError::Format {
                row: i + 1,
                message: format!("expected 9 fields, got {}", fields.len()),
            });
        }
        let opt = |s: &str| -> Result<Option<f64>, HarnessError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>().map(Some).map_err(|_| HarnessError::Format {
                    row: i + 1,
                    message: format!("bad float {:?}", s),
                })
            }
        };
        let bad = |what: &str| HarnessError::Format {
            row: i + 1,
            message: format!("bad {}", what),
        };
        rows.push(CsvRow {
            dataset: fields[0].to_string(),
            representation: fields[1].parse().map_err(|_| bad("representation"))?,
            model: fields[2].parse().map_err(|_| bad("model"))?,
            folds: fields[3].parse().map_err(|_| bad("folds"))?,
            mean_log_loss: opt(fields[4])?,
            std_log_loss: opt(fields[5])?,
            mean_accuracy: opt(fields[6])?,
            seed: fields[7].parse().map_err(|_| bad("seed"))?,
            config_hash: u64::from_str_radix(fields[8], 16).map_err(|_| bad("config_hash"))?,
        });
    }
    Ok(rows)
}

/// Re-renders parsed rows; used to prove the CSV round-trips unchanged.
pub fn render_csv_rows(rows: &[CsvRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:016x}",
            r.dataset,
            r.representation,
            r.model,
            r.folds,
            float_field(r.mean_log_loss),
            float_field(r.std_log_loss),
            float_field(r.mean_accuracy),
            r.seed,
            r.config_hash
        );
    }
    out
}

/// Per-fold JSONL: one object per fold, with selected hyperparameters,
/// metrics, runtimes, and per-record predictions.
pub fn render_fold_jsonl(evals: &[ModelEval]) -> String {
    let mut out = String::new();
    for e in evals {
        for fold in &e.folds {
            let line = serde_json::json!({
                "dataset": e.dataset,
                "model": e.model,
                "representation": e.representation,
                "seed": e.seed,
                "fold": fold.fold,
                "selected": fold.selected,
                "log_loss": fold.log_loss,
                "accuracy": fold.accuracy,
                "runtime_seconds": fold.runtime_seconds,
                "error": fold.error,
                "predictions": fold.predictions,
            });
            let _ = writeln!(out, "{}", line);
        }
    }
    out
}
