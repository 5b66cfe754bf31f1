//! Thin command-line front end over the library; the examples/ directory is
//! the richer tour.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smiles_screen::augment::enumerate_smiles;
use smiles_screen::features::{symbol_encode, Vocabulary};
use smiles_screen::harness::{
    run_evaluate, EvaluateArgs, ModelKind, Representation, RunConfig, TableFormat,
};
use smiles_screen::model_io;
use smiles_screen::neural::{
    train_sequence_classifier, CnnConfig, CnnModel, GruClassifier, GruConfig, TrainConfig,
    TrainSample,
};
use smiles_screen::smiles::{canonical_smiles, parse_smiles};
use smiles_screen::structure::diameter_report;

#[derive(Parser)]
#[command(
    name = "smiles-screen",
    about = "Virtual screening on raw SMILES text: parse, augment, featurize, train, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse SMILES lines and report atom/bond counts or diagnostics.
    Parse {
        /// Input file; stdin when omitted.
        file: Option<PathBuf>,
    },
    /// Rewrite SMILES lines in canonical form.
    Canonicalize {
        file: Option<PathBuf>,
    },
    /// Emit K randomized writings per input line.
    Augment {
        #[arg(short = 'n', default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        file: Option<PathBuf>,
    },
    /// Structural statistics over a SMILES file.
    Stats {
        /// Longest-carbon-chain diameter report (the only statistic).
        #[arg(long)]
        diameter: bool,
        file: PathBuf,
    },
    /// Train one sequence model on a whole dataset and write a checkpoint.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long, default_value = "symbols")]
        repr: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Nested cross-validation of one model on one dataset.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long)]
        repr: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn input_lines(file: Option<&PathBuf>) -> Result<Box<dyn Iterator<Item = std::io::Result<String>>>> {
    Ok(match file {
        Some(path) => {
            let f = std::fs::File::open(path)
                .with_context(|| format!("cannot open {}", path.display()))?;
            Box::new(std::io::BufReader::new(f).lines())
        }
        None => Box::new(std::io::stdin().lock().lines()),
    })
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Parse { file } => {
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            for line in input_lines(file.as_ref())? {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match parse_smiles(&line) {
                    Ok(m) => writeln!(out, "OK atoms={} bonds={}", m.atom_count(), m.bond_count())?,
                    Err(d) => writeln!(out, "ERROR {}: {}", d.position, d.message)?,
                }
            }
            Ok(())
        }
        Command::Canonicalize { file } => {
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            for line in input_lines(file.as_ref())? {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match parse_smiles(&line).map(|m| canonical_smiles(&m)) {
                    Ok(Ok(s)) => writeln!(out, "{}", s)?,
                    Ok(Err(e)) => writeln!(out, "ERROR 0: {}", e)?,
                    Err(d) => writeln!(out, "ERROR {}: {}", d.position, d.message)?,
                }
            }
            Ok(())
        }
        Command::Augment { n, seed, file } => {
            if n == 0 {
                bail!("-n must be at least 1");
            }
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for line in input_lines(file.as_ref())? {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match parse_smiles(&line) {
                    Ok(m) => {
                        for s in enumerate_smiles(&m, n, &mut rng)? {
                            writeln!(out, "{}", s)?;
                        }
                    }
                    Err(d) => writeln!(out, "ERROR {}: {}", d.position, d.message)?,
                }
            }
            Ok(())
        }
        Command::Stats { diameter, file } => {
            if !diameter {
                bail!("stats currently requires --diameter");
            }
            let text = std::fs::read_to_string(&file)
                .with_context(|| format!("cannot read {}", file.display()))?;
            let report = diameter_report(text.lines());
            print!("{}", report.to_csv());
            println!();
            print!("{}", report.summary_text());
            Ok(())
        }
        Command::Train {
            data,
            model,
            repr,
            config,
            seed,
            out,
        } => {
            let kind: ModelKind = model.parse().map_err(|e: String| anyhow::anyhow!(e))?;
            let representation: Representation =
                repr.parse().map_err(|e: String| anyhow::anyhow!(e))?;
            if representation != Representation::Symbols {
                bail!("train currently supports sequence models on --repr symbols");
            }
            let run_cfg = match &config {
                Some(path) => RunConfig::load(path)?,
                None => RunConfig::default(),
            };
            train_checkpoint(kind, &data, &run_cfg, seed, &out)
        }
        Command::Evaluate {
            data,
            model,
            repr,
            config,
            seed,
            out,
        } => {
            let kind: ModelKind = model.parse().map_err(|e: String| anyhow::anyhow!(e))?;
            let representation: Representation =
                repr.parse().map_err(|e: String| anyhow::anyhow!(e))?;
            let summary = run_evaluate(&EvaluateArgs {
                data,
                model: kind,
                representation,
                config,
                seed,
                out,
            })?;
            println!(
                "dataset={} model={} mean_log_loss={} quarantined={}",
                summary.eval.dataset,
                summary.eval.model,
                summary
                    .eval
                    .mean_log_loss
                    .map(|v| format!("{:.4}", v))
                    .unwrap_or_else(|| "—".into()),
                summary.quarantined,
            );
            for fold in &summary.eval.folds {
                if let Some(err) = &fold.error {
                    eprintln!("fold {} failed: {}", fold.fold, err);
                }
            }
            if summary.all_folds_ok() {
                Ok(())
            } else {
                bail!("one or more folds failed");
            }
        }
    }
}

/// Fits one sequence model on the full dataset (no cross-validation) and
/// writes a checkpoint container plus the fitted vocabulary.
fn train_checkpoint(
    kind: ModelKind,
    data: &PathBuf,
    run_cfg: &RunConfig,
    seed: u64,
    out: &PathBuf,
) -> Result<()> {
    use smiles_screen::augment::AugmentConfig;
    use smiles_screen::harness::{ingest, ParsedDataset};

    let (dataset, quarantine) = ingest(data, TableFormat::infer(data))?;
    if !quarantine.rows.is_empty() {
        eprintln!("quarantined {} rows", quarantine.rows.len());
    }
    let parsed = ParsedDataset::from_dataset(dataset);
    std::fs::create_dir_all(out)?;

    // vocabulary over canonical writings plus sampled walks
    let mut vocab = Vocabulary::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for m in &parsed.molecules {
        let canon = canonical_smiles(m)?;
        symbol_encode(&canon, run_cfg.symbol_stride, &mut vocab);
        for s in enumerate_smiles(m, run_cfg.train_walks, &mut rng)? {
            symbol_encode(&s, run_cfg.symbol_stride, &mut vocab);
        }
    }
    vocab.freeze();
    vocab.save(&out.join("vocabulary.tsv"))?;

    let labels = parsed.dataset.labels();
    let samples: Vec<TrainSample> = parsed
        .molecules
        .iter()
        .zip(&labels)
        .map(|(m, &label)| TrainSample { molecule: m, label })
        .collect();
    let train_cfg = TrainConfig {
        optimizer: run_cfg.optimizer,
        learning_rate: run_cfg.learning_rate,
        batch_size: run_cfg.batch_size,
        epochs: run_cfg.epochs,
        patience: run_cfg.patience,
        seed,
        clip_norm: run_cfg.clip_norm,
    };
    let augment = AugmentConfig {
        train_walks_per_molecule: run_cfg.train_walks,
        predict_walks_per_molecule: run_cfg.predict_walks,
        seed,
    };

    let checkpoint = out.join("model.ssmc");
    match kind {
        ModelKind::Cnn => {
            let mut model = CnnModel::init(
                CnnConfig::new(vocab.len(), run_cfg.regions.clone(), run_cfg.filters),
                &mut ChaCha8Rng::seed_from_u64(seed),
            );
            let outcome = train_sequence_classifier(
                &mut model,
                &samples,
                &vocab,
                run_cfg.symbol_stride,
                &train_cfg,
                &augment,
            )?;
            model_io::save_cnn(&model, vocab.content_hash(), &checkpoint)?;
            println!(
                "trained cnn: best epoch {} of {}, checkpoint {}",
                outcome.best_epoch,
                outcome.epochs_run,
                checkpoint.display()
            );
        }
        ModelKind::Gru => {
            let mut model = GruClassifier::init(
                GruConfig {
                    vocab_size: vocab.len(),
                    embed_dim: run_cfg.embedding,
                    hidden: run_cfg.hidden,
                },
                &mut ChaCha8Rng::seed_from_u64(seed),
            );
            let outcome = train_sequence_classifier(
                &mut model,
                &samples,
                &vocab,
                run_cfg.symbol_stride,
                &train_cfg,
                &augment,
            )?;
            model_io::save_gru(&model, vocab.content_hash(), &checkpoint)?;
            println!(
                "trained gru: best epoch {} of {}, checkpoint {}",
                outcome.best_epoch,
                outcome.epochs_run,
                checkpoint.display()
            );
        }
        ModelKind::RnnLm => {
            use smiles_screen::features::symbol_transform;
            use smiles_screen::neural::{lm_fit, rnnlm_classify_fit, LmConfig};
            let encode = |i: usize| -> Vec<u32> {
                let canon = canonical_smiles(&parsed.molecules[i]).expect("validated molecules");
                symbol_transform(&canon, run_cfg.symbol_stride, &vocab).symbols
            };
            let active: Vec<Vec<u32>> = (0..labels.len())
                .filter(|&i| labels[i] == 1)
                .map(encode)
                .collect();
            let inactive: Vec<Vec<u32>> = (0..labels.len())
                .filter(|&i| labels[i] == 0)
                .map(encode)
                .collect();
            let lm_cfg = LmConfig {
                embed_dim: run_cfg.lm_embedding,
                hidden: run_cfg.lm_hidden,
            };
            let lm_active = lm_fit(&active, vocab.len(), lm_cfg, &train_cfg)?;
            let lm_inactive = lm_fit(&inactive, vocab.len(), lm_cfg, &train_cfg)?;
            let labeled: Vec<(Vec<u32>, u8)> =
                (0..labels.len()).map(|i| (encode(i), labels[i])).collect();
            let stacker = rnnlm_classify_fit(lm_active, lm_inactive, &labeled)?;
            model_io::save_stacker(&stacker, vocab.content_hash(), out)?;
            println!(
                "trained rnnlm: checkpoints lm_active.ssmc, lm_inactive.ssmc, stacker.ssmc in {}",
                out.display()
            );
        }
        other => bail!("train supports cnn, gru, and rnnlm checkpoints, not {}", other),
    }
    Ok(())
}
