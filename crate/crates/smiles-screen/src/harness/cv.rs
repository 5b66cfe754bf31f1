//! Nested stratified cross-validation with grid search: outer folds score,
//! inner folds select hyperparameters, and every fitted object (vocabulary,
//! calibration, language models, early-stopping split) derives from the
//! outer-train split alone.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::dataset::{ParsedDataset, Record};
use super::folds::stratified_folds_from_labels;
use super::metrics::{accuracy, log_loss};
use super::HarnessError;
use crate::augment::{enumerate_smiles, AugmentConfig};
use crate::features::{
    ngram_featurize, ngram_transform, symbol_encode, tokenize, FeatureMode, NGramConfig, NGramSet,
    SymbolStride, Vocabulary,
};
use crate::models::{
    nb_fit, rf_fit_subset, svm_fit_precomputed, svm_fit_subset, ForestParams, GramMatrix,
    ProbClassifier,
};
use crate::neural::{
    lm_fit, predict_averaged, rnnlm_classify_fit, train_sequence_classifier, CnnConfig, CnnModel,
    GruClassifier, GruConfig, LmConfig, TrainConfig, TrainSample,
};
use crate::smiles::canonical_smiles;
use crate::util::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Svm,
    Nb,
    Rf,
    Cnn,
    Gru,
    RnnLm,
    /// Constant prediction of the training base rate; a sanity baseline.
    Prior,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Svm => "svm",
            ModelKind::Nb => "nb",
            ModelKind::Rf => "rf",
            ModelKind::Cnn => "cnn",
            ModelKind::Gru => "gru",
            ModelKind::RnnLm => "rnnlm",
            ModelKind::Prior => "prior",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "svm" => Ok(ModelKind::Svm),
            "nb" => Ok(ModelKind::Nb),
            "rf" => Ok(ModelKind::Rf),
            "cnn" => Ok(ModelKind::Cnn),
            "gru" => Ok(ModelKind::Gru),
            "rnnlm" => Ok(ModelKind::RnnLm),
            "prior" => Ok(ModelKind::Prior),
            other => Err(format!("unknown model {:?}", other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Ngram,
    Symbols,
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Representation::Ngram => "ngram",
            Representation::Symbols => "symbols",
        })
    }
}

impl std::str::FromStr for Representation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ngram" => Ok(Representation::Ngram),
            "symbols" => Ok(Representation::Symbols),
            other => Err(format!("unknown representation {:?}", other)),
        }
    }
}

/// One point of a hyperparameter grid, as named numeric values.
pub type GridPoint = BTreeMap<String, f64>;

/// The search space for one model: grid points in declared order (ties in
/// inner log loss go to the earlier point) and the inner fold count.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    pub model: ModelKind,
    pub points: Vec<GridPoint>,
    pub inner_k: usize,
}

fn point(pairs: &[(&str, f64)]) -> GridPoint {
    pairs
        .iter()
        .map(|&(k, v)| (k.to_string(), v))
        .collect()
}

impl HyperGrid {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.points.is_empty() {
            return Err(HarnessError::EmptyGrid);
        }
        if self.inner_k < 2 {
            return Err(HarnessError::BadFoldCount(self.inner_k));
        }
        Ok(())
    }

    /// The shipped default grid per model.
    pub fn for_model(model: ModelKind, cfg: &RunConfig) -> HyperGrid {
        let points = match model {
            ModelKind::Svm => cfg
                .svm_c_grid
                .iter()
                .map(|&c| point(&[("C", c)]))
                .collect(),
            ModelKind::Nb => cfg
                .nb_alpha_grid
                .iter()
                .map(|&a| point(&[("alpha", a)]))
                .collect(),
            ModelKind::Rf => {
                let mut points = Vec::new();
                for &trees in &cfg.rf_trees_grid {
                    for &min_leaf in &cfg.rf_min_leaf_grid {
                        points.push(point(&[("trees", trees as f64), ("min_leaf", min_leaf as f64)]));
                    }
                }
                points
            }
            ModelKind::Cnn => {
                let mut points = Vec::new();
                for &lr in &cfg.lr_grid {
                    for &filters in &cfg.filters_grid {
                        points.push(point(&[("lr", lr), ("filters", filters as f64)]));
                    }
                }
                points
            }
            ModelKind::Gru => {
                let mut points = Vec::new();
                for &lr in &cfg.lr_grid {
                    for &hidden in &cfg.hidden_grid {
                        points.push(point(&[("lr", lr), ("hidden", hidden as f64)]));
                    }
                }
                points
            }
            ModelKind::RnnLm | ModelKind::Prior => vec![GridPoint::new()],
        };
        HyperGrid {
            model,
            points,
            inner_k: cfg.inner_folds,
        }
    }
}

/// Expected representation per model; mismatches are configuration errors.
pub fn expected_representation(model: ModelKind) -> Option<Representation> {
    match model {
        ModelKind::Svm | ModelKind::Nb | ModelKind::Rf => Some(Representation::Ngram),
        ModelKind::Cnn | ModelKind::Gru | ModelKind::RnnLm => Some(Representation::Symbols),
        ModelKind::Prior => None,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub label: u8,
    /// Probability of the positive class; walk-averaged for sequence models.
    pub probability: f64,
    /// The first sampled walk's probability (equals `probability` for
    /// non-augmented models).
    pub single_walk: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub selected: GridPoint,
    pub log_loss: Option<f64>,
    pub accuracy: Option<f64>,
    pub runtime_seconds: f64,
    pub predictions: Vec<PredictionRecord>,
    pub error: Option<String>,
}

/// The evaluation of one (dataset, model, representation) triple.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelEval {
    pub dataset: String,
    pub model: ModelKind,
    pub representation: Representation,
    pub folds: Vec<FoldResult>,
    pub mean_log_loss: Option<f64>,
    pub std_log_loss: Option<f64>,
    pub mean_accuracy: Option<f64>,
    pub seed: u64,
    pub config_hash: u64,
}

impl ModelEval {
    pub fn all_folds_ok(&self) -> bool {
        self.folds.iter().all(|f| f.error.is_none())
    }
}

/// Guards against a test record leaking into training.
pub fn check_id_disjoint(train: &[&Record], test: &[&Record]) -> Result<(), HarnessError> {
    let train_ids: HashSet<&str> = train.iter().map(|r| r.id.as_str()).collect();
    for r in test {
        if train_ids.contains(r.id.as_str()) {
            return Err(HarnessError::LeakDetected(r.id.clone()));
        }
    }
    Ok(())
}

/// Inner fold count, dropped to 3 when the smaller class of the outer-train
/// split has fewer than 25 members.
fn effective_inner_k(labels: &[u8], requested: usize) -> usize {
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let minority = pos.min(labels.len() - pos);
    if minority < 25 {
        requested.min(3)
    } else {
        requested
    }
}

struct FoldContext<'a> {
    data: &'a ParsedDataset,
    canonical: &'a [String],
    train_idx: &'a [usize],
    test_idx: &'a [usize],
    grid: &'a HyperGrid,
    augment: &'a AugmentConfig,
    run_cfg: &'a RunConfig,
    seed: u64,
    fold: usize,
}

/// Runs the full nested protocol for one model on one dataset.
pub fn nested_cv(
    data: &ParsedDataset,
    model: ModelKind,
    representation: Representation,
    grid: &HyperGrid,
    augment: &AugmentConfig,
    run_cfg: &RunConfig,
    seed: u64,
) -> Result<ModelEval, HarnessError> {
    grid.validate()?;
    if let Some(expected) = expected_representation(model) {
        if representation != expected {
            return Err(HarnessError::ReprMismatch {
                model: model.to_string(),
                repr: representation.to_string(),
            });
        }
    }
    if grid.model != model {
        return Err(HarnessError::BadConfig {
            key: "grid.model".into(),
            value: format!("{} vs {}", grid.model, model),
        });
    }

    let labels = data.dataset.labels();
    let outer = stratified_folds_from_labels(&labels, run_cfg.outer_folds, derive_seed(seed, &[0x0f]))?;

    // Canonical writings are a per-record constant; compute them once.
    let canonical: Vec<String> = data
        .molecules
        .iter()
        .map(|m| canonical_smiles(m).map_err(|e| HarnessError::Neural(e.to_string())))
        .collect::<Result<_, _>>()?;

    let mut folds = Vec::with_capacity(outer.k);
    for fold in 0..outer.k {
        let started = Instant::now();
        let train_idx = outer.complement_indices(fold);
        let test_idx = outer.fold_indices(fold);
        let train_records: Vec<&Record> =
            train_idx.iter().map(|&i| &data.dataset.records()[i]).collect();
        let test_records: Vec<&Record> =
            test_idx.iter().map(|&i| &data.dataset.records()[i]).collect();

        let outcome = check_id_disjoint(&train_records, &test_records).and_then(|()| {
            run_fold(&FoldContext {
                data,
                canonical: &canonical,
                train_idx: &train_idx,
                test_idx: &test_idx,
                grid,
                augment,
                run_cfg,
                seed,
                fold,
            })
        });
        let runtime_seconds = started.elapsed().as_secs_f64();
        match outcome {
            Ok((selected, predictions)) => {
                let probs: Vec<f64> = predictions.iter().map(|p| p.probability).collect();
                let ys: Vec<u8> = predictions.iter().map(|p| p.label).collect();
                folds.push(FoldResult {
                    fold,
                    selected,
                    log_loss: Some(log_loss(&probs, &ys)?),
                    accuracy: Some(accuracy(&probs, &ys)?),
                    runtime_seconds,
                    predictions,
                    error: None,
                });
            }
            Err(err) => folds.push(FoldResult {
                fold,
                selected: GridPoint::new(),
                log_loss: None,
                accuracy: None,
                runtime_seconds,
                predictions: Vec::new(),
                error: Some(err.to_string()),
            }),
        }
    }

    let scores: Vec<f64> = folds.iter().filter_map(|f| f.log_loss).collect();
    let accs: Vec<f64> = folds.iter().filter_map(|f| f.accuracy).collect();
    let (mean_log_loss, std_log_loss, mean_accuracy) = if scores.len() == folds.len() {
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        let var =
            scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / scores.len() as f64;
        let mean_acc = accs.iter().sum::<f64>() / accs.len() as f64;
        (Some(mean), Some(var.sqrt()), Some(mean_acc))
    } else {
        (None, None, None)
    };

    Ok(ModelEval {
        dataset: data.dataset.name().to_string(),
        model,
        representation,
        folds,
        mean_log_loss,
        std_log_loss,
        mean_accuracy,
        seed,
        config_hash: run_cfg.config_hash(),
    })
}

fn run_fold(ctx: &FoldContext<'_>) -> Result<(GridPoint, Vec<PredictionRecord>), HarnessError> {
    match ctx.grid.model {
        ModelKind::Prior => run_prior_fold(ctx),
        ModelKind::Svm | ModelKind::Nb | ModelKind::Rf => run_ngram_fold(ctx),
        ModelKind::Cnn | ModelKind::Gru => run_sequence_fold(ctx),
        ModelKind::RnnLm => run_rnnlm_fold(ctx),
    }
}

fn prediction_records(
    ctx: &FoldContext<'_>,
    probabilities: &[f64],
    singles: &[f64],
) -> Vec<PredictionRecord> {
    ctx.test_idx
        .iter()
        .zip(probabilities.iter().zip(singles))
        .map(|(&i, (&p, &s))| PredictionRecord {
            id: ctx.data.dataset.records()[i].id.clone(),
            label: ctx.data.dataset.records()[i].label,
            probability: p,
            single_walk: s,
        })
        .collect()
}

fn run_prior_fold(
    ctx: &FoldContext<'_>,
) -> Result<(GridPoint, Vec<PredictionRecord>), HarnessError> {
    let labels = ctx.data.dataset.labels();
    let positives = ctx
        .train_idx
        .iter()
        .filter(|&&i| labels[i] == 1)
        .count() as f64;
    let rate = positives / ctx.train_idx.len() as f64;
    let probs = vec![rate; ctx.test_idx.len()];
    Ok((GridPoint::new(), prediction_records(ctx, &probs, &probs)))
}

/// Shared n-gram pipeline: fit the vocabulary and features on outer-train,
/// transform outer-test, then run the inner grid search for the model kind.
fn run_ngram_fold(
    ctx: &FoldContext<'_>,
) -> Result<(GridPoint, Vec<PredictionRecord>), HarnessError> {
    let mode = match ctx.grid.model {
        ModelKind::Rf => FeatureMode::Count,
        _ => FeatureMode::Set,
    };
    let ngram_cfg = NGramConfig::new(ctx.run_cfg.ngram_lo, ctx.run_cfg.ngram_hi, mode)
        .map_err(|e| HarnessError::Model(e.to_string()))?;

    let mut vocab = Vocabulary::new();
    let mut train_sets = Vec::with_capacity(ctx.train_idx.len());
    for &i in ctx.train_idx {
        let tokens = tokenize(&ctx.canonical[i]).map_err(|e| HarnessError::Model(e.to_string()))?;
        train_sets.push(ngram_featurize(&tokens, &ngram_cfg, &mut vocab));
    }
    vocab.freeze();
    let mut test_sets = Vec::with_capacity(ctx.test_idx.len());
    for &i in ctx.test_idx {
        let tokens = tokenize(&ctx.canonical[i]).map_err(|e| HarnessError::Model(e.to_string()))?;
        test_sets.push(ngram_transform(&tokens, &ngram_cfg, &vocab));
    }
    let labels = ctx.data.dataset.labels();
    let train_labels: Vec<u8> = ctx.train_idx.iter().map(|&i| labels[i]).collect();
    let inner_k = effective_inner_k(&train_labels, ctx.grid.inner_k);

    let inner = stratified_folds_from_labels(
        &train_labels,
        inner_k,
        derive_seed(ctx.seed, &[0x20, ctx.fold as u64]),
    )?;

    let gram = match ctx.grid.model {
        ModelKind::Svm => Some(
            GramMatrix::compute(&train_sets).map_err(|e| HarnessError::Model(e.to_string()))?,
        ),
        _ => None,
    };

    // inner grid search by mean inner log loss
    let mut selected = 0usize;
    if ctx.grid.points.len() > 1 {
        let mut best = f64::INFINITY;
        for (gi, gp) in ctx.grid.points.iter().enumerate() {
            let mut total = 0.0;
            for ifold in 0..inner.k {
                let fit_rows = inner.complement_indices(ifold);
                let val_rows = inner.fold_indices(ifold);
                let probs = fit_and_score_ngram(
                    ctx, gp, &train_sets, &train_labels, gram.as_ref(), &fit_rows, &val_rows,
                    derive_seed(ctx.seed, &[0x21, ctx.fold as u64, gi as u64, ifold as u64]),
                )?;
                let ys: Vec<u8> = val_rows.iter().map(|&r| train_labels[r]).collect();
                total += log_loss(&probs, &ys)?;
            }
            let mean = total / inner.k as f64;
            if mean < best {
                best = mean;
                selected = gi;
            }
        }
    }

    // refit on the whole outer-train split, score outer-test
    let gp = &ctx.grid.points[selected];
    let all_rows: Vec<usize> = (0..train_sets.len()).collect();
    let probs = fit_and_predict_ngram(
        ctx,
        gp,
        &train_sets,
        &train_labels,
        gram.as_ref(),
        &all_rows,
        &test_sets,
        derive_seed(ctx.seed, &[0x22, ctx.fold as u64, selected as u64]),
    )?;
    Ok((gp.clone(), prediction_records(ctx, &probs, &probs)))
}

fn grid_param(gp: &GridPoint, key: &str, default: f64) -> f64 {
    gp.get(key).copied().unwrap_or(default)
}

#[allow(clippy::too_many_arguments)]
fn fit_and_score_ngram(
    ctx: &FoldContext<'_>,
    gp: &GridPoint,
    train_sets: &[NGramSet],
    train_labels: &[u8],
    gram: Option<&GramMatrix>,
    fit_rows: &[usize],
    val_rows: &[usize],
    seed: u64,
) -> Result<Vec<f64>, HarnessError> {
    let val_sets: Vec<NGramSet> = val_rows.iter().map(|&r| train_sets[r].clone()).collect();
    fit_and_predict_ngram(ctx, gp, train_sets, train_labels, gram, fit_rows, &val_sets, seed)
}

#[allow(clippy::too_many_arguments)]
fn fit_and_predict_ngram(
    ctx: &FoldContext<'_>,
    gp: &GridPoint,
    train_sets: &[NGramSet],
    train_labels: &[u8],
    gram: Option<&GramMatrix>,
    fit_rows: &[usize],
    predict_sets: &[NGramSet],
    seed: u64,
) -> Result<Vec<f64>, HarnessError> {
    let probs = match ctx.grid.model {
        ModelKind::Svm => {
            let c = grid_param(gp, "C", 1.0);
            let gram = gram.expect("svm path always precomputes the gram matrix");
            let model = if fit_rows.len() == train_sets.len() {
                svm_fit_precomputed(gram, train_sets, train_labels, c)
            } else {
                svm_fit_subset(gram, train_sets, train_labels, fit_rows, c)
            }
            .map_err(|e| HarnessError::Model(e.to_string()))?;
            model
                .predict_proba(predict_sets)
                .map_err(|e| HarnessError::Model(e.to_string()))?
        }
        ModelKind::Nb => {
            let alpha = grid_param(gp, "alpha", 1.0);
            let fit_sets: Vec<NGramSet> =
                fit_rows.iter().map(|&r| train_sets[r].clone()).collect();
            let fit_labels: Vec<u8> = fit_rows.iter().map(|&r| train_labels[r]).collect();
            let vocab_size = vocab_size_of(train_sets);
            let model = nb_fit(&fit_sets, &fit_labels, alpha, vocab_size)
                .map_err(|e| HarnessError::Model(e.to_string()))?;
            model
                .predict_proba(predict_sets)
                .map_err(|e| HarnessError::Model(e.to_string()))?
        }
        ModelKind::Rf => {
            let params = ForestParams {
                trees: grid_param(gp, "trees", 200.0) as usize,
                min_leaf: grid_param(gp, "min_leaf", 2.0) as usize,
                seed,
            };
            let vocab_size = vocab_size_of(train_sets);
            let model = rf_fit_subset(train_sets, train_labels, fit_rows, vocab_size, params)
                .map_err(|e| HarnessError::Model(e.to_string()))?;
            model
                .predict_proba(predict_sets)
                .map_err(|e| HarnessError::Model(e.to_string()))?
        }
        _ => unreachable!("n-gram path only handles svm/nb/rf"),
    };
    Ok(probs)
}

/// Highest index + 1 across the sets; the fitted vocabulary is contiguous so
/// this equals its length.
fn vocab_size_of(sets: &[NGramSet]) -> usize {
    sets.iter()
        .flat_map(|s| s.indices().iter().copied())
        .max()
        .map(|m| m as usize + 1)
        .unwrap_or(2)
}

/// Fits the symbol vocabulary on outer-train canonical writings plus
/// sampled walks, so augmented strings rarely fall back to UNK.
fn fit_symbol_vocab(
    ctx: &FoldContext<'_>,
    rows: &[usize],
) -> Result<Vocabulary, HarnessError> {
    let mut vocab = Vocabulary::new();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(ctx.seed, &[0x30, ctx.fold as u64]));
    for &i in rows {
        symbol_encode(&ctx.canonical[i], ctx.run_cfg.symbol_stride, &mut vocab);
        let writings = enumerate_smiles(
            &ctx.data.molecules[i],
            ctx.augment.train_walks_per_molecule,
            &mut rng,
        )
        .map_err(|e| HarnessError::Neural(e.to_string()))?;
        for text in writings {
            symbol_encode(&text, ctx.run_cfg.symbol_stride, &mut vocab);
        }
    }
    vocab.freeze();
    Ok(vocab)
}

fn train_config_from(ctx: &FoldContext<'_>, gp: &GridPoint, seed: u64) -> TrainConfig {
    TrainConfig {
        optimizer: ctx.run_cfg.optimizer,
        learning_rate: grid_param(gp, "lr", ctx.run_cfg.learning_rate),
        batch_size: ctx.run_cfg.batch_size,
        epochs: ctx.run_cfg.epochs,
        patience: ctx.run_cfg.patience,
        seed,
        clip_norm: ctx.run_cfg.clip_norm,
    }
}

enum SeqModel {
    Cnn(CnnModel),
    Gru(GruClassifier),
}

impl SeqModel {
    fn init(ctx: &FoldContext<'_>, gp: &GridPoint, vocab_len: usize, seed: u64) -> SeqModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match ctx.grid.model {
            ModelKind::Cnn => SeqModel::Cnn(CnnModel::init(
                CnnConfig::new(
                    vocab_len,
                    ctx.run_cfg.regions.clone(),
                    grid_param(gp, "filters", ctx.run_cfg.filters as f64) as usize,
                ),
                &mut rng,
            )),
            ModelKind::Gru => SeqModel::Gru(GruClassifier::init(
                GruConfig {
                    vocab_size: vocab_len,
                    embed_dim: ctx.run_cfg.embedding,
                    hidden: grid_param(gp, "hidden", ctx.run_cfg.hidden as f64) as usize,
                },
                &mut rng,
            )),
            _ => unreachable!("sequence path only handles cnn/gru"),
        }
    }

    fn fit(
        &mut self,
        samples: &[TrainSample<'_>],
        vocab: &Vocabulary,
        stride: SymbolStride,
        cfg: &TrainConfig,
        augment: &AugmentConfig,
    ) -> Result<(), HarnessError> {
        match self {
            SeqModel::Cnn(m) => {
                train_sequence_classifier(m, samples, vocab, stride, cfg, augment)
            }
            SeqModel::Gru(m) => {
                train_sequence_classifier(m, samples, vocab, stride, cfg, augment)
            }
        }
        .map(|_| ())
        .map_err(|e| HarnessError::Neural(e.to_string()))
    }

    fn predict_avg(
        &self,
        ctx: &FoldContext<'_>,
        vocab: &Vocabulary,
        index: usize,
        walks: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<(f64, f64), HarnessError> {
        let molecule = &ctx.data.molecules[index];
        let stride = ctx.run_cfg.symbol_stride;
        let avg = match self {
            SeqModel::Cnn(m) => predict_averaged(m, molecule, vocab, stride, walks, rng),
            SeqModel::Gru(m) => predict_averaged(m, molecule, vocab, stride, walks, rng),
        }
        .map_err(|e| HarnessError::Neural(e.to_string()))?;
        Ok((avg.mean, avg.first))
    }
}

fn run_sequence_fold(
    ctx: &FoldContext<'_>,
) -> Result<(GridPoint, Vec<PredictionRecord>), HarnessError> {
    let labels = ctx.data.dataset.labels();
    let vocab = fit_symbol_vocab(ctx, ctx.train_idx)?;
    let train_labels: Vec<u8> = ctx.train_idx.iter().map(|&i| labels[i]).collect();
    let inner_k = effective_inner_k(&train_labels, ctx.grid.inner_k);

    let make_samples = |rows: &[usize]| -> Vec<TrainSample<'_>> {
        rows.iter()
            .map(|&r| TrainSample {
                molecule: &ctx.data.molecules[ctx.train_idx[r]],
                label: train_labels[r],
            })
            .collect()
    };

    let mut selected = 0usize;
    if ctx.grid.points.len() > 1 {
        let inner = stratified_folds_from_labels(
            &train_labels,
            inner_k,
            derive_seed(ctx.seed, &[0x31, ctx.fold as u64]),
        )?;
        let mut best = f64::INFINITY;
        for (gi, gp) in ctx.grid.points.iter().enumerate() {
            let mut total = 0.0;
            for ifold in 0..inner.k {
                let fit_rows = inner.complement_indices(ifold);
                let val_rows = inner.fold_indices(ifold);
                let seed = derive_seed(
                    ctx.seed,
                    &[0x32, ctx.fold as u64, gi as u64, ifold as u64],
                );
                let mut model = SeqModel::init(ctx, gp, vocab.len(), derive_seed(seed, &[1]));
                let samples = make_samples(&fit_rows);
                let augment = AugmentConfig {
                    seed: derive_seed(seed, &[2]),
                    ..*ctx.augment
                };
                model.fit(
                    &samples,
                    &vocab,
                    ctx.run_cfg.symbol_stride,
                    &train_config_from(ctx, gp, derive_seed(seed, &[3])),
                    &augment,
                )?;
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[4]));
                let mut probs = Vec::with_capacity(val_rows.len());
                for &r in &val_rows {
                    let (mean, _) = model.predict_avg(
                        ctx,
                        &vocab,
                        ctx.train_idx[r],
                        ctx.augment.predict_walks_per_molecule,
                        &mut rng,
                    )?;
                    probs.push(mean);
                }
                let ys: Vec<u8> = val_rows.iter().map(|&r| train_labels[r]).collect();
                total += log_loss(&probs, &ys)?;
            }
            let mean = total / inner.k as f64;
            if mean < best {
                best = mean;
                selected = gi;
            }
        }
    }

    let gp = &ctx.grid.points[selected];
    let seed = derive_seed(ctx.seed, &[0x33, ctx.fold as u64, selected as u64]);
    let mut model = SeqModel::init(ctx, gp, vocab.len(), derive_seed(seed, &[1]));
    let all_rows: Vec<usize> = (0..ctx.train_idx.len()).collect();
    let samples = make_samples(&all_rows);
    let augment = AugmentConfig {
        seed: derive_seed(seed, &[2]),
        ..*ctx.augment
    };
    model.fit(
        &samples,
        &vocab,
        ctx.run_cfg.symbol_stride,
        &train_config_from(ctx, gp, derive_seed(seed, &[3])),
        &augment,
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[4]));
    let mut probs = Vec::with_capacity(ctx.test_idx.len());
    let mut singles = Vec::with_capacity(ctx.test_idx.len());
    for &i in ctx.test_idx {
        let (mean, first) = model.predict_avg(
            ctx,
            &vocab,
            i,
            ctx.augment.predict_walks_per_molecule,
            &mut rng,
        )?;
        probs.push(mean);
        singles.push(first);
    }
    Ok((gp.clone(), prediction_records(ctx, &probs, &singles)))
}

fn run_rnnlm_fold(
    ctx: &FoldContext<'_>,
) -> Result<(GridPoint, Vec<PredictionRecord>), HarnessError> {
    let labels = ctx.data.dataset.labels();
    let vocab = fit_symbol_vocab(ctx, ctx.train_idx)?;
    let stride = ctx.run_cfg.symbol_stride;

    let encode = |i: usize| -> Vec<u32> {
        crate::features::symbol_transform(&ctx.canonical[i], stride, &vocab).symbols
    };
    let active: Vec<Vec<u32>> = ctx
        .train_idx
        .iter()
        .filter(|&&i| labels[i] == 1)
        .map(|&i| encode(i))
        .collect();
    let inactive: Vec<Vec<u32>> = ctx
        .train_idx
        .iter()
        .filter(|&&i| labels[i] == 0)
        .map(|&i| encode(i))
        .collect();

    let lm_cfg = LmConfig {
        embed_dim: ctx.run_cfg.lm_embedding,
        hidden: ctx.run_cfg.lm_hidden,
    };
    let gp = &ctx.grid.points[0];
    let seed = derive_seed(ctx.seed, &[0x40, ctx.fold as u64]);
    let lm_active = lm_fit(
        &active,
        vocab.len(),
        lm_cfg,
        &train_config_from(ctx, gp, derive_seed(seed, &[1])),
    )
    .map_err(|e| HarnessError::Neural(e.to_string()))?;
    let lm_inactive = lm_fit(
        &inactive,
        vocab.len(),
        lm_cfg,
        &train_config_from(ctx, gp, derive_seed(seed, &[2])),
    )
    .map_err(|e| HarnessError::Neural(e.to_string()))?;

    let labeled: Vec<(Vec<u32>, u8)> = ctx
        .train_idx
        .iter()
        .map(|&i| (encode(i), labels[i]))
        .collect();
    let stacker = rnnlm_classify_fit(lm_active, lm_inactive, &labeled)
        .map_err(|e| HarnessError::Neural(e.to_string()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[3]));
    let mut probs = Vec::with_capacity(ctx.test_idx.len());
    let mut singles = Vec::with_capacity(ctx.test_idx.len());
    for &i in ctx.test_idx {
        let writings = enumerate_smiles(
            &ctx.data.molecules[i],
            ctx.augment.predict_walks_per_molecule,
            &mut rng,
        )
        .map_err(|e| HarnessError::Neural(e.to_string()))?;
        let mut sum = 0.0;
        let mut first = 0.0;
        for (w, text) in writings.iter().enumerate() {
            let seq = crate::features::symbol_transform(text, stride, &vocab).symbols;
            let p = stacker.predict_proba_seq(&seq);
            if w == 0 {
                first = p;
            }
            sum += p;
        }
        probs.push(sum / writings.len() as f64);
        singles.push(first);
    }
    Ok((gp.clone(), prediction_records(ctx, &probs, &singles)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{Dataset, Record};

    fn tiny_dataset(n: usize) -> ParsedDataset {
        // alternating actives carrying an N#C tail
        let records: Vec<Record> = (0..n)
            .map(|i| {
                let label = u8::from(i % 3 == 0);
                let smiles = if label == 1 {
                    format!("{}C#N", "C".repeat(2 + i % 4))
                } else {
                    format!("{}O", "C".repeat(2 + i % 4))
                };
                Record {
                    id: format!("r{}", i),
                    smiles,
                    label,
                }
            })
            .collect();
        ParsedDataset::from_dataset(Dataset::new("tiny".into(), records).unwrap())
    }

    fn quick_cfg() -> RunConfig {
        RunConfig {
            outer_folds: 3,
            inner_folds: 2,
            svm_c_grid: vec![1.0, 10.0],
            nb_alpha_grid: vec![1.0],
            ..RunConfig::default()
        }
    }

    #[test]
    fn prior_model_matches_closed_form() {
        let data = tiny_dataset(30);
        let cfg = quick_cfg();
        let grid = HyperGrid::for_model(ModelKind::Prior, &cfg);
        let eval = nested_cv(
            &data,
            ModelKind::Prior,
            Representation::Ngram,
            &grid,
            &AugmentConfig::default(),
            &cfg,
            7,
        )
        .unwrap();
        assert!(eval.all_folds_ok());
        let labels = data.dataset.labels();
        for fold in &eval.folds {
            // recompute the train base rate from the fold's own test ids
            let test_ids: HashSet<&str> =
                fold.predictions.iter().map(|p| p.id.as_str()).collect();
            let train: Vec<u8> = data
                .dataset
                .records()
                .iter()
                .zip(&labels)
                .filter(|(r, _)| !test_ids.contains(r.id.as_str()))
                .map(|(_, &y)| y)
                .collect();
            let rate = train.iter().filter(|&&y| y == 1).count() as f64 / train.len() as f64;
            let ys: Vec<u8> = fold.predictions.iter().map(|p| p.label).collect();
            let expected = log_loss(&vec![rate; ys.len()], &ys).unwrap();
            assert!((fold.log_loss.unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn leakage_tripwire_fires_on_duplicated_record() {
        let r1 = Record {
            id: "a".into(),
            smiles: "CCO".into(),
            label: 1,
        };
        let r2 = Record {
            id: "b".into(),
            smiles: "CCC".into(),
            label: 0,
        };
        assert!(check_id_disjoint(&[&r1, &r2], &[&r1]).is_err());
        assert!(check_id_disjoint(&[&r1], &[&r2]).is_ok());
    }

    #[test]
    fn nested_cv_yields_one_score_per_outer_fold() {
        let data = tiny_dataset(36);
        let cfg = quick_cfg();
        let grid = HyperGrid::for_model(ModelKind::Nb, &cfg);
        let eval = nested_cv(
            &data,
            ModelKind::Nb,
            Representation::Ngram,
            &grid,
            &AugmentConfig::default(),
            &cfg,
            3,
        )
        .unwrap();
        assert_eq!(eval.folds.len(), 3);
        assert!(eval.all_folds_ok());
        assert!(eval.mean_log_loss.is_some());
    }

    #[test]
    fn representation_mismatch_is_rejected() {
        let data = tiny_dataset(30);
        let cfg = quick_cfg();
        let grid = HyperGrid::for_model(ModelKind::Svm, &cfg);
        assert!(matches!(
            nested_cv(
                &data,
                ModelKind::Svm,
                Representation::Symbols,
                &grid,
                &AugmentConfig::default(),
                &cfg,
                3,
            ),
            Err(HarnessError::ReprMismatch { .. })
        ));
    }

    #[test]
    fn svm_nested_cv_runs_end_to_end() {
        let data = tiny_dataset(36);
        let cfg = quick_cfg();
        let grid = HyperGrid::for_model(ModelKind::Svm, &cfg);
        let eval = nested_cv(
            &data,
            ModelKind::Svm,
            Representation::Ngram,
            &grid,
            &AugmentConfig::default(),
            &cfg,
            11,
        )
        .unwrap();
        assert!(eval.all_folds_ok(), "{:?}", eval.folds);
        // the tail feature separates the classes; scores should be decent
        assert!(eval.mean_accuracy.unwrap() > 0.8);
        for fold in &eval.folds {
            assert!(fold.selected.contains_key("C"));
        }
    }
}
