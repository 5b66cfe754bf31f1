//! The acceptance suite: one test per criterion, each printing a PASS line
//! with its measured numbers. Run with
//! `cargo test --test acceptance -- --nocapture` to see them.

mod common;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smiles_screen::augment::random_walk;
use smiles_screen::features::{
    ngram_featurize, tokenize, FeatureMode, NGramConfig, Vocabulary,
};
use smiles_screen::harness::{
    evaluate_dataset, log_loss, run_evaluate, stratified_folds_from_labels, EvaluateArgs,
    ModelKind, ParsedDataset, Representation, RunConfig,
};
use smiles_screen::models::{svm_fit, GramMatrix};
use smiles_screen::neural::{
    finite_difference_gradient, max_relative_error, CnnConfig, CnnModel, GruClassifier,
    GruConfig, LmConfig, LmModel, SequenceClassifier,
};
use smiles_screen::smiles::{
    canonical_smiles, is_isomorphic, parse_smiles, write_smiles,
};
use smiles_screen::structure::chain_result;
use smiles_screen::synthetic::{
    planted_motif_dataset, random_molecule, MoleculeGenConfig,
};

#[test]
fn criterion_1_parser_round_trip() {
    let started = Instant::now();
    let cfg = MoleculeGenConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let mut checked = 0usize;
    for _ in 0..1000 {
        let molecule = random_molecule(&cfg, &mut rng);
        for _ in 0..10 {
            let walk = random_walk(&molecule, &mut rng);
            let written = write_smiles(&molecule, &walk).expect("generator output is writable");
            let back = parse_smiles(&written)
                .unwrap_or_else(|d| panic!("rewrite {:?} failed to parse: {}", written, d));
            assert!(
                is_isomorphic(&molecule, &back),
                "round trip broke on {:?}",
                written
            );
            checked += 1;
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert_eq!(checked, 10_000);
    assert!(elapsed < 30.0, "round trip took {:.1}s", elapsed);
    println!(
        "criterion 1: PASS — 1000 molecules x 10 walks round-trip isomorphic in {:.1}s",
        elapsed
    );
}

#[test]
fn criterion_2_canonical_relabeling_invariance() {
    let cfg = MoleculeGenConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    for case in 0..500 {
        let molecule = random_molecule(&cfg, &mut rng);
        let reference = canonical_smiles(&molecule).expect("writable");
        for _ in 0..20 {
            let mut perm: Vec<usize> = (0..molecule.atom_count()).collect();
            perm.shuffle(&mut rng);
            let relabeled = molecule.relabeled(&perm).expect("permutation is valid");
            let canonical = canonical_smiles(&relabeled).expect("writable");
            assert_eq!(
                canonical, reference,
                "case {}: canonical SMILES changed under relabeling",
                case
            );
        }
    }
    println!("criterion 2: PASS — canonical SMILES invariant over 500 molecules x 20 relabelings");
}

#[test]
fn criterion_3_diameter_matches_brute_force() {
    // pinned examples first
    let butane = parse_smiles("CCCC").unwrap();
    assert_eq!(chain_result(&butane).unwrap().diameter, 0);
    let isobutane = parse_smiles("CC(C)C").unwrap();
    assert_eq!(chain_result(&isobutane).unwrap().diameter, 1);

    let cfg = MoleculeGenConfig::carbon_rich(25);
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut checked = 0usize;
    while checked < 200 {
        let molecule = random_molecule(&cfg, &mut rng);
        let result = match chain_result(&molecule) {
            Ok(r) => r,
            Err(_) => continue, // carbon-free draw; not part of the contract
        };
        let (oracle_len, oracle_diameter) = common::brute_force_chain_and_diameter(&molecule);
        assert_eq!(result.length, oracle_len, "chain length diverged");
        assert_eq!(result.diameter, oracle_diameter, "diameter diverged");
        checked += 1;
    }
    println!("criterion 3: PASS — chain length and diameter match brute force on 200 molecules");
}

#[test]
fn criterion_4_gradient_checks() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let mut worst: f64 = 0.0;

    let random_batch = |rng: &mut ChaCha8Rng, vocab: usize, max_len: usize| -> Vec<Vec<u32>> {
        (0..3)
            .map(|_| {
                let len = rng.gen_range(2..=max_len);
                // skip PAD(1) so sequences stay dense
                (0..len)
                    .map(|_| {
                        let s = rng.gen_range(0..vocab as u32);
                        if s == 1 {
                            0
                        } else {
                            s
                        }
                    })
                    .collect()
            })
            .collect()
    };

    // CNN
    for case in 0..20 {
        let vocab = rng.gen_range(4..8);
        let filters = rng.gen_range(1..4);
        let regions = match case % 3 {
            0 => vec![3, 2],
            1 => vec![2],
            _ => vec![4, 3],
        };
        let max_region = *regions.iter().max().unwrap();
        let mut model = CnnModel::init(CnnConfig::new(vocab, regions, filters), &mut rng);
        let seqs = random_batch(&mut rng, vocab, max_region + 4);
        let batch: Vec<(&[u32], u8)> = seqs
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_slice(), (i % 2) as u8))
            .collect();
        let (_, analytic) = model.batch_gradient(&batch);
        let theta = model.theta().to_vec();
        let fd = finite_difference_gradient(
            |t| {
                model.theta_mut().copy_from_slice(t);
                model.batch_loss(&batch)
            },
            &theta,
            1e-5,
        );
        let err = max_relative_error(&analytic, &fd, 1e-6);
        assert!(err < 1e-4, "cnn case {}: relative error {}", case, err);
        worst = worst.max(err);
    }

    // GRU classifier
    for case in 0..20 {
        let vocab = rng.gen_range(3..7);
        let cfg = GruConfig {
            vocab_size: vocab,
            embed_dim: rng.gen_range(2..4),
            hidden: rng.gen_range(2..4),
        };
        let mut model = GruClassifier::init(cfg, &mut rng);
        let seqs = random_batch(&mut rng, vocab, 7);
        let batch: Vec<(&[u32], u8)> = seqs
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_slice(), (i % 2) as u8))
            .collect();
        let (_, analytic) = model.batch_gradient(&batch);
        let theta = model.theta().to_vec();
        let fd = finite_difference_gradient(
            |t| {
                model.theta_mut().copy_from_slice(t);
                model.batch_loss(&batch)
            },
            &theta,
            1e-5,
        );
        let err = max_relative_error(&analytic, &fd, 1e-6);
        assert!(err < 1e-4, "gru case {}: relative error {}", case, err);
        worst = worst.max(err);
    }

    // language model, including its softmax readout
    for case in 0..20 {
        let base_vocab = rng.gen_range(3..6);
        let cfg = LmConfig {
            embed_dim: rng.gen_range(2..4),
            hidden: rng.gen_range(2..4),
        };
        let model = LmModel::init(base_vocab, cfg, &mut rng);
        let len = rng.gen_range(1..6);
        let seq: Vec<u32> = (0..len).map(|_| rng.gen_range(0..base_vocab as u32)).collect();
        let mut analytic = vec![0.0; model.param_count()];
        model.sequence_gradient(&seq, 1.0, &mut analytic);
        let fd = finite_difference_gradient(
            |t| {
                let probe = LmModel::from_theta(base_vocab, cfg, t.to_vec());
                let mut sink = vec![0.0; probe.param_count()];
                probe.sequence_gradient(&seq, 1.0, &mut sink)
            },
            model.theta(),
            1e-5,
        );
        let err = max_relative_error(&analytic, &fd, 1e-6);
        assert!(err < 1e-4, "lm case {}: relative error {}", case, err);
        worst = worst.max(err);
    }

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "gradient checks took {:.1}s", elapsed);
    println!(
        "criterion 4: PASS — 60 finite-difference checks, worst relative error {:.2e}, {:.1}s",
        worst, elapsed
    );
}

#[test]
fn criterion_5_kernel_validity_and_dual_optimality() {
    use nalgebra::{DMatrix, SymmetricEigen};

    // (a) 20 trials of 50x50 Jaccard Gram PSD-ness
    let gen = MoleculeGenConfig::default();
    let ngram_cfg = NGramConfig::default_range(FeatureMode::Set);
    let mut min_eig = f64::INFINITY;
    for trial in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x500 + trial);
        let mut vocab = Vocabulary::new();
        let sets: Vec<_> = (0..50)
            .map(|_| {
                let m = random_molecule(&gen, &mut rng);
                let s = canonical_smiles(&m).unwrap();
                ngram_featurize(&tokenize(&s).unwrap(), &ngram_cfg, &mut vocab)
            })
            .collect();
        let gram = GramMatrix::compute(&sets).unwrap();
        let dense = DMatrix::from_fn(50, 50, |i, j| gram.get(i, j));
        let eigen = SymmetricEigen::new(dense);
        let smallest = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(
            smallest >= -1e-8,
            "trial {}: min eigenvalue {}",
            trial,
            smallest
        );
        min_eig = min_eig.min(smallest);
    }

    // (b) KKT residuals and feasibility, and (c) objective vs the QP oracle
    // on 30-sample instances.
    let dataset = planted_motif_dataset("qp", 30, 0x51);
    let mut vocab = Vocabulary::new();
    let sets: Vec<_> = dataset
        .records()
        .iter()
        .map(|r| ngram_featurize(&tokenize(&r.smiles).unwrap(), &ngram_cfg, &mut vocab))
        .collect();
    let labels = dataset.labels();
    let gram = GramMatrix::compute(&sets).unwrap();
    let y: Vec<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let mut worst_gap = 0.0f64;
    let mut worst_rel = 0.0f64;
    for &c in &[0.5, 1.0, 10.0] {
        let model = svm_fit(&sets, &labels, c).unwrap();
        assert!(model.dual_gap() < 1e-3, "KKT residual {}", model.dual_gap());
        assert!(model.sum_alpha_y().abs() < 1e-9);
        assert!(model.coefficients().iter().all(|w| w.abs() <= c + 1e-12));
        let oracle = common::qp_dual_objective_oracle(&gram, &y, c, 60_000);
        let rel = (model.dual_objective() - oracle).abs() / oracle.abs().max(1.0);
        assert!(
            rel <= 1e-3,
            "C={}: smo objective {} vs oracle {} (rel {})",
            c,
            model.dual_objective(),
            oracle,
            rel
        );
        worst_gap = worst_gap.max(model.dual_gap());
        worst_rel = worst_rel.max(rel);
    }
    println!(
        "criterion 5: PASS — min Gram eigenvalue {:.2e}, worst KKT gap {:.2e}, objective vs QP oracle rel {:.2e}",
        min_eig, worst_gap, worst_rel
    );
}

/// Criteria 6 and 7 share the synthetic screening run, so they live in one
/// test; it prints a line for each.
#[test]
fn criteria_6_and_7_synthetic_screening() {
    let started = Instant::now();
    let dataset = planted_motif_dataset("synthetic", 1000, 0xC6);
    let parsed = ParsedDataset::from_dataset(dataset);

    // SVM: the full shipped grid.
    let svm_cfg = RunConfig::default();
    let svm = evaluate_dataset(&parsed, ModelKind::Svm, Representation::Ngram, &svm_cfg, 0xEE)
        .unwrap();
    assert!(svm.all_folds_ok(), "{:?}", failed_folds(&svm));
    let svm_loss = svm.mean_log_loss.unwrap();
    let svm_acc = svm.mean_accuracy.unwrap();
    assert!(svm_loss < 0.20, "svm log loss {}", svm_loss);
    assert!(svm_acc > 0.93, "svm accuracy {}", svm_acc);

    // NB must land strictly worse than SVM on log loss.
    let nb = evaluate_dataset(&parsed, ModelKind::Nb, Representation::Ngram, &svm_cfg, 0xEE)
        .unwrap();
    assert!(nb.all_folds_ok(), "{:?}", failed_folds(&nb));
    let nb_loss = nb.mean_log_loss.unwrap();
    assert!(
        nb_loss > svm_loss,
        "nb log loss {} is not worse than svm {}",
        nb_loss,
        svm_loss
    );

    // CNN: truncated grid (learning rate only) and a trimmed training
    // schedule to respect the time budget.
    let cnn_cfg = RunConfig {
        lr_grid: vec![1e-3, 3e-4],
        filters_grid: vec![32],
        filters: 32,
        epochs: 25,
        patience: 4,
        batch_size: 64,
        train_walks: 5,
        inner_folds: 3,
        ..RunConfig::default()
    };
    let cnn = evaluate_dataset(
        &parsed,
        ModelKind::Cnn,
        Representation::Symbols,
        &cnn_cfg,
        0xEE,
    )
    .unwrap();
    assert!(cnn.all_folds_ok(), "{:?}", failed_folds(&cnn));
    let cnn_loss = cnn.mean_log_loss.unwrap();
    let cnn_acc = cnn.mean_accuracy.unwrap();
    assert!(cnn_loss < 0.20, "cnn log loss {}", cnn_loss);
    assert!(cnn_acc > 0.93, "cnn accuracy {}", cnn_acc);

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 900.0, "screening run took {:.0}s", elapsed);
    println!(
        "criterion 6: PASS — svm {:.3}/{:.3}, nb {:.3}, cnn {:.3}/{:.3} (log-loss/accuracy) in {:.0}s",
        svm_loss, svm_acc, nb_loss, cnn_loss, cnn_acc, elapsed
    );

    // Criterion 7: per fold, walk-averaged log loss <= single-walk log loss
    // in at least 4 of 5 folds, read off the same CNN run.
    let mut wins = 0usize;
    for fold in &cnn.folds {
        let labels: Vec<u8> = fold.predictions.iter().map(|p| p.label).collect();
        let averaged: Vec<f64> = fold.predictions.iter().map(|p| p.probability).collect();
        let single: Vec<f64> = fold.predictions.iter().map(|p| p.single_walk).collect();
        let loss_avg = log_loss(&averaged, &labels).unwrap();
        let loss_single = log_loss(&single, &labels).unwrap();
        if loss_avg <= loss_single {
            wins += 1;
        }
    }
    assert!(
        wins >= 4,
        "averaging beat the single walk in only {} of {} folds",
        wins,
        cnn.folds.len()
    );
    println!(
        "criterion 7: PASS — 20-walk averaging ≤ single walk in {}/{} folds",
        wins,
        cnn.folds.len()
    );
}

fn failed_folds(eval: &smiles_screen::harness::ModelEval) -> Vec<String> {
    eval.folds
        .iter()
        .filter_map(|f| f.error.clone().map(|e| format!("fold {}: {}", f.fold, e)))
        .collect()
}

#[test]
fn criterion_8_metric_exactness_and_stratification() {
    // pinned log-loss values
    let ln2 = log_loss(&[0.5, 0.5, 0.5], &[1, 0, 1]).unwrap();
    assert!((ln2 - std::f64::consts::LN_2).abs() < 1e-6);
    let hand = log_loss(&[0.9, 0.2], &[1, 0]).unwrap();
    assert!((hand - 0.16425).abs() < 5e-6);
    let exact = -(0.9f64.ln() + 0.8f64.ln()) / 2.0;
    assert!((hand - exact).abs() < 1e-12);
    let perfect = log_loss(&[1.0, 0.0], &[1, 0]).unwrap();
    assert!(perfect <= 3.5e-14);

    // stratification bound over 100 random (n, ratio, k) configurations
    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    for case in 0..100 {
        let k = rng.gen_range(2..=6);
        let pos = rng.gen_range(k..60);
        let neg = rng.gen_range(k..120);
        let mut labels = vec![1u8; pos];
        labels.extend(std::iter::repeat(0u8).take(neg));
        labels.shuffle(&mut rng);
        let plan = stratified_folds_from_labels(&labels, k, rng.gen()).unwrap();
        for class in [0u8, 1u8] {
            let total = labels.iter().filter(|&&y| y == class).count() as f64;
            for fold in 0..k {
                let count = plan
                    .fold_indices(fold)
                    .iter()
                    .filter(|&&i| labels[i] == class)
                    .count() as f64;
                assert!(
                    (count - total / k as f64).abs() <= 1.0,
                    "case {}: fold {} class {} count {} vs ideal {}",
                    case,
                    fold,
                    class,
                    count,
                    total / k as f64
                );
            }
        }
    }
    println!("criterion 8: PASS — exact log-loss values and ±1 stratification on 100 configurations");
}

#[test]
fn criterion_9_end_to_end_determinism() {
    let dataset = planted_motif_dataset("determinism", 150, 0xC9);
    let dir = std::env::temp_dir().join(format!("acceptance-determinism-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let data_path = dir.join("determinism.csv");
    smiles_screen::harness::write_dataset_csv(&dataset, &data_path).unwrap();
    let config_path = dir.join("run.cfg");
    std::fs::write(
        &config_path,
        "outer_folds=5\ninner_folds=3\nsvm_c_grid=1,10\n",
    )
    .unwrap();

    let run = |out: &std::path::Path| {
        run_evaluate(&EvaluateArgs {
            data: data_path.clone(),
            model: ModelKind::Svm,
            representation: Representation::Ngram,
            config: Some(config_path.clone()),
            seed: 4242,
            out: out.to_path_buf(),
        })
        .unwrap()
    };
    let first = run(&dir.join("run1"));
    let second = run(&dir.join("run2"));
    assert!(first.all_folds_ok() && second.all_folds_ok());
    let bytes1 = std::fs::read(&first.report_csv).unwrap();
    let bytes2 = std::fs::read(&second.report_csv).unwrap();
    assert_eq!(bytes1, bytes2, "report.csv differs between identical runs");
    std::fs::remove_dir_all(&dir).ok();
    println!("criterion 9: PASS — two identical-seed evaluate runs emit byte-identical report.csv");
}
