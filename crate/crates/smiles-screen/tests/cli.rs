//! End-to-end checks of the command-line surface: line-oriented parse and
//! canonicalize output, augmentation, the diameter report, and a small
//! evaluate run with its artifact files.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_smiles-screen"))
}

fn run_with_stdin(args: &[&str], stdin: &str) -> (String, String, bool) {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary spawns");
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    let output = child.wait_with_output().unwrap();
    (
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
        output.status.success(),
    )
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cli-test-{}-{}", name, std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn parse_reports_counts_and_diagnostics_per_line() {
    let (stdout, _, ok) = run_with_stdin(&["parse"], "CCO\nC(C\n[Na+]\n");
    assert!(ok);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "OK atoms=3 bonds=2");
    assert!(lines[1].starts_with("ERROR 1:"), "{}", lines[1]);
    assert_eq!(lines[2], "OK atoms=1 bonds=0");
}

#[test]
fn canonicalize_collapses_spellings() {
    let (stdout, _, ok) = run_with_stdin(&["canonicalize"], "OCC\nCCO\nC(O)C\nnot a molecule\n");
    assert!(ok);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], lines[1]);
    assert_eq!(lines[1], lines[2]);
    assert!(lines[3].starts_with("ERROR "));
}

#[test]
fn augment_emits_k_parseable_writings_per_line() {
    let (stdout, _, ok) = run_with_stdin(
        &["augment", "-n", "5", "--seed", "9"],
        "CC(C)C1CCC1\n",
    );
    assert!(ok);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 5);
    for line in lines {
        smiles_screen::smiles::parse_smiles(line).unwrap();
    }
    // determinism across invocations
    let (again, _, _) = run_with_stdin(&["augment", "-n", "5", "--seed", "9"], "CC(C)C1CCC1\n");
    assert_eq!(stdout, again);
}

#[test]
fn stats_prints_csv_and_summary() {
    let dir = temp_dir("stats");
    let input = dir.join("mols.smi");
    std::fs::write(&input, "CCCC\nCC(C)C\nbroken(\n").unwrap();
    let output = bin()
        .args(["stats", "--diameter", input.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("smiles,chain_len,diameter"));
    assert!(stdout.contains("CCCC,4,0"));
    assert!(stdout.contains("CC(C)C,3,1"));
    assert!(stdout.contains("analyzed 2 molecules (1 excluded)"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn evaluate_writes_all_artifacts_and_exits_zero() {
    let dir = temp_dir("evaluate");
    let dataset = smiles_screen::synthetic::planted_motif_dataset("cli", 90, 17);
    let data = dir.join("cli.csv");
    smiles_screen::harness::write_dataset_csv(&dataset, &data).unwrap();
    let config = dir.join("run.cfg");
    std::fs::write(&config, "outer_folds=3\ninner_folds=2\nnb_alpha_grid=0.5,1\n").unwrap();
    let out = dir.join("results");
    let output = bin()
        .args([
            "evaluate",
            "--data",
            data.to_str().unwrap(),
            "--model",
            "nb",
            "--repr",
            "ngram",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    for artifact in ["report.md", "report.csv", "folds.jsonl", "quarantine.txt"] {
        assert!(out.join(artifact).exists(), "missing {}", artifact);
    }
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let rows = smiles_screen::harness::parse_csv(&csv).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].folds, 3);
    let jsonl = std::fs::read_to_string(out.join("folds.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 3);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn train_writes_checkpoint_and_vocabulary() {
    let dir = temp_dir("train");
    let dataset = smiles_screen::synthetic::planted_motif_dataset("train", 60, 23);
    let data = dir.join("train.csv");
    smiles_screen::harness::write_dataset_csv(&dataset, &data).unwrap();
    let config = dir.join("run.cfg");
    std::fs::write(&config, "epochs=3\npatience=3\ntrain_walks=2\nfilters=8\n").unwrap();
    let out = dir.join("ckpt");
    let output = bin()
        .args([
            "train",
            "--data",
            data.to_str().unwrap(),
            "--model",
            "cnn",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "3",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(out.join("model.ssmc").exists());
    assert!(out.join("vocabulary.tsv").exists());
    // the checkpoint loads back
    let model = smiles_screen::model_io::load_cnn(&out.join("model.ssmc")).unwrap();
    assert!(model.param_count() > 0);
    let vocab = smiles_screen::features::Vocabulary::load(&out.join("vocabulary.tsv")).unwrap();
    assert!(vocab.len() > 2);
    std::fs::remove_dir_all(&dir).ok();
}
