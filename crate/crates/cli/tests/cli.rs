//! Black-box tests of the `dicner` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dicner(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dicner"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

/// Generates a small corpus + dictionary into `dir` and returns their paths.
fn synth(dir: &Path, train: usize, test: usize) -> (String, String, String) {
    let out = dicner(&[
        "gen-synthetic",
        "--train",
        &train.to_string(),
        "--test",
        &test.to_string(),
        "--seed",
        "7",
        "--unseen",
        "0.3",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    (
        dir.join("train.tsv").to_str().unwrap().into(),
        dir.join("test.tsv").to_str().unwrap().into(),
        dir.join("dict.tsv").to_str().unwrap().into(),
    )
}

const TINY_TRAIN: &[&str] = &[
    "--d-e", "4", "--d-d", "4", "--d-h", "4", "--epochs", "2", "--batch", "8", "--dropout", "0.0",
];

#[test]
fn train_is_deterministic_and_tag_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _test, dict) = synth(dir.path(), 12, 4);
    let m1 = dir.path().join("a.model");
    let m2 = dir.path().join("b.model");
    for m in [&m1, &m2] {
        let mut args = vec![
            "train", "--corpus", &train, "--dict", &dict, "--out",
            m.to_str().unwrap(), "--seed", "7",
        ];
        args.extend_from_slice(TINY_TRAIN);
        let out = dicner(&args);
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(stdout(&out).contains("epoch"));
    }
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());

    // tag the test file and re-parse the output
    let test = dir.path().join("test.tsv");
    let tagged = dir.path().join("tagged.tsv");
    let out = dicner(&[
        "tag",
        "--model",
        m1.to_str().unwrap(),
        "--dict",
        &dict,
        "--input",
        test.to_str().unwrap(),
        "--out",
        tagged.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&tagged).unwrap();
    let sentences = dicner_core::corpus::parse_corpus(&text).unwrap();
    assert_eq!(sentences.len(), 4);
    assert!(sentences.iter().all(|s| s.tags.is_some()));

    // evaluating a file against itself scores 100.00 everywhere it counts
    let out = dicner(&["eval", "--gold", &test.to_str().unwrap(), "--pred", &test.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("100.00"), "{}", stdout(&out));
}

#[test]
fn missing_dict_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _, _) = synth(dir.path(), 4, 1);
    let model = dir.path().join("m.model");
    let out = dicner(&[
        "train", "--corpus", &train, "--out", model.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("--dict"));
}

#[test]
fn unknown_arch_is_a_usage_error() {
    let out = dicner(&["train", "--corpus", "x", "--out", "y", "--arch", "model3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_corpus_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let dict = dir.path().join("d.tsv");
    write(&dict, "心肝\tb\n");
    let out = dicner(&[
        "train",
        "--corpus",
        dir.path().join("absent.tsv").to_str().unwrap(),
        "--dict",
        dict.to_str().unwrap(),
        "--out",
        dir.path().join("m.model").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn tag_warns_on_dictionary_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test, dict) = synth(dir.path(), 8, 2);
    let model = dir.path().join("m.model");
    let mut args = vec![
        "train", "--corpus", &train, "--dict", &dict, "--out",
        model.to_str().unwrap(),
    ];
    args.extend_from_slice(TINY_TRAIN);
    assert!(dicner(&args).status.success());

    let other_dict = dir.path().join("other.tsv");
    write(&other_dict, "心肝\tb\n");
    let out = dicner(&[
        "tag",
        "--model",
        model.to_str().unwrap(),
        "--dict",
        other_dict.to_str().unwrap(),
        "--input",
        &test,
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("differs"), "{}", stderr(&out));
}

#[test]
fn tag_of_empty_input_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _, dict) = synth(dir.path(), 6, 1);
    let model = dir.path().join("m.model");
    let mut args = vec![
        "train", "--corpus", &train, "--dict", &dict, "--out",
        model.to_str().unwrap(),
    ];
    args.extend_from_slice(TINY_TRAIN);
    assert!(dicner(&args).status.success());

    let empty = dir.path().join("empty.tsv");
    write(&empty, "");
    let out = dicner(&[
        "tag",
        "--model",
        model.to_str().unwrap(),
        "--dict",
        &dict,
        "--input",
        empty.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "");
}

#[test]
fn eval_hand_built_counts() {
    // gold: two body entities; pred: one exact match plus two spurious ones
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.tsv");
    let pred = dir.path().join("pred.tsv");
    let gold_text = "心\tB-b\n肝\tE-b\n的\tO\n肺\tB-b\n脾\tE-b\n的\tO\n肾\tO\n的\tO\n胃\tO\n的\tO\n";
    let pred_text = "心\tB-b\n肝\tE-b\n的\tO\n肺\tO\n脾\tO\n的\tO\n肾\tS-b\n的\tO\n胃\tS-b\n的\tO\n";
    write(&gold, gold_text);
    write(&pred, pred_text);
    let out = dicner(&[
        "eval",
        "--gold",
        gold.to_str().unwrap(),
        "--pred",
        pred.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = stdout(&out);
    assert!(table.contains("33.33"), "{table}");
    assert!(table.contains("50.00"), "{table}");
    assert!(table.contains("40.00"), "{table}");
}

#[test]
fn segment_emits_typed_segments() {
    let dir = tempfile::tempdir().unwrap();
    let dict = dir.path().join("d.tsv");
    write(&dict, "瞳孔\tb\n");
    let out = dicner(&["segment", "--dict", dict.to_str().unwrap(), "--text", "双侧瞳孔"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "双\t侧\t瞳孔:b\n");

    // entries absent from the dictionary stay untyped
    let empty = dir.path().join("empty.tsv");
    write(&empty, "");
    let out = dicner(&["segment", "--dict", empty.to_str().unwrap(), "--text", "双侧"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "双\t侧\n");
}

#[test]
fn features_dumps_reference_pdet_row() {
    let dir = tempfile::tempdir().unwrap();
    let dict = dir.path().join("d.tsv");
    write(&dict, "腹\tb\n腹壁\tb\n静脉曲张\ts\n");
    let out = dicner(&[
        "features",
        "--dict",
        dict.to_str().unwrap(),
        "--scheme",
        "pdet-onehot",
        "--text",
        "腹平坦，未见腹壁静脉曲张。",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let labels: Vec<String> = stdout(&out)
        .lines()
        .map(|l| l.split('\t').nth(2).unwrap().to_string())
        .collect();
    let expected = [
        "S-b", "None", "None", "None", "None", "None", "B-b", "E-b", "B-s", "I-s", "I-s", "E-s",
        "None",
    ];
    assert_eq!(labels, expected);
}

#[test]
fn sweep_emits_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test, dict) = synth(dir.path(), 10, 4);
    let mut args = vec![
        "sweep", "--corpus", &train, "--dict", &dict, "--test", &test,
        "--sweep-dict", "0.5,1.0", "--seed", "7",
    ];
    args.extend_from_slice(TINY_TRAIN);
    let out = dicner(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = stdout(&out);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3, "{lines:?}"); // header + 2 points
    assert!(lines[1].starts_with("0.5"));
    assert!(lines[2].starts_with('1'));

    // requesting both axes at once is a usage error
    let mut both = args.clone();
    both.extend_from_slice(&["--sweep-hidden", "4"]);
    assert_eq!(dicner(&both).status.code(), Some(1));
}
