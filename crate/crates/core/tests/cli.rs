//! The `ctxprune` binary end to end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn ctxprune(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctxprune"))
        .args(args)
        .output()
        .unwrap()
}

const Q: &str = "implement the helper that fjord_xenon_2 velvet_2_0";

#[test]
fn compress_writes_output_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.py");
    let corpus = fixture("corpus_seed42.py");
    let o = ctxprune(&[
        "compress",
        corpus.to_str().unwrap(),
        "-q",
        Q,
        "--budget",
        "100",
        "--fine-ratio",
        "0.8",
        "--beta",
        "0.5",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("def fjord_xenon_2(nectar_2, arg2):"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out.py.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["budget"], 100);
    assert!(meta["retained_tokens"].as_u64().unwrap() <= 100);
    assert!(meta.get("compressed_text").is_none());
}

#[test]
fn identical_invocations_identical_output() {
    let corpus = fixture("corpus_seed42.py");
    let args = [
        "compress",
        corpus.to_str().unwrap(),
        "-q",
        Q,
        "--budget",
        "80",
        "--preserve",
        "signature-line",
    ];
    let a = ctxprune(&args);
    let b = ctxprune(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn instruction_file_and_preset() {
    let dir = tempfile::tempdir().unwrap();
    let qfile = dir.path().join("q.txt");
    std::fs::write(&qfile, Q).unwrap();
    let corpus = fixture("corpus_seed42.py");
    let inline = ctxprune(&[
        "compress",
        corpus.to_str().unwrap(),
        "-q",
        Q,
        "--preset",
        "repoqa",
        "--budget",
        "60",
    ]);
    let from_file = ctxprune(&[
        "compress",
        corpus.to_str().unwrap(),
        "--instruction-file",
        qfile.to_str().unwrap(),
        "--preset",
        "repoqa",
        "--budget",
        "60",
    ]);
    assert_eq!(inline.status.code(), Some(0));
    assert_eq!(inline.stdout, from_file.stdout);
    let both = ctxprune(&[
        "compress",
        corpus.to_str().unwrap(),
        "-q",
        Q,
        "--instruction-file",
        qfile.to_str().unwrap(),
    ]);
    assert_eq!(both.status.code(), Some(1));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[compression]\nbudget = 60\nfine_ratio = 1.0\n").unwrap();
    let corpus = fixture("corpus_seed42.py");
    let out = dir.path().join("o.py");
    let run = |extra: &[&str]| {
        let mut args = vec![
            "compress",
            corpus.to_str().unwrap(),
            "-q",
            Q,
            "--config",
            cfg.to_str().unwrap(),
        ];
        args.extend_from_slice(&["-o", out.to_str().unwrap()]);
        args.extend_from_slice(extra);
        assert_eq!(ctxprune(&args).status.code(), Some(0));
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("o.py.meta.json")).unwrap()).unwrap();
        meta["budget"].as_u64().unwrap()
    };
    assert_eq!(run(&[]), 60);
    assert_eq!(run(&["--budget", "90"]), 90);
}

#[test]
fn missing_input_exits_1_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.py");
    let o = ctxprune(&["compress", "/no/such/file.py", "-q", "x", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
    assert!(!dir.path().join("never.py.meta.json").exists());
}

#[test]
fn unreachable_backend_exits_2() {
    let corpus = fixture("corpus_seed42.py");
    let o = ctxprune(&[
        "compress",
        corpus.to_str().unwrap(),
        "-q",
        "x",
        "--budget",
        "10",
        "--backend",
        "http",
        "--endpoint",
        "http://127.0.0.1:9/v1/completions",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn batch_mode_keeps_order_and_isolates_errors() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.jsonl");
    let code = std::fs::read_to_string(fixture("corpus_seed42.py")).unwrap();
    let recs = [
        serde_json::json!({"id": "a", "context": code, "instruction": Q}),
        serde_json::json!({"id": "b", "context": "", "instruction": Q}),
        serde_json::json!({"id": "c", "context": code, "instruction": "delta"}),
    ];
    let lines: Vec<String> = recs.iter().map(|r| r.to_string()).collect();
    std::fs::write(&input, lines.join("\n")).unwrap();
    let o = ctxprune(&[
        "compress",
        "--batch",
        input.to_str().unwrap(),
        "--budget",
        "50",
        "--jobs",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<serde_json::Value> = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let ids: Vec<&str> = rows.iter().map(|r| r["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["a", "b", "c"]);
    assert!(rows[1].get("error").is_some());
    assert!(rows[0]["compressed_text"].as_str().unwrap().contains("fjord_xenon_2"));
}

#[test]
fn eval_reports_ratio_rows() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("d.jsonl");
    let code = std::fs::read_to_string(fixture("corpus_seed42.py")).unwrap();
    let mut text = String::new();
    for (i, budget_hint) in ["fjord_xenon_2", "zzz", "fjord_raven_0"].iter().enumerate() {
        text.push_str(
            &serde_json::json!({"id": i, "context": code, "instruction": budget_hint, "ground_truth": ""}).to_string(),
        );
        text.push('\n');
    }
    text.push_str("{ not json\n");
    std::fs::write(&ds, text).unwrap();
    let out = dir.path().join("m.tsv");
    let o = ctxprune(&[
        "eval",
        "--dataset",
        ds.to_str().unwrap(),
        "--budget",
        "120",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let tsv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(tsv.lines().count(), 5);
    let agg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.tsv.aggregate.json")).unwrap()).unwrap();
    assert_eq!(agg["records"], 3);
    assert_eq!(agg["skipped"], 1);
    assert!(agg["mean_ratio"].as_f64().unwrap() > 1.0);
    assert!(agg["em"].is_null());
}

#[test]
fn inspect_table() {
    let corpus = fixture("corpus_seed42.py");
    let rows = |alpha: &str| -> (usize, usize) {
        let o = ctxprune(&["inspect", corpus.to_str().unwrap(), "-q", Q, "--alpha", alpha]);
        assert_eq!(o.status.code(), Some(0));
        let s = String::from_utf8(o.stdout).unwrap();
        let table = s.split("\n\n").next().unwrap().lines().count() - 1;
        let marks = s.lines().filter(|l| l.starts_with('>')).count();
        (table, marks)
    };
    let (chunks, loose) = rows("1.0");
    let (_, strict) = rows("2.0");
    assert_eq!(chunks, 5);
    assert!(strict <= loose);

    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.py");
    std::fs::write(&empty, "").unwrap();
    let o = ctxprune(&["inspect", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 1);
}
