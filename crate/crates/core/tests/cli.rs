//! End-to-end tests of the `aggsent` binary: determinism across runs and
//! thread counts, fail-fast behavior, and the Table-3 model filters.

use std::path::{Path, PathBuf};
use std::process::Command;

use aggsent::corpus::Category;
use aggsent::synth::{gen_corpus, GeneratorSpec};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_aggsent")
}

/// Write a small synthetic world the CLI can consume.
fn write_world(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    std::fs::create_dir_all(dir).unwrap();
    let spec = GeneratorSpec::block_structure(
        &[Category::Positive, Category::Negative, Category::Neutral],
        30,
        0.6,
        vec![0.45, 0.35, 0.2],
        vec![0.2, 0.5, 0.3],
        240,
        1_500,
        41,
    );
    let corpus = gen_corpus(&spec).unwrap();
    let mut jsonl = String::new();
    let mut labels = String::from("doc_id,category\n");
    for item in corpus.train.items() {
        jsonl.push_str(&serde_json::to_string(&item.doc).unwrap());
        jsonl.push('\n');
        labels.push_str(&format!("{},{}\n", item.doc.id, item.category));
    }
    for doc in &corpus.stream {
        jsonl.push_str(&serde_json::to_string(doc).unwrap());
        jsonl.push('\n');
    }
    let stream = dir.join("stream.jsonl");
    let labels_path = dir.join("labels.csv");
    std::fs::write(&stream, jsonl).unwrap();
    std::fs::write(&labels_path, labels).unwrap();

    let mut panel = String::from(
        "country,sentiment,n_tweets,foreign_fighters,active_terror_group,borders_isis,\
         pct_shia,democracy,pct_broadband,pct_muslim\n",
    );
    for i in 0..18 {
        let sentiment = 0.08 + 0.02 * (i % 12) as f64;
        let pm = 12.0 + 4.5 * i as f64;
        let ff = (pm * (1.4 - 5.0 * sentiment).exp()).round() as u64 + (i % 4) as u64;
        panel.push_str(&format!(
            "{},{sentiment},{},{ff},{},{},{},{},{},{pm}\n",
            if i == 0 {
                "US".to_string()
            } else {
                format!("C{i}")
            },
            20_000 + i * 1_000,
            i % 2,
            (i % 5 == 0) as u8,
            (i * 7 % 40) as f64 / 2.0,
            -7 + (i % 15) as i64,
            (i * 3 % 55) as f64,
        ));
    }
    let panel_path = dir.join("panel.csv");
    std::fs::write(&panel_path, panel).unwrap();
    (stream, labels_path, panel_path)
}

fn run_ok(args: &[&str]) {
    let out = Command::new(bin()).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "aggsent {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn quantify_byte_identical_across_threads_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (stream, labels, _) = write_world(dir.path());
    let outs: Vec<Vec<u8>> = ["1", "2", "2"]
        .iter()
        .enumerate()
        .map(|(i, threads)| {
            let out = dir.path().join(format!("q{i}.csv"));
            run_ok(&[
                "--seed",
                "9",
                "--threads",
                threads,
                "quantify",
                "--training",
                labels.to_str().unwrap(),
                "--stream",
                stream.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ]);
            std::fs::read(&out).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1], "threads must not change bytes");
    assert_eq!(outs[1], outs[2], "repeat runs must match");
    let text = String::from_utf8(outs[0].clone()).unwrap();
    assert!(text.starts_with("# aggsent-quantify seed=9 config_hash="));
    assert!(text.contains("category,estimate,ci_low,ci_high"));
}

#[test]
fn daily_series_deterministic_and_plot_ready() {
    let dir = tempfile::tempdir().unwrap();
    let (stream, labels, _) = write_world(dir.path());
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        run_ok(&[
            "--seed",
            "3",
            "--threads",
            threads,
            "daily-series",
            "--training",
            labels.to_str().unwrap(),
            "--stream",
            stream.to_str().unwrap(),
            "--window-start",
            "2014-07-01",
            "--window-end",
            "2014-07-01",
            "--out",
            out.to_str().unwrap(),
        ]);
        std::fs::read(&out).unwrap()
    };
    let a = run("1", "a.csv");
    let b = run("2", "b.csv");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains(
        "date,n_tweets,sentiment,sentiment_deviation,attention_deviation,lowess_sentiment,lowess_attention"
    ));
}

#[test]
fn missing_training_fails_fast_without_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let (stream, _, _) = write_world(dir.path());
    let out_path = dir.path().join("never.csv");
    let out = Command::new(bin())
        .args([
            "quantify",
            "--training",
            dir.path().join("missing.csv").to_str().unwrap(),
            "--stream",
            stream.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.starts_with("error:"),
        "single-line error, got: {stderr}"
    );
    assert_eq!(stderr.trim().lines().count(), 1);
    assert!(!out_path.exists(), "no partial output on failure");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = Command::new(bin())
        .args(["quantify", "--no-such-flag"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ff_model_drop_us_shrinks_the_sample() {
    let dir = tempfile::tempdir().unwrap();
    let (_, _, panel) = write_world(dir.path());
    let run = |extra: &[&str], name: &str| -> String {
        let out = dir.path().join(name);
        let mut args = vec![
            "ff-model",
            "--panel",
            panel.to_str().unwrap(),
            "--model",
            "1",
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        run_ok(&args);
        String::from_utf8(std::fs::read(&out).unwrap()).unwrap()
    };
    let full = run(&[], "full.csv");
    let dropped = run(&["--drop-us"], "dropped.csv");
    assert!(full.contains("# n=18"), "{full}");
    assert!(dropped.contains("# n=17"), "US must be absent from the fit");

    // model 3 drops the US with or without the flag
    let m3 = {
        let out = dir.path().join("m3.csv");
        run_ok(&[
            "ff-model",
            "--panel",
            panel.to_str().unwrap(),
            "--model",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        String::from_utf8(std::fs::read(&out).unwrap()).unwrap()
    };
    assert!(m3.contains("# n=17"));
}

#[test]
fn help_documents_formats() {
    let out = Command::new(bin()).args(["--help"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("File formats"));
    assert!(text.contains("doc_id,category"));
    assert!(text.contains("offset_minutes_or_name,iso2"));
}
