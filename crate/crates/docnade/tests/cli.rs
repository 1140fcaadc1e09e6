//! End-to-end runs of the `docnade` binary: ingest → train → eval → inspect,
//! exit-code conventions, and byte-level determinism of run directories.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn docnade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_docnade"))
        .args(args)
        .output()
        .expect("spawn docnade")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Twelve documents over exactly eight distinct tokens, two label groups.
fn write_bag_fixture(path: &Path) {
    let tokens = [
        ["alpha", "bravo", "charlie", "delta"],
        ["echo", "foxtrot", "golf", "hotel"],
    ];
    let mut text = String::new();
    for i in 0..12 {
        let group = i % 2;
        let t = &tokens[group];
        text.push_str(&format!(
            "d{i:02}\tg{group}\t{} {} {} {} {}\n",
            t[i % 4],
            t[(i + 1) % 4],
            t[(i + 2) % 4],
            t[i % 4],
            t[(i + 3) % 4],
        ));
    }
    fs::write(path, text).unwrap();
}

fn write_sentence_fixture(path: &Path) {
    let tokens = [
        ["alpha", "bravo", "charlie", "delta"],
        ["echo", "foxtrot", "golf", "hotel"],
    ];
    let mut text = String::new();
    for i in 0..16 {
        let group = (i / 4) % 2;
        let t = &tokens[group];
        text.push_str(&format!(
            "s{i:02}\tg{group}\t{} {} {} {}\n",
            t[i % 4],
            t[(i + 2) % 4],
            t[(i + 1) % 4],
            t[(i + 3) % 4],
        ));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn full_pipeline_and_uniform_init_bound() {
    let dir = tempdir().unwrap();
    let raw = dir.path().join("raw.txt");
    write_bag_fixture(&raw);

    let ingest_dir = dir.path().join("ingest");
    assert_success(&docnade(&[
        "ingest",
        "--input",
        raw.to_str().unwrap(),
        "--out",
        ingest_dir.to_str().unwrap(),
        "--max-vocab",
        "2000",
    ]));
    let corpus = ingest_dir.join("corpus.bow");
    let vocab = ingest_dir.join("vocab.txt");
    assert!(corpus.exists() && vocab.exists());
    assert!(ingest_dir.join("labels.tsv").exists());
    assert!(ingest_dir.join("ingest_report.txt").exists());
    assert!(ingest_dir.join("config.txt").exists());
    let vocab_lines = fs::read_to_string(&vocab).unwrap().lines().count();
    assert_eq!(vocab_lines, 8);

    // Zero learning rate leaves the zero-initialized output layer intact, so
    // every conditional is uniform over the 8-word vocabulary.
    let train_dir = dir.path().join("train0");
    assert_success(&docnade(&[
        "train",
        "--model",
        "docnade",
        "--corpus",
        corpus.to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
        "--out",
        train_dir.to_str().unwrap(),
        "--hidden",
        "6",
        "--epochs",
        "1",
        "--learning-rate",
        "0",
        "--seed",
        "7",
    ]));
    let model = train_dir.join("model.dnade");
    assert!(model.exists() && train_dir.join("train_log.csv").exists());

    let eval_dir = dir.path().join("eval0");
    assert_success(&docnade(&[
        "eval",
        "--model",
        model.to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
        "--task",
        "perplexity",
        "--corpus",
        corpus.to_str().unwrap(),
        "--cap-docs",
        "50",
        "--out",
        eval_dir.to_str().unwrap(),
    ]));
    let summary = fs::read_to_string(eval_dir.join("perplexity_summary.csv")).unwrap();
    let ppl: f64 = summary
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(ppl >= 1.0, "perplexity {ppl}");
    assert!(ppl <= 8.0 * (1.0 + 1e-9), "perplexity {ppl}");
    assert!(eval_dir.join("perplexity.csv").exists());
}

#[test]
fn training_runs_are_byte_identical() {
    let dir = tempdir().unwrap();
    let raw = dir.path().join("raw.txt");
    write_bag_fixture(&raw);
    let ingest_dir = dir.path().join("ingest");
    assert_success(&docnade(&[
        "ingest",
        "--input",
        raw.to_str().unwrap(),
        "--out",
        ingest_dir.to_str().unwrap(),
    ]));
    let corpus = ingest_dir.join("corpus.bow");
    let vocab = ingest_dir.join("vocab.txt");

    let run = |name: &str| {
        let out = dir.path().join(name);
        assert_success(&docnade(&[
            "train",
            "--model",
            "deep",
            "--layers",
            "2",
            "--hidden",
            "5",
            "--corpus",
            corpus.to_str().unwrap(),
            "--vocab",
            vocab.to_str().unwrap(),
            "--valid",
            corpus.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--epochs",
            "3",
            "--seed",
            "11",
        ]));
        out
    };
    let a = run("runA");
    let b = run("runB");
    for file in ["model.dnade", "train_log.csv", "config.txt"] {
        let x = fs::read(a.join(file)).unwrap();
        let y = fs::read(b.join(file)).unwrap();
        assert_eq!(x, y, "{file} differs between identical runs");
    }

    // Evaluation outputs are identical regardless of thread count.
    let eval = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        assert_success(&docnade(&[
            "eval",
            "--model",
            a.join("model.dnade").to_str().unwrap(),
            "--vocab",
            vocab.to_str().unwrap(),
            "--task",
            "perplexity",
            "--corpus",
            corpus.to_str().unwrap(),
            "--ensemble",
            "1,4",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]));
        out
    };
    let e1 = eval("evalT1", "1");
    let e4 = eval("evalT4", "4");
    for file in [
        "perplexity.csv",
        "perplexity_m4.csv",
        "perplexity_summary.csv",
    ] {
        let x = fs::read(e1.join(file)).unwrap();
        let y = fs::read(e4.join(file)).unwrap();
        assert_eq!(x, y, "{file} differs across thread counts");
    }
}

#[test]
fn retrieval_and_inspection_outputs() {
    let dir = tempdir().unwrap();
    let raw = dir.path().join("raw.txt");
    write_bag_fixture(&raw);
    let ingest_dir = dir.path().join("ingest");
    assert_success(&docnade(&[
        "ingest",
        "--input",
        raw.to_str().unwrap(),
        "--out",
        ingest_dir.to_str().unwrap(),
    ]));
    let corpus = ingest_dir.join("corpus.bow");
    let vocab = ingest_dir.join("vocab.txt");
    let train_dir = dir.path().join("train");
    assert_success(&docnade(&[
        "train",
        "--model",
        "docnade",
        "--corpus",
        corpus.to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
        "--out",
        train_dir.to_str().unwrap(),
        "--hidden",
        "6",
        "--epochs",
        "5",
        "--seed",
        "3",
    ]));
    let model = train_dir.join("model.dnade");

    let ret_dir = dir.path().join("retrieval");
    assert_success(&docnade(&[
        "eval",
        "--model",
        model.to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
        "--task",
        "retrieval",
        "--db",
        corpus.to_str().unwrap(),
        "--queries",
        corpus.to_str().unwrap(),
        "--out",
        ret_dir.to_str().unwrap(),
    ]));
    let curve = fs::read_to_string(ret_dir.join("pr_curve.csv")).unwrap();
    assert!(curve.starts_with("cutoff,recall,precision\n"));
    assert!(curve.lines().count() > 2);

    let inspect_dir = dir.path().join("inspect");
    assert_success(&docnade(&[
        "inspect",
        "--model",
        model.to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
        "--task",
        "neighbors",
        "--words",
        "alpha,echo",
        "--k",
        "3",
        "--out",
        inspect_dir.to_str().unwrap(),
    ]));
    let neighbors = fs::read_to_string(inspect_dir.join("neighbors.tsv")).unwrap();
    assert_eq!(neighbors.lines().count(), 1 + 2 * 3);

    let topics_dir = dir.path().join("topics");
    assert_success(&docnade(&[
        "inspect",
        "--model",
        model.to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
        "--task",
        "topics",
        "--units",
        "0,1",
        "--top-k",
        "4",
        "--out",
        topics_dir.to_str().unwrap(),
    ]));
    let topics = fs::read_to_string(topics_dir.join("topics.tsv")).unwrap();
    assert_eq!(topics.lines().count(), 1 + 2 * 4);
}

#[test]
fn language_model_pipeline() {
    let dir = tempdir().unwrap();
    let raw = dir.path().join("sentences.txt");
    write_sentence_fixture(&raw);
    let ingest_dir = dir.path().join("ingest");
    assert_success(&docnade(&[
        "ingest",
        "--input",
        raw.to_str().unwrap(),
        "--format",
        "seq",
        "--out",
        ingest_dir.to_str().unwrap(),
    ]));
    let corpus = ingest_dir.join("corpus.seq");
    let vocab = ingest_dir.join("vocab.txt");

    let train_dir = dir.path().join("train");
    assert_success(&docnade(&[
        "train",
        "--model",
        "lm",
        "--corpus",
        corpus.to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
        "--out",
        train_dir.to_str().unwrap(),
        "--hidden",
        "6",
        "--ngram",
        "3",
        "--group-sentences",
        "2",
        "--epochs",
        "2",
        "--seed",
        "5",
    ]));

    let eval_dir = dir.path().join("eval");
    assert_success(&docnade(&[
        "eval",
        "--model",
        train_dir.join("model.dnade").to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
        "--task",
        "perplexity",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
    ]));
    let summary = fs::read_to_string(eval_dir.join("perplexity_summary.csv")).unwrap();
    let ppl: f64 = summary
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(ppl.is_finite() && ppl >= 1.0);
}

#[test]
fn exit_codes_follow_the_convention() {
    let dir = tempdir().unwrap();

    // Usage error: unknown flag.
    let out = docnade(&["train", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    // Usage error: missing subcommand.
    let out = docnade(&[]);
    assert_eq!(out.status.code(), Some(2));

    // Help is not an error.
    let out = docnade(&["--help"]);
    assert_eq!(out.status.code(), Some(0));

    // Runtime error: empty corpus.
    let empty = dir.path().join("empty.txt");
    fs::write(&empty, "").unwrap();
    let out = docnade(&[
        "ingest",
        "--input",
        empty.to_str().unwrap(),
        "--out",
        dir.path().join("ingest").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("empty corpus"), "{}", stderr(&out));
}

#[test]
fn unsupported_depth_and_hash_mismatch_fail_cleanly() {
    let dir = tempdir().unwrap();
    let raw = dir.path().join("raw.txt");
    write_bag_fixture(&raw);
    let ingest_dir = dir.path().join("ingest");
    assert_success(&docnade(&[
        "ingest",
        "--input",
        raw.to_str().unwrap(),
        "--out",
        ingest_dir.to_str().unwrap(),
    ]));
    let corpus = ingest_dir.join("corpus.bow");
    let vocab = ingest_dir.join("vocab.txt");

    let out = docnade(&[
        "train",
        "--model",
        "deep",
        "--layers",
        "4",
        "--corpus",
        corpus.to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
        "--out",
        dir.path().join("deep4").to_str().unwrap(),
        "--epochs",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("unsupported depth"),
        "{}",
        stderr(&out)
    );

    // Train against the real vocabulary, evaluate against a different one.
    let train_dir = dir.path().join("train");
    assert_success(&docnade(&[
        "train",
        "--model",
        "docnade",
        "--corpus",
        corpus.to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
        "--out",
        train_dir.to_str().unwrap(),
        "--hidden",
        "4",
        "--epochs",
        "1",
    ]));
    let other_vocab = dir.path().join("other_vocab.txt");
    fs::write(
        &other_vocab,
        "one\ntwo\nthree\nfour\nfive\nsix\nseven\neight\n",
    )
    .unwrap();
    let out = docnade(&[
        "eval",
        "--model",
        train_dir.join("model.dnade").to_str().unwrap(),
        "--vocab",
        other_vocab.to_str().unwrap(),
        "--task",
        "perplexity",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        dir.path().join("eval").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("hash mismatch"), "{}", stderr(&out));
}

#[test]
fn ingest_reuses_a_vocabulary_and_drops_oov() {
    let dir = tempdir().unwrap();
    let raw_a = dir.path().join("a.txt");
    write_bag_fixture(&raw_a);
    let ingest_a = dir.path().join("ingestA");
    assert_success(&docnade(&[
        "ingest",
        "--input",
        raw_a.to_str().unwrap(),
        "--out",
        ingest_a.to_str().unwrap(),
    ]));
    let vocab = ingest_a.join("vocab.txt");

    // A second corpus with tokens the vocabulary does not cover, plus one
    // document made entirely of unknown tokens.
    let raw_b = dir.path().join("b.txt");
    fs::write(
        &raw_b,
        "x0\tg0\talpha zz1 bravo zz2\nx1\tg1\tzz3 zz4\nx2\tg0\techo golf\n",
    )
    .unwrap();
    let ingest_b = dir.path().join("ingestB");
    assert_success(&docnade(&[
        "ingest",
        "--input",
        raw_b.to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
        "--out",
        ingest_b.to_str().unwrap(),
    ]));
    let report = fs::read_to_string(ingest_b.join("ingest_report.txt")).unwrap();
    assert!(report.contains("documents_kept=2"), "{report}");
    assert!(report.contains("documents_skipped_empty=1"), "{report}");
    assert!(report.contains("tokens_dropped_oov=4"), "{report}");
    // The reused vocabulary is copied alongside the corpus, unchanged.
    assert_eq!(
        fs::read(ingest_b.join("vocab.txt")).unwrap(),
        fs::read(&vocab).unwrap()
    );
    let corpus = fs::read_to_string(ingest_b.join("corpus.bow")).unwrap();
    assert_eq!(corpus.lines().count(), 2);
}

#[test]
fn stopword_removal_is_flag_gated() {
    let dir = tempdir().unwrap();
    let raw = dir.path().join("raw.txt");
    fs::write(&raw, "d0\t\tthe cat and the hat\nd1\t\tthe mouse\n").unwrap();

    let keep = dir.path().join("keep");
    assert_success(&docnade(&[
        "ingest",
        "--input",
        raw.to_str().unwrap(),
        "--out",
        keep.to_str().unwrap(),
    ]));
    let vocab_with = fs::read_to_string(keep.join("vocab.txt")).unwrap();
    assert!(vocab_with.contains("the"));

    let drop = dir.path().join("drop");
    assert_success(&docnade(&[
        "ingest",
        "--input",
        raw.to_str().unwrap(),
        "--remove-stopwords",
        "--out",
        drop.to_str().unwrap(),
    ]));
    let vocab_without = fs::read_to_string(drop.join("vocab.txt")).unwrap();
    assert!(!vocab_without.contains("the"));
    assert!(vocab_without.contains("cat"));
    let report = fs::read_to_string(drop.join("ingest_report.txt")).unwrap();
    assert!(report.contains("tokens_dropped_stopword=4"), "{report}");
}
