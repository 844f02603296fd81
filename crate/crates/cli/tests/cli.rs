use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clap::Parser;

use avlem::corpus::synthetic::{generate_synthetic, SynthConfig};
use avlem::corpus::Split;
use avlem::evaluation::read_csv_report;
use avlem::model::Variant;
use avlem_cli::cli::Cli;
use avlem_cli::commands::{load_corpus, loss_trace_path, SPLIT_FILE};
use avlem_cli::config::RunConfig;

fn avlem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avlem"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("run avlem")
}

fn ok(args: &[&str]) -> String {
    let out = avlem(args);
    assert!(
        out.status.success(),
        "avlem {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("resolved config"), "no banner for {args:?}");
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: [&str; 8] = [
    "--users",
    "12",
    "--items",
    "40",
    "--aspects",
    "8",
    "--values",
    "12",
];

fn synth(dir: &Path, seed: &str) {
    let mut args = vec!["synth", "--seed", seed, "--out", s(dir)];
    args.extend(SMALL);
    ok(&args);
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn synth_is_reproducible_and_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        tmp.path().join("a"),
        tmp.path().join("b"),
        tmp.path().join("c"),
    );
    synth(&a, "7");
    synth(&b, "7");
    synth(&c, "8");
    assert_eq!(dir_bytes(&a), dir_bytes(&b));
    assert_ne!(dir_bytes(&a), dir_bytes(&c));
    let config = SynthConfig {
        users: 12,
        items: 40,
        aspects: 8,
        values: 12,
        ..SynthConfig::default()
    };
    let generated = generate_synthetic(&config, 7).unwrap();
    assert_eq!(load_corpus(&a).unwrap(), generated.corpus);
    assert_eq!(Split::load(&a.join(SPLIT_FILE)).unwrap(), generated.split);
}

#[test]
fn experiment_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    synth(&corpus, "3");
    let split = tmp.path().join("split.json");
    ok(&[
        "split",
        "--corpus",
        s(&corpus),
        "--seed",
        "3",
        "--out",
        s(&split),
    ]);
    let split_again = tmp.path().join("split2.json");
    ok(&[
        "split",
        "--corpus",
        s(&corpus),
        "--seed",
        "3",
        "--out",
        s(&split_again),
    ]);
    assert_eq!(
        std::fs::read(&split).unwrap(),
        std::fs::read(&split_again).unwrap()
    );

    let model = tmp.path().join("model.bin");
    let out = ok(&[
        "train",
        "--corpus",
        s(&corpus),
        "--split",
        s(&split),
        "--dim",
        "16",
        "--epochs",
        "2",
        "--seed",
        "3",
        "--out",
        s(&model),
    ]);
    assert_eq!(out.lines().filter(|l| l.starts_with("epoch")).count(), 2);
    let trace = std::fs::read_to_string(loss_trace_path(&model)).unwrap();
    assert!(trace.starts_with("epoch,mean_loss\n"));
    assert_eq!(trace.lines().count(), 3);

    let report = tmp.path().join("eval.csv");
    ok(&[
        "eval",
        "--corpus",
        s(&corpus),
        "--split",
        s(&split),
        "--model",
        s(&model),
        "--iterations",
        "5",
        "--m",
        "2",
        "--strategy",
        "most_mentioned",
        "--out",
        s(&report),
    ]);
    let rows = read_csv_report(&report).unwrap();
    for metric in ["map", "mrr", "ndcg"] {
        assert_eq!(rows.iter().filter(|r| r.metric == metric).count(), 5);
    }
    let json_report = tmp.path().join("eval.json");
    ok(&[
        "eval",
        "--corpus",
        s(&corpus),
        "--split",
        s(&split),
        "--model",
        s(&model),
        "--iterations",
        "5",
        "--m",
        "2",
        "--format",
        "json",
        "--out",
        s(&json_report),
    ]);
    let parsed: avlem::evaluation::JsonReport =
        serde_json::from_str(&std::fs::read_to_string(&json_report).unwrap()).unwrap();
    assert_eq!(parsed.rows, rows);

    for ranker in ["bm25", "ql", "rocchio", "singleneg", "multineg"] {
        let out = tmp.path().join(format!("{ranker}.csv"));
        ok(&[
            "baseline-eval",
            "--corpus",
            s(&corpus),
            "--split",
            s(&split),
            "--ranker",
            ranker,
            "--iterations",
            "3",
            "--out",
            s(&out),
        ]);
        assert_eq!(read_csv_report(&out).unwrap().len(), 9);
    }

    let sweep = tmp.path().join("sweep.csv");
    ok(&[
        "sweep",
        "--corpus",
        s(&corpus),
        "--split",
        s(&split),
        "--dims",
        "8,12",
        "--m",
        "1,2",
        "--max-iterations",
        "2",
        "--epochs",
        "1",
        "--out",
        s(&sweep),
    ]);
    let text = std::fs::read_to_string(&sweep).unwrap();
    assert!(text.starts_with("dim,m,iteration,map,mrr,ndcg,coverage\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn check_grad_reports_and_fails_above_threshold() {
    let out = ok(&["check-grad", "--trials", "10"]);
    assert!(out.contains("max relative error"));
    for v in Variant::ALL {
        assert!(out.contains(v.name()));
    }
    let bad = avlem(&[
        "check-grad",
        "--trials",
        "10",
        "--eps",
        "2.0",
        "--variant",
        "full",
    ]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("is not below"));
}

#[test]
fn validation_failures_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing");
    for args in [
        vec![
            "eval", "--corpus", "x", "--split", "y", "--model", "z", "--m", "4", "--out", "o",
        ],
        vec!["split", "--corpus", s(&missing), "--out", "o"],
        vec![
            "train", "--corpus", "x", "--split", "y", "--lambda", "1.5", "--out", "o",
        ],
        vec![
            "train",
            "--corpus",
            "x",
            "--split",
            "y",
            "--subsample",
            "often",
            "--out",
            "o",
        ],
        vec!["check-grad", "--config", s(&missing)],
    ] {
        let out = avlem(&args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(
            String::from_utf8_lossy(&out.stderr).contains("error"),
            "{args:?}"
        );
    }
}

fn write(path: &PathBuf, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn config_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("run.json");
    write(
        &file,
        r#"{"seed": 4, "model": {"dim": 12}, "train": {"epochs": 3, "beta": 7}}"#,
    );
    let cli = Cli::try_parse_from([
        "avlem",
        "train",
        "--corpus",
        "c",
        "--split",
        "s",
        "--out",
        "m",
        "--config",
        s(&file),
        "--dim",
        "16",
    ])
    .unwrap();
    let c = cli.command.resolve().unwrap();
    assert_eq!(c.model.dim, 16);
    assert_eq!(c.train.epochs, 3);
    assert_eq!(c.train.beta, 7);
    assert_eq!(c.train.lr0, RunConfig::default().train.lr0);
    assert_eq!((c.seed, c.train.seed, c.eval.seed), (4, 4, 4));

    // the echoed banner is itself a config that resolves to the same run
    let banner = c.banner("train");
    let echoed = tmp.path().join("echo.json");
    write(&echoed, banner.split_once('\n').unwrap().1);
    let again = Cli::try_parse_from([
        "avlem",
        "train",
        "--corpus",
        "c",
        "--split",
        "s",
        "--out",
        "m",
        "--config",
        s(&echoed),
    ])
    .unwrap()
    .command
    .resolve()
    .unwrap();
    assert_eq!(again, c);

    write(&file, r#"{"train": {"epoch": 3}}"#);
    let cli = Cli::try_parse_from(["avlem", "check-grad", "--config", s(&file)]).unwrap();
    assert!(cli.command.resolve().is_err());

    let cli = Cli::try_parse_from([
        "avlem",
        "sweep",
        "--corpus",
        "c",
        "--split",
        "s",
        "--out",
        "o",
        "--dims",
        "8,16",
        "--subsample",
        "off",
    ])
    .unwrap();
    let c = cli.command.resolve().unwrap();
    assert_eq!(c.sweep.dims, vec![8, 16]);
    assert_eq!(c.train.subsample_rate, None);

    let cli = Cli::try_parse_from([
        "avlem",
        "serve",
        "--model",
        "m",
        "--corpus",
        "c",
        "--anonymous",
        "--m",
        "2",
        "--seed",
        "9",
    ])
    .unwrap();
    let c = cli.command.resolve().unwrap();
    assert!(c.serve.anonymous);
    assert_eq!((c.serve.m, c.serve.seed), (2, 9));
}

#[test]
fn ingest_amazon_files() {
    let tmp = tempfile::tempdir().unwrap();
    let reviews = tmp.path().join("reviews.json");
    let meta = tmp.path().join("meta.json");
    let av = tmp.path().join("av.tsv");
    write(
        &reviews,
        concat!(
            r#"{"reviewerID": "u1", "asin": "p1", "reviewText": "The red case fits my phone well"}"#,
            "\n",
            r#"{"reviewerID": "u2", "asin": "p1", "reviewText": "Sturdy case, nice red color"}"#,
            "\n",
            r#"{"reviewerID": "u1", "asin": "p2", "reviewText": "Blue charger works quickly"}"#,
            "\n",
            r#"{"reviewerID": "u2", "asin": "p2", "reviewText": ""}"#,
            "\n",
        ),
    );
    write(
        &meta,
        concat!(
            r#"{"asin": "p1", "categories": [["Cell Phones & Accessories", "Cases"]]}"#,
            "\n",
            r#"{"asin": "p2", "categories": [["Cell Phones & Accessories", "Chargers"]]}"#,
            "\n",
        ),
    );
    write(
        &av,
        "p1\tcolor\tred\t2\np2\tcolor\tblue\t1\np2\tspeed\tquick\t1\n",
    );
    let out_dir = tmp.path().join("corpus");
    let out = ok(&[
        "ingest",
        "--reviews",
        s(&reviews),
        "--meta",
        s(&meta),
        "--av",
        s(&av),
        "--out",
        s(&out_dir),
    ]);
    assert!(out.contains("reviews 3 (dropped 1 empty)"), "{out}");
    let c = load_corpus(&out_dir).unwrap();
    assert_eq!(c.num_items(), 2);
    assert_eq!(c.reviews.len(), 3);
    assert_eq!(c.num_aspects(), 2);
    assert!(!c.queries.is_empty());
}
