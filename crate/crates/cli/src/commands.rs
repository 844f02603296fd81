//! Subcommand bodies. Each takes the resolved configuration and returns
//! an error for any validation failure.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use avlem::baselines::{
    build_index, Bm25Ranker, MultiNegRanker, QlRanker, RocchioRanker, SingleNegRanker,
};
use avlem::conversation::{AvlemRanker, Ranker};
use avlem::corpus::synthetic::generate_synthetic;
use avlem::corpus::{split_train_test, Corpus, ReviewFormat, Split, Stopwords};
use avlem::evaluation::{emit_report, evaluate_conversational, run_sweep, MetricReport};
use avlem::model::{Model, Variant, VocabSizes};
use avlem::training::{finite_difference_check, random_case, train, write_loss_trace};

use crate::cli::Command;
use crate::config::{BaselineKind, RunConfig};
use crate::service::{serve, AppState};

pub const SPLIT_FILE: &str = "split.json";

/// Loads a corpus directory written by `ingest` or `synth`.
pub fn load_corpus(dir: &Path) -> anyhow::Result<Corpus> {
    Corpus::load_dir(dir, ReviewFormat::Canonical, &Stopwords::none())
        .with_context(|| format!("loading corpus from {}", dir.display()))
}

pub fn load_split(path: &Path, corpus: &Corpus) -> anyhow::Result<Split> {
    let split = Split::load(path).with_context(|| format!("loading split {}", path.display()))?;
    split
        .validate(corpus)
        .context("split does not match corpus")?;
    Ok(split)
}

fn stopwords(spec: &str) -> anyhow::Result<Stopwords> {
    Ok(match spec {
        "english" => Stopwords::english(),
        "none" => Stopwords::none(),
        path => Stopwords::from_file(Path::new(path))?,
    })
}

/// Path of the loss trace written next to a model file.
pub fn loss_trace_path(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".loss.csv");
    PathBuf::from(s)
}

fn print_report(report: &MetricReport) {
    println!("{}", report.ranker);
    println!("iteration\tMAP\tMRR\tNDCG@10\tcoverage");
    for it in &report.iterations {
        println!(
            "{}\t{:.4}\t{:.4}\t{:.4}\t{:.1}%",
            it.iteration, it.map, it.mrr, it.ndcg, it.coverage
        );
    }
    if !report.flagged.is_empty() {
        println!(
            "{} pairs without relevant items scored 0",
            report.flagged.len()
        );
    }
}

#[derive(Debug, Serialize)]
struct GradSummary {
    variant: Variant,
    trials: usize,
    max_rel_error: f64,
    checked: usize,
}

pub fn run(command: &Command, c: &RunConfig) -> anyhow::Result<()> {
    match command {
        Command::Ingest(a) => {
            let sw = stopwords(&c.ingest.stopwords)?;
            let (mut corpus, report) = avlem::corpus::ingest_reviews(&a.reviews, c.ingest.format)?;
            println!(
                "reviews {} (dropped {} empty)",
                report.reviews, report.dropped_empty
            );
            if let Some(meta) = &a.meta {
                let r = corpus.ingest_metadata(meta, c.ingest.format, &sw)?;
                println!(
                    "items with queries {} (unknown items {}, dropped paths {})",
                    r.items_with_queries, r.unknown_items, r.dropped_paths
                );
            }
            if let Some(av) = &a.av {
                let r = corpus.ingest_aspect_values(av)?;
                println!(
                    "aspect-value pairs {} (merged {}, unknown items {})",
                    r.pairs, r.merged, r.unknown_items
                );
            }
            corpus.validate()?;
            corpus.write_dir(&a.out)?;
        }
        Command::Synth(a) => {
            let s = generate_synthetic(&c.synth, c.seed)?;
            s.corpus.write_dir(&a.out)?;
            s.split.save(&a.out.join(SPLIT_FILE))?;
            println!(
                "users {} items {} reviews {} queries {} test pairs {}",
                s.corpus.num_users(),
                s.corpus.num_items(),
                s.corpus.reviews.len(),
                s.corpus.queries.len(),
                s.split.test_pairs.len()
            );
        }
        Command::Split(a) => {
            let corpus = load_corpus(&a.corpus)?;
            let split = split_train_test(&corpus, c.seed, c.split)?;
            split.save(&a.out)?;
            println!(
                "train reviews {} test reviews {} test queries {} test pairs {}",
                split.train_reviews.len(),
                split.test_reviews.len(),
                split.test_queries.len(),
                split.test_pairs.len()
            );
        }
        Command::Train(a) => {
            let corpus = load_corpus(&a.corpus)?;
            let split = load_split(&a.split, &corpus)?;
            let out = train(&corpus, &split, c.model.model_config(), &c.train)?;
            out.model.save(&a.out)?;
            write_loss_trace(&loss_trace_path(&a.out), &out.loss_trace)?;
            for (e, l) in out.loss_trace.iter().enumerate() {
                println!("epoch {}\tmean loss {l:.4}", e + 1);
            }
        }
        Command::Eval(a) => {
            let corpus = load_corpus(&a.corpus)?;
            let split = load_split(&a.split, &corpus)?;
            let model = Model::load_for(&a.model, VocabSizes::of(&corpus))?;
            let ranker = AvlemRanker::new(&model, &corpus, c.feedback);
            let report = evaluate_conversational(&ranker, &corpus, &split, &c.eval)?;
            emit_report(&report, &a.out, c.report_format)?;
            print_report(&report);
        }
        Command::BaselineEval(a) => {
            let corpus = load_corpus(&a.corpus)?;
            let split = load_split(&a.split, &corpus)?;
            let index = build_index(&corpus, &split);
            let b = &c.baseline;
            let ranker: Box<dyn Ranker> = match b.ranker {
                BaselineKind::Bm25 => Box::new(Bm25Ranker {
                    index: &index,
                    params: b.bm25,
                }),
                BaselineKind::Ql => Box::new(QlRanker {
                    index: &index,
                    mu: b.neg.mu,
                }),
                BaselineKind::Rocchio => Box::new(RocchioRanker {
                    index: &index,
                    params: b.bm25,
                    neg_weight: b.rocchio_weight,
                }),
                BaselineKind::SingleNeg => Box::new(SingleNegRanker {
                    index: &index,
                    params: b.neg,
                }),
                BaselineKind::MultiNeg => Box::new(MultiNegRanker {
                    index: &index,
                    params: b.neg,
                }),
            };
            let report = evaluate_conversational(ranker.as_ref(), &corpus, &split, &c.eval)?;
            emit_report(&report, &a.out, c.report_format)?;
            print_report(&report);
        }
        Command::CheckGrad(a) => {
            let g = &c.check_grad;
            let variants = if g.variants.is_empty() {
                Variant::ALL.to_vec()
            } else {
                g.variants.clone()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
            let mut summary = Vec::new();
            for v in variants {
                let mut worst = 0.0f64;
                let mut checked = 0;
                for _ in 0..g.trials {
                    let case = random_case(v.config(g.dim), &mut rng);
                    let r = finite_difference_check(
                        &case.model,
                        &case.instance,
                        &case.aspects,
                        case.gamma,
                        g.eps,
                    )?;
                    worst = worst.max(r.max_rel_error);
                    checked += r.checked;
                }
                println!(
                    "{}\tmax relative error {worst:.3e} over {checked} coordinates",
                    v.name()
                );
                summary.push(GradSummary {
                    variant: v,
                    trials: g.trials,
                    max_rel_error: worst,
                    checked,
                });
            }
            let worst = summary.iter().map(|s| s.max_rel_error).fold(0.0, f64::max);
            println!("max relative error {worst:.3e}");
            if let Some(out) = &a.out {
                std::fs::write(out, serde_json::to_string_pretty(&summary)?)
                    .with_context(|| format!("writing {}", out.display()))?;
            }
            anyhow::ensure!(
                worst < g.threshold,
                "max relative error {worst:.3e} is not below {:.1e}",
                g.threshold
            );
        }
        Command::Sweep(a) => {
            let corpus = load_corpus(&a.corpus)?;
            let split = load_split(&a.split, &corpus)?;
            let mut train_cfg = c.train;
            train_cfg.seed = c.seed;
            let rows = run_sweep(
                &corpus,
                &split,
                c.model.variant,
                c.feedback,
                &train_cfg,
                &c.eval,
                &c.sweep,
            )?;
            let mut w = csv::Writer::from_path(&a.out)
                .with_context(|| format!("writing {}", a.out.display()))?;
            for r in &rows {
                w.serialize(r)?;
                println!(
                    "d={}\tm={}\titeration {}\tMAP {:.4}\tMRR {:.4}\tNDCG {:.4}",
                    r.dim, r.m, r.iteration, r.map, r.mrr, r.ndcg
                );
            }
            w.flush()?;
        }
        Command::Serve(a) => {
            let corpus = load_corpus(&a.corpus)?;
            let model = Model::load_for(&a.model, VocabSizes::of(&corpus))?;
            let app = Arc::new(AppState::new(model, corpus, c.serve)?);
            let addr = SocketAddr::from(([0, 0, 0, 0], c.serve.port));
            tokio::runtime::Runtime::new()?.block_on(serve(app, addr))?;
        }
    }
    Ok(())
}
