//! Run the simulated conversational protocol for the embedding model under
//! each feedback mode, then test whether negative feedback beats no
//! feedback with a paired randomization test.
//!
//! ```bash
//! cargo run -p avlem --release --example conversational_eval
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use avlem::conversation::AvlemRanker;
use avlem::corpus::synthetic::generate_synthetic;
use avlem::evaluation::{evaluate_conversational, fisher_randomization_test, EvalConfig};
use avlem::model::{FeedbackUse, Variant};
use avlem::training::{train, TrainConfig};

fn main() -> anyhow::Result<()> {
    let synth = generate_synthetic(&Default::default(), 3)?;
    let (corpus, split) = (&synth.corpus, &synth.split);
    let config = TrainConfig {
        seed: 3,
        ..TrainConfig::default()
    };
    let model = train(corpus, split, Variant::Full.config(64), &config)?.model;

    let eval = EvalConfig {
        iterations: 5,
        m: 2,
        seed: 3,
        ..EvalConfig::default()
    };
    let mut reports = Vec::new();
    for usage in [
        FeedbackUse::Negative,
        FeedbackUse::Positive,
        FeedbackUse::All,
    ] {
        let ranker = AvlemRanker::new(&model, corpus, usage);
        let report = evaluate_conversational(&ranker, corpus, split, &eval)?;
        println!("{}", report.ranker);
        println!("  iter    MAP     MRR   NDCG@10  coverage");
        for it in &report.iterations {
            println!(
                "  {:4}  {:.4}  {:.4}  {:.4}   {:5.1}%",
                it.iteration, it.map, it.mrr, it.ndcg, it.coverage
            );
        }
        reports.push(report);
    }

    // iteration 1 ranks without feedback, iteration 5 after four rounds of answers
    let neg = &reports[0];
    let first = neg.values(1, |r| r.rr);
    let last = neg.values(5, |r| r.rr);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let p = fisher_randomization_test(&last, &first, 100_000, &mut rng)?;
    println!(
        "MRR with negative feedback {:.4} vs without {:.4}, p = {p:.4}",
        neg.at(5).mrr,
        neg.at(1).mrr
    );
    Ok(())
}
