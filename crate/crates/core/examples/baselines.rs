//! Evaluate the term-based baselines under the same conversational
//! protocol: BM25 and query likelihood ignore feedback, Rocchio,
//! SingleNeg and MultiNeg rerank against the items already rejected.
//!
//! ```bash
//! cargo run -p avlem --release --example baselines
//! ```

use avlem::baselines::{
    build_index, Bm25Params, Bm25Ranker, MultiNegRanker, NegFeedbackParams, QlRanker,
    RocchioRanker, SingleNegRanker,
};
use avlem::conversation::Ranker;
use avlem::corpus::synthetic::generate_synthetic;
use avlem::evaluation::{evaluate_conversational, EvalConfig};

fn main() -> anyhow::Result<()> {
    let synth = generate_synthetic(&Default::default(), 5)?;
    let (corpus, split) = (&synth.corpus, &synth.split);
    // built from training reviews only
    let index = build_index(corpus, split);
    let bm25 = Bm25Params::default();
    let neg = NegFeedbackParams::default();

    let rankers: Vec<Box<dyn Ranker>> = vec![
        Box::new(Bm25Ranker {
            index: &index,
            params: bm25,
        }),
        Box::new(QlRanker::new(&index)),
        Box::new(RocchioRanker {
            index: &index,
            params: bm25,
            neg_weight: 0.5,
        }),
        Box::new(SingleNegRanker {
            index: &index,
            params: neg,
        }),
        Box::new(MultiNegRanker {
            index: &index,
            params: neg,
        }),
    ];
    let eval = EvalConfig {
        iterations: 5,
        ..EvalConfig::default()
    };
    println!(
        "{:10} {:>8} {:>8} {:>8} {:>8}",
        "ranker", "MAP@1", "MRR@1", "MAP@5", "MRR@5"
    );
    for ranker in &rankers {
        let r = evaluate_conversational(ranker.as_ref(), corpus, split, &eval)?;
        println!(
            "{:10} {:8.4} {:8.4} {:8.4} {:8.4}",
            r.ranker,
            r.at(1).map,
            r.at(1).mrr,
            r.at(5).map,
            r.at(5).mrr
        );
    }
    Ok(())
}
