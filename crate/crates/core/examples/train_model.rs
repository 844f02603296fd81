//! Fit the embedding model on a synthetic corpus, save it, and inspect a
//! feedback-free ranking for one test pair.
//!
//! ```bash
//! cargo run -p avlem --release --example train_model
//! ```

use avlem::corpus::synthetic::generate_synthetic;
use avlem::model::{FeedbackSet, Model, Variant, VocabSizes};
use avlem::training::{train, TrainConfig};

fn main() -> anyhow::Result<()> {
    let synth = generate_synthetic(&Default::default(), 1)?;
    let (corpus, split) = (&synth.corpus, &synth.split);

    let config = TrainConfig {
        epochs: 10,
        seed: 1,
        ..TrainConfig::default()
    };
    let out = train(corpus, split, Variant::Full.config(32), &config)?;
    for (e, loss) in out.loss_trace.iter().enumerate() {
        println!("epoch {:2}  mean loss {loss:.4}", e + 1);
    }

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("model.bin");
    out.model.save(&path)?;
    let model = Model::load_for(&path, VocabSizes::of(corpus))?;
    println!(
        "saved and reloaded, checksum {:016x}",
        model.params.checksum()
    );

    let pair = &split.test_pairs[0];
    let all: Vec<u32> = (0..corpus.num_items() as u32).collect();
    let ranked = model.rank_items(
        Some(pair.user),
        &corpus.queries[pair.query as usize],
        &FeedbackSet::new(),
        &all,
        &corpus.aspects,
    )?;
    println!(
        "user {} query {:?}; relevant {:?}",
        corpus.users.token(pair.user),
        corpus.query_text(pair.query),
        pair.relevant
            .iter()
            .map(|&i| corpus.items.token(i))
            .collect::<Vec<_>>()
    );
    for (rank, (item, score)) in ranked.iter().take(5).enumerate() {
        let mark = if pair.relevant.contains(item) {
            "*"
        } else {
            " "
        };
        println!(
            "{:2}. {mark} {:5} {score:.3}",
            rank + 1,
            corpus.items.token(*item)
        );
    }
    Ok(())
}
