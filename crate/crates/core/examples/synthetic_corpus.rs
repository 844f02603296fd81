//! Generate a planted synthetic corpus, write it in the canonical directory
//! layout, and load it back.
//!
//! ```bash
//! cargo run -p avlem --example synthetic_corpus
//! ```

use avlem::corpus::synthetic::{generate_synthetic, SynthConfig};
use avlem::corpus::{Corpus, ReviewFormat, Stopwords};

fn main() -> anyhow::Result<()> {
    let config = SynthConfig {
        users: 20,
        items: 60,
        ..SynthConfig::default()
    };
    let synth = generate_synthetic(&config, 42)?;
    let c = &synth.corpus;
    println!(
        "users {} items {} reviews {} words {} aspects {} values {} queries {}",
        c.num_users(),
        c.num_items(),
        c.reviews.len(),
        c.words.len(),
        c.num_aspects(),
        c.num_values(),
        c.queries.len()
    );

    let item = 0;
    println!("item {} answers queries:", c.items.token(item));
    for &q in &c.item_queries[item as usize] {
        println!("  {:?}", c.query_text(q));
    }
    println!("aspect-value catalog:");
    for p in c.item_av(item) {
        println!(
            "  {} = {} ({} mentions)",
            c.aspect_name(p.aspect),
            c.value_name(p.value),
            p.mentions
        );
    }

    let s = &synth.split;
    println!(
        "split: {} train reviews, {} test queries, {} test pairs",
        s.train_reviews.len(),
        s.test_queries.len(),
        s.test_pairs.len()
    );
    let pair = &s.test_pairs[0];
    println!(
        "first test pair: user {} query {:?}, {} relevant items",
        c.users.token(pair.user),
        c.query_text(pair.query),
        pair.relevant.len()
    );

    let dir = tempfile::tempdir()?;
    c.write_dir(dir.path())?;
    let reloaded = Corpus::load_dir(dir.path(), ReviewFormat::Canonical, &Stopwords::none())?;
    println!(
        "round trip through {}: equal = {}",
        dir.path().display(),
        &reloaded == c
    );
    Ok(())
}
