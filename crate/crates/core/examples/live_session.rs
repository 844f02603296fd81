//! Drive one conversation by hand: show an item, ask about its aspect
//! values, answer from the planted user preferences, and repeat until a
//! purchased item comes up.
//!
//! ```bash
//! cargo run -p avlem --release --example live_session
//! ```

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use avlem::conversation::{
    advance_session, select_questions, Answer, AvlemRanker, SessionState, Strategy,
};
use avlem::corpus::synthetic::generate_synthetic;
use avlem::model::{FeedbackUse, Variant};
use avlem::training::{train, TrainConfig};

fn main() -> anyhow::Result<()> {
    let synth = generate_synthetic(&Default::default(), 11)?;
    let (corpus, split, truth) = (&synth.corpus, &synth.split, &synth.truth);
    let config = TrainConfig {
        seed: 11,
        ..TrainConfig::default()
    };
    let model = train(corpus, split, Variant::Full.config(64), &config)?.model;
    let ranker = AvlemRanker::new(&model, corpus, FeedbackUse::All);

    let pair = &split.test_pairs[0];
    let relevant: BTreeSet<u32> = pair.relevant.iter().copied().collect();
    let prefs = &truth.user_prefs[pair.user as usize];
    let candidates: Vec<u32> = (0..corpus.num_items() as u32).collect();
    println!(
        "user {} searches {:?}",
        corpus.users.token(pair.user),
        corpus.query_text(pair.query)
    );

    let mut state = SessionState::new(Some(pair.user), corpus.queries[pair.query as usize].clone());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut answers = Vec::new();
    while !state.finished {
        let step = advance_session(&mut state, &answers, &ranker, &candidates, 5, &|i| {
            relevant.contains(&i)
        })?;
        let Some(item) = step.next else { break };
        let hit = if relevant.contains(&item) {
            "  <- purchased"
        } else {
            ""
        };
        println!(
            "iteration {}: shown {}{hit}",
            state.iteration(),
            corpus.items.token(item)
        );
        if state.finished {
            break;
        }
        let questions = select_questions(&state, corpus, 2, Strategy::MostMentioned, &mut rng);
        state.pose(&questions);
        answers.clear();
        for q in questions {
            let answer = match prefs.get(&q.aspect) {
                Some(&v) if v == q.value => Answer::Yes,
                Some(_) => Answer::No,
                None => Answer::Skip,
            };
            println!("  {} {answer:?}", q.text);
            answers.push((q.pair(), answer));
        }
    }
    Ok(())
}
