//! Freezing-rank conversational evaluation, ranking metrics, paired
//! randomization tests, report files and parameter sweeps.

mod fisher;
mod metrics;
mod report;
mod sweep;

pub use fisher::fisher_randomization_test;
pub use metrics::{
    average_precision, freeze_rank, ndcg_at, reciprocal_rank, MAP_CUTOFF, MRR_CUTOFF, NDCG_K,
};
pub use report::{emit_report, read_csv_report, report_rows, JsonReport, ReportFormat, ReportRow};
pub use sweep::{run_sweep, SweepGrid, SweepRow};

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conversation::{
    advance_session, select_questions, simulate_answer, target_catalog, Answer, Ranker,
    SessionState, Strategy,
};
use crate::corpus::{Corpus, Split, TestPair};
use crate::{Error, ItemId, QueryId, Result, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Items shown per session, 1 to 5.
    pub iterations: usize,
    /// Questions per iteration, 1 to 3.
    pub m: usize,
    pub strategy: Strategy,
    pub seed: u64,
    /// Keep the full ranked list of every pair and iteration.
    pub keep_lists: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iterations: 5,
            m: 1,
            strategy: Strategy::MostMentioned,
            seed: 0,
            keep_lists: false,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=5).contains(&self.iterations) {
            return Err(Error::Config(format!(
                "iterations {} outside 1..=5",
                self.iterations
            )));
        }
        if !(1..=3).contains(&self.m) {
            return Err(Error::Config(format!("m {} outside 1..=3", self.m)));
        }
        Ok(())
    }
}

/// One pair at one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationResult {
    pub user: UserId,
    pub query: QueryId,
    pub iteration: usize,
    pub ap: f64,
    pub rr: f64,
    pub ndcg: f64,
    /// Some question posed this iteration got a yes or no.
    pub influenced: bool,
    /// The session was still searching (no relevant item shown before).
    pub active: bool,
    /// Frozen prefix followed by the reranked remainder.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub list: Option<Vec<ItemId>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub map: f64,
    pub mrr: f64,
    pub ndcg: f64,
    pub n_queries: usize,
    /// Percentage of active pairs influenced by feedback; 100 at
    /// iteration 1.
    pub coverage: f64,
    /// Pairs still searching at this iteration.
    pub active: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ranker: String,
    pub iterations: Vec<IterationMetrics>,
    /// Indexed by iteration then by test pair in split order.
    pub per_query: Vec<Vec<IterationResult>>,
    /// Pairs without relevant items; scored 0.
    pub flagged: Vec<(UserId, QueryId)>,
}

impl MetricReport {
    pub fn at(&self, iteration: usize) -> &IterationMetrics {
        &self.iterations[iteration - 1]
    }

    /// Per-pair values of one metric at one iteration.
    pub fn values(&self, iteration: usize, metric: fn(&IterationResult) -> f64) -> Vec<f64> {
        self.per_query[iteration - 1].iter().map(metric).collect()
    }
}

/// Runs one simulated session for `pair`, returning its per-iteration
/// results.
pub fn evaluate_pair(
    ranker: &dyn Ranker,
    corpus: &Corpus,
    pair: &TestPair,
    candidates: &[ItemId],
    config: &EvalConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<IterationResult>> {
    let relevant: BTreeSet<ItemId> = pair.relevant.iter().copied().collect();
    let catalog = target_catalog(corpus, &pair.relevant);
    let query = corpus.queries[pair.query as usize].clone();
    let mut state = SessionState::new(Some(pair.user), query);
    let mut last: Vec<ItemId> = Vec::new();
    let mut found = false;
    let mut out = Vec::with_capacity(config.iterations);
    for k in 1..=config.iterations {
        let active = !found;
        let mut influenced = false;
        if active && !state.finished {
            let mut answers = Vec::new();
            if k > 1 {
                let qs = select_questions(&state, corpus, config.m, config.strategy, rng);
                state.pose(&qs);
                for q in &qs {
                    let a = simulate_answer(&catalog, q.aspect, q.value);
                    influenced |= a != Answer::Skip;
                    answers.push((q.pair(), a));
                }
            }
            let frozen = state.shown.clone();
            let adv = advance_session(
                &mut state,
                &answers,
                ranker,
                candidates,
                config.iterations,
                &|i| relevant.contains(&i),
            )?;
            last = freeze_rank(&frozen, &adv.reranked)?;
            found = adv.next.is_some_and(|i| relevant.contains(&i));
        }
        out.push(IterationResult {
            user: pair.user,
            query: pair.query,
            iteration: k,
            ap: average_precision(&last, &relevant, MAP_CUTOFF),
            rr: reciprocal_rank(&last, &relevant, MRR_CUTOFF),
            ndcg: ndcg_at(&last, &relevant, NDCG_K),
            influenced: k == 1 || influenced,
            active,
            list: config.keep_lists.then(|| last.clone()),
        });
    }
    Ok(out)
}

/// The freezing-rank protocol over every test pair. Iteration 1 is the
/// feedback-free ranking; once a relevant item is shown the pair's list
/// stays fixed.
pub fn evaluate_conversational(
    ranker: &dyn Ranker,
    corpus: &Corpus,
    split: &Split,
    config: &EvalConfig,
) -> Result<MetricReport> {
    config.validate()?;
    let candidates: Vec<ItemId> = (0..corpus.num_items() as ItemId).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut per_query: Vec<Vec<IterationResult>> = vec![Vec::new(); config.iterations];
    let mut flagged = Vec::new();
    for pair in &split.test_pairs {
        if pair.relevant.is_empty() {
            flagged.push((pair.user, pair.query));
        }
        for r in evaluate_pair(ranker, corpus, pair, &candidates, config, &mut rng)? {
            per_query[r.iteration - 1].push(r);
        }
    }
    let iterations = per_query
        .iter()
        .enumerate()
        .map(|(k, rs)| summarize(k + 1, rs))
        .collect();
    Ok(MetricReport {
        ranker: ranker.name(),
        iterations,
        per_query,
        flagged,
    })
}

fn summarize(iteration: usize, rs: &[IterationResult]) -> IterationMetrics {
    let n = rs.len();
    let mean = |f: fn(&IterationResult) -> f64| {
        if n == 0 {
            0.0
        } else {
            rs.iter().map(f).fold(0.0, |a, x| a + x) / n as f64
        }
    };
    let active = rs.iter().filter(|r| r.active).count();
    let influenced = rs.iter().filter(|r| r.active && r.influenced).count();
    IterationMetrics {
        iteration,
        map: mean(|r| r.ap),
        mrr: mean(|r| r.rr),
        ndcg: mean(|r| r.ndcg),
        n_queries: n,
        coverage: if active == 0 {
            0.0
        } else {
            100.0 * influenced as f64 / active as f64
        },
        active,
    }
}
