use serde::{Deserialize, Serialize};

use super::{evaluate_conversational, EvalConfig};
use crate::conversation::AvlemRanker;
use crate::corpus::{Corpus, Split};
use crate::model::{FeedbackUse, Variant};
use crate::training::{train, TrainConfig};
use crate::Result;

/// Grid over embedding size and questions per iteration; every iteration
/// up to `max_iterations` is reported from the same sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepGrid {
    pub dims: Vec<usize>,
    pub m: Vec<usize>,
    pub max_iterations: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            dims: vec![100, 200, 300, 400, 500],
            m: vec![1, 2, 3],
            max_iterations: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub dim: usize,
    pub m: usize,
    pub iteration: usize,
    pub map: f64,
    pub mrr: f64,
    pub ndcg: f64,
    pub coverage: f64,
}

/// Trains one model per dimension and evaluates it for every `m`.
pub fn run_sweep(
    corpus: &Corpus,
    split: &Split,
    variant: Variant,
    usage: FeedbackUse,
    train_config: &TrainConfig,
    eval: &EvalConfig,
    grid: &SweepGrid,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &dim in &grid.dims {
        let out = train(corpus, split, variant.config(dim), train_config)?;
        let ranker = AvlemRanker::new(&out.model, corpus, usage);
        for &m in &grid.m {
            let cfg = EvalConfig {
                m,
                iterations: grid.max_iterations,
                ..*eval
            };
            let report = evaluate_conversational(&ranker, corpus, split, &cfg)?;
            rows.extend(report.iterations.iter().map(|it| SweepRow {
                dim,
                m,
                iteration: it.iteration,
                map: it.map,
                mrr: it.mrr,
                ndcg: it.ndcg,
                coverage: it.coverage,
            }));
        }
    }
    Ok(rows)
}
