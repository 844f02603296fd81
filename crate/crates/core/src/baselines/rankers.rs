use serde::{Deserialize, Serialize};

use super::{
    bm25_score, estimate_negative_model, multineg_rerank, ql_score, rocchio_scores, Bm25Params,
    InvertedIndex, NegTopicModel, DEFAULT_MU,
};
use crate::conversation::{RankRequest, Ranker};
use crate::model::sort_scored;
use crate::{ItemId, Result};

fn ordered(mut scored: Vec<(ItemId, f64)>) -> Vec<ItemId> {
    sort_scored(&mut scored);
    scored.into_iter().map(|x| x.0).collect()
}

/// Static BM25 ranking; ignores feedback.
#[derive(Debug, Clone, Copy)]
pub struct Bm25Ranker<'a> {
    pub index: &'a InvertedIndex,
    pub params: Bm25Params,
}

impl Ranker for Bm25Ranker<'_> {
    fn name(&self) -> String {
        "bm25".into()
    }

    fn rank(&self, r: &RankRequest<'_>, candidates: &[ItemId]) -> Result<Vec<ItemId>> {
        Ok(ordered(
            candidates
                .iter()
                .map(|&i| (i, bm25_score(r.query, i, self.index, self.params)))
                .collect(),
        ))
    }
}

/// Static Dirichlet query-likelihood ranking; ignores feedback.
#[derive(Debug, Clone, Copy)]
pub struct QlRanker<'a> {
    pub index: &'a InvertedIndex,
    pub mu: f64,
}

impl<'a> QlRanker<'a> {
    pub fn new(index: &'a InvertedIndex) -> Self {
        Self {
            index,
            mu: DEFAULT_MU,
        }
    }

    fn scores(&self, query: &[u32], candidates: &[ItemId]) -> Vec<(ItemId, f64)> {
        candidates
            .iter()
            .map(|&i| (i, ql_score(query, i, self.index, self.mu)))
            .collect()
    }
}

impl Ranker for QlRanker<'_> {
    fn name(&self) -> String {
        "ql".into()
    }

    fn rank(&self, r: &RankRequest<'_>, candidates: &[ItemId]) -> Result<Vec<ItemId>> {
        Ok(ordered(self.scores(r.query, candidates)))
    }
}

/// BM25-weighted Rocchio with the shown items as non-relevant.
#[derive(Debug, Clone, Copy)]
pub struct RocchioRanker<'a> {
    pub index: &'a InvertedIndex,
    pub params: Bm25Params,
    pub neg_weight: f64,
}

impl Ranker for RocchioRanker<'_> {
    fn name(&self) -> String {
        "rocchio".into()
    }

    fn rank(&self, r: &RankRequest<'_>, candidates: &[ItemId]) -> Result<Vec<ItemId>> {
        Ok(ordered(rocchio_scores(
            r.query,
            r.shown,
            candidates,
            self.index,
            self.params,
            self.neg_weight,
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NegFeedbackParams {
    pub mu: f64,
    /// Fixed background weight during EM.
    pub mix_weight: f64,
    pub top_n: usize,
    pub em_iters: usize,
    /// Weight of the negative-model penalty.
    pub weight: f64,
}

impl Default for NegFeedbackParams {
    fn default() -> Self {
        Self {
            mu: DEFAULT_MU,
            mix_weight: 0.5,
            top_n: 20,
            em_iters: 20,
            weight: 0.1,
        }
    }
}

fn neg_rerank(
    index: &InvertedIndex,
    p: &NegFeedbackParams,
    r: &RankRequest<'_>,
    candidates: &[ItemId],
    models: &[NegTopicModel],
) -> Vec<ItemId> {
    let initial = QlRanker { index, mu: p.mu }.scores(r.query, candidates);
    ordered(multineg_rerank(&initial, models, index, p.mu, p.weight))
}

/// QL reranked against one negative topic model of all shown items.
#[derive(Debug, Clone, Copy)]
pub struct SingleNegRanker<'a> {
    pub index: &'a InvertedIndex,
    pub params: NegFeedbackParams,
}

impl Ranker for SingleNegRanker<'_> {
    fn name(&self) -> String {
        "singleneg".into()
    }

    fn rank(&self, r: &RankRequest<'_>, candidates: &[ItemId]) -> Result<Vec<ItemId>> {
        let p = &self.params;
        let model = estimate_negative_model(r.shown, self.index, p.mix_weight, p.top_n, p.em_iters);
        Ok(neg_rerank(self.index, p, r, candidates, &[model]))
    }
}

/// QL reranked against the closest of one negative model per shown item.
#[derive(Debug, Clone, Copy)]
pub struct MultiNegRanker<'a> {
    pub index: &'a InvertedIndex,
    pub params: NegFeedbackParams,
}

impl Ranker for MultiNegRanker<'_> {
    fn name(&self) -> String {
        "multineg".into()
    }

    fn rank(&self, r: &RankRequest<'_>, candidates: &[ItemId]) -> Result<Vec<ItemId>> {
        let p = &self.params;
        let models: Vec<NegTopicModel> = r
            .shown
            .iter()
            .map(|&d| estimate_negative_model(&[d], self.index, p.mix_weight, p.top_n, p.em_iters))
            .collect();
        Ok(neg_rerank(self.index, p, r, candidates, &models))
    }
}
