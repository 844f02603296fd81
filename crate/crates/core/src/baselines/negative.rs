use std::collections::BTreeMap;

use super::InvertedIndex;
use crate::{ItemId, WordId};

/// Truncation sizes for the negative topic model.
pub const TOP_N_GRID: [usize; 5] = [10, 20, 30, 40, 50];
/// Weights of the negative-model penalty.
pub const NEG_DOC_WEIGHTS: [f64; 6] = [0.01, 0.05, 0.1, 0.2, 0.3, 0.4];

/// Term distribution of the non-relevant results.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NegTopicModel {
    pub probs: BTreeMap<WordId, f64>,
    /// The fit assigned every token to the background; `probs` then falls
    /// back to uniform over the document terms.
    pub degenerate: bool,
}

impl NegTopicModel {
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Two-component EM with a fixed background (the collection model) at
/// weight `mix_weight`, then truncation to the `top_n` most probable terms.
pub fn estimate_negative_model(
    docs: &[ItemId],
    index: &InvertedIndex,
    mix_weight: f64,
    top_n: usize,
    em_iters: usize,
) -> NegTopicModel {
    let mut counts: BTreeMap<WordId, f64> = BTreeMap::new();
    for &d in docs {
        for (&t, &c) in index.terms(d) {
            *counts.entry(t).or_insert(0.0) += c as f64;
        }
    }
    let total: f64 = counts.values().sum();
    if total == 0.0 {
        return NegTopicModel::default();
    }
    let mut theta: BTreeMap<WordId, f64> = counts.iter().map(|(&t, &c)| (t, c / total)).collect();
    let mut degenerate = false;
    for _ in 0..em_iters {
        let mut next: BTreeMap<WordId, f64> = BTreeMap::new();
        for (&t, &c) in &counts {
            let fg = (1.0 - mix_weight) * theta[&t];
            let bg = mix_weight * index.collection_prob(t);
            let z = if fg + bg > 0.0 { fg / (fg + bg) } else { 0.0 };
            next.insert(t, c * z);
        }
        let norm: f64 = next.values().sum();
        if norm <= 0.0 {
            degenerate = true;
            break;
        }
        theta = next.into_iter().map(|(t, x)| (t, x / norm)).collect();
    }
    if degenerate {
        let u = 1.0 / counts.len() as f64;
        theta = counts.keys().map(|&t| (t, u)).collect();
    }
    let mut ranked: Vec<(WordId, f64)> = theta.into_iter().filter(|x| x.1 > 0.0).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(top_n);
    let norm: f64 = ranked.iter().map(|x| x.1).sum();
    NegTopicModel {
        probs: ranked.into_iter().map(|(t, p)| (t, p / norm)).collect(),
        degenerate,
    }
}

/// Item-dependent part of the cross entropy between the negative model and
/// the Dirichlet-smoothed item model: `Σ_t P_neg(t)·ln(1 + tf/(μ·P(t|C)))`.
/// Zero for items sharing no term with the model.
pub fn negative_similarity(
    model: &NegTopicModel,
    item: ItemId,
    index: &InvertedIndex,
    mu: f64,
) -> f64 {
    model
        .probs
        .iter()
        .filter_map(|(&t, &p)| {
            let tf = index.tf(t, item);
            let pc = index.collection_prob(t);
            (tf > 0 && pc > 0.0).then(|| p * (1.0 + tf as f64 / (mu * pc)).ln())
        })
        .sum()
}

/// `score - w · sim(i, model)`.
pub fn singleneg_rerank(
    initial: &[(ItemId, f64)],
    model: &NegTopicModel,
    index: &InvertedIndex,
    mu: f64,
    weight: f64,
) -> Vec<(ItemId, f64)> {
    multineg_rerank(initial, std::slice::from_ref(model), index, mu, weight)
}

/// `score - w · max_k sim(i, model_k)`.
pub fn multineg_rerank(
    initial: &[(ItemId, f64)],
    models: &[NegTopicModel],
    index: &InvertedIndex,
    mu: f64,
    weight: f64,
) -> Vec<(ItemId, f64)> {
    initial
        .iter()
        .map(|&(i, s)| {
            let penalty = models
                .iter()
                .filter(|m| !m.is_empty())
                .map(|m| negative_similarity(m, i, index, mu))
                .fold(None, |acc: Option<f64>, x| {
                    Some(acc.map_or(x, |a| a.max(x)))
                });
            match penalty {
                Some(p) if weight != 0.0 && p != 0.0 => (i, s - weight * p),
                _ => (i, s),
            }
        })
        .collect()
}
