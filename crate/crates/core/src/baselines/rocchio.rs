use std::collections::BTreeMap;

use super::{bm25_weight, idf, Bm25Params, InvertedIndex};
use crate::{ItemId, WordId};

pub type SparseVec = BTreeMap<WordId, f64>;

/// Query weights `IDF(t)·qtf·(k1+1)/(qtf+k1)`, so that its dot product with
/// an item's BM25 vector equals the item's BM25 score.
pub fn query_vector(query: &[WordId], index: &InvertedIndex, p: Bm25Params) -> SparseVec {
    let mut qtf: BTreeMap<WordId, u32> = BTreeMap::new();
    for &t in query {
        *qtf.entry(t).or_insert(0) += 1;
    }
    qtf.into_iter()
        .map(|(t, n)| {
            let n = n as f64;
            (t, idf(index, t) * n * (p.k1 + 1.0) / (n + p.k1))
        })
        .collect()
}

/// BM25 term weights of an item document.
pub fn bm25_vector(item: ItemId, index: &InvertedIndex, p: Bm25Params) -> SparseVec {
    let len = index.len(item);
    index
        .terms(item)
        .iter()
        .map(|(&t, &tf)| (t, bm25_weight(index, t, tf, len, p)))
        .collect()
}

fn sparse_dot(a: &SparseVec, b: &SparseVec) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small
        .iter()
        .filter_map(|(t, x)| large.get(t).map(|y| x * y))
        .sum()
}

/// `q - w · centroid(non-relevant)`; `q` itself when there are none.
pub fn rocchio_query(
    query: &[WordId],
    nonrel: &[ItemId],
    index: &InvertedIndex,
    p: Bm25Params,
    neg_weight: f64,
) -> SparseVec {
    let mut q = query_vector(query, index, p);
    if nonrel.is_empty() || neg_weight == 0.0 {
        return q;
    }
    let scale = neg_weight / nonrel.len() as f64;
    for &n in nonrel {
        for (t, w) in bm25_vector(n, index, p) {
            *q.entry(t).or_insert(0.0) -= scale * w;
        }
    }
    q
}

/// Scores of `candidates` under the adjusted query vector.
pub fn rocchio_scores(
    query: &[WordId],
    nonrel: &[ItemId],
    candidates: &[ItemId],
    index: &InvertedIndex,
    p: Bm25Params,
    neg_weight: f64,
) -> Vec<(ItemId, f64)> {
    let q = rocchio_query(query, nonrel, index, p, neg_weight);
    candidates
        .iter()
        .map(|&i| (i, sparse_dot(&q, &bm25_vector(i, index, p))))
        .collect()
}

/// Reranks every item not in `nonrel`, best first.
pub fn rocchio_rerank(
    query: &[WordId],
    nonrel: &[ItemId],
    index: &InvertedIndex,
    p: Bm25Params,
    neg_weight: f64,
) -> Vec<(ItemId, f64)> {
    let candidates: Vec<ItemId> = (0..index.num_items() as ItemId)
        .filter(|i| !nonrel.contains(i))
        .collect();
    let mut s = rocchio_scores(query, nonrel, &candidates, index, p, neg_weight);
    crate::model::sort_scored(&mut s);
    s
}
