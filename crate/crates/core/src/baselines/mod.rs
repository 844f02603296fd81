//! Term-based rankers over item documents built from training reviews, and
//! item-level negative-feedback rerankers.

mod negative;
mod rankers;
mod rocchio;

pub use negative::{
    estimate_negative_model, multineg_rerank, negative_similarity, singleneg_rerank, NegTopicModel,
    NEG_DOC_WEIGHTS, TOP_N_GRID,
};
pub use rankers::{
    Bm25Ranker, MultiNegRanker, NegFeedbackParams, QlRanker, RocchioRanker, SingleNegRanker,
};
pub use rocchio::{bm25_vector, query_vector, rocchio_rerank, rocchio_scores};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Split};
use crate::{ItemId, WordId};

/// Term statistics over item documents.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvertedIndex {
    tf: Vec<BTreeMap<WordId, u32>>,
    df: Vec<u32>,
    lengths: Vec<u64>,
    collection_tf: Vec<u64>,
    collection_len: u64,
}

impl InvertedIndex {
    /// One document per item, as token lists over a vocabulary of `n_words`.
    pub fn from_documents<D: AsRef<[WordId]>>(n_words: usize, docs: &[D]) -> Self {
        let mut ix = Self {
            tf: vec![BTreeMap::new(); docs.len()],
            df: vec![0; n_words],
            lengths: vec![0; docs.len()],
            collection_tf: vec![0; n_words],
            collection_len: 0,
        };
        for (i, doc) in docs.iter().enumerate() {
            ix.extend(i as ItemId, doc.as_ref());
        }
        ix
    }

    fn extend(&mut self, item: ItemId, tokens: &[WordId]) {
        let i = item as usize;
        for &t in tokens {
            if t as usize >= self.df.len() {
                self.df.resize(t as usize + 1, 0);
                self.collection_tf.resize(t as usize + 1, 0);
            }
            let e = self.tf[i].entry(t).or_insert(0);
            if *e == 0 {
                self.df[t as usize] += 1;
            }
            *e += 1;
            self.collection_tf[t as usize] += 1;
        }
        self.lengths[i] += tokens.len() as u64;
        self.collection_len += tokens.len() as u64;
    }

    pub fn num_items(&self) -> usize {
        self.tf.len()
    }

    pub fn tf(&self, term: WordId, item: ItemId) -> u32 {
        self.tf[item as usize].get(&term).copied().unwrap_or(0)
    }

    pub fn terms(&self, item: ItemId) -> &BTreeMap<WordId, u32> {
        &self.tf[item as usize]
    }

    pub fn df(&self, term: WordId) -> u32 {
        self.df.get(term as usize).copied().unwrap_or(0)
    }

    pub fn len(&self, item: ItemId) -> u64 {
        self.lengths[item as usize]
    }

    pub fn is_empty(&self) -> bool {
        self.collection_len == 0
    }

    pub fn collection_len(&self) -> u64 {
        self.collection_len
    }

    pub fn avg_len(&self) -> f64 {
        if self.tf.is_empty() {
            0.0
        } else {
            self.collection_len as f64 / self.tf.len() as f64
        }
    }

    /// `P(t | collection)`, 0 for unseen terms.
    pub fn collection_prob(&self, term: WordId) -> f64 {
        if self.collection_len == 0 {
            return 0.0;
        }
        self.collection_tf.get(term as usize).copied().unwrap_or(0) as f64
            / self.collection_len as f64
    }
}

/// Indexes each item's training reviews.
pub fn build_index(corpus: &Corpus, split: &Split) -> InvertedIndex {
    let mut ix = InvertedIndex::from_documents::<Vec<WordId>>(
        corpus.words.len(),
        &vec![Vec::new(); corpus.num_items()],
    );
    for &k in &split.train_reviews {
        let r = &corpus.reviews[k];
        ix.extend(r.item, &r.tokens);
    }
    ix
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

/// `ln((N - df + 0.5) / (df + 0.5) + 1)`
pub fn idf(index: &InvertedIndex, term: WordId) -> f64 {
    let n = index.num_items() as f64;
    let df = index.df(term) as f64;
    ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
}

/// BM25 weight of a term occurring `tf` times in an item.
pub fn bm25_weight(index: &InvertedIndex, term: WordId, tf: u32, len: u64, p: Bm25Params) -> f64 {
    if tf == 0 {
        return 0.0;
    }
    let avg = index.avg_len();
    let ratio = if avg > 0.0 { len as f64 / avg } else { 1.0 };
    let tf = tf as f64;
    idf(index, term) * tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * ratio))
}

/// Sum of BM25 weights of the query tokens; repeated tokens count again.
pub fn bm25_score(query: &[WordId], item: ItemId, index: &InvertedIndex, p: Bm25Params) -> f64 {
    query
        .iter()
        .map(|&t| bm25_weight(index, t, index.tf(t, item), index.len(item), p))
        .sum()
}

pub const DEFAULT_MU: f64 = 1500.0;

/// Dirichlet-smoothed query log-likelihood; terms unseen in the collection
/// are skipped.
pub fn ql_score(query: &[WordId], item: ItemId, index: &InvertedIndex, mu: f64) -> f64 {
    let len = index.len(item) as f64;
    query
        .iter()
        .filter_map(|&t| {
            let pc = index.collection_prob(t);
            (pc > 0.0).then(|| ((index.tf(t, item) as f64 + mu * pc) / (len + mu)).ln())
        })
        .sum()
}
