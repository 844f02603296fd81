use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Corpus;
use crate::{Error, ItemId, QueryId, Result, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub review_frac: f64,
    pub query_test_frac: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            review_frac: 0.7,
            query_test_frac: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestPair {
    pub user: UserId,
    pub query: QueryId,
    /// Items the user purchased in test reviews that carry the query.
    pub relevant: Vec<ItemId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train_reviews: Vec<usize>,
    pub test_reviews: Vec<usize>,
    /// Sorted ids of queries held out for testing.
    pub test_queries: Vec<QueryId>,
    pub test_pairs: Vec<TestPair>,
}

/// Per-user review split plus a global query split.
///
/// Each user keeps `round(review_frac * n)` of their reviews for training
/// (at least one). `query_test_frac` of the distinct queries go to test;
/// an item whose queries all landed in test gets one of them moved back.
/// Test pairs are all (user, test query) combinations reachable through a
/// test review.
pub fn split_train_test(corpus: &Corpus, seed: u64, config: SplitConfig) -> Result<Split> {
    if corpus.reviews.is_empty() {
        return Err(Error::Empty("corpus has no reviews"));
    }
    if corpus.queries.is_empty() {
        return Err(Error::Empty("corpus has no queries"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut by_user: Vec<Vec<usize>> = vec![Vec::new(); corpus.num_users()];
    for (k, r) in corpus.reviews.iter().enumerate() {
        by_user[r.user as usize].push(k);
    }
    let mut train_reviews = Vec::new();
    let mut test_reviews = Vec::new();
    for mut reviews in by_user {
        if reviews.is_empty() {
            continue;
        }
        reviews.shuffle(&mut rng);
        let n = reviews.len();
        let n_train = ((config.review_frac * n as f64).round() as usize).clamp(1, n);
        train_reviews.extend_from_slice(&reviews[..n_train]);
        test_reviews.extend_from_slice(&reviews[n_train..]);
    }
    train_reviews.sort_unstable();
    test_reviews.sort_unstable();

    let mut queries: Vec<QueryId> = (0..corpus.queries.len() as QueryId).collect();
    queries.shuffle(&mut rng);
    let n_test = (config.query_test_frac * queries.len() as f64).round() as usize;
    let mut test_queries: BTreeSet<QueryId> = queries[..n_test].iter().copied().collect();
    for qs in &corpus.item_queries {
        if !qs.is_empty() && qs.iter().all(|q| test_queries.contains(q)) {
            let back = qs[rng.gen_range(0..qs.len())];
            test_queries.remove(&back);
        }
    }

    let mut pairs: BTreeMap<(UserId, QueryId), BTreeSet<ItemId>> = BTreeMap::new();
    for &k in &test_reviews {
        let r = &corpus.reviews[k];
        for &q in &corpus.item_queries[r.item as usize] {
            if test_queries.contains(&q) {
                pairs.entry((r.user, q)).or_default().insert(r.item);
            }
        }
    }
    let test_pairs = pairs
        .into_iter()
        .map(|((user, query), rel)| TestPair {
            user,
            query,
            relevant: rel.into_iter().collect(),
        })
        .collect();

    Ok(Split {
        train_reviews,
        test_reviews,
        test_queries: test_queries.into_iter().collect(),
        test_pairs,
    })
}

impl Split {
    pub fn is_test_query(&self, q: QueryId) -> bool {
        self.test_queries.binary_search(&q).is_ok()
    }

    pub fn train_queries<'a>(
        &'a self,
        corpus: &'a Corpus,
        item: ItemId,
    ) -> impl Iterator<Item = QueryId> + 'a {
        corpus.item_queries[item as usize]
            .iter()
            .copied()
            .filter(move |&q| !self.is_test_query(q))
    }

    /// Checks the split invariants against its corpus.
    pub fn validate(&self, corpus: &Corpus) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidCorpus(m));
        let n = corpus.reviews.len();
        let mut seen = vec![false; n];
        for &k in self.train_reviews.iter().chain(&self.test_reviews) {
            if k >= n || seen[k] {
                return bad(format!("review index {k} out of range or repeated"));
            }
            seen[k] = true;
        }
        if seen.iter().any(|s| !s) {
            return bad("split does not cover every review".into());
        }
        for (item, qs) in corpus.item_queries.iter().enumerate() {
            if !qs.is_empty() && qs.iter().all(|&q| self.is_test_query(q)) {
                return bad(format!("item {item} has no training query"));
            }
        }
        let train: BTreeSet<(UserId, QueryId, ItemId)> = self
            .train_reviews
            .iter()
            .flat_map(|&k| {
                let r = &corpus.reviews[k];
                self.train_queries(corpus, r.item)
                    .map(move |q| (r.user, q, r.item))
            })
            .collect();
        for p in &self.test_pairs {
            for &i in &p.relevant {
                if train.contains(&(p.user, p.query, i)) {
                    return bad(format!(
                        "test triple ({}, {}, {i}) seen in training",
                        p.user, p.query
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
