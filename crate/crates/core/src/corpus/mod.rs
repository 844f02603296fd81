//! Review corpora, aspect-value catalogs, queries and train/test splits.

mod ingest;
mod queries;
mod split;
mod stopwords;
pub mod synthetic;
mod vocab;

use std::collections::HashMap;

pub use ingest::{
    ingest_reviews, AvIngestReport, AvRecord, IngestReport, MetaIngestReport, MetaRecord,
    ReviewFormat, ReviewRecord, AV_FILE, META_FILE, REVIEWS_FILE,
};
pub use queries::extract_queries;
pub use split::{split_train_test, Split, SplitConfig, TestPair};
pub use stopwords::Stopwords;
pub use vocab::Vocab;

use crate::{AspectId, Error, ItemId, QueryId, Result, UserId, ValueId, WordId};

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Review {
    pub user: UserId,
    pub item: ItemId,
    pub tokens: Vec<WordId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AspectValuePair {
    pub item: ItemId,
    pub aspect: AspectId,
    pub value: ValueId,
    pub mentions: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub users: Vocab,
    pub items: Vocab,
    pub reviews: Vec<Review>,
    /// Review-word vocabulary; query words are interned here too.
    pub words: Vocab,
    pub aspect_words: Vocab,
    pub values: Vocab,
    /// Aspect id -> its aspect-word sequence.
    pub aspects: Vec<Vec<WordId>>,
    pub av_catalog: Vec<AspectValuePair>,
    /// Query id -> token ids (review-word vocabulary).
    pub queries: Vec<Vec<WordId>>,
    /// Item id -> query ids carried by the item.
    pub item_queries: Vec<Vec<QueryId>>,
    aspect_index: HashMap<Vec<WordId>, AspectId>,
    av_index: HashMap<(ItemId, AspectId, ValueId), usize>,
    query_index: HashMap<Vec<WordId>, QueryId>,
    item_pairs: Vec<Vec<usize>>,
    item_reviews: Vec<Vec<usize>>,
}

impl Corpus {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn num_aspects(&self) -> usize {
        self.aspects.len()
    }

    pub fn num_values(&self) -> usize {
        self.values.len()
    }

    /// Catalog entries of one item, in catalog order.
    pub fn item_av(&self, item: ItemId) -> impl Iterator<Item = &AspectValuePair> + '_ {
        self.item_pairs
            .get(item as usize)
            .into_iter()
            .flatten()
            .map(move |&k| &self.av_catalog[k])
    }

    /// Review indices of one item.
    pub fn item_reviews(&self, item: ItemId) -> &[usize] {
        self.item_reviews
            .get(item as usize)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn aspect_name(&self, aspect: AspectId) -> String {
        self.aspects[aspect as usize]
            .iter()
            .map(|&w| self.aspect_words.token(w))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn value_name(&self, value: ValueId) -> &str {
        self.values.token(value)
    }

    pub fn query_text(&self, query: QueryId) -> String {
        self.words_text(&self.queries[query as usize])
    }

    pub fn words_text(&self, tokens: &[WordId]) -> String {
        tokens
            .iter()
            .map(|&w| self.words.token(w))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn aspect_id(&self, tokens: &[WordId]) -> Option<AspectId> {
        self.aspect_index.get(tokens).copied()
    }

    /// Looks up an aspect by its surface phrase.
    pub fn find_aspect(&self, phrase: &str) -> Option<AspectId> {
        let ids: Option<Vec<WordId>> = tokenize(phrase)
            .iter()
            .map(|t| self.aspect_words.id(t))
            .collect();
        self.aspect_id(&ids?)
    }

    pub fn query_id(&self, tokens: &[WordId]) -> Option<QueryId> {
        self.query_index.get(tokens).copied()
    }

    /// Maps free text onto known review-word ids, dropping unknown words.
    pub fn encode_known(&self, text: &str) -> Vec<WordId> {
        tokenize(text)
            .iter()
            .filter_map(|t| self.words.id(t))
            .collect()
    }

    /// Adds a query for `item`, interning its words. Returns the query id.
    pub(crate) fn add_item_query(&mut self, item: ItemId, words: &[String]) -> QueryId {
        let tokens: Vec<WordId> = words.iter().map(|w| self.words.intern(w)).collect();
        let qid = match self.query_index.get(&tokens) {
            Some(&q) => q,
            None => {
                let q = self.queries.len() as QueryId;
                self.queries.push(tokens.clone());
                self.query_index.insert(tokens.clone(), q);
                q
            }
        };
        let slot = &mut self.item_queries[item as usize];
        if !slot.contains(&qid) {
            slot.push(qid);
            for &t in &tokens {
                self.words.add_existing(t);
            }
        }
        qid
    }

    pub(crate) fn intern_aspect(&mut self, words: &[String]) -> AspectId {
        let tokens: Vec<WordId> = words.iter().map(|w| self.aspect_words.intern(w)).collect();
        if let Some(&a) = self.aspect_index.get(&tokens) {
            return a;
        }
        let a = self.aspects.len() as AspectId;
        self.aspects.push(tokens.clone());
        self.aspect_index.insert(tokens, a);
        a
    }

    /// Inserts or merges one catalog entry. Returns `true` when new.
    pub(crate) fn upsert_pair(
        &mut self,
        item: ItemId,
        aspect: AspectId,
        value: ValueId,
        mentions: u64,
    ) -> bool {
        if let Some(&k) = self.av_index.get(&(item, aspect, value)) {
            self.av_catalog[k].mentions += mentions;
            return false;
        }
        let k = self.av_catalog.len();
        self.av_catalog.push(AspectValuePair {
            item,
            aspect,
            value,
            mentions,
        });
        self.av_index.insert((item, aspect, value), k);
        self.item_pairs[item as usize].push(k);
        for &w in &self.aspects[aspect as usize] {
            self.aspect_words.add_existing(w);
        }
        self.values.add_existing(value);
        true
    }

    /// Rebuilds per-item lookups after the item vocabulary changed.
    pub(crate) fn reindex(&mut self) {
        let n = self.items.len();
        self.item_queries.resize(n, Vec::new());
        self.item_pairs.resize(n, Vec::new());
        self.item_reviews = vec![Vec::new(); n];
        for (k, r) in self.reviews.iter().enumerate() {
            self.item_reviews[r.item as usize].push(k);
        }
    }

    /// Checks the structural invariants of a fully loaded corpus.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidCorpus(m));
        for (k, r) in self.reviews.iter().enumerate() {
            if r.tokens.is_empty() {
                return bad(format!("review {k} has no tokens"));
            }
            if r.user as usize >= self.users.len() || r.item as usize >= self.items.len() {
                return bad(format!("review {k} references an unknown user or item"));
            }
            if r.tokens.iter().any(|&t| t as usize >= self.words.len()) {
                return bad(format!("review {k} has an out-of-vocabulary token"));
            }
        }
        for p in &self.av_catalog {
            if p.item as usize >= self.items.len() {
                return bad(format!("catalog references unknown item {}", p.item));
            }
        }
        for vocab in [
            &self.users,
            &self.items,
            &self.words,
            &self.aspect_words,
            &self.values,
        ] {
            if vocab.counts().iter().any(|&c| c == 0) {
                return bad("vocabulary entry with zero count".into());
            }
        }
        for (item, qs) in self.item_queries.iter().enumerate() {
            if qs.is_empty() {
                return bad(format!(
                    "item {} has no query",
                    self.items.token(item as u32)
                ));
            }
        }
        Ok(())
    }
}
