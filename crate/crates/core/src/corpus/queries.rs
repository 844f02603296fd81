use std::collections::HashSet;

use super::{tokenize, Stopwords};

/// Turns an item's category paths into queries.
///
/// Each path's level terms are concatenated into one topic string, tokenized,
/// stripped of stopwords and of repeated words (first occurrence kept).
/// Paths that reduce to nothing are dropped and identical results collapse to
/// one query, in first-seen order.
pub fn extract_queries(paths: &[Vec<String>], stopwords: &Stopwords) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = Vec::new();
    for path in paths {
        let topic = path.join(" ");
        let mut seen = HashSet::new();
        let query: Vec<String> = tokenize(&topic)
            .into_iter()
            .filter(|t| !stopwords.contains(t))
            .filter(|t| seen.insert(t.clone()))
            .collect();
        if !query.is_empty() && !out.contains(&query) {
            out.push(query);
        }
    }
    out
}
