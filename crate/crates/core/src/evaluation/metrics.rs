use std::collections::BTreeSet;

use crate::{Error, ItemId, Result};

pub const MAP_CUTOFF: usize = 100;
pub const MRR_CUTOFF: usize = 100;
pub const NDCG_K: usize = 10;

/// `frozen ++ rest`; the two must be disjoint.
pub fn freeze_rank(frozen: &[ItemId], rest: &[ItemId]) -> Result<Vec<ItemId>> {
    let seen: BTreeSet<ItemId> = frozen.iter().copied().collect();
    if let Some(&i) = rest.iter().find(|i| seen.contains(i)) {
        return Err(Error::Overlap(i));
    }
    Ok(frozen.iter().chain(rest).copied().collect())
}

/// Precision at each relevant rank within `cutoff`, summed and divided by
/// `min(|rel|, cutoff)`.
pub fn average_precision(list: &[ItemId], relevant: &BTreeSet<ItemId>, cutoff: usize) -> f64 {
    if relevant.is_empty() || cutoff == 0 {
        return 0.0;
    }
    let mut hits = 0;
    let mut sum = 0.0;
    for (r, i) in list.iter().take(cutoff).enumerate() {
        if relevant.contains(i) {
            hits += 1;
            sum += hits as f64 / (r + 1) as f64;
        }
    }
    sum / relevant.len().min(cutoff) as f64
}

/// `1 / rank` of the first relevant item within `cutoff`, else 0.
pub fn reciprocal_rank(list: &[ItemId], relevant: &BTreeSet<ItemId>, cutoff: usize) -> f64 {
    list.iter()
        .take(cutoff)
        .position(|i| relevant.contains(i))
        .map_or(0.0, |r| 1.0 / (r + 1) as f64)
}

/// Binary-gain NDCG with `log2(rank + 1)` discounts.
pub fn ndcg_at(list: &[ItemId], relevant: &BTreeSet<ItemId>, k: usize) -> f64 {
    let disc = |r: usize| 1.0 / ((r + 2) as f64).log2();
    let dcg: f64 = list
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, i)| relevant.contains(i))
        .fold(0.0, |acc, (r, _)| acc + disc(r));
    let ideal: f64 = (0..relevant.len().min(k)).map(disc).sum();
    if ideal == 0.0 {
        0.0
    } else {
        dcg / ideal
    }
}
