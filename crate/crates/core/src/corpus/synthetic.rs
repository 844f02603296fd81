//! Planted-structure synthetic corpora for desk-scale experiments.
//!
//! Items live in leaf categories; each leaf owns a few aspects and every
//! item carries one value for each of a fixed number of its leaf's aspects,
//! with a signature unique across the corpus. Users follow a couple of
//! leaves and hold one preferred value per aspect. A user only buys items
//! that agree with their preferences on at least one aspect, favouring
//! items that agree on more. Review words mix category words, words of the
//! item's attributes, words of the user's preferences, and background noise.

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    split_train_test, AvRecord, Corpus, MetaRecord, ReviewRecord, Split, SplitConfig, Stopwords,
};
use crate::{AspectId, Error, ItemId, Result, UserId, ValueId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub users: usize,
    pub items: usize,
    pub aspects: usize,
    pub values: usize,
    /// Size of the background word pool.
    pub vocab: usize,
    pub reviews_per_user: usize,
    pub items_per_leaf: usize,
    pub aspects_per_leaf: usize,
    pub aspects_per_item: usize,
    pub values_per_aspect: usize,
    pub leaves_per_user: usize,
    pub review_len: usize,
    /// Token mixture: category, item attribute, user preference; the rest is noise.
    pub mix: [f64; 3],
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            users: 50,
            items: 200,
            aspects: 20,
            values: 30,
            vocab: 500,
            reviews_per_user: 6,
            items_per_leaf: 8,
            aspects_per_leaf: 4,
            aspects_per_item: 3,
            values_per_aspect: 3,
            leaves_per_user: 2,
            review_len: 30,
            mix: [0.1, 0.45, 0.2],
        }
    }
}

impl SynthConfig {
    /// Smallest useful world: two users with opposite tastes, two items.
    pub fn tiny() -> Self {
        Self {
            users: 2,
            items: 2,
            aspects: 1,
            values: 2,
            vocab: 10,
            reviews_per_user: 1,
            ..Self::default()
        }
    }
}

/// Ground truth planted by the generator, in corpus ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedTruth {
    pub item_attrs: Vec<BTreeSet<(AspectId, ValueId)>>,
    /// Preferred value per aspect, for aspects present in the catalog.
    pub user_prefs: Vec<BTreeMap<AspectId, ValueId>>,
    pub purchases: Vec<(UserId, ItemId)>,
}

impl PlantedTruth {
    pub fn matches(&self, user: UserId, item: ItemId) -> usize {
        let prefs = &self.user_prefs[user as usize];
        self.item_attrs[item as usize]
            .iter()
            .filter(|(a, v)| prefs.get(a) == Some(v))
            .count()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub split: Split,
    pub truth: PlantedTruth,
    pub reviews: Vec<ReviewRecord>,
    pub meta: Vec<MetaRecord>,
    pub av: Vec<AvRecord>,
}

fn aspect_phrase(a: usize) -> String {
    if a % 3 == 2 {
        format!("a{a} part")
    } else {
        format!("a{a}")
    }
}

pub fn generate_synthetic(config: &SynthConfig, seed: u64) -> Result<SyntheticCorpus> {
    let c = config;
    if c.items < 2 || c.aspects < 1 || c.values < 2 || c.users < 1 || c.vocab < 1 {
        return Err(Error::Infeasible(
            "need at least 2 items, 1 aspect, 2 values, 1 user and 1 vocabulary word".into(),
        ));
    }
    if c.reviews_per_user == 0 || c.review_len == 0 || c.items_per_leaf == 0 {
        return Err(Error::Infeasible(
            "reviews, lengths and leaf sizes must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n_leaves = c.items.div_ceil(c.items_per_leaf);
    let n_groups = n_leaves.min(5);
    let per_leaf = c.aspects_per_leaf.clamp(1, c.aspects);
    let per_item = c.aspects_per_item.clamp(1, per_leaf);
    let per_aspect = c.values_per_aspect.clamp(2, c.values);

    let cand_values: Vec<Vec<usize>> = (0..c.aspects)
        .map(|_| index::sample(&mut rng, c.values, per_aspect).into_vec())
        .collect();
    let leaf_aspects: Vec<Vec<usize>> = (0..n_leaves)
        .map(|_| index::sample(&mut rng, c.aspects, per_leaf).into_vec())
        .collect();
    let leaf_of = |i: usize| i % n_leaves;

    let mut signatures: BTreeSet<Vec<(usize, usize)>> = BTreeSet::new();
    let mut attrs: Vec<Vec<(usize, usize)>> = Vec::with_capacity(c.items);
    for i in 0..c.items {
        let leaf = &leaf_aspects[leaf_of(i)];
        let mut found = None;
        for _ in 0..200 {
            let mut sig: Vec<(usize, usize)> = index::sample(&mut rng, leaf.len(), per_item)
                .into_iter()
                .map(|k| {
                    let a = leaf[k];
                    (a, *cand_values[a].choose(&mut rng).unwrap())
                })
                .collect();
            sig.sort_unstable();
            if !signatures.contains(&sig) {
                found = Some(sig);
                break;
            }
        }
        let sig = found.ok_or_else(|| {
            Error::Infeasible(format!("cannot give item {i} a unique attribute signature"))
        })?;
        signatures.insert(sig.clone());
        attrs.push(sig);
    }

    // balanced preference assignment: each aspect's candidate values are
    // dealt round-robin over a shuffled user order
    let mut prefs = vec![vec![0usize; c.aspects]; c.users];
    for (a, cands) in cand_values.iter().enumerate() {
        let mut order: Vec<usize> = (0..c.users).collect();
        order.shuffle(&mut rng);
        let mut vals = cands.clone();
        vals.shuffle(&mut rng);
        for (p, &u) in order.iter().enumerate() {
            prefs[u][a] = vals[p % vals.len()];
        }
    }
    let mut leaf_order: Vec<usize> = (0..n_leaves).collect();
    leaf_order.shuffle(&mut rng);
    let per_user_leaves = c.leaves_per_user.clamp(1, n_leaves);
    let interests: Vec<Vec<usize>> = (0..c.users)
        .map(|u| {
            (0..per_user_leaves)
                .map(|j| leaf_order[(u * per_user_leaves + j) % n_leaves])
                .collect()
        })
        .collect();
    let matches = |u: usize, i: usize| attrs[i].iter().filter(|&&(a, v)| prefs[u][a] == v).count();

    let mut purchases: Vec<(usize, usize)> = Vec::new();
    let mut bought = vec![false; c.items];
    for u in 0..c.users {
        let pool: Vec<usize> = (0..c.items)
            .filter(|&i| interests[u].contains(&leaf_of(i)) && matches(u, i) > 0)
            .collect();
        let mut weights: Vec<f64> = pool
            .iter()
            .map(|&i| (1.5 * (matches(u, i) as f64 - 1.0)).exp())
            .collect();
        for _ in 0..c.reviews_per_user.min(pool.len()) {
            let k = WeightedIndex::new(&weights).unwrap().sample(&mut rng);
            weights[k] = 0.0;
            purchases.push((u, pool[k]));
            bought[pool[k]] = true;
        }
    }
    for i in 0..c.items {
        if bought[i] {
            continue;
        }
        let fans: Vec<usize> = (0..c.users)
            .filter(|&u| matches(u, i) > 0 && interests[u].contains(&leaf_of(i)))
            .collect();
        let fans = if fans.is_empty() {
            (0..c.users).filter(|&u| matches(u, i) > 0).collect()
        } else {
            fans
        };
        let Some(&u) = fans.choose(&mut rng) else {
            return Err(Error::Infeasible(format!(
                "no user matches item {i} on any aspect"
            )));
        };
        purchases.push((u, i));
        bought[i] = true;
    }

    // words attached to each (aspect, value) combination
    let mut describe = BTreeMap::new();
    for (a, cands) in cand_values.iter().enumerate() {
        for &v in cands {
            let w: [usize; 2] = [rng.gen_range(0..c.vocab), rng.gen_range(0..c.vocab)];
            describe.insert((a, v), w);
        }
    }
    let pair_word = |rng: &mut ChaCha8Rng, a: usize, v: usize| -> String {
        match rng.gen_range(0..3) {
            0 => aspect_phrase(a),
            1 => format!("v{v}"),
            _ => format!("w{}", describe[&(a, v)][rng.gen_range(0..2)]),
        }
    };

    let mut mentions: BTreeMap<(usize, usize, usize), u64> = BTreeMap::new();
    let mut reviews = Vec::with_capacity(purchases.len());
    for &(u, i) in &purchases {
        let leaf = leaf_of(i);
        let cats = [
            format!("g{}", leaf % n_groups),
            format!("s{leaf}"),
            format!("t{leaf}"),
        ];
        let len = c.review_len + rng.gen_range(0..=c.review_len / 3);
        let mut words = Vec::with_capacity(len);
        for _ in 0..len {
            let r: f64 = rng.gen();
            let word = if r < c.mix[0] {
                cats.choose(&mut rng).unwrap().clone()
            } else if r < c.mix[0] + c.mix[1] {
                let &(a, v) = attrs[i].choose(&mut rng).unwrap();
                *mentions.entry((i, a, v)).or_default() += 1;
                pair_word(&mut rng, a, v)
            } else if r < c.mix[0] + c.mix[1] + c.mix[2] {
                let a = rng.gen_range(0..c.aspects);
                pair_word(&mut rng, a, prefs[u][a])
            } else {
                format!("w{}", rng.gen_range(0..c.vocab))
            };
            words.push(word);
        }
        reviews.push(ReviewRecord {
            user: format!("u{u}"),
            item: format!("i{i}"),
            text: words.join(" "),
        });
    }

    let meta: Vec<MetaRecord> = (0..c.items)
        .map(|i| {
            let leaf = leaf_of(i);
            let g = format!("g{}", leaf % n_groups);
            let s = format!("s{leaf}");
            let t = format!("t{leaf}");
            MetaRecord {
                item: format!("i{i}"),
                categories: vec![vec![g.clone(), s.clone()], vec![g, s, t]],
            }
        })
        .collect();
    let av: Vec<AvRecord> = (0..c.items)
        .flat_map(|i| {
            let mentions = &mentions;
            attrs[i].iter().map(move |&(a, v)| AvRecord {
                item: format!("i{i}"),
                aspect: aspect_phrase(a),
                value: format!("v{v}"),
                mentions: 1 + mentions.get(&(i, a, v)).copied().unwrap_or(0),
            })
        })
        .collect();

    let (mut corpus, _) = Corpus::from_review_records(reviews.iter().cloned())?;
    // intern queries in item-id order so a reloaded corpus assigns the same query ids
    let mut meta = meta;
    meta.sort_by_key(|m| corpus.items.id(&m.item));
    corpus.add_metadata(meta.iter().cloned(), &Stopwords::english());
    corpus.add_aspect_values(av.iter().cloned());
    corpus.validate()?;
    let split = split_train_test(&corpus, seed ^ 0x5eed_5eed, SplitConfig::default())?;

    let item_id = |i: usize| corpus.items.id(&format!("i{i}")).unwrap();
    let aspect_id = |a: usize| corpus.find_aspect(&aspect_phrase(a));
    let value_id = |v: usize| corpus.values.id(&format!("v{v}"));
    let mut item_attrs = vec![BTreeSet::new(); c.items];
    for (i, sig) in attrs.iter().enumerate() {
        item_attrs[item_id(i) as usize] = sig
            .iter()
            .map(|&(a, v)| (aspect_id(a).unwrap(), value_id(v).unwrap()))
            .collect();
    }
    let mut user_prefs = vec![BTreeMap::new(); c.users];
    for (u, p) in prefs.iter().enumerate() {
        let id = corpus.users.id(&format!("u{u}")).unwrap();
        for (a, &v) in p.iter().enumerate() {
            if let (Some(a), Some(v)) = (aspect_id(a), value_id(v)) {
                user_prefs[id as usize].insert(a, v);
            }
        }
    }
    let purchases = purchases
        .iter()
        .map(|&(u, i)| (corpus.users.id(&format!("u{u}")).unwrap(), item_id(i)))
        .collect();

    Ok(SyntheticCorpus {
        corpus,
        split,
        truth: PlantedTruth {
            item_attrs,
            user_prefs,
            purchases,
        },
        reviews,
        meta,
        av,
    })
}
