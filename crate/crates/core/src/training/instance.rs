use std::collections::BTreeSet;

use rand::seq::index;
use rand::Rng;

use super::sampling::{sample_negatives, subsample_keep, SamplingDists};
use super::TrainConfig;
use crate::corpus::{Corpus, Split};
use crate::{AspectId, ItemId, QueryId, Result, UserId, ValueId, WordId};

/// One observed (user, query, purchased item) triple from the training split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Purchase {
    pub user: UserId,
    pub item: ItemId,
    pub review: usize,
    pub query: QueryId,
}

/// Every training review paired with every training query of its item.
pub fn training_purchases(corpus: &Corpus, split: &Split) -> Vec<Purchase> {
    split
        .train_reviews
        .iter()
        .flat_map(|&k| {
            let r = &corpus.reviews[k];
            split
                .train_queries(corpus, r.item)
                .map(move |query| Purchase {
                    user: r.user,
                    item: r.item,
                    review: k,
                    query,
                })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordTarget {
    pub word: WordId,
    pub user_negatives: Vec<WordId>,
    pub item_negatives: Vec<WordId>,
}

/// An observed feedback pair with its sampled non-values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueTarget {
    pub aspect: AspectId,
    pub value: ValueId,
    pub non_values: Vec<ValueId>,
}

/// Everything one likelihood evaluation needs, with all negatives drawn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainInstance {
    pub user: UserId,
    pub query: Vec<WordId>,
    pub item: ItemId,
    pub words: Vec<WordTarget>,
    pub item_negatives: Vec<ItemId>,
    /// Aspects that appeared in the simulated conversation.
    pub aspects: Vec<AspectId>,
    /// Sampled aspects outside `aspects`.
    pub aspect_negatives: Vec<AspectId>,
    pub positive: Vec<ValueTarget>,
    pub negative: Vec<ValueTarget>,
}

/// Simulates the answers a buyer of `target` gives about `pairs`: same
/// aspect and value is a yes, same aspect with another value is a no,
/// unknown aspects go unanswered.
pub fn simulate_feedback(
    corpus: &Corpus,
    target: ItemId,
    pairs: impl IntoIterator<Item = (AspectId, ValueId)>,
) -> (BTreeSet<(AspectId, ValueId)>, BTreeSet<(AspectId, ValueId)>) {
    let catalog: BTreeSet<(AspectId, ValueId)> = corpus
        .item_av(target)
        .map(|p| (p.aspect, p.value))
        .collect();
    let aspects: BTreeSet<AspectId> = catalog.iter().map(|p| p.0).collect();
    let mut pos = BTreeSet::new();
    let mut neg = BTreeSet::new();
    for (a, v) in pairs {
        if catalog.contains(&(a, v)) {
            pos.insert((a, v));
        } else if aspects.contains(&a) {
            neg.insert((a, v));
        }
    }
    (pos, neg)
}

/// Builds training instances for purchases, drawing every random choice
/// from the caller's rng.
pub struct InstanceBuilder<'a> {
    pub corpus: &'a Corpus,
    pub dists: &'a SamplingDists,
    pub config: &'a TrainConfig,
}

impl<'a> InstanceBuilder<'a> {
    pub fn new(corpus: &'a Corpus, dists: &'a SamplingDists, config: &'a TrainConfig) -> Self {
        Self {
            corpus,
            dists,
            config,
        }
    }

    pub fn build<R: Rng + ?Sized>(&self, p: &Purchase, rng: &mut R) -> Result<TrainInstance> {
        let c = self.corpus;
        let beta = self.config.beta;
        let review = &c.reviews[p.review];

        let mut words = Vec::with_capacity(review.tokens.len());
        for &w in &review.tokens {
            if let Some(rate) = self.config.subsample_rate {
                if !subsample_keep(w, self.dists, rate, rng) {
                    continue;
                }
            }
            words.push(WordTarget {
                word: w,
                user_negatives: sample_negatives(&self.dists.word, &[w], beta, rng)?,
                item_negatives: sample_negatives(&self.dists.word, &[w], beta, rng)?,
            });
        }
        let item_negatives = if c.num_items() > 1 {
            sample_negatives(&self.dists.item, &[p.item], beta, rng)?
        } else {
            Vec::new()
        };

        // non-relevant items shown in the simulated conversation
        let others = c.num_items().saturating_sub(1);
        let k = self.config.nonrel_items_per_conv.min(others);
        let shown: Vec<ItemId> = index::sample(rng, others, k)
            .into_iter()
            .map(|j| {
                if j as u32 >= p.item {
                    j as u32 + 1
                } else {
                    j as u32
                }
            })
            .collect();
        let asked = shown
            .iter()
            .flat_map(|&i| c.item_av(i).map(|x| (x.aspect, x.value)));
        let (pos, neg) = simulate_feedback(c, p.item, asked);

        let aspects: Vec<AspectId> = pos
            .iter()
            .chain(&neg)
            .map(|x| x.0)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut aspect_negatives = Vec::new();
        if aspects.len() < c.num_aspects() {
            for _ in &aspects {
                aspect_negatives.extend(sample_negatives(&self.dists.aspect, &aspects, beta, rng)?);
            }
        }
        let mut targets = |set: &BTreeSet<(AspectId, ValueId)>| -> Result<Vec<ValueTarget>> {
            set.iter()
                .map(|&(aspect, value)| {
                    let non_values = if c.num_values() > 1 {
                        sample_negatives(&self.dists.value, &[value], beta, rng)?
                    } else {
                        Vec::new()
                    };
                    Ok(ValueTarget {
                        aspect,
                        value,
                        non_values,
                    })
                })
                .collect()
        };
        let positive = targets(&pos)?;
        let negative = targets(&neg)?;

        Ok(TrainInstance {
            user: p.user,
            query: c.queries[p.query as usize].clone(),
            item: p.item,
            words,
            item_negatives,
            aspects,
            aspect_negatives,
            positive,
            negative,
        })
    }
}

/// One pass worth of instances in the given purchase order.
pub fn build_train_conversations<'a, R: Rng>(
    builder: &'a InstanceBuilder<'a>,
    purchases: &'a [Purchase],
    rng: &'a mut R,
) -> impl Iterator<Item = Result<TrainInstance>> + 'a {
    purchases.iter().map(move |p| builder.build(p, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AvRecord, ReviewRecord};

    fn corpus() -> Corpus {
        let (mut c, _) =
            Corpus::from_review_records(["target", "other", "third"].iter().map(|i| {
                ReviewRecord {
                    user: "u".into(),
                    item: i.to_string(),
                    text: "words here".into(),
                }
            }))
            .unwrap();
        let row = |item: &str, aspect: &str, value: &str| AvRecord {
            item: item.into(),
            aspect: aspect.into(),
            value: value.into(),
            mentions: 1,
        };
        c.add_aspect_values([
            row("target", "color", "red"),
            row("target", "fit", "snug"),
            row("other", "color", "red"),
            row("other", "color", "black"),
            row("other", "battery", "long"),
        ]);
        c
    }

    #[test]
    fn simulated_answers() {
        let c = corpus();
        let t = c.items.id("target").unwrap();
        let color = c.find_aspect("color").unwrap();
        let battery = c.find_aspect("battery").unwrap();
        let red = c.values.id("red").unwrap();
        let black = c.values.id("black").unwrap();
        let long = c.values.id("long").unwrap();
        let (pos, neg) = simulate_feedback(&c, t, [(color, red)]);
        assert_eq!(pos.into_iter().collect::<Vec<_>>(), vec![(color, red)]);
        assert!(neg.is_empty());
        let (pos, neg) = simulate_feedback(&c, t, [(color, black)]);
        assert!(pos.is_empty());
        assert_eq!(neg.into_iter().collect::<Vec<_>>(), vec![(color, black)]);
        let (pos, neg) = simulate_feedback(&c, t, [(battery, long)]);
        assert!(pos.is_empty() && neg.is_empty());
    }

    #[test]
    fn instance_from_conversation() {
        use rand::SeedableRng;
        let c = corpus();
        let dists = SamplingDists::from_corpus(&c).unwrap();
        let config = TrainConfig {
            subsample_rate: None,
            nonrel_items_per_conv: 2,
            ..TrainConfig::default()
        };
        let t = c.items.id("target").unwrap();
        let mut c2 = c.clone();
        c2.add_item_query(t, &["case".to_string()]);
        let b2 = InstanceBuilder::new(&c2, &dists, &config);
        let p = Purchase {
            user: 0,
            item: t,
            review: 0,
            query: 0,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let inst = b2.build(&p, &mut rng).unwrap();
        let color = c.find_aspect("color").unwrap();
        // both other items are shown: (color, red) yes, (color, black) no,
        // battery unanswered
        assert_eq!(inst.aspects, vec![color]);
        assert_eq!(inst.positive.len(), 1);
        assert_eq!(inst.negative.len(), 1);
        assert_eq!(inst.words.len(), 2);
        for w in &inst.words {
            assert_eq!(w.user_negatives.len(), config.beta);
            assert!(!w.user_negatives.contains(&w.word));
        }
        assert!(!inst.item_negatives.contains(&t));
        assert!(inst.aspect_negatives.iter().all(|a| *a != color));
        for v in inst.positive.iter().chain(&inst.negative) {
            assert!(!v.non_values.contains(&v.value));
        }
    }
}
