//! Session state machine: question selection, simulated answers, and
//! advancing a session by one shown item.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::model::{FeedbackSet, FeedbackUse, Model};
use crate::{AspectId, Error, ItemId, Result, UserId, ValueId, WordId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    MostMentioned,
    Random,
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "most_mentioned" => Ok(Strategy::MostMentioned),
            "random" => Ok(Strategy::Random),
            _ => Err(Error::Config(format!("unknown strategy {s:?}"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::MostMentioned => "most_mentioned",
            Strategy::Random => "random",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub aspect: AspectId,
    pub value: ValueId,
    pub text: String,
}

impl Question {
    pub fn new(corpus: &Corpus, aspect: AspectId, value: ValueId) -> Self {
        Self {
            aspect,
            value,
            text: format!(
                "Do you want {} to be {}?",
                corpus.aspect_name(aspect),
                corpus.value_name(value)
            ),
        }
    }

    pub fn pair(&self) -> (AspectId, ValueId) {
        (self.aspect, self.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Yes,
    No,
    Skip,
}

impl Answer {
    /// `+1`, `-1`, or `None` for no answer.
    pub fn indicator(self) -> Option<i8> {
        match self {
            Answer::Yes => Some(1),
            Answer::No => Some(-1),
            Answer::Skip => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    /// `None` is an anonymous user.
    pub user: Option<UserId>,
    pub query: Vec<WordId>,
    pub shown: Vec<ItemId>,
    pub feedback: FeedbackSet,
    pub asked: BTreeSet<(AspectId, ValueId)>,
    pub finished: bool,
}

impl SessionState {
    pub fn new(user: Option<UserId>, query: Vec<WordId>) -> Self {
        Self {
            user,
            query,
            shown: Vec::new(),
            feedback: FeedbackSet::new(),
            asked: BTreeSet::new(),
            finished: false,
        }
    }

    /// Number of items shown so far.
    pub fn iteration(&self) -> usize {
        self.shown.len()
    }

    /// Records questions as posed so they are never asked again.
    pub fn pose(&mut self, questions: &[Question]) {
        self.asked.extend(questions.iter().map(Question::pair));
    }

    /// Merges one answer. Skips are dropped.
    pub fn record(&mut self, pair: (AspectId, ValueId), answer: Answer) -> Result<()> {
        self.asked.insert(pair);
        let ok = match answer {
            Answer::Yes => self.feedback.add_positive(pair.0, pair.1),
            Answer::No => self.feedback.add_negative(pair.0, pair.1),
            Answer::Skip => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "pair ({}, {}) already has the opposite answer",
                pair.0, pair.1
            )))
        }
    }
}

/// Picks up to `m` unasked pairs from the catalogs of the shown items.
pub fn select_questions<R: Rng + ?Sized>(
    state: &SessionState,
    corpus: &Corpus,
    m: usize,
    strategy: Strategy,
    rng: &mut R,
) -> Vec<Question> {
    let mut pool: BTreeMap<(AspectId, ValueId), u64> = BTreeMap::new();
    for &i in &state.shown {
        for p in corpus.item_av(i) {
            if !state.asked.contains(&(p.aspect, p.value)) {
                *pool.entry((p.aspect, p.value)).or_insert(0) += p.mentions;
            }
        }
    }
    let mut pool: Vec<((AspectId, ValueId), u64)> = pool.into_iter().collect();
    let chosen: Vec<(AspectId, ValueId)> = match strategy {
        Strategy::MostMentioned => {
            pool.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            pool.into_iter().take(m).map(|x| x.0).collect()
        }
        Strategy::Random => {
            let k = m.min(pool.len());
            index::sample(rng, pool.len(), k)
                .into_iter()
                .map(|j| pool[j].0)
                .collect()
        }
    };
    chosen
        .into_iter()
        .map(|(a, v)| Question::new(corpus, a, v))
        .collect()
}

/// Answer of a user whose target catalog is `catalog`.
pub fn simulate_answer(
    catalog: &BTreeSet<(AspectId, ValueId)>,
    aspect: AspectId,
    value: ValueId,
) -> Answer {
    if catalog.contains(&(aspect, value)) {
        Answer::Yes
    } else if catalog.iter().any(|p| p.0 == aspect) {
        Answer::No
    } else {
        Answer::Skip
    }
}

/// Union of the aspect-value catalogs of `items`.
pub fn target_catalog(corpus: &Corpus, items: &[ItemId]) -> BTreeSet<(AspectId, ValueId)> {
    items
        .iter()
        .flat_map(|&i| corpus.item_av(i).map(|p| (p.aspect, p.value)))
        .collect()
}

/// What a ranker sees at one iteration.
#[derive(Debug, Clone, Copy)]
pub struct RankRequest<'a> {
    pub user: Option<UserId>,
    pub query: &'a [WordId],
    pub feedback: &'a FeedbackSet,
    /// Items already shown, all non-relevant while the session is active.
    pub shown: &'a [ItemId],
}

impl<'a> RankRequest<'a> {
    pub fn of(state: &'a SessionState) -> Self {
        Self {
            user: state.user,
            query: &state.query,
            feedback: &state.feedback,
            shown: &state.shown,
        }
    }
}

/// Orders candidate items, best first.
pub trait Ranker {
    fn name(&self) -> String;
    fn rank(&self, request: &RankRequest<'_>, candidates: &[ItemId]) -> Result<Vec<ItemId>>;
}

/// Ranks with the embedding model using the chosen part of the feedback.
#[derive(Debug, Clone, Copy)]
pub struct AvlemRanker<'a> {
    pub model: &'a Model,
    pub aspects: &'a [Vec<WordId>],
    pub usage: FeedbackUse,
}

impl<'a> AvlemRanker<'a> {
    pub fn new(model: &'a Model, corpus: &'a Corpus, usage: FeedbackUse) -> Self {
        Self {
            model,
            aspects: &corpus.aspects,
            usage,
        }
    }
}

impl Ranker for AvlemRanker<'_> {
    fn name(&self) -> String {
        format!("avlem-{}", self.usage)
    }

    fn rank(&self, r: &RankRequest<'_>, candidates: &[ItemId]) -> Result<Vec<ItemId>> {
        let feedback = r.feedback.restricted(self.usage);
        Ok(self
            .model
            .rank_items(r.user, r.query, &feedback, candidates, self.aspects)?
            .into_iter()
            .map(|x| x.0)
            .collect())
    }
}

/// Result of one advance: the reranked remainder before the next item was
/// appended to `shown`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Advance {
    pub reranked: Vec<ItemId>,
    pub next: Option<ItemId>,
}

/// Merges `answers`, reranks the unshown candidates and shows the top one.
/// The session finishes when that item is relevant, the budget is reached,
/// or candidates run out.
pub fn advance_session(
    state: &mut SessionState,
    answers: &[((AspectId, ValueId), Answer)],
    ranker: &dyn Ranker,
    candidates: &[ItemId],
    budget: usize,
    is_relevant: &dyn Fn(ItemId) -> bool,
) -> Result<Advance> {
    if state.finished {
        return Err(Error::Config("session already finished".into()));
    }
    for &(pair, answer) in answers {
        state.record(pair, answer)?;
    }
    let shown: BTreeSet<ItemId> = state.shown.iter().copied().collect();
    let rest: Vec<ItemId> = candidates
        .iter()
        .copied()
        .filter(|i| !shown.contains(i))
        .collect();
    let reranked = ranker.rank(&RankRequest::of(state), &rest)?;
    let next = reranked.first().copied();
    match next {
        Some(i) => {
            state.shown.push(i);
            if is_relevant(i) || state.shown.len() >= budget {
                state.finished = true;
            }
        }
        None => state.finished = true,
    }
    Ok(Advance { reranked, next })
}
