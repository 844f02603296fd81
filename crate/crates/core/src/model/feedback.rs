use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::{AspectId, ValueId};

/// Aspect-value pairs the user accepted (`positive`) or rejected
/// (`negative`). A pair is never in both.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackSet {
    positive: BTreeSet<(AspectId, ValueId)>,
    negative: BTreeSet<(AspectId, ValueId)>,
}

/// Which answers the ranker is allowed to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackUse {
    Positive,
    Negative,
    #[default]
    All,
}

impl std::str::FromStr for FeedbackUse {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pos" | "positive" => Ok(Self::Positive),
            "neg" | "negative" => Ok(Self::Negative),
            "all" => Ok(Self::All),
            other => Err(format!("unknown feedback use {other:?}")),
        }
    }
}

impl std::fmt::Display for FeedbackUse {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Positive => "pos",
            Self::Negative => "neg",
            Self::All => "all",
        })
    }
}

impl FeedbackSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a "yes". Returns `false` (and changes nothing) if the pair
    /// already carries a "no".
    pub fn add_positive(&mut self, aspect: AspectId, value: ValueId) -> bool {
        if self.negative.contains(&(aspect, value)) {
            return false;
        }
        self.positive.insert((aspect, value));
        true
    }

    /// Records a "no". Returns `false` if the pair already carries a "yes".
    pub fn add_negative(&mut self, aspect: AspectId, value: ValueId) -> bool {
        if self.positive.contains(&(aspect, value)) {
            return false;
        }
        self.negative.insert((aspect, value));
        true
    }

    pub fn positive(&self) -> &BTreeSet<(AspectId, ValueId)> {
        &self.positive
    }

    pub fn negative(&self) -> &BTreeSet<(AspectId, ValueId)> {
        &self.negative
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty() && self.negative.is_empty()
    }

    pub fn len(&self) -> usize {
        self.positive.len() + self.negative.len()
    }

    pub fn restricted(&self, usage: FeedbackUse) -> FeedbackSet {
        match usage {
            FeedbackUse::All => self.clone(),
            FeedbackUse::Positive => FeedbackSet {
                positive: self.positive.clone(),
                negative: BTreeSet::new(),
            },
            FeedbackUse::Negative => FeedbackSet {
                positive: BTreeSet::new(),
                negative: self.negative.clone(),
            },
        }
    }
}
