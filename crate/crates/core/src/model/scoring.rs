use std::cmp::Ordering;

use super::{FeedbackSet, Model, Table};
use crate::math::{dot, log_sigmoid, sigmoid};
use crate::{Error, ItemId, Result, UserId, ValueId, WordId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

/// `tanh(W · mean(rows) + b)`.
pub(crate) fn project(table: &Table, tokens: &[u32], w: &Table, b: &Table) -> Result<Vec<f64>> {
    if tokens.is_empty() {
        return Err(Error::Empty("token list for projection"));
    }
    let d = table.dim();
    let mut mean = vec![0.0; d];
    for &t in tokens {
        if t as usize >= table.rows() {
            return Err(Error::UnknownId {
                kind: "token",
                id: t as u64,
            });
        }
        crate::math::axpy(1.0, table.row(t as usize), &mut mean);
    }
    let n = tokens.len() as f64;
    mean.iter_mut().for_each(|x| *x /= n);
    Ok(w.matvec(&mean)
        .into_iter()
        .zip(b.row(0))
        .map(|(x, bias)| (x + bias).tanh())
        .collect())
}

impl Model {
    fn check(&self, kind: &'static str, id: u32, rows: usize) -> Result<()> {
        if (id as usize) < rows {
            Ok(())
        } else {
            Err(Error::UnknownId {
                kind,
                id: id as u64,
            })
        }
    }

    pub fn project_query(&self, tokens: &[WordId]) -> Result<Vec<f64>> {
        let p = &self.params;
        project(&p.word, tokens, &p.query_w, &p.query_b)
    }

    /// Aspect embedding from its aspect-word ids, through the aspect
    /// projection (or the query projection when shared).
    pub fn embed_aspect(&self, aspect_tokens: &[WordId]) -> Result<Vec<f64>> {
        let p = &self.params;
        let (w, b) = match (&p.aspect_w, &p.aspect_b) {
            (Some(w), Some(b)) if !self.config.share_query_aspect_projection => (w, b),
            _ => (&p.query_w, &p.query_b),
        };
        project(&p.aspect_word, aspect_tokens, w, b)
    }

    /// User embedding, or the mean user embedding for `None`.
    pub fn user_vector(&self, user: Option<UserId>) -> Result<Vec<f64>> {
        match user {
            Some(u) => {
                self.check("user", u, self.params.user.rows())?;
                Ok(self.params.user.row(u as usize).to_vec())
            }
            None => Ok(self.params.mean_user()),
        }
    }

    /// `λ·q + (1-λ)·u`
    pub fn context(&self, user: &[f64], query: &[f64]) -> Vec<f64> {
        let l = self.config.lambda;
        query
            .iter()
            .zip(user)
            .map(|(q, u)| l * q + (1.0 - l) * u)
            .collect()
    }

    /// Un-normalized item-generation logit `i · (λ·q + (1-λ)·u)`.
    pub fn score_item_initial(&self, user: &[f64], query: &[f64], item: ItemId) -> Result<f64> {
        self.check("item", item, self.params.item.rows())?;
        Ok(dot(
            self.params.item.row(item as usize),
            &self.context(user, query),
        ))
    }

    /// `P(a ∈ A(i) | i) = σ(a · i)`
    pub fn prob_aspect(&self, aspect: &[f64], item: ItemId) -> Result<f64> {
        self.check("item", item, self.params.item.rows())?;
        Ok(sigmoid(dot(aspect, self.params.item.row(item as usize))))
    }

    fn value_logit(&self, table: &Table, value: ValueId, aspect: &[f64], item: &[f64]) -> f64 {
        table
            .row(value as usize)
            .iter()
            .zip(item.iter().zip(aspect))
            .map(|(v, (i, a))| v * (i + a))
            .sum()
    }

    /// Probability that `value` appears among the item aspect's positive or
    /// negative values.
    pub fn prob_value(
        &self,
        value: ValueId,
        polarity: Polarity,
        aspect: &[f64],
        item: ItemId,
    ) -> Result<f64> {
        Ok(self.log_prob_value(value, polarity, aspect, item)?.exp())
    }

    fn log_prob_value(
        &self,
        value: ValueId,
        polarity: Polarity,
        aspect: &[f64],
        item: ItemId,
    ) -> Result<f64> {
        self.check("item", item, self.params.item.rows())?;
        self.check("value", value, self.params.value_pos.rows())?;
        if !self.config.use_value_net {
            return Err(Error::Config("value network disabled".into()));
        }
        let i = self.params.item.row(item as usize);
        match polarity {
            Polarity::Positive => Ok(log_sigmoid(self.value_logit(
                &self.params.value_pos,
                value,
                aspect,
                i,
            ))),
            Polarity::Negative if self.config.negative_is_complement() => Ok(log_sigmoid(
                -self.value_logit(&self.params.value_pos, value, aspect, i),
            )),
            Polarity::Negative => {
                let table = self.params.value_neg.as_ref().ok_or_else(|| {
                    Error::Config("separate negative values configured but table missing".into())
                })?;
                Ok(log_sigmoid(self.value_logit(table, value, aspect, i)))
            }
        }
    }

    /// Log-probability of one feedback pair given the item: value term
    /// plus aspect term, each only when its network is enabled.
    fn feedback_term(
        &self,
        value: ValueId,
        polarity: Polarity,
        aspect: &[f64],
        item: ItemId,
    ) -> Result<f64> {
        let mut s = 0.0;
        if self.config.use_value_net {
            s += self.log_prob_value(value, polarity, aspect, item)?;
        }
        if self.config.use_aspect_net {
            s += log_sigmoid(dot(aspect, self.params.item.row(item as usize)));
        }
        Ok(s)
    }

    /// Feedback-aware ranking score: log-probabilities of every accepted and
    /// rejected pair given the item, plus the item-generation logit.
    pub fn score_item_feedback(
        &self,
        user: &[f64],
        query: &[f64],
        feedback: &FeedbackSet,
        aspects: &[Vec<WordId>],
        item: ItemId,
    ) -> Result<f64> {
        let embedded = self.embed_feedback(feedback, aspects)?;
        self.score_with(&self.context(user, query), &embedded, item)
    }

    fn embed_feedback(
        &self,
        feedback: &FeedbackSet,
        aspects: &[Vec<WordId>],
    ) -> Result<Vec<(Vec<f64>, ValueId, Polarity)>> {
        let mut out = Vec::with_capacity(feedback.len());
        let groups = [
            (feedback.positive(), Polarity::Positive),
            (feedback.negative(), Polarity::Negative),
        ];
        for (set, polarity) in groups {
            for &(a, v) in set {
                let tokens = aspects.get(a as usize).ok_or(Error::UnknownId {
                    kind: "aspect",
                    id: a as u64,
                })?;
                out.push((self.embed_aspect(tokens)?, v, polarity));
            }
        }
        Ok(out)
    }

    fn score_with(
        &self,
        context: &[f64],
        embedded: &[(Vec<f64>, ValueId, Polarity)],
        item: ItemId,
    ) -> Result<f64> {
        self.check("item", item, self.params.item.rows())?;
        let mut s = dot(self.params.item.row(item as usize), context);
        for (a, v, polarity) in embedded {
            s += self.feedback_term(*v, *polarity, a, item)?;
        }
        if !s.is_finite() {
            return Err(Error::NonFinite(format!("score of item {item}")));
        }
        Ok(s)
    }

    /// Scores `candidates` and sorts them best first, ties by ascending id.
    /// Aspect embeddings are computed once per feedback pair.
    pub fn rank_items(
        &self,
        user: Option<UserId>,
        query: &[WordId],
        feedback: &FeedbackSet,
        candidates: &[ItemId],
        aspects: &[Vec<WordId>],
    ) -> Result<Vec<(ItemId, f64)>> {
        let context = self.context(&self.user_vector(user)?, &self.project_query(query)?);
        let embedded = self.embed_feedback(feedback, aspects)?;
        let mut scored = candidates
            .iter()
            .map(|&i| Ok((i, self.score_with(&context, &embedded, i)?)))
            .collect::<Result<Vec<_>>>()?;
        sort_scored(&mut scored);
        Ok(scored)
    }
}

/// Descending by score, ascending id on ties.
pub fn sort_scored(scored: &mut [(ItemId, f64)]) {
    scored.sort_by(|a, b| match b.1.total_cmp(&a.1) {
        Ordering::Equal => a.0.cmp(&b.0),
        o => o,
    });
}
