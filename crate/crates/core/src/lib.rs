//! Conversational product search with aspect-value feedback.
//!
//! The crate is organised around the life cycle of an experiment:
//!
//! * [`corpus`] loads review corpora and aspect-value catalogs, extracts
//!   category queries, splits train/test, and generates planted synthetic
//!   corpora.
//! * [`model`] holds the embedding tables and the closed-form probability and
//!   ranking functions.
//! * [`training`] builds simulated training conversations and fits the model
//!   by SGD with negative sampling and hand-derived sparse gradients.
//! * [`baselines`] provides term-based rankers (BM25, query likelihood) and
//!   item-level negative-feedback rerankers (Rocchio, SingleNeg, MultiNeg).
//! * [`conversation`] is the session state machine shared by evaluation and
//!   the live service.
//! * [`evaluation`] runs the freezing-rank protocol and computes MAP, MRR,
//!   NDCG and paired randomization tests.

pub mod baselines;
pub mod conversation;
pub mod corpus;
pub mod evaluation;
pub mod math;
pub mod model;
pub mod training;

mod error;

pub use error::{Error, Result};

/// Dense id of a user.
pub type UserId = u32;
/// Dense id of an item.
pub type ItemId = u32;
/// Dense id of a review word.
pub type WordId = u32;
/// Dense id of an aspect (a normalized aspect-word sequence).
pub type AspectId = u32;
/// Dense id of a value word.
pub type ValueId = u32;
/// Dense id of a distinct query.
pub type QueryId = u32;
