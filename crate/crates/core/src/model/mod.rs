//! Embedding tables and the closed-form probability and ranking functions.

mod feedback;
mod io;
mod params;
mod scoring;

pub use feedback::{FeedbackSet, FeedbackUse};
pub use io::{FORMAT_VERSION, MAGIC};
pub use params::{ModelParams, Param, Table, VocabSizes};
pub(crate) use scoring::project;
pub use scoring::{sort_scored, Polarity};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub dim: usize,
    /// Weight of the query against the user in the item context.
    pub lambda: f64,
    pub use_aspect_net: bool,
    pub use_value_net: bool,
    pub use_negative_values: bool,
    pub separate_negative_table: bool,
    pub share_query_aspect_projection: bool,
}

impl ModelConfig {
    pub fn new(dim: usize) -> Self {
        Variant::Full.config(dim)
    }

    /// Negative-value probability is `1 - P(positive)` rather than a table
    /// of its own.
    pub fn negative_is_complement(&self) -> bool {
        !self.use_negative_values || !self.separate_negative_table
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!(
                "lambda {} outside [0, 1]",
                self.lambda
            )));
        }
        Ok(())
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::new(100)
    }
}

/// Named model configurations: the full model, its ablations, and the
/// item-generation plus language-model base model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Full,
    /// No aspect generation network.
    NoAspect,
    /// No value generation network.
    NoValue,
    /// Negative-feedback instances not trained; negatives scored as `1 - P(+)`.
    NoNeg,
    /// One value table for both polarities.
    NoSep,
    /// Aspect and value networks both off.
    Hem,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Full,
        Variant::NoAspect,
        Variant::NoValue,
        Variant::NoNeg,
        Variant::NoSep,
        Variant::Hem,
    ];

    pub fn config(self, dim: usize) -> ModelConfig {
        let mut c = ModelConfig {
            dim,
            lambda: 0.5,
            use_aspect_net: true,
            use_value_net: true,
            use_negative_values: true,
            separate_negative_table: true,
            share_query_aspect_projection: false,
        };
        match self {
            Variant::Full => {}
            Variant::NoAspect => c.use_aspect_net = false,
            Variant::NoValue => c.use_value_net = false,
            Variant::NoNeg => c.use_negative_values = false,
            Variant::NoSep => c.separate_negative_table = false,
            Variant::Hem => {
                c.use_aspect_net = false;
                c.use_value_net = false;
            }
        }
        c
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoAspect => "no-aspect",
            Variant::NoValue => "no-value",
            Variant::NoNeg => "no-neg",
            Variant::NoSep => "no-sep",
            Variant::Hem => "hem",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant {s:?}"))
    }
}

/// A configuration together with its trained (or initial) parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParams,
}

impl Model {
    pub fn init(config: ModelConfig, sizes: VocabSizes, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            params: ModelParams::init(&config, sizes, seed),
            config,
        })
    }
}

#[cfg(test)]
mod tests;
