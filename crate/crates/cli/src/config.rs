//! Run configuration: defaults, overlaid by a JSON config file, overlaid
//! by command-line flags. The resolved value is echoed before every run
//! and can be fed back with `--config`.

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use avlem::baselines::{Bm25Params, NegFeedbackParams};
use avlem::corpus::synthetic::SynthConfig;
use avlem::corpus::{ReviewFormat, SplitConfig};
use avlem::evaluation::{EvalConfig, ReportFormat, SweepGrid};
use avlem::model::{FeedbackUse, ModelConfig, Variant};
use avlem::training::TrainConfig;

use crate::service::ServiceConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub variant: Variant,
    pub dim: usize,
    pub lambda: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            variant: Variant::Full,
            dim: 100,
            lambda: 0.5,
        }
    }
}

impl ModelSection {
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            lambda: self.lambda,
            ..self.variant.config(self.dim)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Bm25,
    Ql,
    Rocchio,
    SingleNeg,
    MultiNeg,
}

impl std::str::FromStr for BaselineKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bm25" => Ok(Self::Bm25),
            "ql" => Ok(Self::Ql),
            "rocchio" => Ok(Self::Rocchio),
            "singleneg" => Ok(Self::SingleNeg),
            "multineg" => Ok(Self::MultiNeg),
            other => Err(format!("unknown baseline {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    pub ranker: BaselineKind,
    pub bm25: Bm25Params,
    /// Weight of the non-relevant centroid in Rocchio.
    pub rocchio_weight: f64,
    pub neg: NegFeedbackParams,
}

impl Default for BaselineSection {
    fn default() -> Self {
        Self {
            ranker: BaselineKind::Ql,
            bm25: Bm25Params::default(),
            rocchio_weight: 0.5,
            neg: NegFeedbackParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradSection {
    pub trials: usize,
    pub dim: usize,
    pub eps: f64,
    pub threshold: f64,
    /// Empty means every configuration.
    pub variants: Vec<Variant>,
}

impl Default for GradSection {
    fn default() -> Self {
        Self {
            trials: 100,
            dim: 8,
            eps: 1e-4,
            threshold: 1e-3,
            variants: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub format: ReviewFormat,
    /// `english`, `none`, or a path to a one-word-per-line file.
    pub stopwords: String,
}

impl Default for IngestSection {
    fn default() -> Self {
        Self {
            format: ReviewFormat::Amazon,
            stopwords: "english".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Copied into every seeded section when resolved.
    pub seed: u64,
    pub ingest: IngestSection,
    pub synth: SynthConfig,
    pub split: SplitConfig,
    pub model: ModelSection,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub feedback: FeedbackUse,
    pub report_format: ReportFormat,
    pub baseline: BaselineSection,
    pub sweep: SweepGrid,
    pub check_grad: GradSection,
    pub serve: ServiceConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            ingest: IngestSection::default(),
            synth: SynthConfig::default(),
            split: SplitConfig::default(),
            model: ModelSection::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            feedback: FeedbackUse::Negative,
            report_format: ReportFormat::Csv,
            baseline: BaselineSection::default(),
            sweep: SweepGrid::default(),
            check_grad: GradSection::default(),
            serve: ServiceConfig::default(),
        }
    }
}

impl RunConfig {
    /// Defaults overlaid by `path` when given.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let mut c = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))?
            }
            None => Self::default(),
        };
        c.propagate_seed();
        Ok(c)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.propagate_seed();
    }

    fn propagate_seed(&mut self) {
        self.train.seed = self.seed;
        self.eval.seed = self.seed;
        self.serve.seed = self.seed;
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.model.model_config().validate()?;
        self.train.validate()?;
        self.eval.validate()?;
        self.serve.validate()?;
        let s = &self.split;
        anyhow::ensure!(
            (0.0..=1.0).contains(&s.review_frac) && (0.0..=1.0).contains(&s.query_test_frac),
            "split fractions must lie in [0, 1]"
        );
        anyhow::ensure!(
            self.check_grad.trials > 0,
            "check_grad.trials must be positive"
        );
        anyhow::ensure!(self.check_grad.eps > 0.0, "check_grad.eps must be positive");
        anyhow::ensure!(
            !self.sweep.dims.is_empty() && !self.sweep.m.is_empty(),
            "sweep grid is empty"
        );
        Ok(())
    }

    /// Pretty JSON of the resolved configuration.
    pub fn banner(&self, command: &str) -> String {
        format!(
            "# avlem {command}, resolved config:\n{}",
            serde_json::to_string_pretty(self).expect("config serializes")
        )
    }
}
