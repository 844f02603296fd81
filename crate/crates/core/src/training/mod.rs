//! Maximum-likelihood training with negative sampling and sparse SGD.

mod gradcheck;
mod instance;
mod loss;
mod sampling;

pub use gradcheck::{
    compare_with_finite_differences, finite_difference_check, random_case, relative_error,
    GradCheckCase, GradCheckReport,
};
pub use instance::{
    build_train_conversations, simulate_feedback, training_purchases, InstanceBuilder, Purchase,
    TrainInstance, ValueTarget, WordTarget,
};
pub use loss::{apply_gradients, loss_and_grads, loss_terms, Evaluation, Gradients};
pub use sampling::{keep_probability, sample_negatives, subsample_keep, Sampler, SamplingDists};

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Split};
use crate::model::{Model, ModelConfig, VocabSizes};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Initial learning rate, decayed linearly to 0 over all batches.
    pub lr0: f64,
    /// Per-instance global gradient norm bound.
    pub grad_clip: f64,
    /// Negative samples per positive.
    pub beta: usize,
    pub l2_gamma: f64,
    /// Word sub-sampling threshold; `None` keeps every token.
    pub subsample_rate: Option<f64>,
    pub nonrel_items_per_conv: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 64,
            lr0: 0.5,
            grad_clip: 5.0,
            beta: 5,
            l2_gamma: 0.0,
            subsample_rate: Some(1e-5),
            nonrel_items_per_conv: 2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.lr0 >= 0.0 && self.lr0.is_finite()) {
            return bad("lr0 must be a non-negative number");
        }
        if !(self.grad_clip > 0.0) {
            return bad("grad_clip must be positive");
        }
        if !(self.l2_gamma >= 0.0) {
            return bad("l2_gamma must be non-negative");
        }
        if matches!(self.subsample_rate, Some(r) if !(r > 0.0)) {
            return bad("subsample_rate must be positive");
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let c: Self = serde_json::from_str(&text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Clips the instance gradient to `clip` and applies it; returns the norm
/// before clipping.
pub fn sgd_step(model: &mut Model, grads: &mut Gradients, lr: f64, clip: f64) -> Result<f64> {
    let norm = grads.clip(clip);
    apply_gradients(model, grads, lr)?;
    Ok(norm)
}

/// Learning rate for batch `t` of `total`.
pub fn learning_rate(lr0: f64, t: usize, total: usize) -> f64 {
    if total == 0 {
        lr0
    } else {
        lr0 * (1.0 - t as f64 / total as f64)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: Model,
    /// Mean instance loss per epoch.
    pub loss_trace: Vec<f64>,
}

/// Fits a model on the training split. Deterministic for a fixed seed.
pub fn train(
    corpus: &Corpus,
    split: &Split,
    model_config: ModelConfig,
    config: &TrainConfig,
) -> Result<TrainOutput> {
    config.validate()?;
    let mut model = Model::init(model_config, VocabSizes::of(corpus), config.seed)?;
    let mut loss_trace = Vec::with_capacity(config.epochs);
    if config.epochs == 0 {
        return Ok(TrainOutput { model, loss_trace });
    }
    let dists = SamplingDists::from_corpus(corpus)?;
    let builder = InstanceBuilder::new(corpus, &dists, config);
    let mut purchases = training_purchases(corpus, split);
    if purchases.is_empty() {
        return Err(Error::Empty("training purchases"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x7a11_0c0d);
    let batches = purchases.len().div_ceil(config.batch_size);
    let total = config.epochs * batches;
    let mut step = 0;
    for epoch in 0..config.epochs {
        purchases.shuffle(&mut rng);
        let mut sum = 0.0;
        for batch in purchases.chunks(config.batch_size) {
            let lr = learning_rate(config.lr0, step, total);
            for p in batch {
                let inst = builder.build(p, &mut rng)?;
                let mut eval = loss_and_grads(&model, &inst, &corpus.aspects, config.l2_gamma)
                    .map_err(|e| diverged(e, epoch, &loss_trace))?;
                sum += eval.loss;
                sgd_step(&mut model, &mut eval.grads, lr, config.grad_clip)?;
            }
            step += 1;
        }
        let mean = sum / purchases.len() as f64;
        if !mean.is_finite() || !model.params.is_finite() {
            return Err(diverged(
                Error::NonFinite("parameters".into()),
                epoch,
                &loss_trace,
            ));
        }
        log::info!("epoch {} mean loss {:.4}", epoch + 1, mean);
        loss_trace.push(mean);
    }
    Ok(TrainOutput { model, loss_trace })
}

fn diverged(e: Error, epoch: usize, trace: &[f64]) -> Error {
    match e {
        Error::NonFinite(what) => Error::NonFinite(format!(
            "{what} during epoch {}; loss trace so far {trace:?}",
            epoch + 1
        )),
        other => other,
    }
}

/// Writes `epoch,mean_loss` rows, epochs counted from 1.
pub fn write_loss_trace(path: &Path, trace: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "mean_loss"])?;
    for (e, l) in trace.iter().enumerate() {
        w.write_record([(e + 1).to_string(), l.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
