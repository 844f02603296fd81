use rand::seq::SliceRandom;
use rand::Rng;

use super::instance::{TrainInstance, ValueTarget, WordTarget};
use super::loss::{loss_and_grads, loss_terms, Gradients};
use crate::model::{Model, ModelConfig, ModelParams, Param, VocabSizes};
use crate::{Result, WordId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Coordinate with the largest error.
    pub worst: Option<(Param, u32, usize)>,
    pub checked: usize,
}

/// `|a - n| / (|a| + |n| + 1e-12)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs() + 1e-12)
}

/// Compares the analytic gradient against central differences on every
/// touched scalar.
pub fn finite_difference_check(
    model: &Model,
    inst: &TrainInstance,
    aspects: &[Vec<WordId>],
    gamma: f64,
    eps: f64,
) -> Result<GradCheckReport> {
    let grads = loss_and_grads(model, inst, aspects, gamma)?.grads;
    compare_with_finite_differences(model, inst, aspects, gamma, &grads, eps)
}

/// As [`finite_difference_check`] with a caller-supplied gradient. The
/// numeric derivative sums per-term differences so terms that do not
/// depend on the perturbed scalar cancel exactly.
pub fn compare_with_finite_differences(
    model: &Model,
    inst: &TrainInstance,
    aspects: &[Vec<WordId>],
    gamma: f64,
    grads: &Gradients,
    eps: f64,
) -> Result<GradCheckReport> {
    let mut m = model.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
    };
    for (param, r, g) in grads.iter() {
        for (k, &ga) in g.iter().enumerate() {
            let orig = m.params.table(param).expect("table").row(r as usize)[k];
            let set = |m: &mut Model, x: f64| {
                m.params
                    .table_mut(param)
                    .expect("table")
                    .row_mut(r as usize)[k] = x;
            };
            set(&mut m, orig + eps);
            let plus = loss_terms(&m, inst, aspects, gamma)?;
            set(&mut m, orig - eps);
            let minus = loss_terms(&m, inst, aspects, gamma)?;
            set(&mut m, orig);
            let gn: f64 = plus.iter().zip(&minus).map(|(p, q)| p - q).sum::<f64>() / (2.0 * eps);
            let e = relative_error(ga, gn);
            report.checked += 1;
            if e > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(e);
                report.worst = Some((param, r, k));
            }
        }
    }
    Ok(report)
}

/// A small random model, aspect table and instance for gradient checks.
#[derive(Debug, Clone)]
pub struct GradCheckCase {
    pub model: Model,
    pub aspects: Vec<Vec<WordId>>,
    pub instance: TrainInstance,
    pub gamma: f64,
}

/// Parameters are uniform in [-0.5, 0.5] so every σ term is away from its
/// flat regions and gradients are not vanishingly small.
pub fn random_case<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> GradCheckCase {
    let sizes = VocabSizes {
        words: 12,
        users: 3,
        items: 6,
        aspect_words: 5,
        values: 6,
    };
    let mut params = ModelParams::zeros(&config, sizes);
    for t in params.tables_mut() {
        for x in t.as_mut_slice() {
            *x = rng.gen_range(-0.5..=0.5);
        }
    }
    let model = Model { config, params };
    let n_aspects = 4u32;
    let aspects: Vec<Vec<WordId>> = (0..n_aspects)
        .map(|_| {
            (0..rng.gen_range(1..=2))
                .map(|_| rng.gen_range(0..sizes.aspect_words as u32))
                .collect()
        })
        .collect();
    let beta = 3;
    let pick = |rng: &mut R, n: usize, not: u32| -> Vec<u32> {
        (0..beta)
            .map(|_| loop {
                let x = rng.gen_range(0..n as u32);
                if x != not {
                    break x;
                }
            })
            .collect()
    };
    let item = rng.gen_range(0..sizes.items as u32);
    let query = (0..rng.gen_range(1..=3))
        .map(|_| rng.gen_range(0..sizes.words as u32))
        .collect();
    let words = (0..3)
        .map(|_| {
            let word = rng.gen_range(0..sizes.words as u32);
            WordTarget {
                word,
                user_negatives: pick(rng, sizes.words, word),
                item_negatives: pick(rng, sizes.words, word),
            }
        })
        .collect();
    let item_negatives = pick(rng, sizes.items, item);

    let mut order: Vec<u32> = (0..n_aspects).collect();
    order.shuffle(rng);
    let observed: Vec<u32> = order[..2].to_vec();
    let targets = |rng: &mut R, n: usize| -> Vec<ValueTarget> {
        (0..n)
            .map(|_| {
                let value = rng.gen_range(0..sizes.values as u32);
                ValueTarget {
                    aspect: observed[rng.gen_range(0..observed.len())],
                    value,
                    non_values: pick(rng, sizes.values, value),
                }
            })
            .collect()
    };
    let (n_pos, n_neg) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
    let positive = targets(rng, n_pos);
    let negative = targets(rng, n_neg);
    let mut used: Vec<u32> = positive.iter().chain(&negative).map(|t| t.aspect).collect();
    used.sort_unstable();
    used.dedup();
    let outside: Vec<u32> = (0..n_aspects).filter(|a| !used.contains(a)).collect();
    let aspect_negatives = used
        .iter()
        .flat_map(|_| {
            (0..beta)
                .map(|_| outside[rng.gen_range(0..outside.len())])
                .collect::<Vec<_>>()
        })
        .collect();

    GradCheckCase {
        model,
        aspects,
        instance: TrainInstance {
            user: rng.gen_range(0..sizes.users as u32),
            query,
            item,
            words,
            item_negatives,
            aspects: used,
            aspect_negatives,
            positive,
            negative,
        },
        gamma: rng.gen_range(0.0..=0.005),
    }
}
