use std::collections::{BTreeMap, BTreeSet};

use super::instance::TrainInstance;
use crate::math::{dot, log_sigmoid, sigmoid};
use crate::model::{Model, Param, Table};
use crate::{AspectId, Error, Result, WordId};

/// Sparse gradient: one dense row per touched (table, row) pair. Projection
/// matrices are addressed by row, biases as row 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradients {
    rows: BTreeMap<(Param, u32), Vec<f64>>,
}

impl Gradients {
    fn row_mut(&mut self, p: Param, r: u32, dim: usize) -> &mut Vec<f64> {
        self.rows.entry((p, r)).or_insert_with(|| vec![0.0; dim])
    }

    fn add(&mut self, p: Param, r: u32, scale: f64, x: &[f64]) {
        let row = self.row_mut(p, r, x.len());
        crate::math::axpy(scale, x, row);
    }

    pub fn get(&self, p: Param, r: u32) -> Option<&[f64]> {
        self.rows.get(&(p, r)).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Param, u32, &[f64])> + '_ {
        self.rows.iter().map(|(&(p, r), g)| (p, r, g.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.rows
            .values()
            .flat_map(|r| r.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, f: f64) {
        self.rows
            .values_mut()
            .flat_map(|r| r.iter_mut())
            .for_each(|x| *x *= f);
    }

    /// Rescales to global norm `max` when above it; returns the prior norm.
    pub fn clip(&mut self, max: f64) -> f64 {
        let n = self.norm();
        if n > max && n > 0.0 {
            self.scale(max / n);
        }
        n
    }
}

/// `-log σ(s·z)` and its derivative in `z`.
fn nll(sign: f64, z: f64) -> (f64, f64) {
    (-log_sigmoid(sign * z), -sign * sigmoid(-sign * z))
}

fn row(t: &Table, r: u32) -> &[f64] {
    t.row(r as usize)
}

/// A `tanh(W·mean + b)` projection with its forward state.
struct Projected {
    tokens: Vec<u32>,
    mean: Vec<f64>,
    out: Vec<f64>,
    grad: Vec<f64>,
}

impl Projected {
    fn new(table: &Table, tokens: &[u32], w: &Table, b: &Table) -> Result<Self> {
        let out = crate::model::project(table, tokens, w, b)?;
        let d = table.dim();
        let mut mean = vec![0.0; d];
        for &t in tokens {
            crate::math::axpy(1.0 / tokens.len() as f64, row(table, t), &mut mean);
        }
        Ok(Self {
            tokens: tokens.to_vec(),
            mean,
            grad: vec![0.0; out.len()],
            out,
        })
    }

    fn backward(
        &self,
        w: &Table,
        token_param: Param,
        w_param: Param,
        b_param: Param,
        g: &mut Gradients,
    ) {
        let d = self.out.len();
        let pre: Vec<f64> = self
            .grad
            .iter()
            .zip(&self.out)
            .map(|(g, y)| g * (1.0 - y * y))
            .collect();
        for (r, &p) in pre.iter().enumerate() {
            g.add(w_param, r as u32, p, &self.mean);
        }
        g.add(b_param, 0, 1.0, &pre);
        let mut g_mean = vec![0.0; d];
        for (r, &p) in pre.iter().enumerate() {
            crate::math::axpy(p, w.row(r), &mut g_mean);
        }
        let n = self.tokens.len() as f64;
        for &t in &self.tokens {
            g.add(token_param, t, 1.0 / n, &g_mean);
        }
    }
}

fn push(terms: &mut Vec<f64>, what: &str, l: f64) -> Result<()> {
    if !l.is_finite() {
        return Err(Error::NonFinite(format!("{what} term")));
    }
    terms.push(l);
    Ok(())
}

/// Output of one likelihood evaluation.
#[derive(Debug, Clone, Default)]
pub struct Evaluation {
    /// Sum of all terms.
    pub loss: f64,
    /// Each additive term, in a layout fixed by the instance and config.
    pub terms: Vec<f64>,
    pub grads: Gradients,
}

/// Negative log-likelihood of one instance plus the L2 penalty on every
/// embedding row it touches, with its exact sparse gradient.
pub fn loss_and_grads(
    model: &Model,
    inst: &TrainInstance,
    aspects: &[Vec<WordId>],
    gamma: f64,
) -> Result<Evaluation> {
    let cfg = &model.config;
    let p = &model.params;
    let d = p.dim();
    let lambda = cfg.lambda;
    let mut g = Gradients::default();
    let mut terms = Vec::new();
    let mut touched: BTreeSet<(Param, u32)> = BTreeSet::new();

    let check = |kind: &'static str, id: u32, rows: usize| {
        if (id as usize) < rows {
            Ok(())
        } else {
            Err(Error::UnknownId {
                kind,
                id: id as u64,
            })
        }
    };
    check("user", inst.user, p.user.rows())?;
    check("item", inst.item, p.item.rows())?;

    let mut query = Projected::new(&p.word, &inst.query, &p.query_w, &p.query_b)?;
    let u = row(&p.user, inst.user);
    let i = row(&p.item, inst.item);
    let c: Vec<f64> = query
        .out
        .iter()
        .zip(u)
        .map(|(q, u)| lambda * q + (1.0 - lambda) * u)
        .collect();
    let mut g_c = vec![0.0; d];
    let mut g_u = vec![0.0; d];
    let mut g_i = vec![0.0; d];
    touched.insert((Param::User, inst.user));
    touched.insert((Param::Item, inst.item));
    touched.extend(inst.query.iter().map(|&w| (Param::Word, w)));

    // item generation
    let (l, dz) = nll(1.0, dot(i, &c));
    push(&mut terms, "item generation", l)?;
    crate::math::axpy(dz, &c, &mut g_i);
    crate::math::axpy(dz, i, &mut g_c);
    for &n in &inst.item_negatives {
        check("item", n, p.item.rows())?;
        let x = row(&p.item, n);
        let (l, dz) = nll(-1.0, dot(x, &c));
        push(&mut terms, "negative item", l)?;
        g.add(Param::Item, n, dz, &c);
        crate::math::axpy(dz, x, &mut g_c);
        touched.insert((Param::Item, n));
    }

    // review words from user and item
    for t in &inst.words {
        for (owner, negs, g_owner) in [
            (u, &t.user_negatives, &mut g_u),
            (i, &t.item_negatives, &mut g_i),
        ] {
            for (w, sign) in std::iter::once((t.word, 1.0)).chain(negs.iter().map(|&n| (n, -1.0))) {
                check("word", w, p.word.rows())?;
                let x = row(&p.word, w);
                let (l, dz) = nll(sign, dot(owner, x));
                push(&mut terms, "review word", l)?;
                crate::math::axpy(dz, x, g_owner);
                g.add(Param::Word, w, dz, owner);
                touched.insert((Param::Word, w));
            }
        }
    }

    // aspect and value networks
    let uses_aspects = cfg.use_aspect_net || cfg.use_value_net;
    let mut embedded: BTreeMap<AspectId, Projected> = BTreeMap::new();
    let (aw, ab) = match (&p.aspect_w, &p.aspect_b) {
        (Some(w), Some(b)) if !cfg.share_query_aspect_projection => (w, b),
        _ => (&p.query_w, &p.query_b),
    };
    let shared = !(p.aspect_w.is_some() && !cfg.share_query_aspect_projection);
    let embed = |a: AspectId, embedded: &mut BTreeMap<AspectId, Projected>| -> Result<()> {
        if !embedded.contains_key(&a) {
            let tokens = aspects.get(a as usize).ok_or(Error::UnknownId {
                kind: "aspect",
                id: a as u64,
            })?;
            embedded.insert(a, Projected::new(&p.aspect_word, tokens, aw, ab)?);
        }
        Ok(())
    };

    let mut entries: Vec<(&super::instance::ValueTarget, bool)> =
        inst.positive.iter().map(|t| (t, true)).collect();
    if cfg.use_negative_values {
        entries.extend(inst.negative.iter().map(|t| (t, false)));
    }
    if uses_aspects {
        for (t, _) in &entries {
            embed(t.aspect, &mut embedded)?;
        }
    }
    if cfg.use_aspect_net {
        for (t, _) in &entries {
            let a = embedded.get_mut(&t.aspect).expect("embedded");
            let (l, dz) = nll(1.0, dot(&a.out, i));
            push(&mut terms, "conversation aspect", l)?;
            crate::math::axpy(dz, i, &mut a.grad);
            crate::math::axpy(dz, &a.out, &mut g_i);
        }
        for &n in &inst.aspect_negatives {
            embed(n, &mut embedded)?;
            let a = embedded.get_mut(&n).expect("embedded");
            let (l, dz) = nll(-1.0, dot(&a.out, i));
            push(&mut terms, "negative aspect", l)?;
            crate::math::axpy(dz, i, &mut a.grad);
            crate::math::axpy(dz, &a.out, &mut g_i);
        }
    }
    if cfg.use_value_net {
        let complement = cfg.negative_is_complement();
        for (t, positive) in &entries {
            let (param, table, sign) = if *positive {
                (Param::ValuePos, &p.value_pos, 1.0)
            } else if complement {
                (Param::ValuePos, &p.value_pos, -1.0)
            } else {
                let table = p.value_neg.as_ref().ok_or_else(|| {
                    Error::Config("separate negative values configured but table missing".into())
                })?;
                (Param::ValueNeg, table, 1.0)
            };
            let a = embedded.get_mut(&t.aspect).expect("embedded");
            let h: Vec<f64> = i.iter().zip(&a.out).map(|(x, y)| x + y).collect();
            let values =
                std::iter::once((t.value, sign)).chain(t.non_values.iter().map(|&v| (v, -sign)));
            for (v, s) in values {
                check("value", v, table.rows())?;
                let x = row(table, v);
                let (l, dz) = nll(s, dot(x, &h));
                push(&mut terms, "feedback value", l)?;
                g.add(param, v, dz, &h);
                crate::math::axpy(dz, x, &mut g_i);
                crate::math::axpy(dz, x, &mut a.grad);
                touched.insert((param, v));
            }
        }
    }

    // back through the aspect projections
    let (wp, bp) = if shared {
        (Param::QueryW, Param::QueryB)
    } else {
        (Param::AspectW, Param::AspectB)
    };
    for a in embedded.values() {
        a.backward(aw, Param::AspectWord, wp, bp, &mut g);
        touched.extend(a.tokens.iter().map(|&w| (Param::AspectWord, w)));
    }

    // back through the context
    crate::math::axpy(1.0 - lambda, &g_c, &mut g_u);
    query.grad = g_c.iter().map(|x| lambda * x).collect();
    query.backward(
        &p.query_w,
        Param::Word,
        Param::QueryW,
        Param::QueryB,
        &mut g,
    );
    g.add(Param::User, inst.user, 1.0, &g_u);
    g.add(Param::Item, inst.item, 1.0, &g_i);

    // L2 on touched embedding rows
    for &(param, r) in &touched {
        let table = p.table(param).expect("touched table exists");
        let x = table.row(r as usize);
        push(&mut terms, "l2", gamma * dot(x, x))?;
        g.add(param, r, 2.0 * gamma, x);
    }

    let loss: f64 = terms.iter().sum();
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!(
            "loss of instance (user {}, item {})",
            inst.user, inst.item
        )));
    }
    Ok(Evaluation {
        loss,
        terms,
        grads: g,
    })
}

/// Per-term losses only.
pub fn loss_terms(
    model: &Model,
    inst: &TrainInstance,
    aspects: &[Vec<WordId>],
    gamma: f64,
) -> Result<Vec<f64>> {
    Ok(loss_and_grads(model, inst, aspects, gamma)?.terms)
}

/// `θ ← θ - lr · g` on every row present in `grads`.
pub fn apply_gradients(model: &mut Model, grads: &Gradients, lr: f64) -> Result<()> {
    for (param, r, gr) in grads.iter() {
        let table = model
            .params
            .table_mut(param)
            .ok_or_else(|| Error::Config(format!("{param:?} table absent")))?;
        crate::math::axpy(-lr, gr, table.row_mut(r as usize));
    }
    Ok(())
}
