//! Negative-sampling objective and its confidence-weighted variant.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kg::{ProductGraph, TokenSequence};
use crate::model::{Model, Params};
use crate::scoring::score_backward;

/// One positive triple (index into the graph) with its sampled negative value ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchItem {
    pub triple: usize,
    pub negatives: Vec<u32>,
}

/// Token sequences for every title and value of a graph, built with a model's vocabulary.
#[derive(Debug, Clone)]
pub struct Sequences {
    pub titles: Vec<TokenSequence>,
    pub values: Vec<TokenSequence>,
}

impl Sequences {
    pub fn build(model: &Model, graph: &ProductGraph) -> Self {
        Sequences {
            titles: graph.titles().iter().map(|t| model.sequence(t)).collect(),
            values: graph.values().iter().map(|v| model.sequence(v)).collect(),
        }
    }
}

/// Confidence weighting: per-graph-triple C plus the sparsity (α) and
/// polarization (β) weights.
#[derive(Debug, Clone, Copy)]
pub struct NoiseAware<'a> {
    pub confidence: &'a [f64],
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub loss: f64,
    pub grads: Params,
    /// Per batch item, the unweighted negative-sampling term.
    pub per_triple: Vec<f64>,
    /// Per batch item, ∂loss/∂C. Empty for the plain objective.
    pub confidence_grads: Vec<f64>,
}

/// log(1 + e^x) without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Per-positive term `-log σ(f⁺) - mean_j log σ(-f⁻_j)` with its derivatives
/// with respect to the positive score and each negative score.
pub fn triple_term(pos: f64, negs: &[f64]) -> (f64, f64, Vec<f64>) {
    let k = negs.len() as f64;
    let neg_sum: f64 = negs.iter().map(|&s| softplus(s)).sum();
    let loss = softplus(-pos) + neg_sum / k;
    let d_pos = -sigmoid(-pos);
    let d_negs = negs.iter().map(|&s| sigmoid(s) / k).collect();
    (loss, d_pos, d_negs)
}

pub fn loss_plain(model: &Model, seqs: &Sequences, graph: &ProductGraph, batch: &[BatchItem]) -> Result<LossOutput> {
    batch_loss(model, seqs, graph, batch, None)
}

/// `Σ C·ℓ + α Σ (1 − C) + β Σ (1 − C² − (1 − C)²)` over the batch, where ℓ is
/// each positive's negative-sampling term.
pub fn loss_noise_aware(
    model: &Model,
    seqs: &Sequences,
    graph: &ProductGraph,
    batch: &[BatchItem],
    weighting: NoiseAware<'_>,
) -> Result<LossOutput> {
    batch_loss(model, seqs, graph, batch, Some(weighting))
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Text {
    Title(u32),
    Value(u32),
}

fn batch_loss(
    model: &Model,
    seqs: &Sequences,
    graph: &ProductGraph,
    batch: &[BatchItem],
    weighting: Option<NoiseAware<'_>>,
) -> Result<LossOutput> {
    let cfg = &model.config.score;
    let encoder = &model.params.encoder;

    // Each distinct text is encoded once per batch, in first-use order.
    let mut texts: Vec<Text> = Vec::new();
    let mut slot: HashMap<Text, usize> = HashMap::new();
    let mut slot_of = |t: Text| {
        *slot.entry(t).or_insert_with(|| {
            texts.push(t);
            texts.len() - 1
        })
    };
    let item_slots: Vec<(usize, usize, Vec<usize>)> = batch
        .iter()
        .map(|item| {
            let (tid, vid) = graph.entity_ids(item.triple);
            let t = slot_of(Text::Title(tid));
            let v = slot_of(Text::Value(vid));
            let negs = item.negatives.iter().map(|&n| slot_of(Text::Value(n))).collect();
            (t, v, negs)
        })
        .collect();
    let seq_of = |t: &Text| match *t {
        Text::Title(i) => &seqs.titles[i as usize],
        Text::Value(i) => &seqs.values[i as usize],
    };
    let encoded: Vec<_> = texts.par_iter().map(|t| encoder.forward(seq_of(t))).collect();

    let mut grads = model.params.zeros_like();
    let mut text_grads = vec![vec![0.0; model.config.d_embed]; texts.len()];
    let mut total = 0.0;
    let mut per_triple = Vec::with_capacity(batch.len());
    let mut confidence_grads = Vec::new();

    for (item, (ts, vs, ns)) in batch.iter().zip(&item_slots) {
        if item.negatives.is_empty() {
            return Err(Error::Config(vec![format!("triple {} has no negatives", item.triple)]));
        }
        let attr = graph.triples()[item.triple].attribute;
        let a = model.params.attributes.row(attr);
        let t = &encoded[*ts].0;
        let pos = model.score_embedded(t, attr, &encoded[*vs].0);
        let negs: Vec<f64> = ns.iter().map(|&n| model.score_embedded(t, attr, &encoded[n].0)).collect();
        let (ell, d_pos, d_negs) = triple_term(pos, &negs);
        if !ell.is_finite() {
            return Err(Error::NumericFault {
                triple: item.triple,
                last_good: None,
            });
        }
        per_triple.push(ell);

        let weight = match weighting {
            None => {
                total += ell;
                1.0
            }
            Some(w) => {
                let c = w.confidence[item.triple];
                total += c * ell + w.alpha * (1.0 - c) + w.beta * (1.0 - c * c - (1.0 - c) * (1.0 - c));
                confidence_grads.push(ell - w.alpha + w.beta * (2.0 - 4.0 * c));
                c
            }
        };

        let grad_attr = grads.attributes.row_mut(attr);
        for (target, d) in std::iter::once((*vs, d_pos)).chain(ns.iter().copied().zip(d_negs)) {
            let g = score_backward(t, a, &encoded[target].0, cfg, weight * d);
            add(&mut text_grads[*ts], &g.t);
            add(&mut text_grads[target], &g.v);
            add(grad_attr, &g.a);
        }
    }

    let encoder_grads: Vec<_> = texts
        .par_iter()
        .zip(&encoded)
        .zip(&text_grads)
        .map(|((t, (_, cache)), g)| encoder.backward(seq_of(t), cache, g))
        .collect();
    for g in &encoder_grads {
        grads.encoder.accumulate(g);
    }

    Ok(LossOutput {
        loss: total,
        grads,
        per_triple,
        confidence_grads,
    })
}

fn add(dst: &mut [f64], src: &[f64]) {
    for (a, b) in dst.iter_mut().zip(src) {
        *a += b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_scores_give_two_log_two() {
        let (l, _, _) = triple_term(0.0, &[0.0]);
        assert!((l - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!((l - 1.3863).abs() < 1e-4);
    }

    #[test]
    fn saturation_limit() {
        let (l, d_pos, d_negs) = triple_term(800.0, &[-800.0, -900.0]);
        assert_eq!(l, 0.0);
        assert_eq!(d_pos, 0.0);
        assert!(d_negs.iter().all(|&d| d == 0.0));
        let (l, _, _) = triple_term(40.0, &[-40.0]);
        assert!(l < 1e-16);
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert_eq!(softplus(-1000.0), 0.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((sigmoid(-1000.0)).abs() < 1e-300);
    }

    #[test]
    fn negative_order_does_not_matter() {
        let (a, _, _) = triple_term(1.5, &[0.25, -2.0, 3.0]);
        let (b, _, _) = triple_term(1.5, &[3.0, 0.25, -2.0]);
        assert!((a - b).abs() < 1e-15);
    }
}
