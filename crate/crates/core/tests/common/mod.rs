//! Shared fixtures and a finite-difference gradient oracle.
#![allow(dead_code)]

use std::f64::consts::PI;

use pge_core::kg::{sample_negatives, Label, ProductGraph, RawTriple, Stopwords};
use pge_core::model::{Model, ModelConfig};
use pge_core::rng::{stream, Rng, Stream};
use pge_core::scoring::{Norm, ScoreConfig, ScoreKind};
use pge_core::train::{loss_noise_aware, BatchItem, NoiseAware, Sequences};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand::SeedableRng;

pub const H: f64 = 1e-5;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// A pool of `n` distinct non-stopword words.
pub fn word_pool(n: usize, rng: &mut Rng) -> Vec<String> {
    let mut words = std::collections::BTreeSet::new();
    while words.len() < n {
        let len = rng.gen_range(3..7);
        let w: String = (0..len).map(|_| rng.gen_range(b'a'..=b'z') as char).collect();
        words.insert(format!("q{w}"));
    }
    let mut words: Vec<String> = words.into_iter().collect();
    words.shuffle(rng);
    words
}

fn phrase(pool: &[String], lo: usize, hi: usize, rng: &mut Rng) -> String {
    let n = rng.gen_range(lo..=hi);
    (0..n).map(|_| pool.choose(rng).unwrap().as_str()).collect::<Vec<_>>().join(" ")
}

/// Three triples with distinct titles and values drawn from a ~20 word vocabulary.
pub fn toy_graph(rng: &mut Rng) -> ProductGraph {
    let pool = word_pool(20, rng);
    let mut raw = Vec::new();
    let mut values = std::collections::HashSet::new();
    let mut titles = std::collections::HashSet::new();
    while raw.len() < 3 {
        let title = phrase(&pool, 2, 6, rng);
        let value = phrase(&pool, 1, 3, rng);
        if titles.contains(&title) || values.contains(&value) {
            continue;
        }
        titles.insert(title.clone());
        values.insert(value.clone());
        let attribute = if rng.gen_bool(0.5) { "color" } else { "flavor" };
        raw.push(RawTriple::new(title, attribute, value));
    }
    ProductGraph::from_raw(raw, Stopwords::english()).unwrap()
}

pub fn toy_model_config(kind: ScoreKind, d_embed: usize, rng: &mut Rng) -> ModelConfig {
    let norm = if rng.gen_bool(0.5) { Norm::L1 } else { Norm::L2 };
    ModelConfig {
        d_word: 4,
        d_embed,
        filter_widths: vec![1, 2, 3],
        n_filters: 2,
        max_len: 6,
        score: ScoreConfig {
            kind,
            gamma: rng.gen_range(0.5..3.0),
            norm,
            squared: kind == ScoreKind::TransE && rng.gen_bool(0.25),
        },
    }
}

/// Model whose parameters are redrawn at a generic point: every learnable
/// scalar uniform in ±1 (phases in ±π), pad row zero.
pub fn toy_model(graph: &ProductGraph, config: &ModelConfig, rng: &mut Rng) -> Model {
    let mut model = Model::init(graph, config, None, rng).unwrap();
    let kind = config.score.kind;
    let d_word = config.d_word;
    let mut blocks = model.params.blocks_mut();
    let n = blocks.len();
    for (b, block) in blocks.iter_mut().enumerate() {
        let scale = if b == n - 1 && kind == ScoreKind::RotatE { PI } else { 1.0 };
        for x in block.iter_mut() {
            *x = rng.gen_range(-scale..scale);
        }
    }
    model.params.encoder.words.rows[..d_word].fill(0.0);
    model
}

/// Every triple as a positive with `k` unfiltered negatives.
pub fn full_batch(graph: &ProductGraph, k: usize, rng: &mut Rng) -> Vec<BatchItem> {
    (0..graph.len())
        .map(|i| BatchItem {
            triple: i,
            negatives: sample_negatives(graph, i, k, rng, false).unwrap(),
        })
        .collect()
}

pub struct Problem {
    pub graph: ProductGraph,
    pub model: Model,
    pub seqs: Sequences,
    pub batch: Vec<BatchItem>,
    pub confidence: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
}

impl Problem {
    pub fn random(kind: ScoreKind, d_embed: usize, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let graph = toy_graph(&mut rng);
        let config = toy_model_config(kind, d_embed, &mut rng);
        let model = toy_model(&graph, &config, &mut rng);
        let seqs = Sequences::build(&model, &graph);
        let batch = full_batch(&graph, 2, &mut stream(seed, Stream::Sampling));
        let confidence = (0..graph.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        Problem {
            graph,
            model,
            seqs,
            batch,
            confidence,
            alpha: rng.gen_range(0.0..0.5),
            beta: rng.gen_range(0.0..0.5),
        }
    }

    pub fn loss(&self, model: &Model, confidence: &[f64]) -> f64 {
        self.output(model, confidence).loss
    }

    pub fn output(&self, model: &Model, confidence: &[f64]) -> pge_core::train::LossOutput {
        let w = NoiseAware {
            confidence,
            alpha: self.alpha,
            beta: self.beta,
        };
        loss_noise_aware(model, &self.seqs, &self.graph, &self.batch, w).unwrap()
    }

    /// Which branch of every piecewise-linear operation is active: pooling
    /// positions and ReLU on/off per text, and L1 residual signs per scored pair.
    pub fn pattern(&self, model: &Model) -> Vec<i64> {
        let enc = &model.params.encoder;
        let mut sig = Vec::new();
        let mut embed = |seq| {
            let (out, cache) = enc.forward(seq);
            for branch in cache.argmax() {
                sig.extend(branch.iter().map(|p| p.map_or(-1, |p| p as i64)));
            }
            out
        };
        let titles: Vec<Vec<f64>> = self.seqs.titles.iter().map(&mut embed).collect();
        let values: Vec<Vec<f64>> = self.seqs.values.iter().map(&mut embed).collect();
        let cfg = &model.config.score;
        if cfg.kind == ScoreKind::TransE && cfg.norm == Norm::L1 {
            for item in &self.batch {
                let (tid, vid) = self.graph.entity_ids(item.triple);
                let a = model.params.attributes.row(self.graph.triples()[item.triple].attribute);
                for v in std::iter::once(vid).chain(item.negatives.iter().copied()) {
                    let t = &titles[tid as usize];
                    let v = &values[v as usize];
                    sig.extend((0..t.len()).map(|j| (t[j] + a[j] - v[j] > 0.0) as i64));
                }
            }
        }
        sig
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct CheckReport {
    pub checked: usize,
    /// Coordinates whose ±h probe crosses a nondifferentiable point.
    pub skipped: usize,
    pub max_rel_err: f64,
    /// Per parameter block: coordinates checked.
    pub blocks_checked: [usize; 16],
}

/// Gradients below `GRAD_FLOOR * max(1, |loss|)` are compared on that absolute
/// scale: a central difference carries rounding noise near
/// `f64::EPSILON * |loss| / H`, so an exactly zero gradient cannot have a
/// small relative error.
pub const GRAD_FLOOR: f64 = 1e-5;

pub fn rel_err(a: f64, b: f64) -> f64 {
    rel_err_scaled(a, b, 1.0)
}

pub fn rel_err_scaled(a: f64, b: f64, loss: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(GRAD_FLOOR * loss.abs().max(1.0))
}

/// Compare every learnable scalar's analytic gradient with a central
/// difference. Pad-row coordinates are not learnable and are left out.
pub fn check_params(p: &Problem) -> CheckReport {
    let out = p.output(&p.model, &p.confidence);
    let base_loss = out.loss;
    let analytic = out.grads;
    let analytic: Vec<Vec<f64>> = analytic.blocks().iter().map(|b| b.to_vec()).collect();
    let base_pattern = p.pattern(&p.model);
    let d_word = p.model.config.d_word;
    let mut report = CheckReport::default();
    let mut probe = p.model.clone();
    for (b, grads) in analytic.iter().enumerate() {
        for (i, &g) in grads.iter().enumerate() {
            if b == 0 && i < d_word {
                continue;
            }
            let orig = probe.params.blocks()[b][i];
            probe.params.blocks_mut()[b][i] = orig + H;
            let (plus, pat_plus) = (p.loss(&probe, &p.confidence), p.pattern(&probe));
            probe.params.blocks_mut()[b][i] = orig - H;
            let (minus, pat_minus) = (p.loss(&probe, &p.confidence), p.pattern(&probe));
            probe.params.blocks_mut()[b][i] = orig;
            if pat_plus != base_pattern || pat_minus != base_pattern {
                report.skipped += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * H);
            report.checked += 1;
            report.blocks_checked[b.min(15)] += 1;
            report.max_rel_err = report.max_rel_err.max(rel_err_scaled(g, numeric, base_loss));
        }
    }
    report
}

/// Largest relative error of ∂loss/∂C over the batch.
pub fn check_confidence(p: &Problem) -> f64 {
    let out = p.output(&p.model, &p.confidence);
    let mut worst: f64 = 0.0;
    for (item, &g) in p.batch.iter().zip(&out.confidence_grads) {
        let mut c = p.confidence.clone();
        c[item.triple] += H;
        let plus = p.loss(&p.model, &c);
        c[item.triple] -= 2.0 * H;
        let minus = p.loss(&p.model, &c);
        worst = worst.max(rel_err_scaled(g, (plus - minus) / (2.0 * H), out.loss));
    }
    worst
}

/// Labeled copy of `raw`.
pub fn labeled(raw: &[RawTriple], label: Label) -> Vec<RawTriple> {
    raw.iter().cloned().map(|r| r.with_label(label)).collect()
}
