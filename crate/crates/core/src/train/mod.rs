//! Training: objective, optimizer and the epoch loop.

mod adam;
mod loss;

use std::time::Instant;

use rand::seq::SliceRandom;

pub use adam::{adam_step, confidence_step, AdamConfig, AdamState, Frozen};
pub use loss::{loss_noise_aware, loss_plain, sigmoid, softplus, triple_term, BatchItem, LossOutput, NoiseAware, Sequences};

use crate::checkpoint::ModelCheckpoint;
use crate::config::RunConfig;
use crate::encoder::WordEmbeddingTable;
use crate::error::{Error, Result};
use crate::eval::{pr_metrics, PositiveClass, ScoredTriple};
use crate::kg::{sample_negatives, AttributeTriple, Label, ProductGraph};
use crate::model::{Model, ModelConfig};
use crate::rng::{stream, Rng, RngState, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Step size for the confidences; the main learning rate when unset.
    pub confidence_lr: Option<f64>,
    pub k_neg: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub alpha: f64,
    pub beta: f64,
    pub noise_aware: bool,
    pub seed: u64,
    /// Gradient reductions are always fixed-order; kept for interface parity.
    pub deterministic: bool,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub filtered_negatives: bool,
    pub freeze_words: bool,
    pub freeze_confidence: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 5e-4,
            confidence_lr: None,
            k_neg: 8,
            batch_size: 64,
            epochs: 50,
            alpha: 0.1,
            beta: 0.1,
            noise_aware: true,
            seed: 42,
            deterministic: true,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            filtered_negatives: false,
            freeze_words: false,
            freeze_confidence: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.learning_rate > 0.0) {
            errs.push(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if let Some(lr) = self.confidence_lr {
            if !(lr > 0.0) {
                errs.push(format!("confidence_lr must be > 0, got {lr}"));
            }
        }
        if self.k_neg == 0 {
            errs.push("k_neg must be >= 1".into());
        }
        if self.batch_size == 0 {
            errs.push("batch_size must be >= 1".into());
        }
        if !(self.alpha >= 0.0) {
            errs.push(format!("alpha must be >= 0, got {}", self.alpha));
        }
        if !(self.beta >= 0.0) {
            errs.push(format!("beta must be >= 0, got {}", self.beta));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            errs.push("adam_beta1 and adam_beta2 must be in [0, 1)".into());
        }
        if !(self.adam_eps > 0.0) {
            errs.push("adam_eps must be > 0".into());
        }
        errs
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean objective per training triple over the epoch's batches.
    pub loss: f64,
    pub valid_pr_auc: Option<f64>,
    pub seconds: f64,
}

/// CSV of per-epoch loss and validation PR AUC. Wall-clock time is left out
/// so that a seeded run reproduces the file byte for byte.
pub fn write_epoch_log(log: &[EpochLog], mut out: impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "epoch,loss,valid_pr_auc")?;
    for row in log {
        let auc = row.valid_pr_auc.map(|a| a.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{}", row.epoch, row.loss, auc)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    /// Best validation PR AUC epoch, or the last epoch without a usable validation set.
    pub checkpoint: ModelCheckpoint,
    pub log: Vec<EpochLog>,
    /// 0 for the initialization checkpoint.
    pub best_epoch: usize,
}

/// Mutable training state, everything a checkpoint needs.
struct State {
    model: Model,
    confidence: Vec<f64>,
    adam: AdamState,
    sampling: Rng,
    shuffle: Rng,
    epoch: usize,
}

impl State {
    fn snapshot(&self, run: &RunConfig, graph: &ProductGraph) -> ModelCheckpoint {
        ModelCheckpoint {
            config: run.clone(),
            model: self.model.clone(),
            triples: graph.to_raw(),
            confidence: self.confidence.clone(),
            optimizer: self.adam.clone(),
            sampling_rng: RngState::capture(&self.sampling),
            shuffle_rng: RngState::capture(&self.shuffle),
            epoch: self.epoch as u32,
        }
    }
}

/// Train on `graph` with the architecture and optimizer settings from `run`.
///
/// `valid` (labeled, resolved against the graph's attributes) drives model
/// selection by PR AUC with incorrect triples as the positive class; it may be
/// empty. `words` optionally replaces the random word-embedding init.
pub fn train(graph: &ProductGraph, run: &RunConfig, valid: &[AttributeTriple], words: Option<WordEmbeddingTable>) -> Result<TrainOutput> {
    let errs = run.validate();
    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    if graph.is_empty() {
        return Err(Error::EmptyInput);
    }
    let cfg = &run.train;
    let model_cfg: &ModelConfig = &run.model;
    let model = Model::init(graph, model_cfg, words, &mut stream(cfg.seed, Stream::Init))?;
    let mut state = State {
        adam: AdamState::new(&model.params, graph.len()),
        model,
        confidence: vec![1.0; graph.len()],
        sampling: stream(cfg.seed, Stream::Sampling),
        shuffle: stream(cfg.seed, Stream::Shuffle),
        epoch: 0,
    };

    let seqs = Sequences::build(&state.model, graph);
    let adam_cfg = cfg.adam();
    let confidence_lr = cfg.confidence_lr.unwrap_or(cfg.learning_rate);
    let pad_len = model_cfg.d_word;
    let frozen = Frozen {
        words: cfg.freeze_words,
        confidence: cfg.freeze_confidence || !cfg.noise_aware,
    };
    let select = valid.iter().any(|t| t.label == Label::Incorrect);

    let mut best = state.snapshot(run, graph);
    let mut best_auc = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..graph.len()).collect();

    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        let last_good = state.snapshot(run, graph);
        order.shuffle(&mut state.shuffle);
        let mut epoch_loss = 0.0;

        for chunk in order.chunks(cfg.batch_size) {
            let batch = chunk
                .iter()
                .map(|&i| {
                    Ok(BatchItem {
                        triple: i,
                        negatives: sample_negatives(graph, i, cfg.k_neg, &mut state.sampling, cfg.filtered_negatives)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;

            let out = if cfg.noise_aware {
                let weighting = NoiseAware {
                    confidence: &state.confidence,
                    alpha: cfg.alpha,
                    beta: cfg.beta,
                };
                loss_noise_aware(&state.model, &seqs, graph, &batch, weighting)
            } else {
                loss_plain(&state.model, &seqs, graph, &batch)
            };
            let out = match out {
                Ok(out) if out.loss.is_finite() => out,
                Ok(_) => return Err(numeric_fault(chunk[0], last_good)),
                Err(Error::NumericFault { triple, .. }) => return Err(numeric_fault(triple, last_good)),
                Err(e) => return Err(e),
            };
            epoch_loss += out.loss;

            adam_step(&mut state.model.params, &out.grads, &mut state.adam, &adam_cfg, pad_len, frozen);
            if cfg.noise_aware && !frozen.confidence {
                let updates: Vec<(usize, f64)> = chunk.iter().copied().zip(out.confidence_grads.iter().copied()).collect();
                confidence_step(&mut state.confidence, &updates, &mut state.adam, &adam_cfg, confidence_lr);
            }
            if !state.model.params.all_finite() {
                return Err(numeric_fault(chunk[0], last_good));
            }
        }
        state.epoch = epoch;

        let valid_pr_auc = if select {
            let scores = state.model.score_all(valid);
            let scored: Vec<ScoredTriple> = valid
                .iter()
                .zip(scores)
                .map(|(t, s)| ScoredTriple::new(t.clone(), s))
                .collect();
            Some(pr_metrics(&scored, PositiveClass::Incorrect, &[]).pr_auc)
        } else {
            None
        };
        log.push(EpochLog {
            epoch,
            loss: epoch_loss / graph.len() as f64,
            valid_pr_auc,
            seconds: started.elapsed().as_secs_f64(),
        });

        match valid_pr_auc {
            Some(auc) if auc > best_auc => {
                best_auc = auc;
                best_epoch = epoch;
                best = state.snapshot(run, graph);
            }
            Some(_) => {}
            None => {
                best_epoch = epoch;
                best = state.snapshot(run, graph);
            }
        }
    }

    Ok(TrainOutput {
        checkpoint: best,
        log,
        best_epoch,
    })
}

fn numeric_fault(triple: usize, last_good: ModelCheckpoint) -> Error {
    Error::NumericFault {
        triple,
        last_good: Some(Box::new(last_good)),
    }
}
