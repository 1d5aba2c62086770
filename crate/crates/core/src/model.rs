//! The learnable parameters and the metadata needed to score raw text.

use crate::encoder::{TextEncoder, WordEmbeddingTable};
use crate::error::{Error, Result};
use crate::kg::{AttributeTriple, ProductGraph, RawTriple, TokenSequence, Vocabulary, PAD};
use crate::rng::Rng;
use crate::scoring::{self, AttributeTable, ScoreConfig};

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub d_word: usize,
    pub d_embed: usize,
    pub filter_widths: Vec<usize>,
    pub n_filters: usize,
    pub max_len: usize,
    pub score: ScoreConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let d_embed = 96;
        ModelConfig {
            d_word: 300,
            d_embed,
            filter_widths: vec![1, 2, 3],
            n_filters: default_n_filters(d_embed),
            max_len: 32,
            score: ScoreConfig::default(),
        }
    }
}

/// d_embed / 3, rounded, at least one.
pub fn default_n_filters(d_embed: usize) -> usize {
    ((d_embed as f64 / 3.0).round() as usize).max(1)
}

impl ModelConfig {
    pub fn max_width(&self) -> usize {
        self.filter_widths.iter().copied().max().unwrap_or(1)
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = self.score.validate(self.d_embed);
        if self.d_word == 0 {
            errs.push("d_word must be >= 1".into());
        }
        if self.d_embed == 0 {
            errs.push("d_embed must be >= 1".into());
        }
        if self.n_filters == 0 {
            errs.push("n_filters must be >= 1".into());
        }
        if self.filter_widths.len() != 3 {
            errs.push(format!("filter_widths needs exactly 3 widths, got {}", self.filter_widths.len()));
        }
        let mut sorted = self.filter_widths.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.filter_widths.len() {
            errs.push("filter_widths must be pairwise distinct".into());
        }
        if self.filter_widths.contains(&0) {
            errs.push("filter widths must be >= 1".into());
        }
        if self.max_width() > self.max_len {
            errs.push(format!(
                "filter width {} exceeds max_len {}",
                self.max_width(),
                self.max_len
            ));
        }
        errs
    }
}

/// All learnable tensors except the per-triple confidences.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub encoder: TextEncoder,
    pub attributes: AttributeTable,
}

impl Params {
    pub fn zeros_like(&self) -> Self {
        Params {
            encoder: self.encoder.zeros_like(),
            attributes: AttributeTable {
                dim: self.attributes.dim,
                data: vec![0.0; self.attributes.data.len()],
            },
        }
    }

    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut b = self.encoder.blocks();
        b.push(&self.attributes.data);
        b
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut b = self.encoder.blocks_mut();
        b.push(&mut self.attributes.data);
        b
    }

    pub fn n_scalars(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub attribute_names: Vec<String>,
    pub params: Params,
}

impl Model {
    /// Fresh model for `graph`. `words` replaces the random word table when given.
    pub fn init(graph: &ProductGraph, config: &ModelConfig, words: Option<WordEmbeddingTable>, rng: &mut Rng) -> Result<Self> {
        let errs = config.validate();
        if !errs.is_empty() {
            return Err(Error::Config(errs));
        }
        let vocab = graph.vocab().clone();
        let words = match words {
            Some(w) => {
                if w.vocab_size() != vocab.len() || w.d_word != config.d_word {
                    return Err(Error::Shape {
                        expected: vocab.len() * config.d_word,
                        actual: w.rows.len(),
                    });
                }
                let mut w = w;
                w.row_mut(PAD).fill(0.0);
                w
            }
            None => WordEmbeddingTable::random(vocab.len(), config.d_word, rng),
        };
        let encoder = TextEncoder::with_words(words, &config.filter_widths, config.n_filters, config.d_embed, rng);
        let attributes = AttributeTable::random(graph.attributes().len(), config.d_embed, &config.score, rng);
        Ok(Model {
            config: config.clone(),
            vocab,
            attribute_names: graph.attributes().to_vec(),
            params: Params { encoder, attributes },
        })
    }

    pub fn sequence(&self, text: &str) -> TokenSequence {
        self.vocab.preprocess(text, self.config.max_len, self.config.max_width())
    }

    pub fn embed(&self, text: &str) -> Vec<f64> {
        self.params.encoder.encode(&self.sequence(text))
    }

    pub fn attribute_id(&self, name: &str) -> Option<u32> {
        self.attribute_names.iter().position(|a| a == name).map(|i| i as u32)
    }

    pub fn score_embedded(&self, title: &[f64], attribute: u32, value: &[f64]) -> f64 {
        scoring::score(title, self.params.attributes.row(attribute), value, &self.config.score)
    }

    pub fn score(&self, triple: &AttributeTriple) -> f64 {
        let t = self.embed(&triple.title);
        let v = self.embed(&triple.value);
        self.score_embedded(&t, triple.attribute, &v)
    }

    /// Score file records; unseen words go through the unknown-token row.
    pub fn score_raw(&self, triples: &[RawTriple]) -> Result<Vec<f64>> {
        let resolved = triples
            .iter()
            .map(|r| {
                let attribute = self
                    .attribute_id(&r.attribute)
                    .ok_or_else(|| Error::UnknownAttribute(r.attribute.clone()))?;
                Ok(AttributeTriple {
                    title: r.title.clone(),
                    attribute,
                    value: r.value.clone(),
                    label: r.label,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.score_all(&resolved))
    }

    /// Scores in input order, caching each distinct text's embedding.
    pub fn score_all(&self, triples: &[AttributeTriple]) -> Vec<f64> {
        use rayon::prelude::*;
        use std::collections::HashMap;

        let mut texts: Vec<&str> = Vec::new();
        let mut slot: HashMap<&str, usize> = HashMap::new();
        for t in triples {
            for s in [t.title.as_str(), t.value.as_str()] {
                slot.entry(s).or_insert_with(|| {
                    texts.push(s);
                    texts.len() - 1
                });
            }
        }
        let embeddings: Vec<Vec<f64>> = texts.par_iter().map(|s| self.embed(s)).collect();
        triples
            .iter()
            .map(|t| {
                self.score_embedded(&embeddings[slot[t.title.as_str()]], t.attribute, &embeddings[slot[t.value.as_str()]])
            })
            .collect()
    }
}
