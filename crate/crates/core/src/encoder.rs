//! Convolutional text encoder.
//!
//! Tokens are embedded, passed through three 1-d convolution branches of different
//! widths, rectified, max-pooled over time, concatenated and projected (affine,
//! no activation) to the final embedding.

use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::kg::{TokenSequence, Vocabulary, PAD};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct WordEmbeddingTable {
    pub d_word: usize,
    /// Row-major (vocab_size × d_word). Row `PAD` stays zero.
    pub rows: Vec<f64>,
}

impl WordEmbeddingTable {
    /// Uniform init in [-0.5/d_word, 0.5/d_word] with a zero pad row.
    pub fn random(vocab_size: usize, d_word: usize, rng: &mut Rng) -> Self {
        let bound = 0.5 / d_word as f64;
        let mut rows: Vec<f64> = (0..vocab_size * d_word).map(|_| rng.gen_range(-bound..=bound)).collect();
        rows[..d_word].fill(0.0);
        WordEmbeddingTable { d_word, rows }
    }

    pub fn vocab_size(&self) -> usize {
        self.rows.len() / self.d_word
    }

    pub fn row(&self, id: u32) -> &[f64] {
        let start = id as usize * self.d_word;
        &self.rows[start..start + self.d_word]
    }

    pub fn row_mut(&mut self, id: u32) -> &mut [f64] {
        let start = id as usize * self.d_word;
        &mut self.rows[start..start + self.d_word]
    }
}

/// Load a textual word-vector file (`token v1 .. vd` per line, optional
/// `count dim` header). Vocabulary tokens missing from the file get the same
/// uniform init as [`WordEmbeddingTable::random`]; the pad row is zero.
pub fn load_word_vectors(path: &Path, vocab: &Vocabulary, d_word: usize, rng: &mut Rng) -> Result<WordEmbeddingTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut table = WordEmbeddingTable::random(vocab.len(), d_word, rng);
    let mut file_dim: Option<usize> = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        if lineno == 1 && rest.len() == 1 && token.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
            continue;
        }
        let values = rest
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::parse(lineno, format!("unreadable float {f:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        match file_dim {
            None => file_dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::parse(lineno, format!("expected {d} components, found {}", values.len())))
            }
            _ => {}
        }
        if values.len() != d_word {
            return Err(Error::parse(
                lineno,
                format!("vector has {} components but d_word is {d_word}", values.len()),
            ));
        }
        if let Some(id) = vocab.get(token) {
            table.row_mut(id).copy_from_slice(&values);
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvBranch {
    pub width: usize,
    /// (n_filters × width × d_word), filter-major.
    pub filters: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub d_out: usize,
    pub d_in: usize,
    /// Row-major (d_out × d_in).
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextEncoder {
    pub words: WordEmbeddingTable,
    pub branches: Vec<ConvBranch>,
    pub projection: Projection,
}

/// Per-text state recorded by the forward pass and consumed by the backward pass.
#[derive(Debug, Clone)]
pub struct EncodeCache {
    pooled: Vec<f64>,
    /// Per branch, per filter: first time step attaining the max pre-activation,
    /// or `None` when the rectified max is zero (no gradient flows).
    argmax: Vec<Vec<Option<usize>>>,
}

impl EncodeCache {
    /// Per branch, per filter: the pooled time step, or `None` for a zero output.
    pub fn argmax(&self) -> &[Vec<Option<usize>>] {
        &self.argmax
    }
}

/// Gradient of one encoding. Word-row gradients are listed per touched position.
#[derive(Debug, Clone)]
pub struct EncoderGrad {
    pub word_rows: Vec<(u32, Vec<f64>)>,
    pub filters: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
    pub proj_weight: Vec<f64>,
    pub proj_bias: Vec<f64>,
}

impl TextEncoder {
    /// Seeded init: word rows uniform in ±0.5/d_word, filters and projection
    /// uniform in ±0.5/fan_in, zero biases.
    pub fn random(vocab_size: usize, d_word: usize, widths: &[usize], n_filters: usize, d_embed: usize, rng: &mut Rng) -> Self {
        let words = WordEmbeddingTable::random(vocab_size, d_word, rng);
        Self::with_words(words, widths, n_filters, d_embed, rng)
    }

    pub fn with_words(words: WordEmbeddingTable, widths: &[usize], n_filters: usize, d_embed: usize, rng: &mut Rng) -> Self {
        let d_word = words.d_word;
        let branches = widths
            .iter()
            .map(|&width| {
                let fan_in = (width * d_word) as f64;
                let bound = 0.5 / fan_in;
                ConvBranch {
                    width,
                    filters: (0..n_filters * width * d_word).map(|_| rng.gen_range(-bound..=bound)).collect(),
                    bias: vec![0.0; n_filters],
                }
            })
            .collect::<Vec<_>>();
        let d_in = widths.len() * n_filters;
        let bound = 0.5 / d_in as f64;
        let projection = Projection {
            d_out: d_embed,
            d_in,
            weight: (0..d_embed * d_in).map(|_| rng.gen_range(-bound..=bound)).collect(),
            bias: vec![0.0; d_embed],
        };
        TextEncoder {
            words,
            branches,
            projection,
        }
    }

    pub fn d_word(&self) -> usize {
        self.words.d_word
    }

    pub fn d_embed(&self) -> usize {
        self.projection.d_out
    }

    pub fn n_filters(&self) -> usize {
        self.branches[0].bias.len()
    }

    pub fn max_width(&self) -> usize {
        self.branches.iter().map(|b| b.width).max().unwrap_or(1)
    }

    pub fn encode(&self, seq: &TokenSequence) -> Vec<f64> {
        self.forward(seq).0
    }

    pub fn forward(&self, seq: &TokenSequence) -> (Vec<f64>, EncodeCache) {
        let ids = seq.ids();
        let d = self.d_word();
        let nf = self.n_filters();
        debug_assert!(ids.len() >= self.max_width(), "sequence shorter than widest filter");

        let mut pooled = Vec::with_capacity(self.branches.len() * nf);
        let mut argmax = Vec::with_capacity(self.branches.len());
        for branch in &self.branches {
            let w = branch.width;
            let steps = ids.len() + 1 - w;
            let mut best = Vec::with_capacity(nf);
            for f in 0..nf {
                let filter = &branch.filters[f * w * d..(f + 1) * w * d];
                let mut max_z = f64::NEG_INFINITY;
                let mut max_p = 0;
                for p in 0..steps {
                    let mut z = branch.bias[f];
                    for q in 0..w {
                        let x = self.words.row(ids[p + q]);
                        let k = &filter[q * d..(q + 1) * d];
                        z += k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                    }
                    if z > max_z {
                        max_z = z;
                        max_p = p;
                    }
                }
                // max over time of relu(z) == relu(max over time of z)
                if max_z > 0.0 {
                    pooled.push(max_z);
                    best.push(Some(max_p));
                } else {
                    pooled.push(0.0);
                    best.push(None);
                }
            }
            argmax.push(best);
        }

        let proj = &self.projection;
        let out: Vec<f64> = (0..proj.d_out)
            .map(|o| {
                let row = &proj.weight[o * proj.d_in..(o + 1) * proj.d_in];
                proj.bias[o] + row.iter().zip(&pooled).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        (out, EncodeCache { pooled, argmax })
    }

    /// Exact gradients of `upstream · encode(seq)` with respect to every encoder
    /// parameter. The pad row never receives gradient.
    pub fn backward(&self, seq: &TokenSequence, cache: &EncodeCache, upstream: &[f64]) -> EncoderGrad {
        let ids = seq.ids();
        let d = self.d_word();
        let nf = self.n_filters();
        let proj = &self.projection;
        assert_eq!(upstream.len(), proj.d_out);

        let mut proj_weight = vec![0.0; proj.d_out * proj.d_in];
        let mut g_pooled = vec![0.0; proj.d_in];
        for o in 0..proj.d_out {
            let g = upstream[o];
            if g == 0.0 {
                continue;
            }
            let row = &proj.weight[o * proj.d_in..(o + 1) * proj.d_in];
            let grow = &mut proj_weight[o * proj.d_in..(o + 1) * proj.d_in];
            for i in 0..proj.d_in {
                grow[i] = g * cache.pooled[i];
                g_pooled[i] += g * row[i];
            }
        }

        let mut word_rows: Vec<(u32, Vec<f64>)> = Vec::new();
        let mut filters = Vec::with_capacity(self.branches.len());
        let mut bias = Vec::with_capacity(self.branches.len());
        for (b, branch) in self.branches.iter().enumerate() {
            let w = branch.width;
            let mut gf = vec![0.0; branch.filters.len()];
            let mut gb = vec![0.0; nf];
            for f in 0..nf {
                let Some(p) = cache.argmax[b][f] else { continue };
                let g = g_pooled[b * nf + f];
                if g == 0.0 {
                    continue;
                }
                gb[f] = g;
                let filter = &branch.filters[f * w * d..(f + 1) * w * d];
                for q in 0..w {
                    let id = ids[p + q];
                    let x = self.words.row(id);
                    let gk = &mut gf[f * w * d + q * d..f * w * d + (q + 1) * d];
                    for k in 0..d {
                        gk[k] += g * x[k];
                    }
                    if id != PAD {
                        let k = &filter[q * d..(q + 1) * d];
                        word_rows.push((id, k.iter().map(|v| g * v).collect()));
                    }
                }
            }
            filters.push(gf);
            bias.push(gb);
        }

        EncoderGrad {
            word_rows,
            filters,
            bias,
            proj_weight,
            proj_bias: upstream.to_vec(),
        }
    }

    /// Same shape, all zeros; used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        TextEncoder {
            words: WordEmbeddingTable {
                d_word: self.words.d_word,
                rows: vec![0.0; self.words.rows.len()],
            },
            branches: self
                .branches
                .iter()
                .map(|b| ConvBranch {
                    width: b.width,
                    filters: vec![0.0; b.filters.len()],
                    bias: vec![0.0; b.bias.len()],
                })
                .collect(),
            projection: Projection {
                d_out: self.projection.d_out,
                d_in: self.projection.d_in,
                weight: vec![0.0; self.projection.weight.len()],
                bias: vec![0.0; self.projection.bias.len()],
            },
        }
    }

    /// Add `grad` into this accumulator.
    pub fn accumulate(&mut self, grad: &EncoderGrad) {
        for (id, g) in &grad.word_rows {
            for (a, b) in self.words.row_mut(*id).iter_mut().zip(g) {
                *a += b;
            }
        }
        for (b, branch) in self.branches.iter_mut().enumerate() {
            add(&mut branch.filters, &grad.filters[b]);
            add(&mut branch.bias, &grad.bias[b]);
        }
        add(&mut self.projection.weight, &grad.proj_weight);
        add(&mut self.projection.bias, &grad.proj_bias);
    }

    /// Parameter blocks in a fixed order: word rows, then per branch filters and
    /// bias, then projection weight and bias.
    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&self.words.rows];
        for b in &self.branches {
            out.push(&b.filters);
            out.push(&b.bias);
        }
        out.push(&self.projection.weight);
        out.push(&self.projection.bias);
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![&mut self.words.rows];
        for b in &mut self.branches {
            out.push(&mut b.filters);
            out.push(&mut b.bias);
        }
        out.push(&mut self.projection.weight);
        out.push(&mut self.projection.bias);
        out
    }
}

fn add(dst: &mut [f64], src: &[f64]) {
    for (a, b) in dst.iter_mut().zip(src) {
        *a += b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{Stopwords, UNK};
    use crate::rng::{stream, Stream};

    fn seq(ids: &[u32]) -> TokenSequence {
        TokenSequence::new(ids.to_vec())
    }

    #[test]
    fn zero_parameters_give_zero_embedding() {
        let mut enc = TextEncoder::random(10, 4, &[1, 2, 3], 2, 5, &mut stream(1, Stream::Init));
        for block in enc.blocks_mut() {
            block.fill(0.0);
        }
        assert!(enc.encode(&seq(&[2, 3, 4])).iter().all(|&x| x == 0.0));
    }

    /// d_word = 2, one filter per branch, widths {1, 2, 3}, d_embed = 2.
    /// Sequence: one real token (id 2, vector (1, 2)) followed by two pad rows.
    ///
    /// width 1, filter (1, -1), bias 0.5: z = 1 - 2 + 0.5 = -0.5 at p0, 0.5 at p1, p2
    ///   -> pooled 0.5
    /// width 2, filter [(1, 1), (3, 3)], bias 0: z(p0) = 3 + 0 = 3, z(p1) = 0 -> 3
    /// width 3, filter [(-1, 0), (0, 0), (0, 0)], bias -0.25: z = -1.25 -> 0
    /// projection W = [[1, 2, 3], [0, -1, 1]], b = (0.1, -0.2)
    ///   out0 = 0.1 + 0.5 + 6 + 0 = 6.6 ; out1 = -0.2 - 3 + 0 = -3.2
    fn toy() -> TextEncoder {
        TextEncoder {
            words: WordEmbeddingTable {
                d_word: 2,
                rows: vec![0.0, 0.0, 9.0, 9.0, 1.0, 2.0],
            },
            branches: vec![
                ConvBranch { width: 1, filters: vec![1.0, -1.0], bias: vec![0.5] },
                ConvBranch { width: 2, filters: vec![1.0, 1.0, 3.0, 3.0], bias: vec![0.0] },
                ConvBranch { width: 3, filters: vec![-1.0, 0.0, 0.0, 0.0, 0.0, 0.0], bias: vec![-0.25] },
            ],
            projection: Projection {
                d_out: 2,
                d_in: 3,
                weight: vec![1.0, 2.0, 3.0, 0.0, -1.0, 1.0],
                bias: vec![0.1, -0.2],
            },
        }
    }

    #[test]
    fn hand_evaluated_forward() {
        let out = toy().encode(&seq(&[2, PAD, PAD]));
        assert!((out[0] - 6.6).abs() < 1e-12, "{out:?}");
        assert!((out[1] + 3.2).abs() < 1e-12, "{out:?}");
    }

    #[test]
    fn width_one_filters_are_permutation_invariant() {
        let mut rng = stream(5, Stream::Init);
        let enc = TextEncoder::random(12, 3, &[1, 1, 1], 4, 6, &mut rng);
        let a = enc.encode(&seq(&[2, 3, 4, 5, 6]));
        let b = enc.encode(&seq(&[6, 4, 2, 5, 3]));
        assert_eq!(a, b);
        let wide = TextEncoder::random(12, 3, &[1, 2, 3], 4, 6, &mut rng);
        assert_ne!(wide.encode(&seq(&[2, 3, 4, 5, 6])), wide.encode(&seq(&[6, 4, 2, 5, 3])));
    }

    #[test]
    fn output_dimension_is_fixed() {
        let enc = TextEncoder::random(12, 3, &[1, 2, 3], 2, 7, &mut stream(2, Stream::Init));
        for len in 3..10 {
            let ids: Vec<u32> = (0..len).map(|i| 2 + (i % 10) as u32).collect();
            assert_eq!(enc.encode(&seq(&ids)).len(), 7);
        }
    }

    #[test]
    fn zero_weights_leave_projection_bias() {
        let mut enc = TextEncoder::random(12, 3, &[1, 2, 3], 2, 4, &mut stream(3, Stream::Init));
        enc.projection.bias = vec![0.5, -1.0, 2.0, 0.0];
        for b in &mut enc.branches {
            b.filters.fill(0.0);
        }
        enc.projection.weight.fill(0.0);
        assert_eq!(enc.encode(&seq(&[2, 3, 4])), vec![0.5, -1.0, 2.0, 0.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let enc = TextEncoder::random(12, 3, &[1, 2, 3], 2, 4, &mut stream(3, Stream::Init));
        let s = seq(&[2, 3, 4, 5]);
        let (_, cache) = enc.forward(&s);
        let g = enc.backward(&s, &cache, &[0.0; 4]);
        let mut acc = enc.zeros_like();
        acc.accumulate(&g);
        assert!(acc.blocks().iter().all(|b| b.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn pad_row_gets_no_gradient() {
        let s = seq(&[2, PAD, PAD]);
        let enc = toy();
        let (_, cache) = enc.forward(&s);
        let g = enc.backward(&s, &cache, &[1.0, -0.5]);
        assert!(g.word_rows.iter().all(|(id, _)| *id != PAD));
        assert!(!g.word_rows.is_empty());
    }

    #[test]
    fn word_vector_file() {
        let vocab = Vocabulary::build(["spicy chips"], Stopwords::none());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vec.txt");

        std::fs::write(&path, "2 3\nspicy 1 2 3\nchips 4 5 6\n").unwrap();
        let t = load_word_vectors(&path, &vocab, 3, &mut stream(1, Stream::Init)).unwrap();
        assert_eq!(t.row(vocab.get("spicy").unwrap()), &[1.0, 2.0, 3.0]);
        assert_eq!(t.row(vocab.get("chips").unwrap()), &[4.0, 5.0, 6.0]);
        assert_eq!(t.row(PAD), &[0.0; 3]);

        std::fs::write(&path, "salsa 1 2 3\n").unwrap();
        let t = load_word_vectors(&path, &vocab, 3, &mut stream(1, Stream::Init)).unwrap();
        let bound = 0.5 / 3.0;
        for id in [UNK, 2, 3] {
            assert!(t.row(id).iter().all(|x| x.abs() <= bound));
            assert!(t.row(id).iter().any(|&x| x != 0.0));
        }
        assert_eq!(t.row(PAD), &[0.0; 3]);

        std::fs::write(&path, "spicy 1 2 3\nchips 4 5\n").unwrap();
        assert!(matches!(
            load_word_vectors(&path, &vocab, 3, &mut stream(1, Stream::Init)),
            Err(Error::Parse { line: 2, .. })
        ));
        std::fs::write(&path, "spicy 1 2\n").unwrap();
        assert!(load_word_vectors(&path, &vocab, 3, &mut stream(1, Stream::Init)).is_err());
        std::fs::write(&path, "spicy 1 x 3\n").unwrap();
        assert!(matches!(
            load_word_vectors(&path, &vocab, 3, &mut stream(1, Stream::Init)),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
