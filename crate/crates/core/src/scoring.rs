//! Triple score functions. Higher scores mean more plausible triples.
//!
//! RotatE embeddings use an interleaved layout: coordinates `2j` and `2j + 1`
//! are the real and imaginary parts of complex component `j`. Relations are
//! stored as phases, so every induced rotation has modulus one.

use std::f64::consts::PI;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreKind {
    #[default]
    TransE,
    RotatE,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Norm {
    #[default]
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreConfig {
    pub kind: ScoreKind,
    pub gamma: f64,
    /// TransE only.
    pub norm: Norm,
    /// TransE only: use the squared distance.
    pub squared: bool,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            kind: ScoreKind::TransE,
            gamma: 12.0,
            norm: Norm::L1,
            squared: false,
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self, d_embed: usize) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.gamma > 0.0) {
            errs.push(format!("gamma must be > 0, got {}", self.gamma));
        }
        if self.kind == ScoreKind::RotatE && !d_embed.is_multiple_of(2) {
            errs.push(format!("rotate requires an even d_embed, got {d_embed}"));
        }
        errs
    }

    /// Length of one attribute's parameter vector.
    pub fn relation_dim(&self, d_embed: usize) -> usize {
        match self.kind {
            ScoreKind::TransE => d_embed,
            ScoreKind::RotatE => d_embed / 2,
        }
    }
}

/// One relation vector (TransE) or phase vector (RotatE) per attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeTable {
    pub dim: usize,
    /// Row-major (n_attributes × dim).
    pub data: Vec<f64>,
}

impl AttributeTable {
    pub fn random(n_attributes: usize, d_embed: usize, cfg: &ScoreConfig, rng: &mut Rng) -> Self {
        let dim = cfg.relation_dim(d_embed);
        let data = match cfg.kind {
            ScoreKind::TransE => {
                let bound = 0.5 / d_embed as f64;
                (0..n_attributes * dim).map(|_| rng.gen_range(-bound..=bound)).collect()
            }
            ScoreKind::RotatE => (0..n_attributes * dim).map(|_| rng.gen_range(-PI..PI)).collect(),
        };
        AttributeTable { dim, data }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, attribute: u32) -> &[f64] {
        let s = attribute as usize * self.dim;
        &self.data[s..s + self.dim]
    }

    pub fn row_mut(&mut self, attribute: u32) -> &mut [f64] {
        let s = attribute as usize * self.dim;
        &mut self.data[s..s + self.dim]
    }
}

/// Wrap a phase into [-π, π).
pub fn normalize_phase(phase: f64) -> f64 {
    let wrapped = (phase + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped >= PI {
        -PI
    } else {
        wrapped
    }
}

/// γ − ‖t + a − v‖ under the configured norm.
pub fn score_transe(t: &[f64], a: &[f64], v: &[f64], cfg: &ScoreConfig) -> Result<f64> {
    check_len(t.len(), a.len())?;
    check_len(t.len(), v.len())?;
    Ok(transe(t, a, v, cfg))
}

/// γ − ‖t ∘ r − v‖₂ with r_j = exp(i·a_j).
pub fn score_rotate(t: &[f64], phases: &[f64], v: &[f64], cfg: &ScoreConfig) -> Result<f64> {
    if !t.len().is_multiple_of(2) {
        return Err(Error::Config(vec![format!("rotate requires an even d_embed, got {}", t.len())]));
    }
    check_len(t.len(), v.len())?;
    check_len(t.len() / 2, phases.len())?;
    Ok(rotate(t, phases, v, cfg.gamma))
}

/// Unchecked dispatch on `cfg.kind`; callers guarantee shapes.
pub fn score(t: &[f64], a: &[f64], v: &[f64], cfg: &ScoreConfig) -> f64 {
    match cfg.kind {
        ScoreKind::TransE => transe(t, a, v, cfg),
        ScoreKind::RotatE => rotate(t, a, v, cfg.gamma),
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Shape { expected, actual })
    }
}

fn transe(t: &[f64], a: &[f64], v: &[f64], cfg: &ScoreConfig) -> f64 {
    let diffs = t.iter().zip(a).zip(v).map(|((t, a), v)| t + a - v);
    let dist = match (cfg.norm, cfg.squared) {
        (Norm::L1, false) => diffs.map(f64::abs).sum::<f64>(),
        (Norm::L1, true) => diffs.map(f64::abs).sum::<f64>().powi(2),
        (Norm::L2, false) => diffs.map(|d| d * d).sum::<f64>().sqrt(),
        (Norm::L2, true) => diffs.map(|d| d * d).sum::<f64>(),
    };
    cfg.gamma - dist
}

fn rotate_residual(t: &[f64], phases: &[f64], v: &[f64]) -> Vec<f64> {
    let mut e = Vec::with_capacity(t.len());
    for (j, &ph) in phases.iter().enumerate() {
        let (s, c) = ph.sin_cos();
        let (tr, ti) = (t[2 * j], t[2 * j + 1]);
        e.push(tr * c - ti * s - v[2 * j]);
        e.push(tr * s + ti * c - v[2 * j + 1]);
    }
    e
}

fn rotate(t: &[f64], phases: &[f64], v: &[f64], gamma: f64) -> f64 {
    let e = rotate_residual(t, phases, v);
    gamma - e.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGrad {
    pub t: Vec<f64>,
    pub a: Vec<f64>,
    pub v: Vec<f64>,
}

/// Gradients of `upstream * score(t, a, v)`. Where the distance is not
/// differentiable (an L1 coordinate at zero, an L2 residual of zero) the
/// subgradient 0 is used.
pub fn score_backward(t: &[f64], a: &[f64], v: &[f64], cfg: &ScoreConfig, upstream: f64) -> ScoreGrad {
    match cfg.kind {
        ScoreKind::TransE => {
            let d: Vec<f64> = t.iter().zip(a).zip(v).map(|((t, a), v)| t + a - v).collect();
            // g = ∂score/∂d
            let g: Vec<f64> = match (cfg.norm, cfg.squared) {
                (Norm::L1, false) => d.iter().map(|x| -upstream * sign(*x)).collect(),
                (Norm::L1, true) => {
                    let l1: f64 = d.iter().map(|x| x.abs()).sum();
                    d.iter().map(|x| -upstream * 2.0 * l1 * sign(*x)).collect()
                }
                (Norm::L2, false) => {
                    let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm == 0.0 {
                        vec![0.0; d.len()]
                    } else {
                        d.iter().map(|x| -upstream * x / norm).collect()
                    }
                }
                (Norm::L2, true) => d.iter().map(|x| -upstream * 2.0 * x).collect(),
            };
            ScoreGrad {
                t: g.clone(),
                v: g.iter().map(|x| -x).collect(),
                a: g,
            }
        }
        ScoreKind::RotatE => {
            let e = rotate_residual(t, a, v);
            let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            let n = t.len();
            if norm == 0.0 || upstream == 0.0 {
                return ScoreGrad {
                    t: vec![0.0; n],
                    a: vec![0.0; a.len()],
                    v: vec![0.0; n],
                };
            }
            // ∂score/∂e = -e / ‖e‖
            let ge: Vec<f64> = e.iter().map(|x| -upstream * x / norm).collect();
            let mut gt = vec![0.0; n];
            let mut ga = vec![0.0; a.len()];
            for (j, &ph) in a.iter().enumerate() {
                let (s, c) = ph.sin_cos();
                let (tr, ti) = (t[2 * j], t[2 * j + 1]);
                let (gr, gi) = (ge[2 * j], ge[2 * j + 1]);
                gt[2 * j] = gr * c + gi * s;
                gt[2 * j + 1] = -gr * s + gi * c;
                // d(t·r)/dφ = i·(t·r)
                let (rr, ri) = (tr * c - ti * s, tr * s + ti * c);
                ga[j] = gr * (-ri) + gi * rr;
            }
            ScoreGrad {
                t: gt,
                a: ga,
                v: ge.iter().map(|x| -x).collect(),
            }
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
