//! Adam with bias correction, plus a lazily updated, projected variant for the
//! per-triple confidences.

use crate::model::Params;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Which parameter groups an optimizer step may change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Frozen {
    pub words: bool,
    pub confidence: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Params,
    pub v: Params,
    /// Confidence moments and per-entry step counts; an entry only steps when
    /// its triple is in the batch.
    pub conf_m: Vec<f64>,
    pub conf_v: Vec<f64>,
    pub conf_steps: Vec<u64>,
}

impl AdamState {
    pub fn new(params: &Params, n_confidence: usize) -> Self {
        AdamState {
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
            conf_m: vec![0.0; n_confidence],
            conf_v: vec![0.0; n_confidence],
            conf_steps: vec![0; n_confidence],
        }
    }
}

#[inline]
fn update(p: &mut f64, g: f64, m: &mut f64, v: &mut f64, cfg: &AdamConfig, lr: f64, bc1: f64, bc2: f64) {
    *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
    *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
    let m_hat = *m / bc1;
    let v_hat = *v / bc2;
    *p -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
}

/// One dense Adam step over all model parameters. The pad word row (the first
/// `pad_len` scalars of the word table) is never touched.
pub fn adam_step(params: &mut Params, grads: &Params, state: &mut AdamState, cfg: &AdamConfig, pad_len: usize, frozen: Frozen) {
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);

    let g_blocks = grads.blocks();
    let m_blocks = state.m.blocks_mut();
    let v_blocks = state.v.blocks_mut();
    for (b, (((p, g), m), v)) in params
        .blocks_mut()
        .into_iter()
        .zip(g_blocks)
        .zip(m_blocks)
        .zip(v_blocks)
        .enumerate()
    {
        // block 0 is the word table
        let start = if b == 0 {
            if frozen.words {
                continue;
            }
            pad_len
        } else {
            0
        };
        for i in start..p.len() {
            update(&mut p[i], g[i], &mut m[i], &mut v[i], cfg, cfg.lr, bc1, bc2);
        }
    }
}

/// Adam step for the confidences of the listed triples, then projection onto [0, 1].
pub fn confidence_step(confidence: &mut [f64], updates: &[(usize, f64)], state: &mut AdamState, cfg: &AdamConfig, lr: f64) {
    for &(i, g) in updates {
        state.conf_steps[i] += 1;
        let t = state.conf_steps[i] as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        update(&mut confidence[i], g, &mut state.conf_m[i], &mut state.conf_v[i], cfg, lr, bc1, bc2);
        confidence[i] = confidence[i].clamp(0.0, 1.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::TextEncoder;
    use crate::rng::{stream, Stream};
    use crate::scoring::AttributeTable;

    fn params() -> Params {
        Params {
            encoder: TextEncoder::random(6, 2, &[1, 2, 3], 1, 2, &mut stream(1, Stream::Init)),
            attributes: AttributeTable {
                dim: 2,
                data: vec![0.5, -0.5],
            },
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = params();
        let before = p.clone();
        let g = p.zeros_like();
        let mut state = AdamState::new(&p, 0);
        adam_step(&mut p, &g, &mut state, &AdamConfig::default(), 2, Frozen::default());
        assert_eq!(p, before);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_step_matches_bias_corrected_rule() {
        // g = 1: m = 0.1, v = 0.001, m_hat = 1, v_hat = 1, step = lr / (1 + eps)
        let cfg = AdamConfig { lr: 0.01, ..Default::default() };
        let mut c = vec![0.5];
        let mut state = AdamState::new(&params(), 1);
        confidence_step(&mut c, &[(0, 1.0)], &mut state, &cfg, cfg.lr);
        let expected = 0.5 - 0.01 / (1.0 + 1e-8);
        assert!((c[0] - expected).abs() < 1e-15, "{}", c[0]);
        // second step with constant gradient is the same size
        confidence_step(&mut c, &[(0, 1.0)], &mut state, &cfg, cfg.lr);
        assert!((c[0] - (expected - 0.01 / (1.0 + 1e-8))).abs() < 1e-12);
    }

    #[test]
    fn confidence_is_projected() {
        let mut c = vec![1.2, -0.3];
        let mut state = AdamState::new(&params(), 2);
        confidence_step(&mut c, &[(0, 0.0), (1, 0.0)], &mut state, &AdamConfig::default(), 1e-3);
        assert_eq!(c, vec![1.0, 0.0]);
    }

    #[test]
    fn pad_row_and_frozen_words_stay_put() {
        let mut p = params();
        let mut g = p.zeros_like();
        for b in g.blocks_mut() {
            b.fill(1.0);
        }
        let before = p.clone();
        let mut state = AdamState::new(&p, 0);
        adam_step(&mut p, &g, &mut state, &AdamConfig::default(), 2, Frozen::default());
        assert_eq!(&p.encoder.words.rows[..2], &before.encoder.words.rows[..2]);
        assert_ne!(&p.encoder.words.rows[2..], &before.encoder.words.rows[2..]);

        let mut q = before.clone();
        let mut state = AdamState::new(&q, 0);
        adam_step(&mut q, &g, &mut state, &AdamConfig::default(), 2, Frozen { words: true, confidence: false });
        assert_eq!(q.encoder.words, before.encoder.words);
        assert_ne!(q.attributes, before.attributes);
    }
}
