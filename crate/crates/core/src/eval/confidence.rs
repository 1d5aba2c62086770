//! How well the learned confidences separate injected corruptions from clean triples.

use std::collections::HashSet;
use std::io::Write;

use crate::checkpoint::ModelCheckpoint;
use crate::kg::{Corruption, RawTriple};

pub const N_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub clean: usize,
    pub corrupt: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceReport {
    pub bins: Vec<HistogramBin>,
    pub n_clean: usize,
    pub n_corrupt: usize,
    pub mean_clean: f64,
    pub mean_corrupt: f64,
    /// mean_clean − mean_corrupt; 0 when either group is empty.
    pub gap: f64,
    /// ROC AUC of (1 − C) as a corruption detector; `None` without both groups.
    pub detector_auc: Option<f64>,
}

fn bin_of(c: f64) -> usize {
    ((c * N_BINS as f64).floor().max(0.0) as usize).min(N_BINS - 1)
}

/// Probability that a random corrupt item outranks a random clean one on
/// `1 − C`, counting ties as one half. Computed from midranks.
pub fn detector_auc(clean: &[f64], corrupt: &[f64]) -> Option<f64> {
    if clean.is_empty() || corrupt.is_empty() {
        return None;
    }
    // Low confidence = suspicious, so rank on -C.
    let mut all: Vec<(f64, bool)> = clean
        .iter()
        .map(|&c| (-c, false))
        .chain(corrupt.iter().map(|&c| (-c, true)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0;
        rank_sum += midrank * all[i..j].iter().filter(|x| x.1).count() as f64;
        i = j;
    }
    let (n_pos, n_neg) = (corrupt.len() as f64, clean.len() as f64);
    Some((rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

/// Split confidences into clean and corrupt (per `log`, matched on the
/// corrupted triple's texts) and summarize both groups.
pub fn confidence_report_for(triples: &[RawTriple], confidence: &[f64], log: Option<&[Corruption]>) -> ConfidenceReport {
    let corrupted: HashSet<(&str, &str, &str)> = log
        .unwrap_or(&[])
        .iter()
        .map(Corruption::corrupted_key)
        .collect();
    let mut bins: Vec<HistogramBin> = (0..N_BINS)
        .map(|i| HistogramBin {
            lo: i as f64 / N_BINS as f64,
            hi: (i + 1) as f64 / N_BINS as f64,
            clean: 0,
            corrupt: 0,
        })
        .collect();
    let mut clean = Vec::new();
    let mut corrupt = Vec::new();
    for (t, &c) in triples.iter().zip(confidence) {
        let b = &mut bins[bin_of(c)];
        if corrupted.contains(&(t.title.as_str(), t.attribute.as_str(), t.value.as_str())) {
            b.corrupt += 1;
            corrupt.push(c);
        } else {
            b.clean += 1;
            clean.push(c);
        }
    }
    let mean = |xs: &[f64]| if xs.is_empty() { 0.0 } else { xs.iter().sum::<f64>() / xs.len() as f64 };
    let (mean_clean, mean_corrupt) = (mean(&clean), mean(&corrupt));
    let gap = if clean.is_empty() || corrupt.is_empty() { 0.0 } else { mean_clean - mean_corrupt };
    ConfidenceReport {
        bins,
        n_clean: clean.len(),
        n_corrupt: corrupt.len(),
        mean_clean,
        mean_corrupt,
        gap,
        detector_auc: detector_auc(&clean, &corrupt),
    }
}

pub fn confidence_report(ckpt: &ModelCheckpoint, log: Option<&[Corruption]>) -> ConfidenceReport {
    confidence_report_for(&ckpt.triples, &ckpt.confidence, log)
}

impl ConfidenceReport {
    pub fn write_histogram_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "bin_lo,bin_hi,count_clean,count_corrupt")?;
        for b in &self.bins {
            writeln!(out, "{},{},{},{}", b.lo, b.hi, b.clean, b.corrupt)?;
        }
        Ok(())
    }

    pub fn write_text(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "clean: {}", self.n_clean)?;
        writeln!(out, "corrupt: {}", self.n_corrupt)?;
        writeln!(out, "mean_clean: {:.6}", self.mean_clean)?;
        writeln!(out, "mean_corrupt: {:.6}", self.mean_corrupt)?;
        writeln!(out, "gap: {:.6}", self.gap)?;
        match self.detector_auc {
            Some(a) => writeln!(out, "detector_auc: {a:.6}"),
            None => writeln!(out, "detector_auc: n/a"),
        }
    }
}
