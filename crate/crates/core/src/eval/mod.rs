//! Error-detection evaluation: thresholds, precision-recall metrics, rank
//! fusion, confidence analysis and a training-time harness.

mod confidence;
mod fusion;
mod metrics;

use std::time::Instant;

use rand::seq::index;

pub use confidence::{confidence_report, confidence_report_for, detector_auc, ConfidenceReport, HistogramBin, N_BINS};
pub use fusion::{fuse_ranks, ranks_by_score, FusedItem, FusionOrder};
pub use metrics::{accuracy_at, pr_metrics, select_threshold, CurvePoint, EvalReport, PositiveClass, ScoredTriple, Threshold};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::kg::ProductGraph;
use crate::rng::{stream, Stream};
use crate::train::train;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingRow {
    pub ratio: f64,
    pub n_triples: usize,
    pub seconds: f64,
}

/// Train on a seeded uniform subsample for each ratio and record wall-clock time.
pub fn time_training(graph: &ProductGraph, run: &RunConfig, ratios: &[f64]) -> Result<Vec<TimingRow>> {
    if let Some(bad) = ratios.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
        return Err(Error::Config(vec![format!("sample ratio must be in (0, 1], got {bad}")]));
    }
    let mut rows = Vec::with_capacity(ratios.len());
    for &ratio in ratios {
        let n = ((ratio * graph.len() as f64).round() as usize).clamp(1, graph.len());
        let sub = if n == graph.len() {
            graph.clone()
        } else {
            let mut rng = stream(run.train.seed, Stream::Subsample);
            let mut picked = index::sample(&mut rng, graph.len(), n).into_vec();
            picked.sort_unstable();
            let triples = picked.iter().map(|&i| graph.triples()[i].clone()).collect();
            ProductGraph::assemble(triples, graph.attributes().to_vec(), graph.stopwords().clone())
        };
        let started = Instant::now();
        train(&sub, run, &[], None)?;
        rows.push(TimingRow {
            ratio,
            n_triples: sub.len(),
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok(rows)
}

pub fn write_timing_csv(rows: &[TimingRow], mut out: impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "ratio,triples,seconds")?;
    for r in rows {
        writeln!(out, "{},{},{:.6}", r.ratio, r.n_triples, r.seconds)?;
    }
    Ok(())
}
