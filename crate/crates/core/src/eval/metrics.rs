use std::io::Write;

use crate::error::{Error, Result};
use crate::kg::{AttributeTriple, Label};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredTriple {
    pub triple: AttributeTriple,
    pub score: f64,
}

impl ScoredTriple {
    pub fn new(triple: AttributeTriple, score: f64) -> Self {
        debug_assert!(score.is_finite(), "non-finite score");
        ScoredTriple { triple, score }
    }

    pub fn gold(&self) -> Label {
        self.triple.label
    }
}

/// Which gold class the precision-recall sweep treats as positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PositiveClass {
    /// Errors are the positives; lowest scores are ranked first.
    #[default]
    Incorrect,
    Correct,
}

impl PositiveClass {
    fn label(self) -> Label {
        match self {
            PositiveClass::Incorrect => Label::Incorrect,
            PositiveClass::Correct => Label::Correct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub theta: f64,
    pub accuracy: f64,
}

/// Accuracy of the rule `score > theta => correct` over labeled items.
pub fn accuracy_at(items: &[ScoredTriple], theta: f64) -> f64 {
    let labeled: Vec<&ScoredTriple> = items.iter().filter(|s| s.gold() != Label::Unlabeled).collect();
    if labeled.is_empty() {
        return 0.0;
    }
    let hits = labeled
        .iter()
        .filter(|s| (s.score > theta) == (s.gold() == Label::Correct))
        .count();
    hits as f64 / labeled.len() as f64
}

/// Pick θ maximizing validation accuracy of `score > θ => correct`.
///
/// Candidates are the midpoints between consecutive distinct scores plus one
/// sentinel below and one above all scores. Ties go to the larger θ.
pub fn select_threshold(valid: &[ScoredTriple]) -> Result<Threshold> {
    let mut pts: Vec<(f64, bool)> = valid
        .iter()
        .filter(|s| s.gold() != Label::Unlabeled)
        .map(|s| (s.score, s.gold() == Label::Correct))
        .collect();
    let n_correct = pts.iter().filter(|p| p.1).count();
    if n_correct == 0 || n_correct == pts.len() {
        return Err(Error::DegenerateValidation);
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pts.len() as f64;

    // θ below everything: all predicted correct.
    let mut theta = pts[0].0 - 1.0;
    let mut hits = n_correct;
    let mut best = Threshold {
        theta,
        accuracy: hits as f64 / n,
    };
    let mut i = 0;
    while i < pts.len() {
        // Move every item with this score below the threshold.
        let s = pts[i].0;
        while i < pts.len() && pts[i].0 == s {
            if pts[i].1 {
                hits -= 1;
            } else {
                hits += 1;
            }
            i += 1;
        }
        theta = if i < pts.len() { s + (pts[i].0 - s) / 2.0 } else { s + 1.0 };
        let accuracy = hits as f64 / n;
        if accuracy >= best.accuracy {
            best = Threshold { theta, accuracy };
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub cutoff: usize,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub positive_class: PositiveClass,
    pub n: usize,
    pub n_positive: usize,
    pub threshold: Option<Threshold>,
    /// Average precision over the ranking.
    pub pr_auc: f64,
    /// (precision target, best recall at precision ≥ target).
    pub r_at_p: Vec<(f64, f64)>,
    pub curve: Vec<CurvePoint>,
}

/// Rank labeled items (ascending score when errors are the positive class,
/// descending otherwise; ties keep input order) and sweep every cutoff.
pub fn pr_metrics(test: &[ScoredTriple], positive: PositiveClass, p_levels: &[f64]) -> EvalReport {
    let target = positive.label();
    let mut ranked: Vec<(f64, bool)> = test
        .iter()
        .filter(|s| s.gold() != Label::Unlabeled)
        .map(|s| (s.score, s.gold() == target))
        .collect();
    match positive {
        PositiveClass::Incorrect => ranked.sort_by(|a, b| a.0.total_cmp(&b.0)),
        PositiveClass::Correct => ranked.sort_by(|a, b| b.0.total_cmp(&a.0)),
    }
    let n_positive = ranked.iter().filter(|r| r.1).count();

    let mut curve = Vec::with_capacity(ranked.len());
    let mut tp = 0usize;
    let mut ap_sum = 0.0;
    for (k, &(_, is_pos)) in ranked.iter().enumerate() {
        let cutoff = k + 1;
        if is_pos {
            tp += 1;
        }
        let precision = tp as f64 / cutoff as f64;
        if is_pos {
            ap_sum += precision;
        }
        let recall = if n_positive == 0 { 0.0 } else { tp as f64 / n_positive as f64 };
        curve.push(CurvePoint { cutoff, precision, recall });
    }
    let pr_auc = if n_positive == 0 { 0.0 } else { ap_sum / n_positive as f64 };
    let r_at_p = p_levels
        .iter()
        .map(|&x| {
            let r = curve
                .iter()
                .filter(|c| c.precision >= x)
                .map(|c| c.recall)
                .fold(0.0, f64::max);
            (x, r)
        })
        .collect();

    EvalReport {
        positive_class: positive,
        n: ranked.len(),
        n_positive,
        threshold: None,
        pr_auc,
        r_at_p,
        curve,
    }
}

impl EvalReport {
    pub fn with_threshold(mut self, test: &[ScoredTriple], theta: f64) -> Self {
        self.threshold = Some(Threshold {
            theta,
            accuracy: accuracy_at(test, theta),
        });
        self
    }

    pub fn write_text(&self, mut out: impl Write) -> std::io::Result<()> {
        let class = match self.positive_class {
            PositiveClass::Incorrect => "incorrect",
            PositiveClass::Correct => "correct",
        };
        writeln!(out, "positive_class: {class}")?;
        writeln!(out, "triples: {}", self.n)?;
        writeln!(out, "positives: {}", self.n_positive)?;
        if let Some(t) = self.threshold {
            writeln!(out, "theta: {}", t.theta)?;
            writeln!(out, "accuracy: {:.6}", t.accuracy)?;
        }
        writeln!(out, "pr_auc: {:.6}", self.pr_auc)?;
        for (p, r) in &self.r_at_p {
            writeln!(out, "recall@precision={p}: {r:.6}")?;
        }
        Ok(())
    }

    pub fn write_curve_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "cutoff,precision,recall")?;
        for c in &self.curve {
            writeln!(out, "{},{},{}", c.cutoff, c.precision, c.recall)?;
        }
        Ok(())
    }
}
