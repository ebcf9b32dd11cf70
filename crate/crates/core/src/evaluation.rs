//! Confusion matrices and F1 scores.
//!
//! Precision, recall or F1 with a zero denominator are reported as 0 and the
//! class is flagged in the report.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::LabelIndex;
use crate::error::{Error, Result};

/// `k x k` counts; rows are gold classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(k: usize) -> Self {
        Self {
            k,
            counts: vec![0; k * k],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidConfig(
                "confusion matrix must be square".into(),
            ));
        }
        Ok(Self {
            k,
            counts: rows.concat(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, gold: usize, pred: usize) -> u64 {
        self.counts[gold * self.k + pred]
    }

    pub fn add(&mut self, gold: usize, pred: usize) {
        self.counts[gold * self.k + pred] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|i| self.get(i, i)).sum()
    }

    /// Support of class `c` (row sum).
    pub fn support(&self, c: usize) -> u64 {
        (0..self.k).map(|p| self.get(c, p)).sum()
    }

    /// Number of predictions of class `c` (column sum).
    pub fn predicted(&self, c: usize) -> u64 {
        (0..self.k).map(|g| self.get(g, c)).sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts
            .chunks(self.k.max(1))
            .map(<[u64]>::to_vec)
            .collect()
    }
}

pub fn confusion_matrix(gold: &[usize], pred: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch {
            rows: pred.len(),
            labels: gold.len(),
        });
    }
    let mut cm = ConfusionMatrix::zeros(k);
    for (&g, &p) in gold.iter().zip(pred) {
        for id in [g, p] {
            if id >= k {
                return Err(Error::ClassOutOfRange { id, classes: k });
            }
        }
        cm.add(g, p);
    }
    Ok(cm)
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    pub predicted: u64,
    /// Some denominator was zero and the 0 convention was applied.
    pub zero_division: bool,
}

pub fn class_scores(cm: &ConfusionMatrix) -> Vec<ClassScore> {
    (0..cm.n_classes())
        .map(|c| {
            let tp = cm.get(c, c);
            let support = cm.support(c);
            let predicted = cm.predicted(c);
            let (precision, zp) = ratio(tp, predicted);
            let (recall, zr) = ratio(tp, support);
            let (f1, zf) = ratio(2 * tp, support + predicted);
            ClassScore {
                precision,
                recall,
                f1,
                support,
                predicted,
                zero_division: zp || zr || zf,
            }
        })
        .collect()
}

fn require_samples(cm: &ConfusionMatrix) -> Result<()> {
    if cm.n_classes() == 0 || cm.total() == 0 {
        return Err(Error::EmptySelection("confusion matrix".into()));
    }
    Ok(())
}

/// F1 from pooled true positives, false positives and false negatives.
pub fn micro_f1(cm: &ConfusionMatrix) -> Result<f64> {
    require_samples(cm)?;
    let (mut tp, mut fp, mut fneg) = (0u64, 0u64, 0u64);
    for c in 0..cm.n_classes() {
        let hit = cm.get(c, c);
        tp += hit;
        fp += cm.predicted(c) - hit;
        fneg += cm.support(c) - hit;
    }
    Ok(ratio(2 * tp, 2 * tp + fp + fneg).0)
}

/// Unweighted mean of per-class F1 over all `k` classes.
pub fn macro_f1(cm: &ConfusionMatrix) -> Result<f64> {
    require_samples(cm)?;
    let scores = class_scores(cm);
    Ok(scores.iter().map(|s| s.f1).sum::<f64>() / scores.len() as f64)
}

/// Support-weighted mean of per-class F1.
pub fn weighted_f1(cm: &ConfusionMatrix) -> Result<f64> {
    require_samples(cm)?;
    let total = cm.total() as f64;
    Ok(class_scores(cm)
        .iter()
        .map(|s| s.f1 * s.support as f64)
        .sum::<f64>()
        / total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub label: String,
    #[serde(flatten)]
    pub score: ClassScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: u64,
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub per_class: Vec<ClassReport>,
    pub confusion: ConfusionMatrix,
    /// Gold labels unknown to the model; always counted as errors.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unseen_labels: Vec<String>,
}

impl EvalReport {
    pub fn from_confusion(
        cm: ConfusionMatrix,
        labels: &[String],
        unseen: Vec<String>,
    ) -> Result<Self> {
        if labels.len() != cm.n_classes() {
            return Err(Error::InvalidConfig(format!(
                "{} labels for a {}-class confusion matrix",
                labels.len(),
                cm.n_classes()
            )));
        }
        let per_class = labels
            .iter()
            .zip(class_scores(&cm))
            .map(|(label, score)| ClassReport {
                label: label.clone(),
                score,
            })
            .collect();
        Ok(Self {
            n: cm.total(),
            micro_f1: micro_f1(&cm)?,
            macro_f1: macro_f1(&cm)?,
            weighted_f1: weighted_f1(&cm)?,
            per_class,
            confusion: cm,
            unseen_labels: unseen,
        })
    }

    pub fn zero_division_classes(&self) -> impl Iterator<Item = &str> {
        self.per_class
            .iter()
            .filter(|c| c.score.zero_division)
            .map(|c| c.label.as_str())
    }

    /// Human-readable summary with percentages to two decimals.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let width = self
            .per_class
            .iter()
            .map(|c| c.label.chars().count())
            .max()
            .unwrap_or(5)
            .max(5);
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>7}",
            "label", "precision", "recall", "f1", "support"
        );
        for c in &self.per_class {
            let pad = width - c.label.chars().count();
            let _ = writeln!(
                out,
                "{}{}  {:>9.2}  {:>9.2}  {:>9.2}  {:>7}{}",
                c.label,
                " ".repeat(pad),
                c.score.precision * 100.0,
                c.score.recall * 100.0,
                c.score.f1 * 100.0,
                c.score.support,
                if c.score.zero_division { "  *" } else { "" }
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "samples      {}", self.n);
        let _ = writeln!(out, "micro F1     {:.2}", self.micro_f1 * 100.0);
        let _ = writeln!(out, "macro F1     {:.2}", self.macro_f1 * 100.0);
        let _ = writeln!(out, "weighted F1  {:.2}", self.weighted_f1 * 100.0);
        if self.per_class.iter().any(|c| c.score.zero_division) {
            let _ = writeln!(out, "(* zero denominator, scored as 0)");
        }
        if !self.unseen_labels.is_empty() {
            let _ = writeln!(
                out,
                "labels unknown to the model: {}",
                self.unseen_labels.join(", ")
            );
        }
        out
    }
}

/// Scores predicted class ids against gold label strings.
///
/// Gold labels missing from `labels` get extra classes that the model can
/// never predict, so those samples count as errors.
pub fn evaluate<S: AsRef<str>>(
    gold: &[S],
    pred: &[usize],
    labels: &LabelIndex,
) -> Result<EvalReport> {
    let mut space = labels.clone();
    let mut unseen = Vec::new();
    let gold_ids: Vec<usize> = gold
        .iter()
        .map(|g| {
            let g = g.as_ref();
            space.get(g).unwrap_or_else(|| {
                unseen.push(g.to_owned());
                space.insert(g)
            })
        })
        .collect();
    if !unseen.is_empty() {
        log::warn!(
            "{} evaluation label(s) never seen in training are scored as errors: {}",
            unseen.len(),
            unseen.join(", ")
        );
    }
    if let Some(&bad) = pred.iter().find(|&&p| p >= labels.len()) {
        return Err(Error::ClassOutOfRange {
            id: bad,
            classes: labels.len(),
        });
    }
    let cm = confusion_matrix(&gold_ids, pred, space.len())?;
    EvalReport::from_confusion(cm, space.labels(), unseen)
}
