//! Micro- and macro-averaged F1 over multi-label predictions.

use crate::error::{MileError, Result};

use super::LabelSet;

/// Per-label true positive, false positive and false negative counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Confusion {
    /// `2TP / (2TP + FP + FN)`, defined as 0 when nothing was predicted or
    /// expected.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }
}

pub fn confusion_per_label(pred: &LabelSet, truth: &LabelSet) -> Result<Vec<Confusion>> {
    if pred.node_count() != truth.node_count() || pred.label_count() != truth.label_count() {
        return Err(MileError::Dimension(format!(
            "prediction covers {} nodes x {} labels, truth {} x {}",
            pred.node_count(),
            pred.label_count(),
            truth.node_count(),
            truth.label_count()
        )));
    }
    let mut c = vec![Confusion::default(); truth.label_count()];
    for u in 0..truth.node_count() {
        let (p, t) = (pred.labels_of(u), truth.labels_of(u));
        // both sides are sorted: merge them
        let (mut i, mut j) = (0, 0);
        while i < p.len() || j < t.len() {
            match (p.get(i), t.get(j)) {
                (Some(&a), Some(&b)) if a == b => {
                    c[a].tp += 1;
                    i += 1;
                    j += 1;
                }
                (Some(&a), Some(&b)) if a < b => {
                    c[a].fp += 1;
                    i += 1;
                }
                (Some(&a), None) => {
                    c[a].fp += 1;
                    i += 1;
                }
                (_, Some(&b)) => {
                    c[b].fn_ += 1;
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
    }
    Ok(c)
}

pub fn micro_f1(pred: &LabelSet, truth: &LabelSet) -> Result<f64> {
    let pooled =
        confusion_per_label(pred, truth)?
            .into_iter()
            .fold(Confusion::default(), |a, b| Confusion {
                tp: a.tp + b.tp,
                fp: a.fp + b.fp,
                fn_: a.fn_ + b.fn_,
            });
    Ok(pooled.f1())
}

pub fn macro_f1(pred: &LabelSet, truth: &LabelSet) -> Result<f64> {
    let per = confusion_per_label(pred, truth)?;
    if per.is_empty() {
        return Ok(0.0);
    }
    Ok(per.iter().map(Confusion::f1).sum::<f64>() / per.len() as f64)
}
