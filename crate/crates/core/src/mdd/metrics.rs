use serde::Serialize;

use super::rate_or_na;
use crate::align::{align_slices, EditOp};
use crate::error::{Error, Result};
use crate::sequence::{parse_attribute_token, AlphabetId, TokenSequence};

/// `100 · (S + D + I) / N` over the reference length `N`.
pub fn attribute_error_rate(reference: &TokenSequence, hypothesis: &TokenSequence) -> Result<f64> {
    reference.ensure_same_alphabet(hypothesis)?;
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let (_, counts) = align_slices(reference.tokens(), hypothesis.tokens());
    Ok(100.0 * counts.distance() as f64 / reference.len() as f64)
}

/// `100 - AER`.
pub fn accuracy(reference: &TokenSequence, hypothesis: &TokenSequence) -> Result<f64> {
    attribute_error_rate(reference, hypothesis).map(|aer| 100.0 - aer)
}

/// Token-level precision/recall of `+att` emissions, as fractions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Prf {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    #[serde(serialize_with = "rate_or_na")]
    pub precision: Option<f64>,
    #[serde(serialize_with = "rate_or_na")]
    pub recall: Option<f64>,
    #[serde(serialize_with = "rate_or_na")]
    pub f1: Option<f64>,
}

impl Prf {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |n: usize, d: usize| (d > 0).then(|| n as f64 / d as f64);
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
        Self {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        }
    }

    /// Pools raw counts (micro average).
    pub fn merge(&self, other: &Prf) -> Prf {
        Prf::from_counts(self.tp + other.tp, self.fp + other.fp, self.fn_ + other.fn_)
    }
}

/// Precision, recall and F1 of `+att` tokens from the alignment of `hypothesis`
/// against `reference`.
///
/// TP: aligned pairs that are both `+att`. FP: hypothesis `+att` aligned to
/// `-att` or inserted. FN: reference `+att` aligned to `-att` or deleted.
pub fn attribute_prf(reference: &TokenSequence, hypothesis: &TokenSequence) -> Result<Prf> {
    reference.ensure_same_alphabet(hypothesis)?;
    if !matches!(reference.alphabet(), AlphabetId::Attribute(_)) {
        return Err(Error::AlphabetMismatch {
            left: "attribute:*".into(),
            right: reference.alphabet().to_string(),
        });
    }
    let positive = |t: &String| parse_attribute_token(t).is_some_and(|(b, _)| b);
    let (r, h) = (reference.tokens(), hypothesis.tokens());
    let (steps, _) = align_slices(r, h);
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for s in steps {
        let rp = s.reference.map(|i| positive(&r[i]));
        let hp = s.hypothesis.map(|j| positive(&h[j]));
        match (s.op, rp, hp) {
            (EditOp::Match, Some(true), _) => tp += 1,
            (EditOp::Substitute, Some(false), Some(true)) | (EditOp::Insert, _, Some(true)) => {
                fp += 1
            }
            (EditOp::Substitute, Some(true), Some(false)) | (EditOp::Delete, Some(true), _) => {
                fn_ += 1
            }
            _ => {}
        }
    }
    Ok(Prf::from_counts(tp, fp, fn_))
}
