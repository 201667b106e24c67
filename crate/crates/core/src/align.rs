//! Unit-cost Levenshtein alignment with a deterministic backtrace.
//!
//! Backtrace preference: diagonal (match or substitution), then deletion,
//! then insertion.

use serde::Serialize;

use crate::error::Result;
use crate::sequence::TokenSequence;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EditOp {
    Match,
    Substitute,
    /// Token present only in the hypothesis.
    Insert,
    /// Token present only in the reference.
    Delete,
}

/// One step of an edit script, with indices into the two inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub op: EditOp,
    pub reference: Option<usize>,
    pub hypothesis: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EditCounts {
    pub matches: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
}

impl EditCounts {
    pub fn distance(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    fn record(&mut self, op: EditOp) {
        match op {
            EditOp::Match => self.matches += 1,
            EditOp::Substitute => self.substitutions += 1,
            EditOp::Delete => self.deletions += 1,
            EditOp::Insert => self.insertions += 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlignedPair {
    pub op: EditOp,
    pub reference: Option<String>,
    pub hypothesis: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Alignment {
    pub ops: Vec<AlignedPair>,
    pub counts: EditCounts,
}

/// Full DP table, `(n + 1) × (m + 1)`, row-major.
fn distance_table<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Vec<usize> {
    let (n, m) = (reference.len(), hypothesis.len());
    let w = m + 1;
    let mut d = vec![0usize; (n + 1) * w];
    for (j, cell) in d[..w].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        d[i * w] = i;
        for j in 1..=m {
            let sub = d[(i - 1) * w + j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            let del = d[(i - 1) * w + j] + 1;
            let ins = d[i * w + j - 1] + 1;
            d[i * w + j] = sub.min(del).min(ins);
        }
    }
    d
}

/// Minimal edit script turning `reference` into `hypothesis`.
pub fn align_slices<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> (Vec<Step>, EditCounts) {
    let w = hypothesis.len() + 1;
    let d = distance_table(reference, hypothesis);
    let (mut i, mut j) = (reference.len(), hypothesis.len());
    let mut steps = Vec::with_capacity(i.max(j));
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        let step = if i > 0 && j > 0 && {
            let same = reference[i - 1] == hypothesis[j - 1];
            here == d[(i - 1) * w + j - 1] + usize::from(!same)
        } {
            let op = if reference[i - 1] == hypothesis[j - 1] {
                EditOp::Match
            } else {
                EditOp::Substitute
            };
            i -= 1;
            j -= 1;
            Step {
                op,
                reference: Some(i),
                hypothesis: Some(j),
            }
        } else if i > 0 && here == d[(i - 1) * w + j] + 1 {
            i -= 1;
            Step {
                op: EditOp::Delete,
                reference: Some(i),
                hypothesis: None,
            }
        } else {
            j -= 1;
            Step {
                op: EditOp::Insert,
                reference: None,
                hypothesis: Some(j),
            }
        };
        steps.push(step);
    }
    steps.reverse();
    let mut counts = EditCounts::default();
    steps.iter().for_each(|s| counts.record(s.op));
    (steps, counts)
}

/// Unit-cost edit distance.
pub fn edit_distance<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> usize {
    *distance_table(reference, hypothesis).last().unwrap()
}

/// Aligns two sequences over the same alphabet.
pub fn align(reference: &TokenSequence, hypothesis: &TokenSequence) -> Result<Alignment> {
    reference.ensure_same_alphabet(hypothesis)?;
    let (r, h) = (reference.tokens(), hypothesis.tokens());
    let (steps, counts) = align_slices(r, h);
    let ops = steps
        .into_iter()
        .map(|s| AlignedPair {
            op: s.op,
            reference: s.reference.map(|i| r[i].clone()),
            hypothesis: s.hypothesis.map(|j| h[j].clone()),
        })
        .collect();
    Ok(Alignment { ops, counts })
}

impl Alignment {
    /// Space-separated edit script, e.g. `a=a b>c -d +e`.
    pub fn script(&self) -> String {
        self.ops
            .iter()
            .map(|p| match p.op {
                EditOp::Match => format!(
                    "{}={}",
                    p.reference.as_deref().unwrap(),
                    p.hypothesis.as_deref().unwrap()
                ),
                EditOp::Substitute => format!(
                    "{}>{}",
                    p.reference.as_deref().unwrap(),
                    p.hypothesis.as_deref().unwrap()
                ),
                EditOp::Delete => format!("-{}", p.reference.as_deref().unwrap()),
                EditOp::Insert => format!("+{}", p.hypothesis.as_deref().unwrap()),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}
