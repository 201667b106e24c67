//! Separable CTC with a shared blank (SCTC-SB).
//!
//! The output layer carries one `+att` and one `-att` column per binary
//! category plus a single blank column shared by every category. Each
//! category is normalized over its own triple `{+att, -att, blank}` and scored
//! with an independent CTC recursion; the utterance loss is the sum of the
//! per-category negative log-likelihoods (the product of their probabilities).
//! The blank column's gradient accumulates the contributions of all categories.

use rayon::prelude::*;

use crate::ctc::{self, CtcResult, LogProbMatrix};
use crate::error::{Error, Result};
use crate::inventory::{Attribute, AttributeTable, Phoneme};
use crate::matrix::Matrix;
use crate::sequence::{AlphabetId, TokenSequence};

/// Column of `+att` inside a category triple.
pub const PLUS: usize = 0;
/// Column of `-att` inside a category triple.
pub const MINUS: usize = 1;
/// Column of the shared blank inside a category triple.
pub const BLANK: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Category {
    pub name: String,
    pub plus_index: usize,
    pub minus_index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoryLayout {
    categories: Vec<Category>,
    blank_index: usize,
    width: usize,
}

impl CategoryLayout {
    /// Checks that the `2N + 1` indices are distinct and cover `0..2N+1`.
    pub fn new(categories: Vec<Category>, blank_index: usize) -> Result<Self> {
        let width = 2 * categories.len() + 1;
        let mut seen = vec![false; width];
        for idx in categories
            .iter()
            .flat_map(|c| [c.plus_index, c.minus_index])
            .chain(std::iter::once(blank_index))
        {
            if idx >= width || std::mem::replace(&mut seen[idx], true) {
                return Err(Error::BadConfig(format!(
                    "layout index {idx} is out of range or repeated (width {width})"
                )));
            }
        }
        let mut names: Vec<&str> = categories.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateAttribute(w[0].to_string()));
        }
        Ok(Self {
            categories,
            blank_index,
            width,
        })
    }

    /// Standard layout: `+att` columns `0..N`, `-att` columns `N..2N`, blank at `2N`.
    pub fn binary<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let n = names.len();
        let categories = names
            .iter()
            .enumerate()
            .map(|(i, name)| Category {
                name: name.as_ref().to_string(),
                plus_index: i,
                minus_index: n + i,
            })
            .collect();
        Self::new(categories, 2 * n)
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn blank_index(&self) -> usize {
        self.blank_index
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Columns `[plus, minus, blank]` of category `i`.
    pub fn triple(&self, i: usize) -> [usize; 3] {
        let c = &self.categories[i];
        [c.plus_index, c.minus_index, self.blank_index]
    }

    pub(crate) fn check_logits(&self, logits: &Matrix) -> Result<()> {
        if logits.cols() != self.width {
            return Err(Error::LayoutMismatch {
                expected: self.width,
                found: logits.cols(),
            });
        }
        Ok(())
    }
}

/// Layout over attributes: `+att` in the given order, then `-att`, then the blank.
pub fn make_layout(attributes: &[Attribute]) -> Result<CategoryLayout> {
    let names: Vec<&str> = attributes.iter().map(|a| a.name()).collect();
    CategoryLayout::binary(&names)
}

/// Target for one utterance: presence bits per category, all of equal length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiLabelTarget {
    per_category: Vec<Vec<bool>>,
}

impl MultiLabelTarget {
    pub fn new(per_category: Vec<Vec<bool>>) -> Result<Self> {
        if let Some(first) = per_category.first() {
            if let Some(bad) = per_category.iter().find(|c| c.len() != first.len()) {
                return Err(Error::BadDimension {
                    location: "multi-label target length".into(),
                    expected: first.len(),
                    found: bad.len(),
                });
            }
        }
        Ok(Self { per_category })
    }

    /// Decomposes a phoneme sequence into one bit sequence per attribute.
    pub fn from_phonemes(
        table: &AttributeTable,
        attributes: &[Attribute],
        phonemes: &[Phoneme],
    ) -> Self {
        Self {
            per_category: attributes
                .iter()
                .map(|&a| table.attribute_bits(a, phonemes))
                .collect(),
        }
    }

    /// Builds a target from attribute sequences ordered like `layout`.
    pub fn from_sequences(layout: &CategoryLayout, sequences: &[TokenSequence]) -> Result<Self> {
        if sequences.len() != layout.len() {
            return Err(Error::LayoutMismatch {
                expected: layout.len(),
                found: sequences.len(),
            });
        }
        let per_category = layout
            .categories()
            .iter()
            .zip(sequences)
            .map(|(cat, seq)| {
                let expected = AlphabetId::Attribute(cat.name.clone());
                if *seq.alphabet() != expected {
                    return Err(Error::AlphabetMismatch {
                        left: expected.to_string(),
                        right: seq.alphabet().to_string(),
                    });
                }
                Ok(seq.bits().expect("attribute alphabet"))
            })
            .collect::<Result<_>>()?;
        Self::new(per_category)
    }

    pub fn categories(&self) -> usize {
        self.per_category.len()
    }

    /// Common length `U` of every category sequence.
    pub fn len(&self) -> usize {
        self.per_category.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn category(&self, i: usize) -> &[bool] {
        &self.per_category[i]
    }

    /// Category `i` as CTC labels over its triple.
    pub fn labels(&self, i: usize) -> Vec<usize> {
        self.per_category[i]
            .iter()
            .map(|&b| if b { PLUS } else { MINUS })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SctcResult {
    pub total_neg_log_likelihood: f64,
    pub per_category_nll: Vec<f64>,
    /// Gradient with respect to the raw `T × width` logits.
    pub grad: Matrix,
}

/// Raw logits of category `i` as a `T × 3` matrix `[plus, minus, blank]`.
pub fn category_logits(logits: &Matrix, layout: &CategoryLayout, i: usize) -> Matrix {
    logits.select_columns(&layout.triple(i))
}

/// Per-category log-probabilities over `{+att, -att, blank}`.
///
/// The same blank logit enters every category's normalization.
pub fn grouped_softmax(logits: &Matrix, layout: &CategoryLayout) -> Result<Vec<LogProbMatrix>> {
    layout.check_logits(logits)?;
    logits.ensure_finite()?;
    (0..layout.len())
        .map(|i| LogProbMatrix::from_logits(&category_logits(logits, layout, i)))
        .collect()
}

/// Per-category CTC results; the first failing category (lowest index) aborts.
fn per_category(
    logits: &Matrix,
    layout: &CategoryLayout,
    target: &MultiLabelTarget,
) -> Result<Vec<CtcResult>> {
    layout.check_logits(logits)?;
    if target.categories() != layout.len() {
        return Err(Error::LayoutMismatch {
            expected: layout.len(),
            found: target.categories(),
        });
    }
    logits.ensure_finite()?;
    let frames = logits.rows();
    if let Some((i, required)) = (0..layout.len())
        .map(|i| (i, ctc::min_frames(target.category(i))))
        .find(|&(_, r)| r > frames)
    {
        return Err(Error::InfeasibleTarget {
            category: Some(i),
            required,
            frames,
        });
    }
    // collect keeps category order, so the reduction below is order-independent of scheduling
    (0..layout.len())
        .into_par_iter()
        .map(|i| ctc::ctc_loss(&category_logits(logits, layout, i), &target.labels(i)))
        .collect()
}

/// SCTC-SB loss and gradient for one utterance.
pub fn sctc_sb_loss(
    logits: &Matrix,
    layout: &CategoryLayout,
    target: &MultiLabelTarget,
) -> Result<SctcResult> {
    let results = per_category(logits, layout, target)?;
    let mut grad = Matrix::zeros(logits.rows(), layout.width());
    let mut per_category_nll = Vec::with_capacity(results.len());
    for (i, r) in results.iter().enumerate() {
        let cols = layout.triple(i);
        for t in 0..logits.rows() {
            let src = r.grad.row(t);
            let dst = grad.row_mut(t);
            for (k, &c) in cols.iter().enumerate() {
                dst[c] += src[k];
            }
        }
        per_category_nll.push(r.neg_log_likelihood);
    }
    Ok(SctcResult {
        total_neg_log_likelihood: per_category_nll.iter().sum(),
        per_category_nll,
        grad,
    })
}
