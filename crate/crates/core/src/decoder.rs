//! Greedy best-path decoding: frame-wise argmax followed by collapse.
//!
//! Ties go to the lowest column index of the full logit matrix.

use rayon::prelude::*;

use crate::ctc::{collapse, LogProbMatrix};
use crate::error::{Error, Result};
use crate::inventory::{Attribute, Phoneme, NUM_ATTRIBUTES, NUM_PHONEMES};
use crate::matrix::Matrix;
use crate::sctc::{CategoryLayout, PLUS};
use crate::sequence::{AlphabetId, TokenSequence};

/// Width of a phoneme recognizer's output: 39 phonemes plus blank.
pub const PHONEME_WIDTH: usize = NUM_PHONEMES + 1;

/// Index of the largest value among `candidates` (column indices into `row`),
/// preferring the lowest column on ties.
fn argmax_columns(row: &[f64], candidates: &[usize]) -> usize {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by_key(|&k| candidates[k]);
    let mut best = order[0];
    for &k in &order[1..] {
        if row[candidates[k]] > row[candidates[best]] {
            best = k;
        }
    }
    best
}

/// Decodes category `category` into a `+att`/`-att` sequence.
pub fn greedy_decode_category(
    logits: &Matrix,
    layout: &CategoryLayout,
    category: usize,
) -> Result<TokenSequence> {
    layout.check_logits(logits)?;
    if category >= layout.len() {
        return Err(Error::LayoutMismatch {
            expected: layout.len(),
            found: category,
        });
    }
    let triple = layout.triple(category);
    // the triple softmax is monotone, so argmax over raw logits equals argmax over
    // the grouped distribution and keeps exact ties exact
    let path: Vec<usize> = logits
        .iter_rows()
        .map(|row| argmax_columns(row, &triple))
        .collect();
    let name = &layout.categories()[category].name;
    Ok(TokenSequence::from_bits(
        name,
        collapse(&path, &crate::sctc::BLANK)
            .into_iter()
            .map(|k| k == PLUS),
    ))
}

/// Decodes every category, in layout order.
pub fn decode_all(logits: &Matrix, layout: &CategoryLayout) -> Result<Vec<TokenSequence>> {
    layout.check_logits(logits)?;
    (0..layout.len())
        .into_par_iter()
        .map(|i| greedy_decode_category(logits, layout, i))
        .collect()
}

/// Decodes a `T × 40` phoneme posteriorgram (blank last).
pub fn greedy_decode_phoneme(logits: &Matrix) -> Result<TokenSequence> {
    if logits.cols() != PHONEME_WIDTH {
        return Err(Error::BadDimension {
            location: "phoneme logits columns".into(),
            expected: PHONEME_WIDTH,
            found: logits.cols(),
        });
    }
    let log_probs = LogProbMatrix::from_logits(logits)?;
    let all: Vec<usize> = (0..PHONEME_WIDTH).collect();
    let path: Vec<usize> = log_probs
        .as_matrix()
        .iter_rows()
        .map(|row| argmax_columns(row, &all))
        .collect();
    let symbols = collapse(&path, &NUM_PHONEMES)
        .into_iter()
        .map(|k| Phoneme::from_index(k).expect("non-blank column").symbol());
    TokenSequence::new(AlphabetId::Phoneme, symbols)
}

/// One line per category: `name<TAB>tok tok ...`.
pub fn format_attribute_decode(layout: &CategoryLayout, decoded: &[TokenSequence]) -> String {
    let mut out = String::new();
    for (cat, seq) in layout.categories().iter().zip(decoded) {
        out.push_str(&cat.name);
        out.push('\t');
        out.push_str(&seq.to_string());
        out.push('\n');
    }
    out
}

/// Reads the output of [`format_attribute_decode`] for all 35 attributes.
///
/// Lines may come in any order; the result follows canonical attribute order.
pub fn parse_attribute_decode(text: &str) -> Result<Vec<TokenSequence>> {
    let mut slots: Vec<Option<TokenSequence>> = vec![None; NUM_ATTRIBUTES];
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (name, tokens) = line.split_once('\t').unwrap_or((line.trim(), ""));
        let attribute = Attribute::parse(name.trim())?;
        let seq = TokenSequence::parse(attribute.alphabet(), tokens)?;
        if slots[attribute.index()].replace(seq).is_some() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("attribute `{name}` appears twice"),
            });
        }
    }
    slots
        .into_iter()
        .zip(Attribute::all())
        .map(|(s, a)| {
            s.ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("no line for attribute `{}`", a.name()),
            })
        })
        .collect()
}
