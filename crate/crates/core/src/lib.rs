//! Multi-label separable CTC with a shared blank over 35 binary speech
//! attributes, and the phoneme- and attribute-level mispronunciation detection
//! and diagnosis (MDD) scoring built on it.
//!
//! Module map:
//!
//! - [`inventory`]: phoneme set, attribute inventory, signature table
//! - [`ctc`]: single-alphabet CTC loss, gradient, collapse and a brute-force oracle
//! - [`sctc`]: the shared-blank multi-label loss
//! - [`decoder`]: greedy best-path decoding
//! - [`align`]: Levenshtein alignment
//! - [`mdd`]: TA/FR/FA/CD/DE classification, FAR/FRR/DER, AER and PRF
//! - [`toy`]: synthetic corpus and a linear-model trainer
//!
//! ```
//! use sctc_core::inventory::{Attribute, AttributeTable};
//! use sctc_core::{make_layout, parse_phoneme_sequence, sctc_sb_loss, Matrix, MultiLabelTarget, TokenSequence};
//!
//! # fn main() -> sctc_core::Result<()> {
//! let table = AttributeTable::shipped();
//! let attrs: Vec<Attribute> = Attribute::all().collect();
//! let layout = make_layout(&attrs)?;
//! assert_eq!((layout.width(), layout.blank_index()), (71, 70));
//!
//! let phonemes = TokenSequence::phonemes("dh eh r")?;
//! let target = MultiLabelTarget::from_phonemes(&table, &attrs, &parse_phoneme_sequence(&phonemes)?);
//! let logits = Matrix::zeros(12, layout.width());
//! let r = sctc_sb_loss(&logits, &layout, &target)?;
//! assert_eq!(r.per_category_nll.len(), 35);
//! assert_eq!(r.grad.cols(), 71);
//! # Ok(())
//! # }
//! ```

pub mod align;
pub mod ctc;
pub mod decoder;
pub mod error;
pub mod inventory;
pub mod matrix;
pub mod mdd;
pub mod sctc;
pub mod sequence;
pub mod toy;

pub use align::{align, Alignment, EditCounts, EditOp};
pub use ctc::{brute_force_ctc, collapse, ctc_loss, CtcResult, LogProbMatrix};
pub use decoder::{
    decode_all, format_attribute_decode, greedy_decode_category, greedy_decode_phoneme,
    parse_attribute_decode,
};
pub use error::{Error, Result};
pub use inventory::{
    parse_phoneme_sequence, Attribute, AttributeGroup, AttributeSignature, AttributeTable, Phoneme,
};
pub use matrix::Matrix;
pub use mdd::{
    attribute_error_rate, attribute_level_mdd, attribute_prf, classify_positions, compute_rates,
    diagnosis_report, AnnotatedUtterance, MddCounts, MddRates,
};
pub use sctc::{
    grouped_softmax, make_layout, sctc_sb_loss, CategoryLayout, MultiLabelTarget, SctcResult,
};
pub use sequence::{AlphabetId, TokenSequence};
