//! Mispronunciation detection and diagnosis scoring.
//!
//! Each canonical position is judged by joining two alignments on the
//! canonical sequence: canonical ↔ annotated gives the ground truth (was the
//! position pronounced correctly, and as what), canonical ↔ recognized gives
//! the system's decision. Tokens inserted on either side have no canonical
//! position; they are tallied in [`InsertionTally`] and excluded from the
//! TA/FR/FA/TR counts.

mod eval;
mod metrics;
mod report;

pub use eval::{
    evaluate, parse_evaluation_file, AttributeBreakdown, AttributeLevel, EvaluationReport, Level,
    LevelReport,
};
pub use metrics::{accuracy, attribute_error_rate, attribute_prf, Prf};
pub use report::{diagnosis_report, AttributeFinding, DiagnosisEntry, DiagnosisReport};

use std::ops::{Add, AddAssign};

use serde::{Serialize, Serializer};

use crate::align::align_slices;
use crate::error::{Error, Result};
use crate::inventory::{parse_phoneme_sequence, Attribute, AttributeTable};
use crate::sequence::{AlphabetId, TokenSequence};

/// Canonical prompt, human annotation and system output for one utterance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedUtterance {
    canonical: TokenSequence,
    annotated: TokenSequence,
    recognized: TokenSequence,
}

impl AnnotatedUtterance {
    pub fn new(
        canonical: TokenSequence,
        annotated: TokenSequence,
        recognized: TokenSequence,
    ) -> Result<Self> {
        canonical.ensure_same_alphabet(&annotated)?;
        canonical.ensure_same_alphabet(&recognized)?;
        Ok(Self {
            canonical,
            annotated,
            recognized,
        })
    }

    /// Parses three whitespace-separated phoneme strings.
    pub fn phonemes(canonical: &str, annotated: &str, recognized: &str) -> Result<Self> {
        Self::new(
            TokenSequence::phonemes(canonical)?,
            TokenSequence::phonemes(annotated)?,
            TokenSequence::phonemes(recognized)?,
        )
    }

    pub fn canonical(&self) -> &TokenSequence {
        &self.canonical
    }

    pub fn annotated(&self) -> &TokenSequence {
        &self.annotated
    }

    pub fn recognized(&self) -> &TokenSequence {
        &self.recognized
    }

    pub fn alphabet(&self) -> &AlphabetId {
        self.canonical.alphabet()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Correctly pronounced and accepted.
    TrueAcceptance,
    /// Correctly pronounced but rejected.
    FalseRejection,
    /// Mispronounced but accepted.
    FalseAcceptance,
    /// Mispronounced, rejected, and recognized as what was actually said.
    CorrectDiagnosis,
    /// Mispronounced and rejected, but recognized as something else.
    DiagnosisError,
}

impl Verdict {
    pub fn is_rejection(self) -> bool {
        matches!(
            self,
            Verdict::FalseRejection | Verdict::CorrectDiagnosis | Verdict::DiagnosisError
        )
    }
}

/// The decision for one canonical position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PositionJudgement {
    pub position: usize,
    pub canonical: String,
    /// What the speaker produced; `None` when the annotation deletes it.
    pub annotated: Option<String>,
    /// What the system produced; `None` when the recognizer deletes it.
    pub recognized: Option<String>,
    pub verdict: Verdict,
}

/// Tokens that align to no canonical position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct InsertionTally {
    pub annotated: usize,
    pub recognized: usize,
}

impl Add for InsertionTally {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            annotated: self.annotated + o.annotated,
            recognized: self.recognized + o.recognized,
        }
    }
}

impl AddAssign for InsertionTally {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MddCounts {
    #[serde(rename = "TA")]
    pub true_acceptances: usize,
    #[serde(rename = "FR")]
    pub false_rejections: usize,
    #[serde(rename = "FA")]
    pub false_acceptances: usize,
    #[serde(rename = "CD")]
    pub correct_diagnoses: usize,
    #[serde(rename = "DE")]
    pub diagnosis_errors: usize,
}

impl MddCounts {
    pub fn new(ta: usize, fr: usize, fa: usize, cd: usize, de: usize) -> Self {
        Self {
            true_acceptances: ta,
            false_rejections: fr,
            false_acceptances: fa,
            correct_diagnoses: cd,
            diagnosis_errors: de,
        }
    }

    /// True rejections, `CD + DE`.
    pub fn true_rejections(&self) -> usize {
        self.correct_diagnoses + self.diagnosis_errors
    }

    pub fn total(&self) -> usize {
        self.true_acceptances
            + self.false_rejections
            + self.false_acceptances
            + self.true_rejections()
    }

    pub fn mispronounced(&self) -> usize {
        self.false_acceptances + self.true_rejections()
    }

    fn record(&mut self, verdict: Verdict) {
        match verdict {
            Verdict::TrueAcceptance => self.true_acceptances += 1,
            Verdict::FalseRejection => self.false_rejections += 1,
            Verdict::FalseAcceptance => self.false_acceptances += 1,
            Verdict::CorrectDiagnosis => self.correct_diagnoses += 1,
            Verdict::DiagnosisError => self.diagnosis_errors += 1,
        }
    }
}

impl Add for MddCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            true_acceptances: self.true_acceptances + o.true_acceptances,
            false_rejections: self.false_rejections + o.false_rejections,
            false_acceptances: self.false_acceptances + o.false_acceptances,
            correct_diagnoses: self.correct_diagnoses + o.correct_diagnoses,
            diagnosis_errors: self.diagnosis_errors + o.diagnosis_errors,
        }
    }
}

impl AddAssign for MddCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// Percentages; `None` when the denominator is zero (serialized as `"NA"`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MddRates {
    #[serde(rename = "FAR", serialize_with = "rate_or_na")]
    pub far: Option<f64>,
    #[serde(rename = "FRR", serialize_with = "rate_or_na")]
    pub frr: Option<f64>,
    #[serde(rename = "DER", serialize_with = "rate_or_na")]
    pub der: Option<f64>,
}

pub(crate) fn rate_or_na<S: Serializer>(
    v: &Option<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_f64(*x),
        None => s.serialize_str("NA"),
    }
}

/// `100 · num / den`, undefined for a zero denominator.
pub(crate) fn percent(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

/// Formats a rate with two decimals, or `NA`.
pub fn format_rate(rate: Option<f64>) -> String {
    rate.map_or_else(|| "NA".to_string(), |r| format!("{r:.2}"))
}

/// FAR = FA / (FA + TR), FRR = FR / (FR + TA), DER = DE / (CD + DE), in percent.
pub fn compute_rates(c: &MddCounts) -> MddRates {
    MddRates {
        far: percent(
            c.false_acceptances,
            c.false_acceptances + c.true_rejections(),
        ),
        frr: percent(c.false_rejections, c.false_rejections + c.true_acceptances),
        der: percent(c.diagnosis_errors, c.true_rejections()),
    }
}

/// Per-position judgements plus the insertion side channel.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PositionalMdd {
    pub positions: Vec<PositionJudgement>,
    pub insertions: InsertionTally,
}

impl PositionalMdd {
    pub fn counts(&self) -> MddCounts {
        let mut c = MddCounts::default();
        self.positions.iter().for_each(|p| c.record(p.verdict));
        c
    }
}

/// Token aligned to each reference position, and the number of insertions.
fn project_onto_reference<'a>(
    reference: &[String],
    hypothesis: &'a [String],
) -> (Vec<Option<&'a String>>, usize) {
    let (steps, counts) = align_slices(reference, hypothesis);
    let mut projected = vec![None; reference.len()];
    for s in steps {
        if let (Some(r), Some(h)) = (s.reference, s.hypothesis) {
            projected[r] = Some(&hypothesis[h]);
        }
    }
    (projected, counts.insertions)
}

/// Judges every canonical position of `u`.
pub fn judge_positions(u: &AnnotatedUtterance) -> Result<PositionalMdd> {
    if u.canonical.is_empty() {
        return Err(Error::EmptyCanonical);
    }
    let canonical = u.canonical.tokens();
    let (annotated, annotated_ins) = project_onto_reference(canonical, u.annotated.tokens());
    let (recognized, recognized_ins) = project_onto_reference(canonical, u.recognized.tokens());

    let positions = canonical
        .iter()
        .enumerate()
        .map(|(i, canon)| {
            let said = annotated[i];
            let heard = recognized[i];
            let correct = said == Some(canon);
            let accepted = heard == Some(canon);
            let verdict = match (correct, accepted) {
                (true, true) => Verdict::TrueAcceptance,
                (true, false) => Verdict::FalseRejection,
                (false, true) => Verdict::FalseAcceptance,
                // a recognizer deletion is a correct diagnosis only of an annotated deletion
                (false, false) if heard == said => Verdict::CorrectDiagnosis,
                (false, false) => Verdict::DiagnosisError,
            };
            PositionJudgement {
                position: i,
                canonical: canon.clone(),
                annotated: said.cloned(),
                recognized: heard.cloned(),
                verdict,
            }
        })
        .collect();

    Ok(PositionalMdd {
        positions,
        insertions: InsertionTally {
            annotated: annotated_ins,
            recognized: recognized_ins,
        },
    })
}

/// TA/FR/FA/CD/DE counts for one utterance.
pub fn classify_positions(u: &AnnotatedUtterance) -> Result<MddCounts> {
    judge_positions(u).map(|p| p.counts())
}

/// Lifts a phoneme-level utterance to one attribute.
///
/// Canonical and annotated phonemes are mapped through the table. The
/// recognized attribute sequence is taken from `recognized` when given (for
/// example a decoded attribute output), otherwise mapped from the utterance's
/// recognized phonemes.
pub fn attribute_utterance(
    table: &AttributeTable,
    u_phoneme: &AnnotatedUtterance,
    attribute: Attribute,
    recognized: Option<&TokenSequence>,
) -> Result<AnnotatedUtterance> {
    let map = |s: &TokenSequence| table.phonemes_to_attribute_sequence(attribute, s);
    // validate every phoneme, including the ones we might not map
    parse_phoneme_sequence(u_phoneme.recognized())?;
    let recognized = match recognized {
        Some(r) => r.clone(),
        None => map(u_phoneme.recognized())?,
    };
    AnnotatedUtterance::new(
        map(u_phoneme.canonical())?,
        map(u_phoneme.annotated())?,
        recognized,
    )
}

/// Attribute-level counts: an error only where the attribute's bit changes.
pub fn attribute_level_mdd(
    table: &AttributeTable,
    u_phoneme: &AnnotatedUtterance,
    attribute: Attribute,
    recognized: Option<&TokenSequence>,
) -> Result<MddCounts> {
    classify_positions(&attribute_utterance(
        table, u_phoneme, attribute, recognized,
    )?)
}
