use std::fmt;

use serde::Serialize;

use super::{attribute_utterance, judge_positions, AnnotatedUtterance, Verdict};
use crate::error::{Error, Result};
use crate::inventory::{Attribute, AttributeTable, NUM_ATTRIBUTES};
use crate::sequence::{attribute_token, parse_attribute_token, TokenSequence};

/// One attribute the system flagged at a canonical position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AttributeFinding {
    pub attribute: Attribute,
    pub expected: bool,
    /// `None` when the recognizer produced nothing for this position.
    pub detected: Option<bool>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiagnosisEntry {
    pub position: usize,
    pub canonical: String,
    /// Phoneme the annotator heard at this position, if any.
    pub annotated: Option<String>,
    pub findings: Vec<AttributeFinding>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DiagnosisReport {
    pub entries: Vec<DiagnosisEntry>,
}

impl DiagnosisReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Builds the per-position attribute feedback for one utterance.
///
/// `recognized` holds the 35 decoded attribute sequences in canonical
/// attribute order. A position is reported when at least one attribute's
/// recognized token differs from the canonical one.
pub fn diagnosis_report(
    table: &AttributeTable,
    u_phoneme: &AnnotatedUtterance,
    recognized: &[TokenSequence],
) -> Result<DiagnosisReport> {
    if recognized.len() != NUM_ATTRIBUTES {
        return Err(Error::LayoutMismatch {
            expected: NUM_ATTRIBUTES,
            found: recognized.len(),
        });
    }
    let phoneme_level = judge_positions(u_phoneme)?;
    let mut findings: Vec<Vec<AttributeFinding>> = vec![Vec::new(); u_phoneme.canonical().len()];

    for (attribute, rec) in Attribute::all().zip(recognized) {
        let au = attribute_utterance(table, u_phoneme, attribute, Some(rec))?;
        for p in judge_positions(&au)?.positions {
            if !p.verdict.is_rejection() {
                continue;
            }
            let bit = |t: &str| parse_attribute_token(t).map(|(b, _)| b);
            findings[p.position].push(AttributeFinding {
                attribute,
                expected: bit(&p.canonical).expect("mapped attribute token"),
                detected: p.recognized.as_deref().and_then(bit),
                verdict: p.verdict,
            });
        }
    }

    let entries = phoneme_level
        .positions
        .into_iter()
        .zip(findings)
        .filter(|(_, f)| !f.is_empty())
        .map(|(p, findings)| DiagnosisEntry {
            position: p.position,
            canonical: p.canonical,
            annotated: p.annotated,
            findings,
        })
        .collect();
    Ok(DiagnosisReport { entries })
}

impl fmt::Display for DiagnosisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            write!(f, "position {} /{}/", e.position, e.canonical)?;
            match &e.annotated {
                Some(a) if *a != e.canonical => write!(f, " (annotated /{a}/)")?,
                Some(_) => {}
                None => write!(f, " (annotated as deleted)")?,
            }
            writeln!(f, ":")?;
            for finding in &e.findings {
                let name = finding.attribute.name();
                let detected = finding
                    .detected
                    .map_or_else(|| "nothing".to_string(), |b| attribute_token(name, b));
                writeln!(
                    f,
                    "  expected {}, detected {}",
                    attribute_token(name, finding.expected),
                    detected
                )?;
            }
        }
        Ok(())
    }
}
