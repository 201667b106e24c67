//! Batch evaluation over an utterance file.
//!
//! One utterance per line, `canonical|annotated|recognized`, each field a
//! whitespace-separated phoneme string. Blank lines and `#` comments are skipped.

use rayon::prelude::*;
use serde::Serialize;

use super::{
    attribute_utterance, compute_rates, judge_positions, AnnotatedUtterance, InsertionTally,
    MddCounts, MddRates,
};
use crate::error::{Error, Result};
use crate::inventory::{parse_phoneme_sequence, Attribute, AttributeTable};
use crate::sequence::TokenSequence;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Phoneme,
    Attribute,
    Both,
}

impl Level {
    fn phoneme(self) -> bool {
        matches!(self, Level::Phoneme | Level::Both)
    }

    fn attribute(self) -> bool {
        matches!(self, Level::Attribute | Level::Both)
    }
}

impl std::str::FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phoneme" => Ok(Level::Phoneme),
            "attribute" => Ok(Level::Attribute),
            "both" => Ok(Level::Both),
            other => Err(Error::BadConfig(format!(
                "level must be phoneme, attribute or both, found `{other}`"
            ))),
        }
    }
}

pub fn parse_evaluation_file(text: &str) -> Result<Vec<AnnotatedUtterance>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected 3 `|`-separated fields, found {}", fields.len()),
            });
        }
        let seq = |s: &str| {
            let seq = TokenSequence::phonemes(s)?;
            parse_phoneme_sequence(&seq)?;
            Ok::<_, Error>(seq)
        };
        let u = AnnotatedUtterance::new(seq(fields[0])?, seq(fields[1])?, seq(fields[2])?)
            .map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        if u.canonical().is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                message: Error::EmptyCanonical.to_string(),
            });
        }
        out.push(u);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelReport {
    pub counts: MddCounts,
    #[serde(rename = "TR")]
    pub true_rejections: usize,
    pub rates: MddRates,
    pub insertions: InsertionTally,
}

impl LevelReport {
    fn new(counts: MddCounts, insertions: InsertionTally) -> Self {
        Self {
            counts,
            true_rejections: counts.true_rejections(),
            rates: compute_rates(&counts),
            insertions,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttributeBreakdown {
    pub attribute: Attribute,
    #[serde(flatten)]
    pub report: LevelReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttributeLevel {
    /// Counts pooled over all 35 attributes.
    pub overall: LevelReport,
    pub per_attribute: Vec<AttributeBreakdown>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub utterances: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phoneme: Option<LevelReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attribute: Option<AttributeLevel>,
}

type Tally = (MddCounts, InsertionTally);

fn tally(u: &AnnotatedUtterance) -> Result<Tally> {
    let p = judge_positions(u)?;
    Ok((p.counts(), p.insertions))
}

fn sum(tallies: impl IntoIterator<Item = Tally>) -> Tally {
    tallies
        .into_iter()
        .fold(Default::default(), |(c, i), (c2, i2)| (c + c2, i + i2))
}

/// Scores every utterance at the requested level(s).
///
/// At attribute level the recognized attribute sequences are mapped from the
/// recognized phonemes.
pub fn evaluate(
    table: &AttributeTable,
    utterances: &[AnnotatedUtterance],
    level: Level,
) -> Result<EvaluationReport> {
    // per-utterance work runs in parallel; sums are folded in input order
    let per_utt: Vec<(Option<Tally>, Vec<Tally>)> = utterances
        .par_iter()
        .map(|u| {
            let phoneme = level.phoneme().then(|| tally(u)).transpose()?;
            let attrs = if level.attribute() {
                Attribute::all()
                    .map(|a| tally(&attribute_utterance(table, u, a, None)?))
                    .collect::<Result<Vec<_>>>()?
            } else {
                Vec::new()
            };
            Ok((phoneme, attrs))
        })
        .collect::<Result<_>>()?;

    let phoneme = level.phoneme().then(|| {
        let (c, i) = sum(per_utt.iter().filter_map(|(p, _)| *p));
        LevelReport::new(c, i)
    });

    let attribute = level.attribute().then(|| {
        let per_attribute: Vec<AttributeBreakdown> = Attribute::all()
            .map(|a| {
                let (c, i) = sum(per_utt.iter().map(|(_, v)| v[a.index()]));
                AttributeBreakdown {
                    attribute: a,
                    report: LevelReport::new(c, i),
                }
            })
            .collect();
        let (c, i) = sum(per_attribute
            .iter()
            .map(|b| (b.report.counts, b.report.insertions)));
        AttributeLevel {
            overall: LevelReport::new(c, i),
            per_attribute,
        }
    });

    Ok(EvaluationReport {
        utterances: utterances.len(),
        phoneme,
        attribute,
    })
}

impl EvaluationReport {
    /// Aligned plain-text summary.
    pub fn to_text(&self) -> String {
        use super::format_rate;
        let mut out = format!("utterances: {}\n", self.utterances);
        let header = format!(
            "{:<14}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}\n",
            "level", "TA", "FR", "FA", "CD", "DE", "FRR", "FAR", "DER", "ins_a", "ins_r"
        );
        let line = |name: &str, r: &LevelReport| {
            let c = &r.counts;
            format!(
                "{:<14}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}\n",
                name,
                c.true_acceptances,
                c.false_rejections,
                c.false_acceptances,
                c.correct_diagnoses,
                c.diagnosis_errors,
                format_rate(r.rates.frr),
                format_rate(r.rates.far),
                format_rate(r.rates.der),
                r.insertions.annotated,
                r.insertions.recognized
            )
        };
        out.push_str(&header);
        if let Some(p) = &self.phoneme {
            out.push_str(&line("phoneme", p));
        }
        if let Some(a) = &self.attribute {
            out.push_str(&line("attributes", &a.overall));
            for b in &a.per_attribute {
                out.push_str(&line(b.attribute.name(), &b.report));
            }
        }
        out
    }
}
