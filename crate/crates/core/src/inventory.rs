//! Phoneme set, the 35 speech attributes and the phoneme → attribute signature table.
//!
//! The table itself lives in a TSV data file (see [`SHIPPED_TABLE`]); this
//! module only validates and queries it.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sequence::{AlphabetId, TokenSequence};

/// The shipped attribute table.
pub const SHIPPED_TABLE: &str = include_str!("../data/attributes.tsv");

/// The 39 phoneme symbols, in canonical (column) order.
///
/// `zh` and `sh` are separate members.
pub const PHONEMES: [&str; 39] = [
    "aa", "ae", "ah", "ao", "aw", "ay", "b", "ch", "d", "dh", "eh", "er", "ey", "f", "g", "hh",
    "ih", "iy", "jh", "k", "l", "m", "n", "ng", "ow", "oy", "p", "r", "s", "sh", "t", "th", "uh",
    "uw", "v", "w", "y", "z", "zh",
];

pub const NUM_PHONEMES: usize = PHONEMES.len();
pub const NUM_ATTRIBUTES: usize = 35;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeGroup {
    Manner,
    Place,
    Other,
}

/// Attribute names and groups in canonical order: manners, then places, then others.
const ATTRIBUTE_DEFS: [(&str, AttributeGroup); NUM_ATTRIBUTES] = {
    use AttributeGroup::*;
    [
        ("consonant", Manner),
        ("sonorant", Manner),
        ("fricative", Manner),
        ("nasal", Manner),
        ("stop", Manner),
        ("approximant", Manner),
        ("affricate", Manner),
        ("liquid", Manner),
        ("vowel", Manner),
        ("semivowel", Manner),
        ("continuant", Manner),
        ("alveolar", Place),
        ("palatal", Place),
        ("dental", Place),
        ("glottal", Place),
        ("labial", Place),
        ("velar", Place),
        ("mid", Place),
        ("high", Place),
        ("low", Place),
        ("front", Place),
        ("back", Place),
        ("central", Place),
        ("anterior", Place),
        ("posterior", Place),
        ("retroflex", Place),
        ("bilabial", Place),
        ("coronal", Place),
        ("dorsal", Place),
        ("long", Other),
        ("short", Other),
        ("monophthong", Other),
        ("diphthong", Other),
        ("round", Other),
        ("voiced", Other),
    ]
};

/// A member of the 39-phoneme set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Phoneme(u8);

impl Phoneme {
    /// Case-insensitive lookup.
    pub fn parse(symbol: &str) -> Result<Self> {
        let lower = symbol.to_ascii_lowercase();
        PHONEMES
            .iter()
            .position(|p| *p == lower)
            .map(|i| Phoneme(i as u8))
            .ok_or(Error::UnknownPhoneme(symbol.to_string()))
    }

    pub fn from_index(index: usize) -> Option<Self> {
        (index < NUM_PHONEMES).then_some(Phoneme(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn symbol(self) -> &'static str {
        PHONEMES[self.index()]
    }

    pub fn all() -> impl Iterator<Item = Phoneme> {
        (0..NUM_PHONEMES as u8).map(Phoneme)
    }
}

impl fmt::Display for Phoneme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// One of the 35 speech attributes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Attribute(u8);

impl Attribute {
    pub fn parse(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        ATTRIBUTE_DEFS
            .iter()
            .position(|(n, _)| *n == lower)
            .map(|i| Attribute(i as u8))
            .ok_or(Error::UnknownAttribute {
                name: name.to_string(),
                column: 0,
            })
    }

    pub fn from_index(index: usize) -> Option<Self> {
        (index < NUM_ATTRIBUTES).then_some(Attribute(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn name(self) -> &'static str {
        ATTRIBUTE_DEFS[self.index()].0
    }

    pub fn group(self) -> AttributeGroup {
        ATTRIBUTE_DEFS[self.index()].1
    }

    /// All attributes in canonical order.
    pub fn all() -> impl ExactSizeIterator<Item = Attribute> {
        (0..NUM_ATTRIBUTES as u8).map(Attribute)
    }

    pub fn alphabet(self) -> AlphabetId {
        AlphabetId::Attribute(self.name().to_string())
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// 35 presence bits in canonical attribute order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct AttributeSignature(u64);

impl AttributeSignature {
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        if bits.len() != NUM_ATTRIBUTES {
            return Err(Error::BadDimension {
                location: "attribute signature".into(),
                expected: NUM_ATTRIBUTES,
                found: bits.len(),
            });
        }
        Ok(Self(
            bits.iter()
                .enumerate()
                .fold(0, |acc, (i, &b)| acc | ((b as u64) << i)),
        ))
    }

    #[inline]
    pub fn get(self, attribute: Attribute) -> bool {
        self.0 >> attribute.index() & 1 == 1
    }

    pub fn bits(self) -> [bool; NUM_ATTRIBUTES] {
        std::array::from_fn(|i| self.0 >> i & 1 == 1)
    }

    pub fn len(self) -> usize {
        NUM_ATTRIBUTES
    }

    pub fn is_empty(self) -> bool {
        false
    }
}

/// An attribute on which two signatures disagree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SignatureDiff {
    pub attribute: Attribute,
    pub left: bool,
    pub right: bool,
}

impl Serialize for Attribute {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Validated phoneme → signature table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeTable {
    rows: [AttributeSignature; NUM_PHONEMES],
    version: String,
}

/// Facts every loaded table must agree with: (phoneme, attribute, bit).
const REQUIRED_BITS: &[(&str, &str, bool)] = &[
    ("z", "fricative", true),
    ("z", "voiced", true),
    ("z", "alveolar", true),
    ("s", "fricative", true),
    ("s", "voiced", false),
    ("s", "alveolar", true),
    ("jh", "voiced", true),
    ("ch", "voiced", false),
    ("zh", "voiced", true),
    ("sh", "voiced", false),
    ("r", "vowel", false),
    ("r", "liquid", true),
    ("ah", "vowel", true),
    ("ah", "liquid", false),
    // "how old are you": hh aw ow l d aa r y uw
    ("hh", "vowel", false),
    ("aw", "vowel", true),
    ("ow", "vowel", true),
    ("l", "vowel", false),
    ("d", "vowel", false),
    ("aa", "vowel", true),
    ("y", "vowel", false),
    ("uw", "vowel", true),
    ("hh", "liquid", false),
    ("aw", "liquid", false),
    ("ow", "liquid", false),
    ("l", "liquid", true),
    ("d", "liquid", false),
    ("aa", "liquid", false),
    ("y", "liquid", false),
    ("uw", "liquid", false),
];

impl AttributeTable {
    /// The table compiled into the crate.
    pub fn shipped() -> Self {
        Self::parse(SHIPPED_TABLE).expect("shipped attribute table is valid")
    }

    /// Parses and validates a table in the TSV format.
    ///
    /// The header names the 35 attributes in any order; columns are stored in
    /// canonical order. A `# version: X` comment sets the version tag.
    pub fn parse(source: &str) -> Result<Self> {
        let mut version = String::from("unversioned");
        let mut columns: Option<Vec<Attribute>> = None;
        let mut rows: [Option<(AttributeSignature, usize)>; NUM_PHONEMES] = [None; NUM_PHONEMES];

        for (i, raw) in source.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim_end_matches('\r');
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("version:") {
                    version = v.trim().to_string();
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let Some(cols) = &columns else {
                columns = Some(parse_header(&fields, lineno)?);
                continue;
            };
            if fields.len() != NUM_ATTRIBUTES + 1 {
                return Err(Error::BadDimension {
                    location: format!("line {lineno} (`{}`)", fields[0]),
                    expected: NUM_ATTRIBUTES + 1,
                    found: fields.len(),
                });
            }
            let phoneme = Phoneme::parse(fields[0])?;
            let mut bits = [false; NUM_ATTRIBUTES];
            for (col, (field, attr)) in fields[1..].iter().zip(cols).enumerate() {
                bits[attr.index()] = match *field {
                    "0" => false,
                    "1" => true,
                    other => return Err(Error::Parse {
                        line: lineno,
                        message: format!(
                            "column {} (`{attr}`) of `{phoneme}` must be 0 or 1, found `{other}`",
                            col + 2
                        ),
                    }),
                };
            }
            if rows[phoneme.index()].is_some() {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("phoneme `{phoneme}` appears twice"),
                });
            }
            rows[phoneme.index()] = Some((AttributeSignature::from_bits(&bits)?, lineno));
        }

        if columns.is_none() {
            return Err(Error::Parse {
                line: 1,
                message: "missing header row".into(),
            });
        }

        let mut out = [AttributeSignature::default(); NUM_PHONEMES];
        for p in Phoneme::all() {
            out[p.index()] = rows[p.index()]
                .ok_or_else(|| Error::MissingPhoneme(p.symbol().to_string()))?
                .0;
        }

        let table = Self { rows: out, version };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<()> {
        for a in Phoneme::all() {
            for b in Phoneme::all().filter(|b| *b > a) {
                if self.rows[a.index()] == self.rows[b.index()] {
                    return Err(Error::DuplicateSignature {
                        first: a.symbol().into(),
                        second: b.symbol().into(),
                    });
                }
            }
        }
        for &(p, attr, bit) in REQUIRED_BITS {
            let (p, attr) = (Phoneme::parse(p)?, Attribute::parse(attr)?);
            if self.signature(p).get(attr) != bit {
                return Err(Error::TableConstraint(format!(
                    "/{p}/ must be {}{attr}",
                    if bit { '+' } else { '-' }
                )));
            }
        }
        Ok(())
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn signature(&self, phoneme: Phoneme) -> AttributeSignature {
        self.rows[phoneme.index()]
    }

    /// Canonical attribute order used by every table.
    pub fn attribute_order(&self) -> Vec<Attribute> {
        Attribute::all().collect()
    }

    /// Inverse lookup; unique because signatures are pairwise distinct.
    pub fn phoneme_for(&self, signature: AttributeSignature) -> Option<Phoneme> {
        Phoneme::all().find(|p| self.rows[p.index()] == signature)
    }

    /// Presence bits of `attribute` along a phoneme sequence.
    pub fn attribute_bits(&self, attribute: Attribute, phonemes: &[Phoneme]) -> Vec<bool> {
        phonemes
            .iter()
            .map(|&p| self.signature(p).get(attribute))
            .collect()
    }

    /// Maps a phoneme sequence to the `+att`/`-att` sequence of one attribute.
    pub fn phonemes_to_attribute_sequence(
        &self,
        attribute: Attribute,
        phonemes: &TokenSequence,
    ) -> Result<TokenSequence> {
        let parsed = parse_phoneme_sequence(phonemes)?;
        Ok(TokenSequence::from_bits(
            attribute.name(),
            self.attribute_bits(attribute, &parsed),
        ))
    }

    /// All 35 attribute sequences for a phoneme sequence, in canonical order.
    pub fn map_all(&self, phonemes: &TokenSequence) -> Result<Vec<TokenSequence>> {
        let parsed = parse_phoneme_sequence(phonemes)?;
        Ok(Attribute::all()
            .map(|a| TokenSequence::from_bits(a.name(), self.attribute_bits(a, &parsed)))
            .collect())
    }

    /// Attributes on which `a` and `b` differ, in canonical order.
    pub fn signature_diff(&self, a: Phoneme, b: Phoneme) -> Vec<SignatureDiff> {
        let (sa, sb) = (self.signature(a), self.signature(b));
        Attribute::all()
            .filter(|&attr| sa.get(attr) != sb.get(attr))
            .map(|attribute| SignatureDiff {
                attribute,
                left: sa.get(attribute),
                right: sb.get(attribute),
            })
            .collect()
    }

    /// Serializes back to the TSV format in canonical order.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("# version: {}\nphoneme", self.version);
        for a in Attribute::all() {
            out.push('\t');
            out.push_str(a.name());
        }
        out.push('\n');
        for p in Phoneme::all() {
            out.push_str(p.symbol());
            for b in self.signature(p).bits() {
                out.push_str(if b { "\t1" } else { "\t0" });
            }
            out.push('\n');
        }
        out
    }
}

/// Validates a phoneme-alphabet sequence against the 39-symbol set.
pub fn parse_phoneme_sequence(seq: &TokenSequence) -> Result<Vec<Phoneme>> {
    if *seq.alphabet() != AlphabetId::Phoneme {
        return Err(Error::AlphabetMismatch {
            left: AlphabetId::Phoneme.to_string(),
            right: seq.alphabet().to_string(),
        });
    }
    seq.tokens().iter().map(|t| Phoneme::parse(t)).collect()
}

fn parse_header(fields: &[&str], lineno: usize) -> Result<Vec<Attribute>> {
    if fields.len() != NUM_ATTRIBUTES + 1 {
        return Err(Error::BadDimension {
            location: format!("header (line {lineno})"),
            expected: NUM_ATTRIBUTES + 1,
            found: fields.len(),
        });
    }
    if !fields[0].eq_ignore_ascii_case("phoneme") {
        return Err(Error::Parse {
            line: lineno,
            message: format!("header must start with `phoneme`, found `{}`", fields[0]),
        });
    }
    let mut seen = [false; NUM_ATTRIBUTES];
    fields[1..]
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let attr = Attribute::parse(name).map_err(|_| Error::UnknownAttribute {
                name: name.to_string(),
                column: i + 2,
            })?;
            if std::mem::replace(&mut seen[attr.index()], true) {
                return Err(Error::DuplicateAttribute(name.to_string()));
            }
            Ok(attr)
        })
        .collect()
}
