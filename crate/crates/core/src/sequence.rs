//! Token sequences tagged with the alphabet they are drawn from.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Symbols reserved for the CTC blank. They never appear inside a [`TokenSequence`].
pub const BLANK_SYMBOLS: [&str; 2] = ["<blank>", "<b>"];

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphabetId {
    /// The 39-symbol phoneme set.
    Phoneme,
    /// The binary alphabet `{+name, -name}` of one attribute.
    Attribute(String),
    /// Free-form symbols, used for generic alignment and CTC examples.
    Symbols,
}

impl fmt::Display for AlphabetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphabetId::Phoneme => f.write_str("phoneme"),
            AlphabetId::Attribute(name) => write!(f, "attribute:{name}"),
            AlphabetId::Symbols => f.write_str("symbols"),
        }
    }
}

/// A presence (`+att`) or absence (`-att`) token.
pub fn attribute_token(name: &str, present: bool) -> String {
    format!("{}{name}", if present { '+' } else { '-' })
}

/// Parses `+name` / `-name` (also accepting U+2212 for the minus sign).
pub fn parse_attribute_token(token: &str) -> Option<(bool, &str)> {
    if let Some(rest) = token.strip_prefix('+') {
        Some((true, rest))
    } else if let Some(rest) = token.strip_prefix('-') {
        Some((false, rest))
    } else {
        token.strip_prefix('\u{2212}').map(|rest| (false, rest))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct TokenSequence {
    alphabet: AlphabetId,
    tokens: Vec<String>,
}

impl TokenSequence {
    /// Builds a sequence, checking every token against the alphabet.
    ///
    /// Phoneme tokens are lowercased. Membership in the phoneme inventory is
    /// checked by the inventory operations, not here.
    pub fn new<I, S>(alphabet: AlphabetId, tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out = Vec::new();
        for tok in tokens {
            let mut tok: String = tok.into();
            if alphabet == AlphabetId::Phoneme {
                tok.make_ascii_lowercase();
            }
            check_token(&alphabet, &tok)?;
            if let (AlphabetId::Attribute(_), Some((present, name))) =
                (&alphabet, parse_attribute_token(&tok))
            {
                tok = attribute_token(name, present);
            }
            out.push(tok);
        }
        Ok(Self {
            alphabet,
            tokens: out,
        })
    }

    pub fn empty(alphabet: AlphabetId) -> Self {
        Self {
            alphabet,
            tokens: Vec::new(),
        }
    }

    /// Splits on whitespace.
    pub fn parse(alphabet: AlphabetId, text: &str) -> Result<Self> {
        Self::new(alphabet, text.split_whitespace())
    }

    pub fn phonemes(text: &str) -> Result<Self> {
        Self::parse(AlphabetId::Phoneme, text)
    }

    /// One token per character, over the free-form alphabet.
    pub fn chars(text: &str) -> Result<Self> {
        Self::new(
            AlphabetId::Symbols,
            text.chars()
                .filter(|c| !c.is_whitespace())
                .map(String::from),
        )
    }

    /// Attribute sequence from presence bits.
    pub fn from_bits(attribute: &str, bits: impl IntoIterator<Item = bool>) -> Self {
        Self {
            alphabet: AlphabetId::Attribute(attribute.to_string()),
            tokens: bits
                .into_iter()
                .map(|b| attribute_token(attribute, b))
                .collect(),
        }
    }

    pub fn alphabet(&self) -> &AlphabetId {
        &self.alphabet
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Presence bits for an attribute sequence; `None` for other alphabets.
    pub fn bits(&self) -> Option<Vec<bool>> {
        match self.alphabet {
            AlphabetId::Attribute(_) => self
                .tokens
                .iter()
                .map(|t| parse_attribute_token(t).map(|(b, _)| b))
                .collect(),
            _ => None,
        }
    }

    pub(crate) fn ensure_same_alphabet(&self, other: &TokenSequence) -> Result<()> {
        if self.alphabet != other.alphabet {
            return Err(Error::AlphabetMismatch {
                left: self.alphabet.to_string(),
                right: other.alphabet.to_string(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

fn check_token(alphabet: &AlphabetId, tok: &str) -> Result<()> {
    let invalid = || Error::InvalidToken {
        token: tok.to_string(),
        alphabet: alphabet.to_string(),
    };
    if tok.is_empty() || BLANK_SYMBOLS.contains(&tok) || tok.chars().any(char::is_whitespace) {
        return Err(invalid());
    }
    if let AlphabetId::Attribute(name) = alphabet {
        match parse_attribute_token(tok) {
            Some((_, n)) if n == name => {}
            _ => return Err(invalid()),
        }
    }
    Ok(())
}
