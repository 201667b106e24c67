use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the crate.
///
/// Everything except [`Error::Io`] is a validation failure of the caller's
/// input; the CLI maps the two families to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("attribute table is missing phoneme `{0}`")]
    MissingPhoneme(String),

    #[error("phonemes `{first}` and `{second}` have identical attribute signatures")]
    DuplicateSignature { first: String, second: String },

    #[error("unknown attribute `{name}` in column {column}")]
    UnknownAttribute { name: String, column: usize },

    #[error("duplicate attribute `{0}`")]
    DuplicateAttribute(String),

    #[error("bad dimension at {location}: expected {expected}, found {found}")]
    BadDimension {
        location: String,
        expected: usize,
        found: usize,
    },

    #[error("unknown phoneme `{0}`")]
    UnknownPhoneme(String),

    #[error("attribute table violates a required constraint: {0}")]
    TableConstraint(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("token `{token}` is not a member of alphabet `{alphabet}`")]
    InvalidToken { token: String, alphabet: String },

    #[error("label {label} is out of range for {classes} non-blank classes")]
    InvalidLabel { label: usize, classes: usize },

    #[error("{}", infeasible_message(*category, *required, *frames))]
    InfeasibleTarget {
        category: Option<usize>,
        required: usize,
        frames: usize,
    },

    #[error("non-finite logit at row {row}, column {column}")]
    NonFiniteLogit { row: usize, column: usize },

    #[error("brute-force enumeration of {paths} paths exceeds the limit of {limit}")]
    TooLarge { paths: f64, limit: f64 },

    #[error("layout mismatch: expected {expected}, found {found}")]
    LayoutMismatch { expected: usize, found: usize },

    #[error("alphabet mismatch: `{left}` vs `{right}`")]
    AlphabetMismatch { left: String, right: String },

    #[error("canonical sequence is empty")]
    EmptyCanonical,

    #[error("reference sequence is empty")]
    EmptyReference,

    #[error("invalid configuration: {0}")]
    BadConfig(String),

    #[error("loss diverged (non-finite) at epoch {epoch}, step {step}")]
    DivergedLoss { epoch: usize, step: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn infeasible_message(category: Option<usize>, required: usize, frames: usize) -> String {
    match category {
        Some(c) => format!(
            "target for category {c} needs at least {required} frames but only {frames} are available"
        ),
        None => format!("target needs at least {required} frames but only {frames} are available"),
    }
}

impl Error {
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
