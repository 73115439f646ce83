use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not a projector")]
    NotProjector,

    #[error("operator is not unitary")]
    NotUnitary,

    #[error("state is not normalized (squared norm {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("channel index {index} out of range for {len} channels")]
    Index { index: usize, len: usize },

    #[error("transition amplitude <f|U|in> vanishes (magnitude {magnitude:.3e})")]
    VanishingAmplitude { magnitude: f64 },

    #[error("postselection probability {prob:.3e} is too small for meter statistics")]
    ZeroPostselection { prob: f64 },

    #[error("pointer state has zero norm")]
    ZeroNorm,

    #[error("projectors are not orthogonal (max |P0 P1| entry {deviation:.3e})")]
    NotOrthogonal { deviation: f64 },

    #[error(
        "only {accepted} of {trials} trials passed postselection \
         (acceptance rate {rate:.3e}); at least 2 are needed"
    )]
    TooFewAccepted { accepted: u64, trials: u64, rate: f64 },

    #[error("{field}: {message}")]
    Document { field: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn document(field: impl Into<String>, message: impl ToString) -> Self {
        Error::Document {
            field: field.into(),
            message: message.to_string(),
        }
    }

    /// True for failures that come out of sampling or postselection rather
    /// than malformed input.
    pub fn is_statistical(&self) -> bool {
        matches!(
            self,
            Error::ZeroPostselection { .. } | Error::TooFewAccepted { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
