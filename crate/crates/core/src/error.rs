use thiserror::Error;

/// Errors raised by model construction, mechanisms and oracles.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown {kind} `{name}`")]
    UnknownAgent { kind: &'static str, name: String },

    #[error("school `{school}` has {tenured} tenured teachers but quota {quota}")]
    QuotaExceededByTenure {
        school: String,
        tenured: usize,
        quota: usize,
    },

    #[error("reported preference induces a choice function that is not substitutable: {detail}")]
    SubstitutabilityViolation { detail: String },

    #[error("priorities are not lexicographic by tenure: school `{school}` ranks entrant `{entrant}` above employed `{employed}`")]
    NotLexicographicByTenure {
        school: String,
        employed: String,
        entrant: String,
    },

    #[error("oracle domain too large: {detail}")]
    DomainTooLarge { detail: String },

    #[error("matching is not dynamically stable; unjustified-claim minimality is defined only for stable inputs")]
    NotStableInput,

    #[error("infeasible matching: {detail}")]
    InfeasibleMatching { detail: String },

    #[error("invalid input: {detail}")]
    Invalid { detail: String },
}

impl Error {
    pub(crate) fn invalid(detail: impl Into<String>) -> Self {
        Error::Invalid {
            detail: detail.into(),
        }
    }

    pub(crate) fn too_large(detail: impl Into<String>) -> Self {
        Error::DomainTooLarge {
            detail: detail.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
