use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("relay loop unstable: |w^H H_RR v| = {gain:.6} (limit {limit})")]
    LoopUnstable { gain: f64, limit: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("conic subproblem infeasible: {0}")]
    Infeasible(String),

    #[error("conic solver numeric failure: {0}")]
    NumericFailure(String),

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("infeasible direction: {0}")]
    InfeasibleDirection(String),

    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    EmptyInput(String),
}

impl Error {
    /// Prefixes the message with where the failure happened.
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            Error::DimensionMismatch(m) => Error::DimensionMismatch(format!("{ctx}: {m}")),
            Error::Infeasible(m) => Error::Infeasible(format!("{ctx}: {m}")),
            Error::NumericFailure(m) => Error::NumericFailure(format!("{ctx}: {m}")),
            Error::RankDeficient(m) => Error::RankDeficient(format!("{ctx}: {m}")),
            Error::InfeasibleDirection(m) => Error::InfeasibleDirection(format!("{ctx}: {m}")),
            Error::DegenerateDirection(m) => Error::DegenerateDirection(format!("{ctx}: {m}")),
            Error::Config(m) => Error::Config(format!("{ctx}: {m}")),
            Error::EmptyInput(m) => Error::EmptyInput(format!("{ctx}: {m}")),
            e @ Error::LoopUnstable { .. } => e,
        }
    }

    /// Errors that mark a channel draw as unusable for a scheme rather than a bug.
    pub fn is_drop(&self) -> bool {
        matches!(
            self,
            Error::Infeasible(_)
                | Error::InfeasibleDirection(_)
                | Error::RankDeficient(_)
                | Error::DegenerateDirection(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
