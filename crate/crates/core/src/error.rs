use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes shared by every module.
///
/// The CLI maps these onto process exit codes, see [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter name was not bound, or a run configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// A model document could not be parsed or validated.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// An input lies outside the domain of an operation (β = 0, η = 0, N too small, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A decomposition failed or a computed quantity violated its numerical contract.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A documented precondition does not hold for the given input.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The reference energy sits on a sampled spectral curve; winding is undefined.
    #[error("reference energy {re}{im:+}i lies within {tol:e} of the sampled spectrum")]
    OnCurve { re: f64, im: f64, tol: f64 },

    /// Left and right zero modes are (numerically) orthogonal: the point is at or
    /// too close to an exceptional point.
    #[error("self-orthogonal zero mode: |<L|R>| = {overlap:e}")]
    SelfOrthogonal { overlap: f64 },

    /// The numerical null space has an unexpected dimension.
    #[error("null-space dimension {found} differs from expected {expected}")]
    DegeneracyAnomaly { expected: usize, found: usize },
}

impl Error {
    pub fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    /// 2 = configuration, 3 = numerical failure, 4 = precondition violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } => 2,
            Error::Numerical(_) | Error::DegeneracyAnomaly { .. } => 3,
            Error::Domain(_)
            | Error::Precondition(_)
            | Error::OnCurve { .. }
            | Error::SelfOrthogonal { .. } => 4,
        }
    }
}
