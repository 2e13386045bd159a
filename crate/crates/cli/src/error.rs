use std::fmt;

/// Failure of a command, classified by exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Flags that do not fit together or do not fit the model or data.
    Usage(String),
    /// Unreadable or invalid input files.
    Data(String),
    /// A fit or evaluation that broke down numerically.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<iphfit::Error> for CliError {
    fn from(e: iphfit::Error) -> Self {
        use iphfit::Error as E;
        let msg = e.to_string();
        match e {
            E::DimensionMismatch(_) | E::Domain { .. } | E::InsufficientData(_) | E::InvalidParameter(_) => {
                CliError::Data(msg)
            }
            E::Unsupported(_) => CliError::Usage(msg),
            E::SingularMatrix
            | E::InvalidModel(_)
            | E::NumericalUnderflow { .. }
            | E::DegenerateMarginal(_)
            | E::BetaSearchFailed(_) => CliError::Numerical(msg),
        }
    }
}

pub(crate) fn io_error(path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

pub type CliResult<T> = Result<T, CliError>;
