use dmkit_core::Error;

/// Failure classes and their process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed input, unsupported request or bad arguments (exit 1).
    Input,
    /// Nominal closed loop unstable or ill-posed (exit 2).
    Unstable,
    /// Numerical failure (exit 3).
    Numerical,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Input,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Input => 1,
            ErrorKind::Unstable => 2,
            ErrorKind::Numerical => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::EmptyPolynomial
            | Error::ZeroDenominator
            | Error::Dimension(_)
            | Error::Improper
            | Error::Domain(_)
            | Error::Unsupported(_)
            | Error::Input(_) => ErrorKind::Input,
            Error::AlgebraicLoop | Error::IllPosed | Error::NominallyUnstable => ErrorKind::Unstable,
            Error::NoRoots | Error::PoleOnAxis(_) | Error::Construction(_) | Error::Numerical(_) => {
                ErrorKind::Numerical
            }
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::input(e.to_string())
    }
}
