use std::fmt;

use cparity::Error;

/// Process exit status for a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 2,
    Parse = 3,
    Domain = 4,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: ExitKind,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            kind: ExitKind::Usage,
            message: message.into(),
        }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Failure {
            kind: ExitKind::Parse,
            message: message.into(),
        }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Failure {
            kind: ExitKind::Domain,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::Format { .. } => ExitKind::Parse,
            Error::InvalidArgument(_) | Error::Model(_) => ExitKind::Usage,
            _ => ExitKind::Domain,
        };
        Failure {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::parse(e.to_string())
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

/// Wraps an I/O error on `path`.
pub fn io_error(path: &std::path::Path, e: std::io::Error) -> Failure {
    Failure::parse(format!("{}: {e}", path.display()))
}

/// Wraps an error while writing `path`.
pub fn write_error(path: &std::path::Path, e: impl fmt::Display) -> Failure {
    Failure::domain(format!("cannot write {}: {e}", path.display()))
}
