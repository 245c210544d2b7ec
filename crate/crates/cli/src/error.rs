use std::fmt;

use per_etd::Error;

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Core(Error),
    /// Every trial diverged; the output was still written.
    Diverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Invalid(_) => 1,
            Self::Core(Error::Numerical(_) | Error::RankDeficient(_) | Error::NotPositiveDefinite { .. }) => 2,
            Self::Core(_) => 1,
            Self::Diverged(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Invalid(m) => write!(f, "{m}"),
            Self::Core(e) => write!(f, "{e}"),
            Self::Diverged(m) => write!(f, "all trials diverged: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Invalid(format!("io error: {e}"))
    }
}
