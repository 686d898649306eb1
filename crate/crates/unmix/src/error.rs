use std::fmt;

/// Command failure carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, missing or malformed inputs, shape mismatches (exit 2).
    Input(anyhow::Error),
    /// Non-finite values or diverging numerics (exit 3).
    Numerical(anyhow::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => 2,
            Self::Numerical(_) => 3,
        }
    }

    pub fn input(msg: impl fmt::Display) -> Self {
        Self::Input(anyhow::anyhow!("{msg}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Input(e) => write!(f, "{e:#}"),
            Self::Numerical(e) => write!(f, "numerical failure: {e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<unmix_core::Error> for CliError {
    fn from(e: unmix_core::Error) -> Self {
        match e {
            unmix_core::Error::Numerical(_) | unmix_core::Error::DegenerateSignal(_) => Self::Numerical(e.into()),
            other => Self::Input(other.into()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<unmix_core::Error>() {
            Ok(core) => core.into(),
            Err(e) => Self::Input(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Input(e.into())
    }
}
