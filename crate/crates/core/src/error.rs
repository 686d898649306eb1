use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Shapes or counts that do not line up.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// A parameter outside its documented domain.
    #[error("configuration error: {0}")]
    Config(String),
    /// Index outside the addressable region.
    #[error("bounds error: {0}")]
    Bounds(String),
    /// A value violates a model constraint (ANC, ASC, γ range, finiteness).
    #[error("constraint error: {0}")]
    Constraint(String),
    /// A caller broke an operation's precondition.
    #[error("contract error: {0}")]
    Contract(String),
    /// Linear system is rank deficient or too ill-conditioned to solve.
    #[error("conditioning error: {0}")]
    Conditioning(String),
    /// Input carries no signal (e.g. all-zero cube when calibrating noise).
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),
    /// Non-finite value produced during a numerical procedure.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
