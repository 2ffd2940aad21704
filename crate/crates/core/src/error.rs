use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain of an operation (index out of range, x outside [0,1], ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller broke a precondition (depth mismatch, odd depth where even is required, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// An exact identity or table row failed. Signals a transcription or logic error.
    #[error("assertion failed: {0}")]
    Assertion(String),

    /// An enumeration or allocation guard was exceeded.
    #[error("resource guard exceeded: {0}")]
    Resource(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Every cover in a dimension fit was empty.
    #[error("level set empty at depth {0}")]
    EmptyLevelSet(u32),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Assertion(_) => 2,
            Error::Resource(_) => 3,
            _ => 1,
        }
    }

    /// Prefixes the message with the command-line flag it concerns, keeping the kind.
    pub fn for_flag(self, flag: &str) -> Self {
        let tag = |m: String| format!("{flag}: {m}");
        match self {
            Error::Domain(m) => Error::Domain(tag(m)),
            Error::Contract(m) => Error::Contract(tag(m)),
            Error::Assertion(m) => Error::Assertion(tag(m)),
            Error::Resource(m) => Error::Resource(tag(m)),
            Error::Numeric(m) => Error::Numeric(tag(m)),
            Error::Parse(m) => Error::Parse(tag(m)),
            Error::EmptyLevelSet(d) => Error::Domain(tag(format!("level set empty at depth {d}"))),
            Error::Io(e) => Error::Domain(tag(e.to_string())),
        }
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}
