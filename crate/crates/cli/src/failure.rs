use std::fmt;
use std::process::ExitCode;

/// What went wrong, which decides the exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    /// Bad flags, missing credentials, invalid configuration.
    Usage,
    /// Unreadable or malformed input data.
    Data,
    /// The LLM service failed.
    Upstream,
}

impl Kind {
    pub fn exit_code(self) -> ExitCode {
        ExitCode::from(match self {
            Kind::Usage => 1,
            Kind::Data => 2,
            Kind::Upstream => 3,
        })
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

pub fn usage(msg: impl fmt::Display) -> Failure {
    Failure { kind: Kind::Usage, error: anyhow::anyhow!("{msg}") }
}

pub fn data(msg: impl fmt::Display) -> Failure {
    Failure { kind: Kind::Data, error: anyhow::anyhow!("{msg}") }
}

pub fn upstream(msg: impl fmt::Display) -> Failure {
    Failure { kind: Kind::Upstream, error: anyhow::anyhow!("{msg}") }
}

/// Tags an error with its exit-code class.
pub trait Classify<T> {
    fn usage(self) -> CmdResult<T>;
    fn data(self) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> CmdResult<T> {
        self.map_err(|e| Failure { kind: Kind::Usage, error: e.into() })
    }

    fn data(self) -> CmdResult<T> {
        self.map_err(|e| Failure { kind: Kind::Data, error: e.into() })
    }
}

/// Library errors from user-supplied configuration are usage errors;
/// everything else stems from the data.
pub fn from_lib(e: labelspan::Error) -> Failure {
    let kind = match e {
        labelspan::Error::Config(_)
        | labelspan::Error::UnresolvedPlaceholder(..)
        | labelspan::Error::NoSuchStage(_) => Kind::Usage,
        _ => Kind::Data,
    };
    Failure { kind, error: e.into() }
}
