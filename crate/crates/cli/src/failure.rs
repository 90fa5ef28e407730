use csl_core::CslError;

/// Top-level error, mapped onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Malformed input: config syntax, unknown keys, table errors. Exit 2.
    Parse(anyhow::Error),
    /// The computation itself failed. Exit 3.
    Numerical(anyhow::Error),
    /// Anything else, typically file system errors. Exit 1.
    Io(anyhow::Error),
}

impl Failure {
    pub fn parse(msg: impl Into<String>) -> Self {
        Failure::Parse(anyhow::anyhow!(msg.into()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Parse(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 1,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Parse(e) | Failure::Numerical(e) | Failure::Io(e) => e,
        }
    }
}

impl From<CslError> for Failure {
    fn from(e: CslError) -> Self {
        match e {
            CslError::Parse { .. } | CslError::UnknownSpecies(_) => Failure::Parse(e.into()),
            other => Failure::Numerical(other.into()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.into())
    }
}
