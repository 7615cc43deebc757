use std::fmt;

/// Process exit status for each failure class. Values are part of the
/// command-line contract and do not change between versions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Input = 2,
    Collision = 3,
    UnknownReference = 4,
    Infeasible = 5,
}

impl ExitKind {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ExitKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(ExitKind::Input, message)
    }

    pub fn code(&self) -> u8 {
        self.kind.code()
    }

    /// Prefix the message with where the problem was found.
    pub fn context(mut self, at: impl fmt::Display) -> Self {
        self.message = format!("{at}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<optofabric::Error> for CliError {
    fn from(e: optofabric::Error) -> Self {
        use optofabric::Error as E;
        let kind = match e {
            E::Collision { .. } => ExitKind::Collision,
            E::Unknown { .. } => ExitKind::UnknownReference,
            E::Infeasible { .. } => ExitKind::Infeasible,
            E::Domain(_) | E::Invalid { .. } => ExitKind::Input,
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
