use std::fmt;

/// Command failure classes. The discriminant is the process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureKind {
    Verification = 1,
    Config = 2,
    Data = 3,
    Numerical = 4,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
}

impl Failure {
    pub fn new(kind: FailureKind, message: impl Into<String>) -> Self {
        Failure { kind, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Failure::new(FailureKind::Config, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure::new(FailureKind::Data, message)
    }

    pub fn exit_code(&self) -> i32 {
        self.kind as i32
    }

    /// Prefixes the message with context, keeping the kind.
    pub fn context(self, what: impl fmt::Display) -> Self {
        Failure { kind: self.kind, message: format!("{what}: {}", self.message) }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

impl From<mirnet_core::Error> for Failure {
    fn from(e: mirnet_core::Error) -> Self {
        use mirnet_core::Error;
        let kind = match &e {
            Error::Config(_) | Error::Shape(_) => FailureKind::Config,
            Error::Contract(_) | Error::Parse { .. } | Error::Io(_) => FailureKind::Data,
        };
        Failure::new(kind, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::data(e.to_string())
    }
}

pub type Result<T, E = Failure> = std::result::Result<T, E>;
