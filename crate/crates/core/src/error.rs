use thiserror::Error;

/// Errors raised anywhere in the crate. Every variant carries the module that
/// raised it so the CLI can print module-tagged diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{module}: precondition violated: {msg}")]
    Precondition { module: &'static str, msg: String },

    #[error("{module}: quadrature failed: {msg}")]
    Quadrature { module: &'static str, msg: String },

    #[error("{module}: resource cap exceeded: {msg}")]
    ResourceCap { module: &'static str, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

impl Error {
    pub(crate) fn pre(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Precondition { module, msg: msg.into() }
    }

    /// Process exit status used by the CLI for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } => 2,
            Error::Precondition { .. } => 3,
            Error::Quadrature { .. } => 4,
            Error::ResourceCap { .. } => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
