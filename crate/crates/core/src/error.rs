use std::path::PathBuf;

/// Coarse error classes. The CLI maps each class to its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorClass {
    Parse,
    Dimension,
    Capacity,
    ConfigOrder,
    Io,
    Invalid,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported kernel type {0} (only 0 = linear is accepted)")]
    UnsupportedKernel(i64),

    #[error("non-finite value at line {line}")]
    NonFinite { line: usize },

    #[error("{0}")]
    Structural(String),

    #[error("dimension mismatch: expected {expected}, found {found}{}", context_suffix(.context))]
    Dimension {
        expected: usize,
        found: usize,
        context: Option<String>,
    },

    #[error("capacity exceeded: {}", format_violations(.violations))]
    Capacity { violations: Vec<CapacityViolation> },

    #[error("configuration order: {0}")]
    ConfigOrder(String),

    #[error("module `{rm}` is not admissible for partition `{rp}`")]
    NotAdmissible { rm: String, rp: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacityViolation {
    pub resource: &'static str,
    pub required: u64,
    pub available: u64,
}

fn context_suffix(c: &Option<String>) -> String {
    match c {
        Some(c) => format!(" ({c})"),
        None => String::new(),
    }
}

fn format_violations(v: &[CapacityViolation]) -> String {
    v.iter()
        .map(|v| format!("{} needs {} of {}", v.resource, v.required, v.available))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn dim(expected: usize, found: usize) -> Self {
        Error::Dimension {
            expected,
            found,
            context: None,
        }
    }

    /// Wraps the error with a prefix (typically a file name) while keeping its class.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. } | Error::UnsupportedKernel(_) | Error::NonFinite { .. } => {
                ErrorClass::Parse
            }
            Error::Structural(_) => ErrorClass::Invalid,
            Error::Dimension { .. } => ErrorClass::Dimension,
            Error::Capacity { .. } => ErrorClass::Capacity,
            Error::ConfigOrder(_) | Error::NotAdmissible { .. } => ErrorClass::ConfigOrder,
            Error::Io { .. } => ErrorClass::Io,
            Error::Context { source, .. } => source.class(),
        }
    }

    /// The innermost error, with any context layers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn read_file(path: &std::path::Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
