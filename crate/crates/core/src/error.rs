use thiserror::Error;

/// Errors raised while parsing policy inputs or mutating the table.
#[derive(Debug, Error)]
pub enum Error {
    #[error("path syntax error at column {position}: {message}")]
    PathSyntax { position: usize, message: String },

    #[error("predicate syntax error at column {position}: {message}")]
    PredicateSyntax { position: usize, message: String },

    #[error("malformed XML: {0}")]
    Xml(#[from] roxmltree::Error),

    #[error("rule {index}: {message}")]
    Rule { index: usize, message: String },

    #[error("line {line}: {message}")]
    Line { line: usize, message: String },

    #[error("users: {0}")]
    Users(String),

    #[error("unsupported action `{0}` (only select is supported)")]
    UnsupportedAction(String),

    #[error("an empty predicate cannot be stored or rendered")]
    EmptyPredicate,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by malformed user input rather than I/O.
    pub fn is_syntax(&self) -> bool {
        !matches!(self, Error::Io(_))
    }

    pub(crate) fn path(position: usize, message: impl Into<String>) -> Self {
        Error::PathSyntax {
            position,
            message: message.into(),
        }
    }

    pub(crate) fn predicate(position: usize, message: impl Into<String>) -> Self {
        Error::PredicateSyntax {
            position,
            message: message.into(),
        }
    }

    pub(crate) fn line(line: usize, message: impl Into<String>) -> Self {
        Error::Line {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
