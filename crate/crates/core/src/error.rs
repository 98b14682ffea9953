use thiserror::Error;

/// Errors raised by the model builders, solvers and front end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model violates a structural contract (empty children, unknown
    /// place, k out of range, missing component, ...).
    #[error("structural error in {node}: {reason}")]
    Structural { node: String, reason: String },

    /// An argument lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// State-space exploration exceeded the caller's bound.
    #[error("state space exceeds the bound of {bound} states")]
    StateOverflow { bound: usize },

    /// Immediate transitions form a cycle among vanishing markings.
    #[error("immediate-transition livelock through markings {witness}")]
    Livelock { witness: String },

    /// The CTMC has more than one recurrent class.
    #[error("reducible chain with {} recurrent classes: {}", .classes.len(), format_classes(.classes))]
    Reducible { classes: Vec<Vec<usize>> },

    /// Linear solve failed or left a residual above tolerance.
    #[error("numerical error: {reason} (residual {residual:e})")]
    Numerical { reason: String, residual: f64 },

    /// Firing a transition that is not enabled.
    #[error("transition {0} is not enabled in the given marking")]
    NotEnabled(String),

    /// Percentage-difference index is undefined (all outputs zero).
    #[error("sensitivity index undefined for {0}: every output is zero")]
    UndefinedIndex(String),

    /// Scenario file could not be parsed.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        key: Option<String>,
        message: String,
    },

    #[error("io error: {0}")]
    Io(String),
}

fn format_classes(classes: &[Vec<usize>]) -> String {
    classes
        .iter()
        .map(|c| {
            let ids: Vec<String> = c.iter().map(|i| i.to_string()).collect();
            format!("{{{}}}", ids.join(","))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

impl Error {
    pub(crate) fn structural(node: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Structural {
            node: node.into(),
            reason: reason.into(),
        }
    }

    /// Short machine-readable kind tag, used by the CLI and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Structural { .. } => "structural",
            Error::Domain(_) => "domain",
            Error::StateOverflow { .. } => "overflow",
            Error::Livelock { .. } => "livelock",
            Error::Reducible { .. } => "reducible",
            Error::Numerical { .. } => "numerical",
            Error::NotEnabled(_) => "not-enabled",
            Error::UndefinedIndex(_) => "undefined-index",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
