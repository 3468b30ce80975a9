use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed θ / ψ text. `position` is a 0-based character offset.
    #[error("parse error at position {position} in {input:?}: {message}")]
    Parse {
        input: String,
        position: usize,
        message: String,
    },

    /// Syntactically valid input with an illegal parameter value.
    #[error("validation error: {0}")]
    Validation(String),

    /// The precision budget cannot certify the requested quantity.
    #[error("precision exhausted while {context}{}", certified_suffix(.last_certified))]
    PrecisionExhausted {
        context: String,
        last_certified: Option<usize>,
    },

    /// Time or memory budget exceeded.
    #[error("resource limit: {message}{}", cap_suffix(.suggested_cap))]
    Resource {
        message: String,
        suggested_cap: Option<f64>,
    },

    /// A construction whose hypotheses fail on the requested range.
    #[error("construction infeasible: {0}")]
    Infeasible(String),

    #[error("insufficient data: need at least {needed} usable points, got {got}")]
    InsufficientData { needed: usize, got: usize },
}

fn certified_suffix(last: &Option<usize>) -> String {
    match last {
        Some(k) => format!(" (last certified index {k})"),
        None => " (nothing certified)".to_string(),
    }
}

fn cap_suffix(cap: &Option<f64>) -> String {
    match cap {
        Some(c) => format!(" (suggested cap {c:.6e})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn exhausted(context: impl Into<String>, last_certified: Option<usize>) -> Self {
        Error::PrecisionExhausted {
            context: context.into(),
            last_certified,
        }
    }
}
