use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A field was evaluated outside its domain (log of a nonpositive value, division by zero, ...).
    #[error("domain error in {op}{}: {detail}", located(.expr))]
    Domain { op: String, expr: Option<String>, detail: String },

    #[error("parse error at byte {offset}: {msg}")]
    Parse { offset: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Matrix too close to singular to invert reliably.
    #[error("singular {what} at {point:?} (condition number {cond:.3e})")]
    Singular { what: String, point: Vec<f64>, cond: f64 },

    #[error("degenerate Hessian at {point:?}: {detail}")]
    Regularity { point: Vec<f64>, detail: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("validation failed: {0}")]
    Validation(String),
}

impl Error {
    pub(crate) fn domain(op: &str, detail: impl Into<String>) -> Self {
        Error::Domain { op: op.to_string(), expr: None, detail: detail.into() }
    }

    /// Attaches the offending sub-expression to a domain error that has none yet.
    pub(crate) fn at_expr(self, text: impl FnOnce() -> String) -> Self {
        match self {
            Error::Domain { op, expr: None, detail } => Error::Domain { op, expr: Some(text()), detail },
            other => other,
        }
    }

    /// True for failures caused by the numbers rather than the input description.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. } | Error::Singular { .. } | Error::Regularity { .. } | Error::Convergence { .. } | Error::NonFinite(_)
        )
    }
}

fn located(expr: &Option<String>) -> String {
    match expr {
        Some(e) => format!(" at `{e}`"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
