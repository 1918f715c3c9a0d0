use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    /// Division by zero, log of a nonpositive number and similar.
    #[error("domain violation in `{expr}`: {reason}")]
    Domain { expr: String, reason: String },

    #[error("{value} is outside the domain ({lo}, {hi})")]
    OutsideDomain { value: f64, lo: f64, hi: f64 },

    #[error("invalid interval ({lo}, {hi})")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound}")]
    Quadrature { estimate: f64, error_bound: f64 },

    #[error("target {target} is not bracketed by [{lo}, {hi}] (values {f_lo}, {f_hi})")]
    Bracket {
        target: f64,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("function is not strictly monotone on ({lo}, {hi})")]
    NonMonotone { lo: f64, hi: f64 },

    #[error("step size underflow at t = {t} (last good state {state:?})")]
    StepUnderflow { t: f64, state: Vec<f64> },

    #[error("non-finite derivative at t = {t}")]
    NonFinite { t: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// The sign of a coefficient changes on the working domain.
    #[error("sign of {what} changes on the subinterval ({lo}, {hi})")]
    SignChange { what: String, lo: f64, hi: f64 },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("diagnostics disagree: {0}")]
    Diagnostics(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
