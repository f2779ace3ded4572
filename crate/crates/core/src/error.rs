use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A builder or operation received parameters outside its domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A random graph family cannot realize the requested number of shortcuts.
    #[error("infeasible request: {0}")]
    Infeasible(String),

    /// The input violates an operation's precondition (e.g. `x == y`).
    #[error("domain error: {0}")]
    Domain(String),

    /// An edge list or graph violated one of the graph invariants.
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    /// A linear solve or eigendecomposition failed.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Walk enumeration exceeded its configured budget.
    #[error("walk enumeration from vertex {start} at length {length} exceeded the limit of {limit} walks")]
    EnumerationLimit { start: usize, length: usize, limit: usize },

    /// The census does not reach far enough for a finite-graph evaluation.
    #[error("census covers distances up to {covered} but the graph diameter is {diameter}")]
    IncompleteCensus { covered: usize, diameter: usize },

    /// A Monte Carlo estimate came out degenerate (e.g. a zero denominator).
    #[error("degenerate estimate: {0}")]
    Degenerate(String),

    /// Root finding could not bracket the requested condition.
    #[error("bracket error: {0}")]
    Bracket(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
