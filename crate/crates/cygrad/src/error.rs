use thiserror::Error;

/// Errors produced by solver, steplength, problem, and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A vector or matrix entry is NaN or infinite where a finite value is required.
    #[error("non-finite entry at index {index}: {value}")]
    NonFinite { index: usize, value: f64 },

    /// Operator construction rejected the input (asymmetry, bad sparsity structure, ...).
    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    /// A configuration value, rule string, or generator spec failed validation.
    /// The message names the offending token or field.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A structured input file (matrix, vector, config) violates its format.
    /// The message names the offending field or line.
    #[error("format error: {0}")]
    Format(String),

    /// The gradient is exactly zero: the iterate already solves the system.
    /// Steplength formulas are undefined at this point; callers should test
    /// for convergence before asking for a step.
    #[error("gradient is zero: iterate is already a solution")]
    ZeroGradient,

    /// A computed quantity came out non-finite or with an impossible sign.
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    /// A steplength rule was invoked in a state its schedule cannot produce
    /// (e.g. a hold or Yuan step at k = 0 with no predecessor data).
    #[error("rule sequencing error: {0}")]
    RuleSequencing(String),

    /// A retard/power schedule stepped outside its admissible window.
    #[error("schedule violation: {0}")]
    ScheduleViolation(String),

    /// A history lacks the recorded diagnostics an analysis needs.
    #[error("missing diagnostics: {0}")]
    MissingDiagnostics(String),

    /// An index argument lies outside the valid range.
    #[error("index out of range: {context}: {index} not in 1..={max}")]
    IndexOutOfRange {
        context: &'static str,
        index: usize,
        max: usize,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
