//! Gradient methods with cyclic and spectral steplengths for symmetric
//! positive definite linear systems.
//!
//! The crate provides:
//! - dense vectors and SPD operators (diagonal or CSR) with a strict
//!   left-to-right reduction order, so every run is bit-reproducible
//!   ([`linalg`]);
//! - steplength rules (steepest descent, BB1/BB2, the Yuan steplength, and
//!   the cyclic and retarded families built from them) behind a common
//!   phase-schedule interface ([`steplengths`]);
//! - a gradient-descent driver with convergence histories, plus a
//!   Hestenes-Stiefel conjugate gradient baseline ([`solver`]);
//! - spectrum diagnostics for steplength sequences ([`diagnostics`]);
//! - problem generators and Matrix Market input ([`problems`],
//!   [`matrix_market`]);
//! - a deterministic simulator for the gather and reduce communication
//!   strategies of the distributed matvec ([`parallel`]);
//! - a benchmark harness producing iteration-count tables ([`bench`]).

pub mod bench;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod matrix_market;
pub mod parallel;
pub mod problems;
pub mod solver;
pub mod steplengths;

pub use bench::{run_bench, BenchMethod, BenchProblem, BenchReport, BenchSpec, OutputFormat};
pub use diagnostics::{check_property_a, PropertyACheckConfig, PropertyAReport};
pub use error::{Error, Result};
pub use linalg::{dot, SpdOperator, SpectrumInfo, Vector};
pub use parallel::{
    partition_rows, simulate_parallel_solve, CommTrace, PartitionPlan, ReduceOrder, Strategy,
};
pub use problems::{GeneratorSpec, ProblemInstance, RhsPolicy, SpectrumSpec};
pub use solver::{solve_cg, solve_gradient, ConvergenceHistory, SolveConfig, SolveStatus};
pub use steplengths::{Branch, CanonicalKernel, QuotientKernel, SteplengthRule};
