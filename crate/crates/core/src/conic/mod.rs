//! Standard-form cone programs, the solver adapter and SDR post-processing.

mod backend;
mod dump;
mod expr;
pub mod lift;
mod problem;
mod rank_one;

pub use backend::{solve, solve_scaled, Solution, SolveStatus, Tolerances};
pub use dump::{dump, parse_dump};
pub use expr::{CExpr, CMatExpr, CVar, HermVar, LinExpr};
pub use problem::{cone_residual, BlockResidual, Cone, ConeBlock, ConicProblem, ProblemBuilder, VarEntry};
pub use rank_one::{extract_rank_one, principal_component, ExtractOptions, Extraction};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConicError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("solver backend error: {0}")]
    Backend(String),
    #[error("no randomised candidate could be made feasible")]
    ExtractionFailed,
    #[error("problem dump: {0}")]
    Parse(String),
}
