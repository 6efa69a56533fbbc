//! Sparse sequential quadratic programming with an ADMM inner solver.

pub mod ldl;
pub mod sqp;
pub mod qp;
pub mod sparse;

pub use qp::{solve_qp, QpOptions, QpProblem, QpSolution, QpSolver, QpStatus};
pub use sqp::{kkt_residual, solve_nlp, KktResiduals, NlpSolution, SolveStatus, SolverOptions};
