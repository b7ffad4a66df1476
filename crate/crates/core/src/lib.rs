//! Preconditioned primal-dual splitting (P-PDS) for problems of the form
//!
//! ```text
//! minimize  sum_i f_i(x_i) + sum_j g_j(z_j)   subject to  z_j = sum_i L_{j,i} x_i
//! ```
//!
//! together with diagonal preconditioner designers (scalar, absolute-sum,
//! positive-definite and the operator-norm based variable-wise design), the
//! proximal toolbox they need, and three reference signal-recovery problems.
//!
//! Variables are flat `Vec<f64>`s. Cubes use column-major indexing: the first
//! dimension varies fastest, so voxel `(i, j, k)` of an `n1 x n2 x n3` cube
//! lives at `i + n1 * (j + n2 * k)`.

pub mod error;
pub mod io;
pub mod linops;
pub mod precond;
pub mod problems;
pub mod prox;
pub mod solver;

pub use error::{Error, Result};
pub use linops::{LinOp, LinearOperator, OpGrid, VarShape};
pub use precond::{DesignTag, DualPreconditioner, PreconditionerPair};
pub use prox::{ExtReal, Groups, Metric, ProxFn};
pub use solver::{ConvergenceLog, IterateState, ProblemSpec, SolveOptions, StopRule, Term};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
