//! Matrix-free linear operators.
//!
//! Every operator carries its forward map, its adjoint and an upper bound of
//! its operator norm. Preconditioner designers consume only that bound, so the
//! bound must never be smaller than the true norm.

mod diff;
mod graph;
mod grid;
mod lemma;
mod matrix;
mod norm;
mod sampling;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use diff::{diff_b, diff_h, diff_v, Diff};
pub use graph::{graph_diff, graph_norm_bound_printed, GraphDiff, GraphSpec};
pub use grid::{GridOperator, OpGrid};
pub(crate) use grid::{join as grid_join, split as grid_split};
pub use lemma::lemma1_decompose;
pub use matrix::{blockdiag_matrix_op, matrix_op, mixing_op, spectral_norm, MatrixOp};
pub use norm::{
    adjoint_consistency_check, materialize, materialize_with_cap, power_iteration_norm,
    DEFAULT_MATERIALIZE_CAP,
};
pub use sampling::{sampling_op, Sampling};

/// Dimensions of a variable. The flat length is the product of `dims`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarShape {
    dims: Vec<usize>,
}

impl VarShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Structural(format!(
                "shape dims must be non-empty and positive, got {dims:?}"
            )));
        }
        Ok(Self { dims })
    }

    pub fn vector(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    /// A shape that allows zero length, used for the output of an edgeless graph.
    pub(crate) fn possibly_empty(n: usize) -> Self {
        Self { dims: vec![n] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for VarShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// A linear map between flat real vectors.
///
/// Implementations overwrite the output buffer. Both buffers are sized by the
/// caller according to `in_shape` and `out_shape`.
pub trait LinearOperator: Send + Sync + fmt::Debug {
    fn in_shape(&self) -> &VarShape;
    fn out_shape(&self) -> &VarShape;
    fn forward(&self, x: &[f64], y: &mut [f64]);
    fn adjoint(&self, y: &[f64], x: &mut [f64]);
    /// Upper bound of the operator norm.
    fn norm_bound(&self) -> f64;

    /// Dense representation when the operator is matrix-backed.
    fn dense(&self) -> Option<nalgebra::DMatrix<f64>> {
        None
    }
}

/// Shared, immutable handle to a linear operator.
#[derive(Clone, Debug)]
pub struct LinOp(Arc<dyn LinearOperator>);

impl LinOp {
    pub fn new<T: LinearOperator + 'static>(op: T) -> Self {
        Self(Arc::new(op))
    }

    pub fn in_shape(&self) -> &VarShape {
        self.0.in_shape()
    }

    pub fn out_shape(&self) -> &VarShape {
        self.0.out_shape()
    }

    pub fn in_len(&self) -> usize {
        self.in_shape().len()
    }

    pub fn out_len(&self) -> usize {
        self.out_shape().len()
    }

    pub fn norm_bound(&self) -> f64 {
        self.0.norm_bound()
    }

    pub fn dense(&self) -> Option<nalgebra::DMatrix<f64>> {
        self.0.dense()
    }

    pub fn forward_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.in_len());
        debug_assert_eq!(y.len(), self.out_len());
        self.0.forward(x, y)
    }

    pub fn adjoint_into(&self, y: &[f64], x: &mut [f64]) {
        debug_assert_eq!(y.len(), self.out_len());
        debug_assert_eq!(x.len(), self.in_len());
        self.0.adjoint(y, x)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.out_len()];
        self.forward_into(x, &mut y);
        y
    }

    pub fn apply_adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.in_len()];
        self.adjoint_into(y, &mut x);
        x
    }

    pub fn as_operator(&self) -> &dyn LinearOperator {
        self.0.as_ref()
    }
}

#[derive(Debug)]
struct Identity {
    shape: VarShape,
}

impl LinearOperator for Identity {
    fn in_shape(&self) -> &VarShape {
        &self.shape
    }
    fn out_shape(&self) -> &VarShape {
        &self.shape
    }
    fn forward(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        x.copy_from_slice(y);
    }
    fn norm_bound(&self) -> f64 {
        1.0
    }
}

pub fn identity(shape: VarShape) -> LinOp {
    LinOp::new(Identity { shape })
}

#[derive(Debug)]
struct Scaled {
    inner: LinOp,
    factor: f64,
}

impl LinearOperator for Scaled {
    fn in_shape(&self) -> &VarShape {
        self.inner.in_shape()
    }
    fn out_shape(&self) -> &VarShape {
        self.inner.out_shape()
    }
    fn forward(&self, x: &[f64], y: &mut [f64]) {
        self.inner.forward_into(x, y);
        y.iter_mut().for_each(|v| *v *= self.factor);
    }
    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        self.inner.adjoint_into(y, x);
        x.iter_mut().for_each(|v| *v *= self.factor);
    }
    fn norm_bound(&self) -> f64 {
        self.factor.abs() * self.inner.norm_bound()
    }
    fn dense(&self) -> Option<nalgebra::DMatrix<f64>> {
        self.inner.dense().map(|m| m * self.factor)
    }
}

/// `factor * op`.
pub fn scaled(op: LinOp, factor: f64) -> Result<LinOp> {
    if !factor.is_finite() {
        return Err(Error::Numeric(format!("non-finite scale factor {factor}")));
    }
    Ok(LinOp::new(Scaled { inner: op, factor }))
}

#[derive(Debug)]
struct Composed {
    outer: LinOp,
    inner: LinOp,
}

impl LinearOperator for Composed {
    fn in_shape(&self) -> &VarShape {
        self.inner.in_shape()
    }
    fn out_shape(&self) -> &VarShape {
        self.outer.out_shape()
    }
    fn forward(&self, x: &[f64], y: &mut [f64]) {
        let mid = self.inner.apply(x);
        self.outer.forward_into(&mid, y);
    }
    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        let mid = self.outer.apply_adjoint(y);
        self.inner.adjoint_into(&mid, x);
    }
    fn norm_bound(&self) -> f64 {
        self.outer.norm_bound() * self.inner.norm_bound()
    }
}

/// `a ∘ b`; the norm bound is the product of the two bounds (submultiplicativity).
pub fn compose(a: LinOp, b: LinOp) -> Result<LinOp> {
    if b.out_shape().len() != a.in_shape().len() {
        return Err(Error::Structural(format!(
            "cannot compose: inner output {} does not match outer input {}",
            b.out_shape(),
            a.in_shape()
        )));
    }
    Ok(LinOp::new(Composed { outer: a, inner: b }))
}
