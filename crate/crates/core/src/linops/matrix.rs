use nalgebra::DMatrix;

use super::{LinOp, LinearOperator, VarShape};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    /// `y = A x`.
    Plain,
    /// `diag(A, ..., A) x` with `x` split into consecutive blocks of `A.ncols()` entries.
    BlockDiag { repeats: usize },
    /// `Y = A X` where `X` is a row-major `A.ncols() x cols` matrix.
    Mixing { cols: usize },
}

/// Operator backed by a small dense matrix, optionally repeated block-wise.
#[derive(Debug)]
pub struct MatrixOp {
    mat: DMatrix<f64>,
    layout: Layout,
    norm: f64,
    in_shape: VarShape,
    out_shape: VarShape,
}

impl MatrixOp {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }
}

/// Largest singular value of `a`.
pub fn spectral_norm(a: &DMatrix<f64>) -> Result<f64> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(a.singular_values().iter().cloned().fold(0.0, f64::max))
}

fn build(mat: DMatrix<f64>, layout: Layout) -> Result<LinOp> {
    let norm = spectral_norm(&mat)?;
    let (r, c) = mat.shape();
    let (in_shape, out_shape) = match layout {
        Layout::Plain => (VarShape::vector(c)?, VarShape::vector(r)?),
        Layout::BlockDiag { repeats } => (
            VarShape::vector(c * repeats)?,
            VarShape::vector(r * repeats)?,
        ),
        Layout::Mixing { cols } => (VarShape::new(vec![cols, c])?, VarShape::new(vec![cols, r])?),
    };
    Ok(LinOp::new(MatrixOp {
        mat,
        layout,
        norm,
        in_shape,
        out_shape,
    }))
}

/// Dense `A`; the norm bound is `σ₁(A)` from a singular value decomposition.
pub fn matrix_op(a: DMatrix<f64>) -> Result<LinOp> {
    build(a, Layout::Plain)
}

/// `diag(A, ..., A)` with `repeats` copies, applied without forming the big matrix.
pub fn blockdiag_matrix_op(a: DMatrix<f64>, repeats: usize) -> Result<LinOp> {
    if repeats == 0 {
        return Err(Error::Structural("block-diagonal operator needs repeats >= 1".into()));
    }
    build(a, Layout::BlockDiag { repeats })
}

/// `X ↦ A X` on a row-major `A.ncols() x cols` matrix, i.e. `A ⊗ I_cols`.
///
/// This is the block-diagonal operator with its input and output stored
/// row-by-row instead of column-by-column; the norm is still `σ₁(A)`.
pub fn mixing_op(a: DMatrix<f64>, cols: usize) -> Result<LinOp> {
    if cols == 0 {
        return Err(Error::Structural("mixing operator needs cols >= 1".into()));
    }
    build(a, Layout::Mixing { cols })
}

impl LinearOperator for MatrixOp {
    fn in_shape(&self) -> &VarShape {
        &self.in_shape
    }

    fn out_shape(&self) -> &VarShape {
        &self.out_shape
    }

    fn forward(&self, x: &[f64], y: &mut [f64]) {
        let (r, c) = self.mat.shape();
        match self.layout {
            Layout::Plain => {
                for (row, out) in y.iter_mut().enumerate() {
                    *out = (0..c).map(|k| self.mat[(row, k)] * x[k]).sum();
                }
            }
            Layout::BlockDiag { .. } => {
                for (xb, yb) in x.chunks_exact(c).zip(y.chunks_exact_mut(r)) {
                    for (row, out) in yb.iter_mut().enumerate() {
                        *out = (0..c).map(|k| self.mat[(row, k)] * xb[k]).sum();
                    }
                }
            }
            Layout::Mixing { cols } => {
                y.iter_mut().for_each(|v| *v = 0.0);
                for row in 0..r {
                    let yr = &mut y[row * cols..(row + 1) * cols];
                    for k in 0..c {
                        let a = self.mat[(row, k)];
                        if a != 0.0 {
                            let xr = &x[k * cols..(k + 1) * cols];
                            yr.iter_mut().zip(xr).for_each(|(o, v)| *o += a * v);
                        }
                    }
                }
            }
        }
    }

    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        let (r, c) = self.mat.shape();
        match self.layout {
            Layout::Plain => {
                for (col, out) in x.iter_mut().enumerate() {
                    *out = (0..r).map(|k| self.mat[(k, col)] * y[k]).sum();
                }
            }
            Layout::BlockDiag { .. } => {
                for (yb, xb) in y.chunks_exact(r).zip(x.chunks_exact_mut(c)) {
                    for (col, out) in xb.iter_mut().enumerate() {
                        *out = (0..r).map(|k| self.mat[(k, col)] * yb[k]).sum();
                    }
                }
            }
            Layout::Mixing { cols } => {
                x.iter_mut().for_each(|v| *v = 0.0);
                for k in 0..c {
                    let xr = &mut x[k * cols..(k + 1) * cols];
                    for row in 0..r {
                        let a = self.mat[(row, k)];
                        if a != 0.0 {
                            let yr = &y[row * cols..(row + 1) * cols];
                            xr.iter_mut().zip(yr).for_each(|(o, v)| *o += a * v);
                        }
                    }
                }
            }
        }
    }

    fn norm_bound(&self) -> f64 {
        self.norm
    }

    fn dense(&self) -> Option<DMatrix<f64>> {
        match self.layout {
            Layout::Plain => Some(self.mat.clone()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{adjoint_consistency_check, materialize, power_iteration_norm};

    #[test]
    fn norms_of_simple_matrices() {
        assert_eq!(matrix_op(DMatrix::identity(2, 2)).unwrap().norm_bound(), 1.0);
        let d = matrix_op(DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0])).unwrap();
        assert!((d.norm_bound() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_finite() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(matches!(matrix_op(a), Err(Error::Numeric(_))));
    }

    #[test]
    fn scalar_blocks() {
        let op = blockdiag_matrix_op(DMatrix::from_element(1, 1, 2.0), 3).unwrap();
        assert_eq!(op.apply(&[1.0, 2.0, 3.0]), vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn mixing_is_a_permuted_blockdiag() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.5, -1.0, 0.0, 3.0]);
        let cols = 4;
        let mix = mixing_op(a.clone(), cols).unwrap();
        let bd = blockdiag_matrix_op(a.clone(), cols).unwrap();
        let x: Vec<f64> = (0..8).map(|v| v as f64 * 0.3 - 1.0).collect();
        // x is row-major 2 x 4; the block-diagonal form wants 4 blocks of 2.
        let xb: Vec<f64> = (0..cols).flat_map(|p| (0..2).map(move |e| (e, p))).map(|(e, p)| x[e * cols + p]).collect();
        let ym = mix.apply(&x);
        let yb = bd.apply(&xb);
        for p in 0..cols {
            for r in 0..3 {
                assert!((ym[r * cols + p] - yb[p * 3 + r]).abs() < 1e-14);
            }
        }
        assert!((mix.norm_bound() - bd.norm_bound()).abs() < 1e-15);
        assert!(adjoint_consistency_check(&mix, 100, 1).unwrap() < 1e-12);
        assert!(adjoint_consistency_check(&bd, 100, 1).unwrap() < 1e-12);
        let est = power_iteration_norm(&mix, 300, 2).unwrap();
        assert!(est <= mix.norm_bound() + 1e-6);
        assert_eq!(materialize(&mix).unwrap().shape(), (12, 8));
    }
}
