use super::{LinOp, LinearOperator, VarShape};
use crate::error::{Error, Result};

/// Forward difference along one axis with Neumann boundary:
/// `y[.., i, ..] = x[.., i, ..] - x[.., i + 1, ..]` for `i < n - 1` and zero on the last slice.
#[derive(Debug)]
pub struct Diff {
    shape: VarShape,
    axis: usize,
    stride: usize,
    extent: usize,
}

impl Diff {
    pub fn new(shape: VarShape, axis: usize) -> Result<Self> {
        let dims = shape.dims();
        if axis >= dims.len() {
            return Err(Error::Structural(format!(
                "difference axis {axis} out of range for shape {shape}"
            )));
        }
        let stride = dims[..axis].iter().product();
        let extent = dims[axis];
        Ok(Self {
            shape,
            axis,
            stride,
            extent,
        })
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    #[inline]
    fn coord(&self, idx: usize) -> usize {
        (idx / self.stride) % self.extent
    }
}

impl LinearOperator for Diff {
    fn in_shape(&self) -> &VarShape {
        &self.shape
    }

    fn out_shape(&self) -> &VarShape {
        &self.shape
    }

    fn forward(&self, x: &[f64], y: &mut [f64]) {
        let last = self.extent - 1;
        for (idx, out) in y.iter_mut().enumerate() {
            *out = if self.coord(idx) < last {
                x[idx] - x[idx + self.stride]
            } else {
                0.0
            };
        }
    }

    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        let last = self.extent - 1;
        for (idx, out) in x.iter_mut().enumerate() {
            let c = self.coord(idx);
            let mut v = 0.0;
            if c < last {
                v += y[idx];
            }
            if c > 0 {
                v -= y[idx - self.stride];
            }
            *out = v;
        }
    }

    fn norm_bound(&self) -> f64 {
        2.0
    }
}

fn cube_diff(shape: VarShape, axis: usize) -> Result<LinOp> {
    if shape.dims().len() != 3 {
        return Err(Error::Structural(format!(
            "cube difference operators need a 3-D shape, got {shape}"
        )));
    }
    Ok(LinOp::new(Diff::new(shape, axis)?))
}

/// Vertical difference (first cube dimension).
pub fn diff_v(shape: VarShape) -> Result<LinOp> {
    cube_diff(shape, 0)
}

/// Horizontal difference (second cube dimension).
pub fn diff_h(shape: VarShape) -> Result<LinOp> {
    cube_diff(shape, 1)
}

/// Spectral difference (third cube dimension).
pub fn diff_b(shape: VarShape) -> Result<LinOp> {
    cube_diff(shape, 2)
}
