use super::{LinOp, LinearOperator, VarShape};
use crate::error::{Error, Result};

/// Row selection `Φ`: keeps the masked entries in index order.
#[derive(Debug)]
pub struct Sampling {
    indices: Vec<usize>,
    in_shape: VarShape,
    out_shape: VarShape,
}

impl Sampling {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

pub fn sampling_op(mask: &[bool]) -> Result<LinOp> {
    let indices: Vec<usize> = mask
        .iter()
        .enumerate()
        .filter_map(|(k, &keep)| keep.then_some(k))
        .collect();
    if indices.is_empty() {
        return Err(Error::Structural("sampling mask selects no entries".into()));
    }
    Ok(LinOp::new(Sampling {
        in_shape: VarShape::vector(mask.len())?,
        out_shape: VarShape::vector(indices.len())?,
        indices,
    }))
}

impl LinearOperator for Sampling {
    fn in_shape(&self) -> &VarShape {
        &self.in_shape
    }
    fn out_shape(&self) -> &VarShape {
        &self.out_shape
    }
    fn forward(&self, x: &[f64], y: &mut [f64]) {
        for (out, &k) in y.iter_mut().zip(&self.indices) {
            *out = x[k];
        }
    }
    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = 0.0);
        for (&v, &k) in y.iter().zip(&self.indices) {
            x[k] = v;
        }
    }
    fn norm_bound(&self) -> f64 {
        1.0
    }
}
