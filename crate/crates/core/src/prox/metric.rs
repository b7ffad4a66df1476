use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linops::{power_iteration_norm, LinOp, LinearOperator, VarShape};

/// Symmetric positive definite matrix stored together with its inverse.
#[derive(Debug)]
pub struct DenseSpd {
    matrix: Arc<DMatrix<f64>>,
    inverse: Arc<DMatrix<f64>>,
    top: OnceLock<f64>,
}

impl DenseSpd {
    /// Checks symmetry and inverts through a Cholesky factorization.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let inverse = spd_inverse(&matrix)?;
        Ok(Self::from_pair(matrix, inverse))
    }

    /// Trusts the caller that `inverse` is the inverse of `matrix`.
    pub fn from_pair(matrix: DMatrix<f64>, inverse: DMatrix<f64>) -> Self {
        Self {
            matrix: Arc::new(matrix),
            inverse: Arc::new(inverse),
            top: OnceLock::new(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn top_eigenvalue(&self) -> f64 {
        *self.top.get_or_init(|| top_eigenvalue(&self.matrix))
    }

    fn swapped(&self) -> Self {
        Self {
            matrix: Arc::clone(&self.inverse),
            inverse: Arc::clone(&self.matrix),
            top: OnceLock::new(),
        }
    }
}

fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::Domain("metric matrix must be square".into()));
    }
    let asym = (m - m.transpose()).amax();
    if asym > 1e-10 * m.amax().max(1.0) {
        return Err(Error::Domain(format!("metric matrix is not symmetric (gap {asym:e})")));
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Domain("metric matrix is not positive definite".into()))?;
    Ok(chol.inverse())
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration, inflated by 1%
/// so it can serve as a Lipschitz constant.
fn top_eigenvalue(m: &DMatrix<f64>) -> f64 {
    #[derive(Debug)]
    struct Sym<'a> {
        m: &'a DMatrix<f64>,
        shape: VarShape,
    }
    impl LinearOperator for Sym<'_> {
        fn in_shape(&self) -> &VarShape {
            &self.shape
        }
        fn out_shape(&self) -> &VarShape {
            &self.shape
        }
        fn forward(&self, x: &[f64], y: &mut [f64]) {
            let v = self.m * DVector::from_column_slice(x);
            y.copy_from_slice(v.as_slice());
        }
        fn adjoint(&self, y: &[f64], x: &mut [f64]) {
            self.forward(y, x)
        }
        fn norm_bound(&self) -> f64 {
            f64::INFINITY
        }
    }
    let op = Sym {
        m,
        shape: VarShape::possibly_empty(m.nrows()),
    };
    1.01 * power_iteration_norm(&op, 300, 17).unwrap_or(f64::INFINITY)
}

/// Positive definite weighting `G` of a variable, in one of three forms.
#[derive(Debug, Clone)]
pub enum Metric {
    /// `a I`.
    Scalar(f64),
    /// `diag(d)`.
    Diagonal(Arc<Vec<f64>>),
    /// General SPD matrix.
    Dense(Arc<DenseSpd>),
}

impl Metric {
    pub fn diagonal(d: Vec<f64>) -> Self {
        Metric::Diagonal(Arc::new(d))
    }

    pub fn dense(m: DMatrix<f64>) -> Result<Self> {
        Ok(Metric::Dense(Arc::new(DenseSpd::new(m)?)))
    }

    /// Checks positivity and, for non-scalar forms, the length.
    pub fn validate(&self, len: usize) -> Result<()> {
        match self {
            Metric::Scalar(a) => {
                if !(a.is_finite() && *a > 0.0) {
                    return Err(Error::Domain(format!("scalar metric must be positive, got {a}")));
                }
            }
            Metric::Diagonal(d) => {
                if d.len() != len {
                    return Err(Error::Structural(format!(
                        "diagonal metric has {} entries for a variable of length {len}",
                        d.len()
                    )));
                }
                if let Some(v) = d.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                    return Err(Error::Domain(format!("diagonal metric entry {v} is not positive")));
                }
            }
            Metric::Dense(m) => {
                if m.dim() != len {
                    return Err(Error::Structural(format!(
                        "dense metric is {0}x{0} for a variable of length {len}",
                        m.dim()
                    )));
                }
            }
        }
        Ok(())
    }

    /// The common value when the metric is a multiple of the identity.
    pub fn uniform(&self) -> Option<f64> {
        match self {
            Metric::Scalar(a) => Some(*a),
            Metric::Diagonal(d) => {
                let first = *d.first()?;
                d.iter().all(|&v| v == first).then_some(first)
            }
            Metric::Dense(_) => None,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Metric::Scalar(a) => x.iter().map(|v| a * v).collect(),
            Metric::Diagonal(d) => x.iter().zip(d.iter()).map(|(v, w)| v * w).collect(),
            Metric::Dense(m) => (m.matrix() * DVector::from_column_slice(x)).as_slice().to_vec(),
        }
    }

    pub fn apply_inverse(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Metric::Scalar(a) => x.iter().map(|v| v / a).collect(),
            Metric::Diagonal(d) => x.iter().zip(d.iter()).map(|(v, w)| v / w).collect(),
            Metric::Dense(m) => (m.inverse() * DVector::from_column_slice(x)).as_slice().to_vec(),
        }
    }

    pub fn inverse(&self) -> Metric {
        match self {
            Metric::Scalar(a) => Metric::Scalar(1.0 / a),
            Metric::Diagonal(d) => Metric::diagonal(d.iter().map(|v| 1.0 / v).collect()),
            Metric::Dense(m) => Metric::Dense(Arc::new(m.swapped())),
        }
    }

    /// Principal square root; dense blocks go through a symmetric eigendecomposition.
    pub fn sqrt(&self) -> Metric {
        match self {
            Metric::Scalar(a) => Metric::Scalar(a.sqrt()),
            Metric::Diagonal(d) => Metric::diagonal(d.iter().map(|v| v.sqrt()).collect()),
            Metric::Dense(m) => {
                let eig = m.matrix().clone().symmetric_eigen();
                let root = DVector::from_iterator(
                    eig.eigenvalues.len(),
                    eig.eigenvalues.iter().map(|v| v.max(0.0).sqrt()),
                );
                let inv_root = root.map(|v| if v > 0.0 { 1.0 / v } else { 0.0 });
                let q = &eig.eigenvectors;
                let s = q * DMatrix::from_diagonal(&root) * q.transpose();
                let si = q * DMatrix::from_diagonal(&inv_root) * q.transpose();
                Metric::Dense(Arc::new(DenseSpd::from_pair(s, si)))
            }
        }
    }

    /// Upper bound of the largest eigenvalue.
    pub fn max_eigenvalue(&self) -> f64 {
        match self {
            Metric::Scalar(a) => *a,
            Metric::Diagonal(d) => d.iter().cloned().fold(0.0, f64::max),
            Metric::Dense(m) => m.top_eigenvalue(),
        }
    }

    /// The metric as a (self-adjoint) linear operator on a variable of length `len`.
    pub fn as_linop(&self, len: usize) -> LinOp {
        LinOp::new(MetricOp {
            metric: self.clone(),
            shape: VarShape::possibly_empty(len),
        })
    }
}

#[derive(Debug)]
struct MetricOp {
    metric: Metric,
    shape: VarShape,
}

impl LinearOperator for MetricOp {
    fn in_shape(&self) -> &VarShape {
        &self.shape
    }
    fn out_shape(&self) -> &VarShape {
        &self.shape
    }
    fn forward(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.metric.apply(x));
    }
    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        self.forward(y, x)
    }
    fn norm_bound(&self) -> f64 {
        self.metric.max_eigenvalue()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_inverse_and_sqrt() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let g = Metric::dense(m.clone()).unwrap();
        let x = [1.0, -2.0];
        let back = g.apply_inverse(&g.apply(&x));
        assert!((back[0] - 1.0).abs() < 1e-12 && (back[1] + 2.0).abs() < 1e-12);
        let r = g.sqrt();
        let twice = r.apply(&r.apply(&x));
        let direct = g.apply(&x);
        assert!((twice[0] - direct[0]).abs() < 1e-12 && (twice[1] - direct[1]).abs() < 1e-12);
        let top = m.symmetric_eigenvalues().max();
        assert!(g.max_eigenvalue() >= top && g.max_eigenvalue() <= 1.02 * top);
    }

    #[test]
    fn rejects_non_spd() {
        assert!(Metric::dense(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
        assert!(Metric::dense(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0])).is_err());
        assert!(Metric::Scalar(0.0).validate(3).is_err());
        assert!(Metric::diagonal(vec![1.0, -1.0]).validate(2).is_err());
        assert!(Metric::diagonal(vec![1.0]).validate(2).is_err());
    }

    #[test]
    fn uniform_detection() {
        assert_eq!(Metric::diagonal(vec![0.25; 4]).uniform(), Some(0.25));
        assert_eq!(Metric::diagonal(vec![0.25, 0.5]).uniform(), None);
    }
}
