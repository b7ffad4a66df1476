use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Splits `A = B C` with `‖B‖ = σ₁(A)^(1-β)` and `‖C‖ = σ₁(A)^β`.
///
/// With the thin SVD `A = U Σ Vᵀ` restricted to the numerical rank, the factors
/// are `B = U Σ^(1-β)` and `C = Σ^β Vᵀ` (the free unitary factor is the identity).
pub fn lemma1_decompose(a: &DMatrix<f64>, beta: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Domain(format!("beta must lie in [0, 1], got {beta}")));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let svd = a.clone().svd(true, true);
    let sigma = &svd.singular_values;
    let top = sigma.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return Err(Error::Degenerate("cannot decompose the zero matrix".into()));
    }
    let cutoff = top * f64::EPSILON * a.nrows().max(a.ncols()) as f64;
    let keep: Vec<usize> = (0..sigma.len()).filter(|&k| sigma[k] > cutoff).collect();
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^T");

    let r = keep.len();
    let mut b = DMatrix::zeros(a.nrows(), r);
    let mut c = DMatrix::zeros(r, a.ncols());
    for (col, &k) in keep.iter().enumerate() {
        let left = sigma[k].powf(1.0 - beta);
        let right = sigma[k].powf(beta);
        b.set_column(col, &(u.column(k) * left));
        c.set_row(col, &(vt.row(k) * right));
    }
    Ok((b, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::spectral_norm;

    #[test]
    fn scalar_cases() {
        let a = DMatrix::from_element(1, 1, 3.0);
        let (b, c) = lemma1_decompose(&a, 0.0).unwrap();
        assert!((b[(0, 0)].abs() - 3.0).abs() < 1e-12);
        assert!((c[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert!(((&b * &c)[(0, 0)] - 3.0).abs() < 1e-12);

        let (b, c) = lemma1_decompose(&a, 0.5).unwrap();
        assert!((spectral_norm(&b).unwrap() - 3f64.sqrt()).abs() < 1e-12);
        assert!((spectral_norm(&c).unwrap() - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn antidiagonal_example() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 1.0, 0.0]);
        let (b, c) = lemma1_decompose(&a, 0.5).unwrap();
        assert!(((&b * &c) - &a).norm() < 1e-12);
        assert!((spectral_norm(&b).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!((spectral_norm(&c).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_and_errors() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        let (b, c) = lemma1_decompose(&a, 0.25).unwrap();
        assert_eq!(b.ncols(), 1);
        assert!(((&b * &c) - &a).norm() < 1e-12);
        assert!(matches!(lemma1_decompose(&DMatrix::zeros(2, 2), 0.5), Err(Error::Degenerate(_))));
        assert!(matches!(lemma1_decompose(&a, 1.5), Err(Error::Domain(_))));
    }
}
