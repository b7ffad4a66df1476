//! Task quality metrics in dB. An exact match yields [`ExtReal::Infinite`].

use crate::error::{Error, Result};
use crate::prox::ExtReal;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn check(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Structural(format!("lengths differ: {} vs {}", a.len(), b.len())));
    }
    Ok(())
}

/// Mean over bands of `10 log10(N1 N2 / ‖ū_b - u_b‖²)`.
pub fn mpsnr(u: &[f64], truth: &[f64], dims: [usize; 3]) -> Result<ExtReal> {
    check(u, truth)?;
    let band = dims[0] * dims[1];
    if band * dims[2] != u.len() || band == 0 {
        return Err(Error::Structural(format!("cube of {} entries is not {dims:?}", u.len())));
    }
    let mut total = 0.0;
    for (a, b) in u.chunks_exact(band).zip(truth.chunks_exact(band)) {
        let e = sq_dist(a, b);
        if e == 0.0 {
            return Ok(ExtReal::Infinite);
        }
        total += 10.0 * (band as f64 / e).log10();
    }
    Ok(ExtReal::Finite(total / dims[2] as f64))
}

/// `10 log10(‖ā‖ / ‖a - ā‖)` with unsquared norms.
pub fn snr(a: &[f64], truth: &[f64]) -> Result<ExtReal> {
    check(a, truth)?;
    let e = sq_dist(a, truth).sqrt();
    if e == 0.0 {
        return Ok(ExtReal::Infinite);
    }
    let s = truth.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(ExtReal::Finite(10.0 * (s / e).log10()))
}

/// `10 log10(N / ‖ū - u‖²)`.
pub fn psnr(u: &[f64], truth: &[f64]) -> Result<ExtReal> {
    check(u, truth)?;
    let e = sq_dist(u, truth);
    if e == 0.0 {
        return Ok(ExtReal::Infinite);
    }
    Ok(ExtReal::Finite(10.0 * (u.len() as f64 / e).log10()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mpsnr_uniform_error() {
        let truth = vec![0.0; 8];
        let u = vec![0.1; 8];
        let v = mpsnr(&u, &truth, [2, 2, 2]).unwrap().value().unwrap();
        assert!((v - 20.0).abs() < 1e-12);
        assert_eq!(mpsnr(&truth, &truth, [2, 2, 2]).unwrap(), ExtReal::Infinite);
        assert!(mpsnr(&u, &truth, [3, 2, 2]).is_err());
    }

    #[test]
    fn snr_unsquared() {
        let truth = vec![10.0, 0.0];
        let a = vec![10.0, 1.0];
        assert!((snr(&a, &truth).unwrap().value().unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn psnr_examples() {
        assert_eq!(psnr(&[1.0], &[1.0]).unwrap(), ExtReal::Infinite);
        assert!((psnr(&[0.1; 4], &[0.0; 4]).unwrap().value().unwrap() - 20.0).abs() < 1e-12);
    }
}
