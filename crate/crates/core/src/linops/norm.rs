use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{LinOp, LinearOperator, VarShape};
use crate::error::{Error, Result};
use crate::{dot, norm2};

/// Default cap on the number of dense entries `materialize` may allocate.
pub const DEFAULT_MATERIALIZE_CAP: usize = 10_000_000;

impl LinearOperator for LinOp {
    fn in_shape(&self) -> &VarShape {
        LinOp::in_shape(self)
    }
    fn out_shape(&self) -> &VarShape {
        LinOp::out_shape(self)
    }
    fn forward(&self, x: &[f64], y: &mut [f64]) {
        self.forward_into(x, y)
    }
    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        self.adjoint_into(y, x)
    }
    fn norm_bound(&self) -> f64 {
        LinOp::norm_bound(self)
    }
    fn dense(&self) -> Option<DMatrix<f64>> {
        LinOp::dense(self)
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Largest relative adjoint mismatch `|<Lx,y> - <x,L*y>| / (|Lx| |y|)` over random probes.
pub fn adjoint_consistency_check<O: LinearOperator + ?Sized>(
    op: &O,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Domain("adjoint check needs at least one trial".into()));
    }
    let (n, m) = (op.in_shape().len(), op.out_shape().len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lx = vec![0.0; m];
    let mut lty = vec![0.0; n];
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let x = gaussian_vec(&mut rng, n);
        let y = gaussian_vec(&mut rng, m);
        op.forward(&x, &mut lx);
        op.adjoint(&y, &mut lty);
        let gap = (dot(&lx, &y) - dot(&x, &lty)).abs();
        let scale = norm2(&lx) * norm2(&y) + f64::MIN_POSITIVE;
        let rel = gap / scale;
        if !rel.is_finite() {
            return Err(Error::Numeric("non-finite value in adjoint check".into()));
        }
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Power iteration on `L* L`, returning the square root of the Rayleigh estimate of
/// its top eigenvalue. The estimate approaches the operator norm from below.
pub fn power_iteration_norm<O: LinearOperator + ?Sized>(
    op: &O,
    iters: usize,
    seed: u64,
) -> Result<f64> {
    if iters == 0 {
        return Err(Error::Domain("power iteration needs at least one step".into()));
    }
    let (n, m) = (op.in_shape().len(), op.out_shape().len());
    if n == 0 || m == 0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = gaussian_vec(&mut rng, n);
    let nv = norm2(&v);
    v.iter_mut().for_each(|e| *e /= nv);
    let mut w = vec![0.0; m];
    let mut estimate = 0.0;
    for _ in 0..iters {
        op.forward(&v, &mut w);
        let lambda = dot(&w, &w);
        if !lambda.is_finite() {
            return Err(Error::Numeric("non-finite value in power iteration".into()));
        }
        estimate = lambda;
        op.adjoint(&w, &mut v);
        let nv = norm2(&v);
        if nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|e| *e /= nv);
    }
    Ok(estimate.sqrt())
}

/// Dense matrix of `op` built column by column from `forward(e_k)`.
pub fn materialize<O: LinearOperator + ?Sized>(op: &O) -> Result<DMatrix<f64>> {
    materialize_with_cap(op, DEFAULT_MATERIALIZE_CAP)
}

pub fn materialize_with_cap<O: LinearOperator + ?Sized>(op: &O, cap: usize) -> Result<DMatrix<f64>> {
    let (n, m) = (op.in_shape().len(), op.out_shape().len());
    let needed = n.saturating_mul(m);
    if needed > cap {
        return Err(Error::Capacity {
            what: format!("materializing a {m}x{n} operator"),
            needed,
            cap,
        });
    }
    if let Some(d) = op.dense() {
        return Ok(d);
    }
    let mut out = DMatrix::zeros(m, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; m];
    for k in 0..n {
        e[k] = 1.0;
        op.forward(&e, &mut col);
        out.column_mut(k).copy_from_slice(&col);
        e[k] = 0.0;
    }
    Ok(out)
}
