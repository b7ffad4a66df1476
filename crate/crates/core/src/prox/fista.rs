use super::{Metric, ProxFn};
use crate::error::{Error, Result};
use crate::norm2;

/// Inner FISTA settings for skewed proximity operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FistaOptions {
    /// Stop once `‖y_{k+1} - y_k‖ / ‖y_{k+1}‖` drops below this.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for FistaOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 1000,
        }
    }
}

/// Minimizes `½⟨x - y, G(x - y)⟩ + f(y)` by FISTA started at zero.
///
/// The smooth part has gradient `G(y - x)` and Lipschitz constant `λ_max(G)`.
pub fn skewed_prox_fista(f: &ProxFn, x: &[f64], g: &Metric, opts: &FistaOptions) -> Result<Vec<f64>> {
    g.validate(x.len())?;
    f.check_len(x.len())?;
    let lipschitz = g.max_eigenvalue();
    fista_minimize(x, |v| g.apply(v), lipschitz, |v, step| f.prox(v, step), opts)
}

/// FISTA with gradient-based adaptive restart on `½⟨x - y, G(x - y)⟩ + f(y)`,
/// where `G` is given by `apply_g` and `f` by its scaled prox.
pub(crate) fn fista_minimize(
    x: &[f64],
    apply_g: impl Fn(&[f64]) -> Vec<f64>,
    lipschitz: f64,
    prox: impl Fn(&[f64], f64) -> Result<Vec<f64>>,
    opts: &FistaOptions,
) -> Result<Vec<f64>> {
    if !(lipschitz.is_finite() && lipschitz > 0.0) {
        return Err(Error::Domain(format!("invalid Lipschitz constant {lipschitz}")));
    }
    let n = x.len();
    let step = 1.0 / lipschitz;
    let mut y = vec![0.0; n];
    let mut w = y.clone();
    let mut t = 1.0f64;
    let mut diff = vec![0.0; n];
    for _ in 0..opts.max_iters {
        diff.iter_mut().zip(w.iter().zip(x)).for_each(|(d, (a, b))| *d = a - b);
        let grad = apply_g(&diff);
        let probe: Vec<f64> = w.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
        let y_next = prox(&probe, step)?;
        if y_next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("FISTA produced a non-finite iterate".into()));
        }

        let change: f64 = y_next.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let scale = norm2(&y_next);

        // Restart when the momentum direction opposes the gradient-mapping step.
        let restart = w
            .iter()
            .zip(&y_next)
            .zip(&y)
            .map(|((wv, yn), yo)| (wv - yn) * (yn - yo))
            .sum::<f64>()
            > 0.0;
        if restart {
            t = 1.0;
            w.copy_from_slice(&y_next);
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            for k in 0..n {
                w[k] = y_next[k] + beta * (y_next[k] - y[k]);
            }
            t = t_next;
        }
        y = y_next;
        if change <= opts.tol * scale || change == 0.0 {
            break;
        }
    }
    Ok(y)
}
