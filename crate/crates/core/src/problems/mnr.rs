//! Mixed-noise removal: `min ‖D_v D_b u‖₁ + ‖D_h D_b u‖₁ + λ‖l‖₁` subject to
//! `D_v l = 0`, `s ∈ B₁(0, η)`, `u + s + l ∈ B₂(v, ε)`.

use crate::error::{Error, Result};
use crate::linops::{compose, diff_b, diff_h, diff_v, identity, OpGrid, VarShape};
use crate::prox::{ExtReal, ProxFn};
use crate::solver::{MetricHook, ProblemSpec, Term};

use super::data::{add_gaussian, add_salt_pepper, gen_hsi_phantom, gen_stripes};
use super::metrics::mpsnr;

#[derive(Debug, Clone, PartialEq)]
pub struct MnrConfig {
    pub dims: [usize; 3],
    pub lambda: f64,
    pub sigma: f64,
    pub p_s: f64,
    pub eta: f64,
    pub epsilon: f64,
    /// Fraction of `(j, k)` columns carrying a stripe; 0 disables stripes.
    pub stripe_fraction: f64,
    pub stripe_amplitude: f64,
    pub seed: u64,
}

pub const MNR_LAMBDA: f64 = 0.005;

impl MnrConfig {
    /// `λ = 0.005`, `η = 0.5·0.95·p_s·N`, `ε = 0.95σ√((1 - p_s)N)` with `N = N1 N2 N3`.
    pub fn with_standard_params(dims: [usize; 3], sigma: f64, p_s: f64, seed: u64) -> Self {
        let n = (dims[0] * dims[1] * dims[2]) as f64;
        Self {
            dims,
            lambda: MNR_LAMBDA,
            sigma,
            p_s,
            eta: 0.5 * 0.95 * p_s * n,
            epsilon: 0.95 * sigma * ((1.0 - p_s) * n).sqrt(),
            stripe_fraction: 0.0,
            stripe_amplitude: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        VarShape::new(self.dims.to_vec())?;
        if !(self.lambda > 0.0) || !(0.0..1.0).contains(&self.p_s) || self.sigma < 0.0 {
            return Err(Error::Domain("need λ > 0, 0 <= p_s < 1 and σ >= 0".into()));
        }
        if !(self.eta >= 0.0 && self.epsilon >= 0.0) {
            return Err(Error::Domain("ball radii must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }
}

/// Ground truth, noise components and observation of one instance.
#[derive(Debug, Clone)]
pub struct MnrData {
    pub truth: Vec<f64>,
    pub stripes: Vec<f64>,
    pub observed: Vec<f64>,
}

/// Phantom, then stripes, Gaussian noise and salt & pepper noise, each with its
/// own seed derived from `cfg.seed`.
pub fn mnr_data(cfg: &MnrConfig) -> Result<MnrData> {
    cfg.validate()?;
    let truth = gen_hsi_phantom(cfg.dims, cfg.seed)?;
    let stripes = gen_stripes(cfg.dims, cfg.stripe_fraction, cfg.stripe_amplitude, cfg.seed.wrapping_add(1))?;
    let striped: Vec<f64> = truth.iter().zip(&stripes).map(|(a, b)| a + b).collect();
    let noisy = add_gaussian(&striped, cfg.sigma, cfg.seed.wrapping_add(2));
    let observed = add_salt_pepper(&noisy, cfg.p_s, cfg.seed.wrapping_add(3));
    Ok(MnrData {
        truth,
        stripes,
        observed,
    })
}

/// Primal variables `(u, s, l)`, dual variables
/// `(D_v D_b u, D_h D_b u, D_v l, u + s + l)`.
pub fn build_mnr(cfg: &MnrConfig, observed: &[f64]) -> Result<ProblemSpec> {
    cfg.validate()?;
    if observed.len() != cfg.len() {
        return Err(Error::Structural(format!(
            "observation has {} entries, cube {:?} needs {}",
            observed.len(),
            cfg.dims,
            cfg.len()
        )));
    }
    let shape = VarShape::new(cfg.dims.to_vec())?;
    let dv = diff_v(shape.clone())?;
    let dh = diff_h(shape.clone())?;
    let db = diff_b(shape.clone())?;
    let id = identity(shape.clone());
    let grid = OpGrid::new(vec![
        vec![Some(compose(dv.clone(), db.clone())?), None, None],
        vec![Some(compose(dh, db)?), None, None],
        vec![None, None, Some(dv)],
        vec![Some(id.clone()), Some(id.clone()), Some(id)],
    ])?;
    let primal = vec![
        Term::new(shape.clone(), ProxFn::Zero),
        Term::new(shape.clone(), ProxFn::l1_ball(cfg.eta)?),
        Term::new(shape.clone(), ProxFn::l1(cfg.lambda)?),
    ];
    let dual = vec![
        Term::new(shape.clone(), ProxFn::l1(1.0)?),
        Term::new(shape.clone(), ProxFn::l1(1.0)?),
        Term::new(shape.clone(), ProxFn::ZeroSet),
        Term::new(shape, ProxFn::l2_ball(observed.to_vec(), cfg.epsilon)?),
    ];
    ProblemSpec::new(primal, dual, grid)
}

/// MPSNR of the `u` component against the ground truth.
pub fn mnr_metric(truth: Vec<f64>, dims: [usize; 3]) -> MetricHook {
    MetricHook::new(move |x| mpsnr(&x[0], &truth, dims).unwrap_or(ExtReal::Infinite))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_parameters() {
        let cfg = MnrConfig::with_standard_params([16, 16, 16], 0.05, 0.1, 0);
        assert!((cfg.eta - 194.56).abs() < 1e-9);
        assert!((cfg.epsilon - 0.95 * 0.05 * (0.9f64 * 4096.0).sqrt()).abs() < 1e-12);
        assert_eq!(cfg.lambda, 0.005);
    }

    #[test]
    fn grid_layout() {
        let cfg = MnrConfig::with_standard_params([4, 4, 3], 0.05, 0.1, 0);
        let data = mnr_data(&cfg).unwrap();
        let spec = build_mnr(&cfg, &data.observed).unwrap();
        assert_eq!((spec.grid.rows(), spec.grid.cols()), (4, 3));
        let mut mus: Vec<f64> = spec.grid.present().map(|(_, _, op)| op.norm_bound()).collect();
        mus.sort_by(f64::total_cmp);
        assert_eq!(mus, vec![1.0, 1.0, 1.0, 2.0, 4.0, 4.0]);
        assert!((spec.grid.block_norm_bound() - 39f64.sqrt()).abs() < 1e-12);
        assert_eq!(spec.primal[0].func.eval(&data.observed), ExtReal::Finite(0.0));
        assert!(build_mnr(&cfg, &data.observed[1..]).is_err());
    }
}
