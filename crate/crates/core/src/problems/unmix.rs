//! Collaborative sparse unmixing: `min ‖a‖₁,₂` subject to `Ẽa ∈ B₂(v, ε)`, `a ≥ 0`.
//!
//! Abundances are stored endmember-major (`a[e * P + p]`) so each `ℓ1,2` group is
//! one endmember over all pixels; observations are band-major (`v[b * P + p]`).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linops::{identity, mixing_op, OpGrid, VarShape};
use crate::prox::{ExtReal, Groups, ProxFn};
use crate::solver::{MetricHook, ProblemSpec, Term};

use super::data::{add_gaussian, gen_abundances, gen_endmembers};
use super::metrics::snr;

#[derive(Debug, Clone, PartialEq)]
pub struct UnmixConfig {
    pub n1: usize,
    pub n2: usize,
    pub bands: usize,
    pub endmembers: usize,
    /// Endmembers actually present in the synthetic scene.
    pub active: usize,
    pub sigma: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl UnmixConfig {
    /// `ε = 0.9σ√(N1 N2 N3)`; half of the endmembers (at least one) are active.
    pub fn with_standard_params(n1: usize, n2: usize, bands: usize, endmembers: usize, sigma: f64, seed: u64) -> Self {
        Self {
            n1,
            n2,
            bands,
            endmembers,
            active: (endmembers / 2).max(1),
            sigma,
            epsilon: 0.9 * sigma * ((n1 * n2 * bands) as f64).sqrt(),
            seed,
        }
    }

    pub fn pixels(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn validate(&self) -> Result<()> {
        if self.pixels() == 0 || self.bands == 0 || self.endmembers == 0 {
            return Err(Error::Structural("unmixing sizes must be positive".into()));
        }
        if self.active == 0 || self.active > self.endmembers {
            return Err(Error::Structural("need 0 < active <= endmembers".into()));
        }
        if !(self.sigma >= 0.0 && self.epsilon >= 0.0) {
            return Err(Error::Domain("σ and ε must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct UnmixData {
    pub endmembers: DMatrix<f64>,
    pub truth: Vec<f64>,
    pub clean: Vec<f64>,
    pub observed: Vec<f64>,
}

pub fn unmix_data(cfg: &UnmixConfig) -> Result<UnmixData> {
    cfg.validate()?;
    let e = gen_endmembers(cfg.bands, cfg.endmembers, cfg.seed)?;
    let truth = gen_abundances(cfg.pixels(), cfg.endmembers, cfg.active, cfg.seed.wrapping_add(1))?;
    let op = mixing_op(e.clone(), cfg.pixels())?;
    let clean = op.apply(&truth);
    let observed = add_gaussian(&clean, cfg.sigma, cfg.seed.wrapping_add(2));
    Ok(UnmixData {
        endmembers: e,
        truth,
        clean,
        observed,
    })
}

/// One primal variable `a`, dual variables `(Ẽa, a)`.
pub fn build_unmix(cfg: &UnmixConfig, endmembers: &DMatrix<f64>, observed: &[f64]) -> Result<ProblemSpec> {
    cfg.validate()?;
    if endmembers.shape() != (cfg.bands, cfg.endmembers) {
        return Err(Error::Structural(format!(
            "endmember matrix is {:?}, expected {}x{}",
            endmembers.shape(),
            cfg.bands,
            cfg.endmembers
        )));
    }
    let p = cfg.pixels();
    if observed.len() != p * cfg.bands {
        return Err(Error::Structural(format!(
            "observation has {} entries, expected {}",
            observed.len(),
            p * cfg.bands
        )));
    }
    let a_shape = VarShape::new(vec![p, cfg.endmembers])?;
    let v_shape = VarShape::new(vec![cfg.n1, cfg.n2, cfg.bands])?;
    let mix = mixing_op(endmembers.clone(), p)?;
    let grid = OpGrid::with_shapes(
        vec![a_shape.clone()],
        vec![v_shape.clone(), a_shape.clone()],
        vec![vec![Some(mix)], vec![Some(identity(a_shape.clone()))]],
    )?;
    ProblemSpec::new(
        vec![Term::new(a_shape.clone(), ProxFn::group_l12(1.0, Groups::Uniform(p))?)],
        vec![
            Term::new(v_shape, ProxFn::l2_ball(observed.to_vec(), cfg.epsilon)?),
            Term::new(a_shape, ProxFn::Nonneg),
        ],
        grid,
    )
}

/// SNR of the abundances against the ground truth.
pub fn unmix_metric(truth: Vec<f64>) -> MetricHook {
    MetricHook::new(move |x| snr(&x[0], &truth).unwrap_or(ExtReal::Infinite))
}
