//! Graph signal recovery: `min Σ_i ‖b_i‖₂` (graph total variation) subject to
//! `Φu ∈ B₂(v, ε)`.

use crate::error::{Error, Result};
use crate::linops::{graph_diff, sampling_op, GraphSpec, OpGrid, VarShape};
use crate::prox::{ExtReal, Groups, ProxFn};
use crate::solver::{MetricHook, ProblemSpec, Term};

use super::data::{add_gaussian, gen_graph, gen_graph_signal, gen_sampling_mask};
use super::metrics::psnr;

#[derive(Debug, Clone, PartialEq)]
pub struct GsrConfig {
    pub vertices: usize,
    /// Nearest neighbours per vertex in the generated graph.
    pub k: usize,
    /// Clusters of the piecewise-smooth signal.
    pub pieces: usize,
    pub rate: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub graph_seed: u64,
    pub signal_seed: u64,
}

impl GsrConfig {
    /// `σ = 0.1`, `ρ = 0.2`, `ε = 0.9σ√M_G` with `M_G` the number of samples.
    pub fn with_standard_params(vertices: usize, k: usize, seed: u64) -> Self {
        let (sigma, rate) = (0.1, 0.2);
        let m = ((rate * vertices as f64).round() as usize).clamp(1, vertices.max(1));
        Self {
            vertices,
            k,
            pieces: 4.min(vertices.max(1)),
            rate,
            sigma,
            epsilon: 0.9 * sigma * (m as f64).sqrt(),
            graph_seed: seed,
            signal_seed: seed.wrapping_add(1),
        }
    }

    pub fn samples(&self) -> usize {
        ((self.rate * self.vertices as f64).round() as usize).clamp(1, self.vertices)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate <= 1.0) {
            return Err(Error::Domain(format!("sampling rate must be in (0, 1], got {}", self.rate)));
        }
        if !(self.sigma >= 0.0 && self.epsilon >= 0.0) {
            return Err(Error::Domain("σ and ε must be nonnegative".into()));
        }
        if self.vertices == 0 {
            return Err(Error::Structural("graph needs vertices".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GsrData {
    pub graph: GraphSpec,
    pub positions: Vec<[f64; 2]>,
    pub truth: Vec<f64>,
    pub mask: Vec<bool>,
    pub observed: Vec<f64>,
}

pub fn gsr_data(cfg: &GsrConfig) -> Result<GsrData> {
    cfg.validate()?;
    let (graph, positions) = gen_graph(cfg.vertices, cfg.k, cfg.graph_seed)?;
    let truth = gen_graph_signal(&graph, cfg.pieces, cfg.signal_seed)?;
    let mask = gen_sampling_mask(cfg.vertices, cfg.rate, cfg.signal_seed.wrapping_add(1))?;
    let sampled: Vec<f64> = truth.iter().zip(&mask).filter(|(_, m)| **m).map(|(v, _)| *v).collect();
    let observed = add_gaussian(&sampled, cfg.sigma, cfg.signal_seed.wrapping_add(2));
    Ok(GsrData {
        graph,
        positions,
        truth,
        mask,
        observed,
    })
}

/// One primal variable `u`, dual variables `(D_G u, Φu)`. The `ℓ1,2` groups of
/// `D_G u` are the per-vertex blocks of outgoing edges.
pub fn build_gsr(cfg: &GsrConfig, graph: &GraphSpec, mask: &[bool], observed: &[f64]) -> Result<ProblemSpec> {
    cfg.validate()?;
    let n = graph.num_vertices();
    if mask.len() != n {
        return Err(Error::Structural(format!("mask has {} entries for {n} vertices", mask.len())));
    }
    let dg = graph_diff(graph)?;
    if dg.out_len() == 0 {
        return Err(Error::Structural("graph has no edges".into()));
    }
    let phi = sampling_op(mask)?;
    if observed.len() != phi.out_len() {
        return Err(Error::Structural(format!(
            "observation has {} entries, mask selects {}",
            observed.len(),
            phi.out_len()
        )));
    }
    let u_shape = VarShape::vector(n)?;
    let groups = Groups::sizes(graph.out_degrees());
    let grid = OpGrid::new(vec![vec![Some(dg.clone())], vec![Some(phi.clone())]])?;
    ProblemSpec::new(
        vec![Term::new(u_shape, ProxFn::Zero)],
        vec![
            Term::new(dg.out_shape().clone(), ProxFn::group_l12(1.0, groups)?),
            Term::new(phi.out_shape().clone(), ProxFn::l2_ball(observed.to_vec(), cfg.epsilon)?),
        ],
        grid,
    )
}

/// PSNR of the recovered signal against the ground truth.
pub fn gsr_metric(truth: Vec<f64>) -> MetricHook {
    MetricHook::new(move |x| psnr(&x[0], &truth).unwrap_or(ExtReal::Infinite))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_groups() {
        let g = GraphSpec::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let cfg = GsrConfig::with_standard_params(3, 1, 0);
        let spec = build_gsr(&cfg, &g, &[true, false, false], &[0.5]).unwrap();
        assert_eq!(spec.dual[0].shape.len(), 2);
        assert_eq!(spec.dual[0].func, ProxFn::group_l12(1.0, Groups::sizes(vec![1, 1, 0])).unwrap());
        assert_eq!(spec.dual[0].func.eval(&spec.grid.get(0, 0).unwrap().apply(&[2.0; 3])), ExtReal::Finite(0.0));
    }

    #[test]
    fn standard_parameters() {
        let cfg = GsrConfig::with_standard_params(200, 6, 0);
        assert_eq!(cfg.samples(), 40);
        assert!((cfg.epsilon - 0.9 * 0.1 * 40f64.sqrt()).abs() < 1e-12);
        let d = gsr_data(&cfg).unwrap();
        assert_eq!(d.observed.len(), 40);
        assert!(build_gsr(&cfg, &d.graph, &d.mask, &d.observed).is_ok());
    }
}
