//! The P-PDS iteration, stopping rules and convergence diagnostics.

mod diagnostics;
mod oracle;

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::linops::{grid_join, grid_split, OpGrid, VarShape};
use crate::precond::{verify_convergence_condition, DualPreconditioner, PreconditionerPair};
use crate::prox::{fista_minimize, prox_conjugate_with, prox_diag_with, ExtReal, FistaOptions, Metric, ProxFn};

pub use diagnostics::{objective, objective_tol, residual, residual_tol, rmse, ConvergenceLog, Record, CSV_HEADER};
pub use oracle::{pseudo_oracle, OracleResult, DEFAULT_ORACLE_ITERS};

/// A variable together with the function applied to it.
#[derive(Debug, Clone)]
pub struct Term {
    pub shape: VarShape,
    pub func: ProxFn,
}

impl Term {
    pub fn new(shape: VarShape, func: ProxFn) -> Self {
        Self { shape, func }
    }
}

/// `minimize Σ f_i(x_i) + Σ g_j(z_j)` subject to `z_j = Σ_i L_{j,i} x_i`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub primal: Vec<Term>,
    pub dual: Vec<Term>,
    pub grid: OpGrid,
}

impl ProblemSpec {
    /// Checks that the terms agree with the grid and with their functions.
    pub fn new(primal: Vec<Term>, dual: Vec<Term>, grid: OpGrid) -> Result<Self> {
        if primal.len() != grid.cols() || dual.len() != grid.rows() {
            return Err(Error::Structural(format!(
                "{} primal / {} dual terms for a {}x{} grid",
                primal.len(),
                dual.len(),
                grid.rows(),
                grid.cols()
            )));
        }
        for (t, s) in primal.iter().zip(grid.primal_shapes()).chain(dual.iter().zip(grid.dual_shapes())) {
            if t.shape.len() != s.len() {
                return Err(Error::Structural(format!(
                    "term of shape {} does not match grid shape {}",
                    t.shape, s
                )));
            }
            t.func.check_len(s.len())?;
        }
        Ok(Self { primal, dual, grid })
    }

    pub fn primal_lens(&self) -> Vec<usize> {
        self.primal.iter().map(|t| t.shape.len()).collect()
    }

    pub fn dual_lens(&self) -> Vec<usize> {
        self.dual.iter().map(|t| t.shape.len()).collect()
    }

    fn check_primal(&self, x: &[Vec<f64>]) -> Result<()> {
        if x.len() != self.primal.len() || x.iter().zip(&self.primal).any(|(v, t)| v.len() != t.shape.len()) {
            return Err(Error::Structural("primal point does not match the problem shapes".into()));
        }
        Ok(())
    }
}

/// Primal and dual iterates after `t` iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub x: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub t: usize,
}

impl IterateState {
    /// All-zero start.
    pub fn zeros(spec: &ProblemSpec) -> Self {
        Self {
            x: spec.primal_lens().into_iter().map(|n| vec![0.0; n]).collect(),
            z: spec.dual_lens().into_iter().map(|n| vec![0.0; n]).collect(),
            t: 0,
        }
    }
}

/// Preconditioners with their inverses computed once.
struct Prepared<'a> {
    pc: &'a PreconditionerPair,
    primal_inv: Vec<Metric>,
    dual_inv: DualPreconditioner,
}

impl<'a> Prepared<'a> {
    fn new(spec: &ProblemSpec, pc: &'a PreconditionerPair) -> Result<Self> {
        pc.validate(&spec.grid)?;
        Ok(Self {
            pc,
            primal_inv: pc.primal.iter().map(Metric::inverse).collect(),
            dual_inv: match &pc.dual {
                DualPreconditioner::Blocks(b) => DualPreconditioner::Blocks(b.iter().map(Metric::inverse).collect()),
                DualPreconditioner::Joint(m) => DualPreconditioner::Joint(m.inverse()),
            },
        })
    }

    fn step(&self, spec: &ProblemSpec, state: &IterateState, inner: &FistaOptions) -> Result<IterateState> {
        let t = state.t + 1;
        let grid = &spec.grid;
        let mut x_next = Vec::with_capacity(state.x.len());
        let mut back = Vec::new();
        for (i, (xi, term)) in state.x.iter().zip(&spec.primal).enumerate() {
            back.resize(xi.len(), 0.0);
            grid.adjoint_col(i, &state.z, &mut back);
            let scaled = self.pc.primal[i].apply(&back);
            let v: Vec<f64> = xi.iter().zip(&scaled).map(|(a, b)| a - b).collect();
            let xn = prox_diag_with(&term.func, &v, &self.primal_inv[i], inner)?;
            ensure_finite(&xn, t, || format!("primal variable {i}"))?;
            x_next.push(xn);
        }

        let bar: Vec<Vec<f64>> = x_next
            .iter()
            .zip(&state.x)
            .map(|(n, o)| n.iter().zip(o).map(|(a, b)| 2.0 * a - b).collect())
            .collect();
        let lx = grid.forward(&bar);

        let z_next = match (&self.pc.dual, &self.dual_inv) {
            (DualPreconditioner::Blocks(blocks), DualPreconditioner::Blocks(inv)) => {
                let mut out = Vec::with_capacity(blocks.len());
                for (j, term) in spec.dual.iter().enumerate() {
                    let scaled = blocks[j].apply(&lx[j]);
                    let w: Vec<f64> = state.z[j].iter().zip(&scaled).map(|(a, b)| a + b).collect();
                    let zn = prox_conjugate_with(&term.func, &w, &inv[j], inner)?;
                    ensure_finite(&zn, t, || format!("dual variable {j}"))?;
                    out.push(zn);
                }
                out
            }
            (DualPreconditioner::Joint(g2), DualPreconditioner::Joint(_)) => {
                let joint = self.joint_dual(spec, g2, &state.z, &lx, inner)?;
                ensure_finite(&joint, t, || "stacked dual variables".to_string())?;
                grid_split(&joint, grid.dual_shapes())
            }
            _ => unreachable!("inverse mirrors the dual layout"),
        };
        Ok(IterateState {
            x: x_next,
            z: z_next,
            t,
        })
    }

    /// Dual update under one dense metric over all dual variables:
    /// `z⁺ = w - Γ₂ prox_{Γ₂, g}(Γ₂⁻¹ w)` with `g` the separable sum of the `g_j`.
    fn joint_dual(
        &self,
        spec: &ProblemSpec,
        g2: &Metric,
        z: &[Vec<f64>],
        lx: &[Vec<f64>],
        inner: &FistaOptions,
    ) -> Result<Vec<f64>> {
        let total: usize = spec.dual_lens().iter().sum();
        let mut zf = vec![0.0; total];
        let mut lf = vec![0.0; total];
        grid_join(z, &mut zf);
        grid_join(lx, &mut lf);
        let scaled = g2.apply(&lf);
        let w: Vec<f64> = zf.iter().zip(&scaled).map(|(a, b)| a + b).collect();
        let y = g2.apply_inverse(&w);
        let shapes = spec.grid.dual_shapes();
        let prox = |v: &[f64], step: f64| -> Result<Vec<f64>> {
            let parts = grid_split(v, shapes);
            let mut out = vec![0.0; v.len()];
            let solved = parts
                .iter()
                .zip(&spec.dual)
                .map(|(p, term)| term.func.prox(p, step))
                .collect::<Result<Vec<_>>>()?;
            grid_join(&solved, &mut out);
            Ok(out)
        };
        let p = fista_minimize(&y, |v| g2.apply(v), g2.max_eigenvalue(), prox, inner)?;
        let gp = g2.apply(&p);
        Ok(w.iter().zip(&gp).map(|(a, b)| a - b).collect())
    }
}

fn ensure_finite(v: &[f64], iteration: usize, variable: impl FnOnce() -> String) -> Result<()> {
    if v.iter().all(|a| a.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence {
            iteration,
            variable: variable(),
        })
    }
}

/// One P-PDS iteration: a full primal sweep, then a full dual sweep at the
/// over-relaxed point `2x⁺ - x`. The dual prox goes through the Moreau identity.
pub fn ppds_step(spec: &ProblemSpec, pc: &PreconditionerPair, state: &IterateState) -> Result<IterateState> {
    ppds_step_with(spec, pc, state, &FistaOptions::default())
}

/// [`ppds_step`] with explicit settings for any inner FISTA solves.
pub fn ppds_step_with(
    spec: &ProblemSpec,
    pc: &PreconditionerPair,
    state: &IterateState,
    inner: &FistaOptions,
) -> Result<IterateState> {
    Prepared::new(spec, pc)?.step(spec, state, inner)
}

/// `‖x⁺ - x‖ / ‖x‖` over the stacked primal variables; `0/0` counts as 0.
pub fn normalized_step(prev: &[Vec<f64>], next: &[Vec<f64>]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, n) in prev.iter().zip(next) {
        for (a, b) in p.iter().zip(n) {
            num += (b - a) * (b - a);
            den += a * a;
        }
    }
    if num == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

/// When to stop iterating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop once the normalized step falls below the threshold.
    NormalizedStep(f64),
    /// Stop once the RMSE to the oracle falls below the threshold.
    RmseThreshold(f64),
    /// Run exactly `max_iters` iterations (or until a fixed point is hit).
    MaxItersOnly,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule::NormalizedStep(DEFAULT_STOP_THRESHOLD)
    }
}

pub const DEFAULT_STOP_THRESHOLD: f64 = 1e-5;
pub const DEFAULT_MAX_ITERS: usize = 10_000;

/// Task metric evaluated on the primal variables.
#[derive(Clone)]
pub struct MetricHook(pub Arc<dyn Fn(&[Vec<f64>]) -> ExtReal + Send + Sync>);

impl MetricHook {
    pub fn new(f: impl Fn(&[Vec<f64>]) -> ExtReal + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }
}

impl fmt::Debug for MetricHook {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MetricHook")
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub max_iters: usize,
    pub stop: StopRule,
    /// Reference point for RMSE and residual logging.
    pub oracle: Option<Arc<Vec<Vec<f64>>>>,
    pub metric: Option<MetricHook>,
    /// Log every this many iterations; the final iteration is always logged.
    pub record_every: usize,
    /// Tolerance when evaluating indicator terms of the objective.
    pub feas_tol: f64,
    pub inner: FistaOptions,
    /// Seeds the convergence-condition estimate.
    pub seed: u64,
    /// Estimate `‖Γ₂^½ L Γ₁^½‖²` before iterating and warn when it exceeds 1.
    pub check_condition: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_MAX_ITERS,
            stop: StopRule::default(),
            oracle: None,
            metric: None,
            record_every: 1,
            feas_tol: DEFAULT_FEAS_TOL,
            inner: FistaOptions::default(),
            seed: 0,
            check_condition: true,
        }
    }
}

/// Relative slack allowed on constraint sets when evaluating objectives of iterates.
pub const DEFAULT_FEAS_TOL: f64 = 1e-4;

/// Power iterations used by the pre-solve condition check.
pub const CONDITION_ITERS: usize = 200;

/// Slack on `‖Γ₂^½ L Γ₁^½‖² ≤ 1` absorbed as estimation error.
pub const CONDITION_SLACK: f64 = 1e-6;

/// Runs P-PDS from the zero start until the stop rule fires or `max_iters` is reached.
pub fn solve(spec: &ProblemSpec, pc: &PreconditionerPair, opts: &SolveOptions) -> Result<(IterateState, ConvergenceLog)> {
    solve_from(spec, pc, IterateState::zeros(spec), opts)
}

/// [`solve`] from a given starting state.
pub fn solve_from(
    spec: &ProblemSpec,
    pc: &PreconditionerPair,
    start: IterateState,
    opts: &SolveOptions,
) -> Result<(IterateState, ConvergenceLog)> {
    let prepared = Prepared::new(spec, pc)?;
    if opts.max_iters == 0 {
        return Err(Error::Domain("max_iters must be positive".into()));
    }
    let record_every = opts.record_every.max(1);
    if let Some(o) = &opts.oracle {
        spec.check_primal(o)?;
    } else if matches!(opts.stop, StopRule::RmseThreshold(_)) {
        return Err(Error::Structural("the RMSE stop rule needs an oracle".into()));
    }
    let oracle_obj = opts.oracle.as_ref().map(|o| objective_tol(spec, o, opts.feas_tol));

    let mut log = ConvergenceLog::new(pc.tag.to_string());
    if opts.check_condition {
        let c = verify_convergence_condition(&spec.grid, pc, CONDITION_ITERS, opts.seed)?;
        if c > 1.0 + CONDITION_SLACK {
            log::warn!("{}: convergence-condition estimate {c:.9} exceeds 1", pc.tag);
        }
        log.cond_value = Some(c);
    }

    let clock = Instant::now();
    let mut state = start;
    loop {
        let next = prepared.step(spec, &state, &opts.inner)?;
        let step = normalized_step(&state.x, &next.x);
        // A primal that did not move while the dual did is stalled, not converged.
        let stalled = step == 0.0 && next.z != state.z;
        state = next;
        let t = state.t;

        let rmse_now = opts.oracle.as_ref().map(|o| rmse(&state.x, o));
        let stop = match opts.stop {
            StopRule::NormalizedStep(tau) => step < tau && !stalled,
            StopRule::RmseThreshold(tau) => rmse_now.is_some_and(|r| r < tau),
            StopRule::MaxItersOnly => step == 0.0 && !stalled,
        };
        let last = stop || t >= opts.max_iters;
        if last || t.is_multiple_of(record_every) {
            let residual = oracle_obj.map(|ref_obj| {
                let now = objective_tol(spec, &state.x, opts.feas_tol);
                gap(now, ref_obj)
            });
            log.records.push(Record {
                t,
                normalized_step: step,
                rmse: rmse_now,
                residual,
                metric: opts.metric.as_ref().map(|m| (m.0)(&state.x)),
                elapsed_s: clock.elapsed().as_secs_f64(),
            });
        }
        if last {
            log.stopped = stop && !matches!(opts.stop, StopRule::MaxItersOnly);
            log.iterations = t;
            log.final_step = step;
            log.elapsed_s = clock.elapsed().as_secs_f64();
            return Ok((state, log));
        }
    }
}

fn gap(a: ExtReal, b: ExtReal) -> ExtReal {
    match (a, b) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite((a - b).abs()),
        _ => ExtReal::Infinite,
    }
}
