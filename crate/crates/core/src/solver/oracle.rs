use rayon::prelude::*;

use super::{objective_tol, solve, IterateState, ProblemSpec, SolveOptions, StopRule};
use crate::error::{Error, Result};
use crate::precond::PreconditionerPair;

/// Desk-scale length of the long runs behind the pseudo-oracle.
pub const DEFAULT_ORACLE_ITERS: usize = 20_000;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub x: Vec<Vec<f64>>,
    /// Index of the winning design in the input list.
    pub design: usize,
    pub objective: f64,
    pub final_step: f64,
}

/// Runs every design for `long_iters` iterations and keeps the feasible final
/// iterate with the smallest objective. Objectives within `1e-10` (relative) are
/// tied; ties go to the smaller final normalized step, then to list order.
/// Designs that fail to construct a run are skipped with a warning.
pub fn pseudo_oracle(
    spec: &ProblemSpec,
    designs: &[PreconditionerPair],
    long_iters: usize,
    feas_tol: f64,
) -> Result<OracleResult> {
    if long_iters == 0 {
        return Err(Error::Domain("long_iters must be positive".into()));
    }
    let opts = SolveOptions {
        max_iters: long_iters,
        stop: StopRule::MaxItersOnly,
        record_every: long_iters,
        feas_tol,
        check_condition: false,
        ..Default::default()
    };
    let runs: Vec<Result<(IterateState, f64)>> = designs
        .par_iter()
        .map(|pc| solve(spec, pc, &opts).map(|(s, log)| (s, log.final_step)))
        .collect();

    let mut best: Option<OracleResult> = None;
    for (k, run) in runs.into_iter().enumerate() {
        let (state, final_step) = match run {
            Ok(r) => r,
            Err(e) => {
                log::warn!("pseudo-oracle: {} failed: {e}", designs[k].tag);
                continue;
            }
        };
        let Some(obj) = objective_tol(spec, &state.x, feas_tol).value() else {
            log::warn!("pseudo-oracle: {} ended infeasible", designs[k].tag);
            continue;
        };
        let better = match &best {
            None => true,
            Some(b) => {
                let tie = (obj - b.objective).abs() <= 1e-10 * obj.abs().max(b.objective.abs()).max(1e-300);
                if tie {
                    final_step < b.final_step
                } else {
                    obj < b.objective
                }
            }
        };
        if better {
            best = Some(OracleResult {
                x: state.x,
                design: k,
                objective: obj,
                final_step,
            });
        }
    }
    best.ok_or_else(|| Error::OracleFailure("no design produced a feasible point".into()))
}
