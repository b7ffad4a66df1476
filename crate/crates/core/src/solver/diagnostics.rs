use std::io::Write;

use super::ProblemSpec;
use crate::prox::ExtReal;

/// `√(Σ_i ‖x_i - x*_i‖² / Σ_i n_i)`.
pub fn rmse(x: &[Vec<f64>], x_star: &[Vec<f64>]) -> f64 {
    let mut sq = 0.0;
    let mut n = 0usize;
    for (a, b) in x.iter().zip(x_star) {
        n += a.len();
        sq += a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
    }
    if n == 0 {
        0.0
    } else {
        (sq / n as f64).sqrt()
    }
}

/// `Σ f_i(x_i) + Σ g_j(Σ_i L_{j,i} x_i)` with exact indicator evaluation.
pub fn objective(spec: &ProblemSpec, x: &[Vec<f64>]) -> ExtReal {
    objective_tol(spec, x, 0.0)
}

/// Objective where indicator constraints tolerate a relative violation of `tol`.
pub fn objective_tol(spec: &ProblemSpec, x: &[Vec<f64>], tol: f64) -> ExtReal {
    let primal: ExtReal = spec.primal.iter().zip(x).map(|(t, v)| t.func.eval_tol(v, tol)).sum();
    if !primal.is_finite() {
        return primal;
    }
    let lx = spec.grid.forward(x);
    primal + spec.dual.iter().zip(&lx).map(|(t, v)| t.func.eval_tol(v, tol)).sum()
}

/// `|F(x) - F(x*)|`, infinite when either point is infeasible.
pub fn residual(spec: &ProblemSpec, x: &[Vec<f64>], x_star: &[Vec<f64>]) -> ExtReal {
    residual_tol(spec, x, x_star, 0.0)
}

pub fn residual_tol(spec: &ProblemSpec, x: &[Vec<f64>], x_star: &[Vec<f64>], tol: f64) -> ExtReal {
    super::gap(objective_tol(spec, x, tol), objective_tol(spec, x_star, tol))
}

/// One logged iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: usize,
    pub normalized_step: f64,
    pub rmse: Option<f64>,
    pub residual: Option<ExtReal>,
    pub metric: Option<ExtReal>,
    pub elapsed_s: f64,
}

pub const CSV_HEADER: &str = "t,normalized_step,rmse,residual,metric,elapsed_s";

/// Trajectory of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceLog {
    pub design: String,
    pub records: Vec<Record>,
    /// Whether the stop rule fired before `max_iters`.
    pub stopped: bool,
    pub iterations: usize,
    pub final_step: f64,
    pub elapsed_s: f64,
    pub cond_value: Option<f64>,
}

impl ConvergenceLog {
    pub fn new(design: String) -> Self {
        Self {
            design,
            records: Vec::new(),
            stopped: false,
            iterations: 0,
            final_step: f64::NAN,
            elapsed_s: 0.0,
            cond_value: None,
        }
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }

    /// Writes the log as CSV. Absent values are empty fields; an infinite residual
    /// is written as `inf`; an infinite metric (exact recovery) is left empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.records {
            let rmse = r.rmse.map(|v| v.to_string()).unwrap_or_default();
            let residual = match r.residual {
                Some(ExtReal::Finite(v)) => v.to_string(),
                Some(ExtReal::Infinite) => "inf".to_string(),
                None => String::new(),
            };
            let metric = r.metric.and_then(|m| m.value()).map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.t, r.normalized_step, rmse, residual, metric, r.elapsed_s
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{identity, OpGrid, VarShape};
    use crate::prox::ProxFn;
    use crate::solver::Term;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[vec![1.0, 2.0]], &[vec![1.0, 2.0]]), 0.0);
        assert_eq!(rmse(&[vec![1.0; 4]], &[vec![0.0; 4]]), 1.0);
        assert_eq!(rmse(&[vec![1.0, 0.0], vec![0.0, 0.0]], &[vec![0.0; 2], vec![0.0; 2]]), 0.5);
    }

    fn abs_spec(ball: ProxFn) -> ProblemSpec {
        let s = VarShape::vector(1).unwrap();
        let grid = OpGrid::new(vec![vec![Some(identity(s.clone()))]]).unwrap();
        ProblemSpec::new(vec![Term::new(s.clone(), ProxFn::l1(1.0).unwrap())], vec![Term::new(s, ball)], grid).unwrap()
    }

    #[test]
    fn residual_examples() {
        let spec = abs_spec(ProxFn::Nonneg);
        assert_eq!(residual(&spec, &[vec![2.0]], &[vec![1.0]]), ExtReal::Finite(1.0));
        assert_eq!(residual(&spec, &[vec![1.0]], &[vec![1.0]]), ExtReal::Finite(0.0));
        let spec = abs_spec(ProxFn::l2_ball(vec![0.0], 1.0).unwrap());
        assert_eq!(residual(&spec, &[vec![1.001]], &[vec![0.5]]), ExtReal::Infinite);
    }

    #[test]
    fn csv_fields() {
        let mut log = ConvergenceLog::new("X".into());
        log.records.push(Record {
            t: 1,
            normalized_step: 0.5,
            rmse: None,
            residual: Some(ExtReal::Infinite),
            metric: Some(ExtReal::Infinite),
            elapsed_s: 0.25,
        });
        assert_eq!(log.to_csv_string(), format!("{CSV_HEADER}\n1,0.5,,inf,,0.25\n"));
    }
}
