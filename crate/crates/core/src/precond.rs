//! Preconditioner designers and the numerical check of the convergence condition
//! `‖Γ₂^½ L Γ₁^½‖² ≤ 1`.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linops::{materialize_with_cap, power_iteration_norm, LinearOperator, OpGrid, VarShape, DEFAULT_MATERIALIZE_CAP};
use crate::prox::Metric;

/// Which rule produced a [`PreconditionerPair`]. `Display` gives the tag used in logs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DesignTag {
    Sp { gamma1: f64 },
    Asp,
    Pdp { tau: f64, theta: f64 },
    Ovdp { beta: f64 },
    /// Hand-assembled pair.
    Custom,
}

impl fmt::Display for DesignTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DesignTag::Sp { gamma1 } => write!(f, "SP(g1={gamma1})"),
            DesignTag::Asp => write!(f, "ASP"),
            DesignTag::Pdp { tau, theta } => write!(f, "PDP(tau={tau},theta={theta})"),
            DesignTag::Ovdp { beta } => write!(f, "OVDP(beta={beta})"),
            DesignTag::Custom => write!(f, "CUSTOM"),
        }
    }
}

/// Dual-side preconditioner: one block per dual variable, or a single dense
/// matrix over all stacked dual variables.
#[derive(Debug, Clone)]
pub enum DualPreconditioner {
    Blocks(Vec<Metric>),
    Joint(Metric),
}

/// `Γ₁ = diag(Γ_{1,1}, …, Γ_{1,N})` together with the dual preconditioner.
#[derive(Debug, Clone)]
pub struct PreconditionerPair {
    pub primal: Vec<Metric>,
    pub dual: DualPreconditioner,
    pub tag: DesignTag,
}

impl PreconditionerPair {
    /// Block pair with a [`DesignTag::Custom`] tag.
    pub fn custom(primal: Vec<Metric>, dual: Vec<Metric>) -> Self {
        Self {
            primal,
            dual: DualPreconditioner::Blocks(dual),
            tag: DesignTag::Custom,
        }
    }

    /// Dual blocks, when the dual side is block diagonal.
    pub fn dual_blocks(&self) -> Option<&[Metric]> {
        match &self.dual {
            DualPreconditioner::Blocks(b) => Some(b),
            DualPreconditioner::Joint(_) => None,
        }
    }

    /// Checks block counts, lengths and positivity against a grid.
    pub fn validate(&self, grid: &OpGrid) -> Result<()> {
        if self.primal.len() != grid.cols() {
            return Err(Error::Structural(format!(
                "{} primal blocks for {} primal variables",
                self.primal.len(),
                grid.cols()
            )));
        }
        for (m, s) in self.primal.iter().zip(grid.primal_shapes()) {
            m.validate(s.len())?;
        }
        match &self.dual {
            DualPreconditioner::Blocks(blocks) => {
                if blocks.len() != grid.rows() {
                    return Err(Error::Structural(format!(
                        "{} dual blocks for {} dual variables",
                        blocks.len(),
                        grid.rows()
                    )));
                }
                for (m, s) in blocks.iter().zip(grid.dual_shapes()) {
                    m.validate(s.len())?;
                }
            }
            DualPreconditioner::Joint(m) => {
                m.validate(grid.dual_shapes().iter().map(VarShape::len).sum())?;
            }
        }
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// Scalar preconditioning: `Γ₁ = γ₁I`, `Γ₂ = I / (μ_SP² γ₁)`.
pub fn design_sp(grid: &OpGrid, gamma1: f64, mu_sp: f64) -> Result<PreconditionerPair> {
    positive("gamma1", gamma1)?;
    positive("mu_sp", mu_sp)?;
    let gamma2 = 1.0 / (mu_sp * mu_sp * gamma1);
    Ok(PreconditionerPair {
        primal: vec![Metric::Scalar(gamma1); grid.cols()],
        dual: DualPreconditioner::Blocks(vec![Metric::Scalar(gamma2); grid.rows()]),
        tag: DesignTag::Sp { gamma1 },
    })
}

/// Row/column absolute-sum preconditioning with the default materialization cap.
pub fn design_asp(grid: &OpGrid) -> Result<PreconditionerPair> {
    design_asp_with_cap(grid, DEFAULT_MATERIALIZE_CAP)
}

/// Element-wise `Γ_{1,i} = diag(1/σ_{i,l})`, `Γ_{2,j} = diag(1/τ_{j,l})` from column
/// and row absolute sums of the representation matrices.
///
/// Operators without a dense form are probed one basis vector at a time, so memory
/// stays linear; the cap still bounds `in × out` per entry. Elements whose sum is
/// zero (rows or columns the operators never touch, e.g. Neumann boundary rows)
/// receive the smallest step of their block, `1 / max_l sum_l`; a block that is
/// entirely zero is degenerate.
pub fn design_asp_with_cap(grid: &OpGrid, cap: usize) -> Result<PreconditionerPair> {
    let mut col_sums: Vec<Vec<f64>> = grid.primal_shapes().iter().map(|s| vec![0.0; s.len()]).collect();
    let mut row_sums: Vec<Vec<f64>> = grid.dual_shapes().iter().map(|s| vec![0.0; s.len()]).collect();
    for (j, i, op) in grid.present() {
        let (n, m) = (op.in_len(), op.out_len());
        if n.saturating_mul(m) > cap {
            return Err(Error::Capacity {
                what: format!("operator ({j},{i}) of size {m}x{n}"),
                needed: n.saturating_mul(m),
                cap,
            });
        }
        if let Some(a) = op.dense() {
            for l in 0..n {
                for k in 0..m {
                    let v = a[(k, l)].abs();
                    col_sums[i][l] += v;
                    row_sums[j][k] += v;
                }
            }
        } else {
            let mut e = vec![0.0; n];
            let mut col = vec![0.0; m];
            for l in 0..n {
                e[l] = 1.0;
                op.forward_into(&e, &mut col);
                e[l] = 0.0;
                for (k, v) in col.iter().enumerate() {
                    let v = v.abs();
                    col_sums[i][l] += v;
                    row_sums[j][k] += v;
                }
            }
        }
    }
    let primal = col_sums
        .into_iter()
        .enumerate()
        .map(|(i, s)| invert_sums(s, &format!("primal variable {i}")))
        .collect::<Result<_>>()?;
    let dual = row_sums
        .into_iter()
        .enumerate()
        .map(|(j, s)| invert_sums(s, &format!("dual variable {j}")))
        .collect::<Result<_>>()?;
    Ok(PreconditionerPair {
        primal,
        dual: DualPreconditioner::Blocks(dual),
        tag: DesignTag::Asp,
    })
}

fn invert_sums(sums: Vec<f64>, what: &str) -> Result<Metric> {
    let top = sums.iter().cloned().fold(0.0, f64::max);
    if !(top > 0.0 && top.is_finite()) {
        return Err(Error::Degenerate(format!("absolute sums of {what} are all zero")));
    }
    Ok(Metric::diagonal(
        sums.into_iter().map(|s| if s > 0.0 { 1.0 / s } else { 1.0 / top }).collect(),
    ))
}

/// Default `θ` of the positive-definite design.
pub const PDP_DEFAULT_THETA: f64 = 0.01;

/// Positive-definite preconditioning with the default materialization cap.
pub fn design_pdp(grid: &OpGrid, tau: f64, theta: f64) -> Result<PreconditionerPair> {
    design_pdp_with_cap(grid, tau, theta, DEFAULT_MATERIALIZE_CAP)
}

/// With two dual variables: `Γ₁ = (τ/2)I` and `Γ_{2,j} = (1/τ)(Σ_i L_{j,i}L_{j,i}ᵀ + θI)⁻¹`.
/// Otherwise: `Γ₁ = τI` and a single `Γ₂ = (1/τ)(LLᵀ + θI)⁻¹` over all stacked
/// dual variables.
pub fn design_pdp_with_cap(grid: &OpGrid, tau: f64, theta: f64, cap: usize) -> Result<PreconditionerPair> {
    positive("tau", tau)?;
    positive("theta", theta)?;
    let dual_lens: Vec<usize> = grid.dual_shapes().iter().map(VarShape::len).collect();
    let dense = |j: usize, i: usize| -> Result<Option<DMatrix<f64>>> {
        grid.get(j, i).map(|op| materialize_with_cap(op, cap)).transpose()
    };
    let finish = |mut gram: DMatrix<f64>| -> Result<Metric> {
        let m = gram.nrows();
        gram += DMatrix::identity(m, m) * theta;
        let mut inv = gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numeric("LLᵀ + θI is not numerically positive definite".into()))?
            .inverse();
        inv /= tau;
        gram *= tau;
        Ok(Metric::Dense(std::sync::Arc::new(crate::prox::DenseSpd::from_pair(inv, gram))))
    };
    let check_square = |m: usize| -> Result<()> {
        if m.saturating_mul(m) > cap {
            Err(Error::Capacity {
                what: format!("dual preconditioner of size {m}x{m}"),
                needed: m.saturating_mul(m),
                cap,
            })
        } else {
            Ok(())
        }
    };

    if grid.rows() == 2 {
        let mut blocks = Vec::with_capacity(2);
        for (j, &m) in dual_lens.iter().enumerate() {
            check_square(m)?;
            let mut gram = DMatrix::zeros(m, m);
            for i in 0..grid.cols() {
                if let Some(a) = dense(j, i)? {
                    gram += &a * a.transpose();
                }
            }
            blocks.push(finish(gram)?);
        }
        Ok(PreconditionerPair {
            primal: vec![Metric::Scalar(tau / 2.0); grid.cols()],
            dual: DualPreconditioner::Blocks(blocks),
            tag: DesignTag::Pdp { tau, theta },
        })
    } else {
        let total: usize = dual_lens.iter().sum();
        check_square(total)?;
        let primal_lens: Vec<usize> = grid.primal_shapes().iter().map(VarShape::len).collect();
        let n_total: usize = primal_lens.iter().sum();
        let mut l = DMatrix::zeros(total, n_total);
        let mut row0 = 0;
        for (j, &m) in dual_lens.iter().enumerate() {
            let mut col0 = 0;
            for (i, &n) in primal_lens.iter().enumerate() {
                if let Some(a) = dense(j, i)? {
                    l.view_mut((row0, col0), (m, n)).copy_from(&a);
                }
                col0 += n;
            }
            row0 += m;
        }
        let gram = &l * l.transpose();
        Ok(PreconditionerPair {
            primal: vec![Metric::Scalar(tau); grid.cols()],
            dual: DualPreconditioner::Joint(finish(gram)?),
            tag: DesignTag::Pdp { tau, theta },
        })
    }
}

/// Operator-norm-based variable-wise preconditioning:
/// `Γ_{1,i} = 1 / Σ_j μ_{j,i}^{2-β}` and `Γ_{2,j} = 1 / Σ_i μ_{j,i}^β`, with
/// `μ_{j,i}` the norm bounds of the grid entries.
///
/// At `β = 0` every dual step is `1/N` and at `β = 2` every primal step is `1/M`,
/// counting absent entries as well; for other `β` only present entries contribute.
pub fn design_ovdp(grid: &OpGrid, beta: f64) -> Result<PreconditionerPair> {
    if !(0.0..=2.0).contains(&beta) {
        return Err(Error::Domain(format!("beta must lie in [0, 2], got {beta}")));
    }
    let (m, n) = (grid.rows(), grid.cols());
    let mut primal = Vec::with_capacity(n);
    for i in 0..n {
        let denom = if beta == 2.0 {
            m as f64
        } else {
            (0..m).filter_map(|j| grid.mu(j, i)).map(|mu| mu.powf(2.0 - beta)).sum()
        };
        primal.push(Metric::Scalar(ovdp_step(denom, || format!("primal variable {i}"))?));
    }
    let mut dual = Vec::with_capacity(m);
    for j in 0..m {
        let denom = if beta == 0.0 {
            n as f64
        } else {
            (0..n).filter_map(|i| grid.mu(j, i)).map(|mu| mu.powf(beta)).sum()
        };
        dual.push(Metric::Scalar(ovdp_step(denom, || format!("dual variable {j}"))?));
    }
    Ok(PreconditionerPair {
        primal,
        dual: DualPreconditioner::Blocks(dual),
        tag: DesignTag::Ovdp { beta },
    })
}

fn ovdp_step(denom: f64, what: impl FnOnce() -> String) -> Result<f64> {
    if denom > 0.0 && denom.is_finite() {
        Ok(1.0 / denom)
    } else {
        Err(Error::Degenerate(format!("OVDP denominator of {} is {denom}", what())))
    }
}

/// Power-iteration estimate of `‖Γ₂^½ ∘ L ∘ Γ₁^½‖²`.
pub fn verify_convergence_condition(
    grid: &OpGrid,
    pc: &PreconditionerPair,
    iters: usize,
    seed: u64,
) -> Result<f64> {
    pc.validate(grid)?;
    let op = ScaledGrid {
        grid,
        primal_sqrt: pc.primal.iter().map(Metric::sqrt).collect(),
        dual_sqrt: match &pc.dual {
            DualPreconditioner::Blocks(b) => DualPreconditioner::Blocks(b.iter().map(Metric::sqrt).collect()),
            DualPreconditioner::Joint(m) => DualPreconditioner::Joint(m.sqrt()),
        },
        in_shape: VarShape::possibly_empty(grid.primal_shapes().iter().map(VarShape::len).sum()),
        out_shape: VarShape::possibly_empty(grid.dual_shapes().iter().map(VarShape::len).sum()),
    };
    let est = power_iteration_norm(&op, iters, seed)?;
    Ok(est * est)
}

#[derive(Debug)]
struct ScaledGrid<'a> {
    grid: &'a OpGrid,
    primal_sqrt: Vec<Metric>,
    dual_sqrt: DualPreconditioner,
    in_shape: VarShape,
    out_shape: VarShape,
}

impl ScaledGrid<'_> {
    fn scale_dual(&self, parts: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        match &self.dual_sqrt {
            DualPreconditioner::Blocks(b) => parts.iter().zip(b).map(|(p, m)| m.apply(p)).collect(),
            DualPreconditioner::Joint(m) => {
                let flat: Vec<f64> = parts.concat();
                let scaled = m.apply(&flat);
                crate::linops::grid_split(&scaled, self.grid.dual_shapes())
            }
        }
    }
}

impl LinearOperator for ScaledGrid<'_> {
    fn in_shape(&self) -> &VarShape {
        &self.in_shape
    }
    fn out_shape(&self) -> &VarShape {
        &self.out_shape
    }
    fn forward(&self, x: &[f64], y: &mut [f64]) {
        let parts = crate::linops::grid_split(x, self.grid.primal_shapes());
        let scaled: Vec<Vec<f64>> = parts.iter().zip(&self.primal_sqrt).map(|(p, m)| m.apply(p)).collect();
        let out = self.scale_dual(self.grid.forward(&scaled));
        crate::linops::grid_join(&out, y);
    }
    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        let parts = crate::linops::grid_split(y, self.grid.dual_shapes());
        let scaled = self.scale_dual(parts);
        let back = self.grid.adjoint(&scaled);
        let out: Vec<Vec<f64>> = back.iter().zip(&self.primal_sqrt).map(|(p, m)| m.apply(p)).collect();
        crate::linops::grid_join(&out, x);
    }
    fn norm_bound(&self) -> f64 {
        f64::INFINITY
    }
}

/// Smallest Rayleigh quotient over random probes; positive for SPD blocks.
pub fn min_rayleigh_quotient(m: &Metric, len: usize, probes: usize, seed: u64) -> f64 {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..probes)
        .map(|_| {
            let v: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
            let gv = m.apply(&v);
            let num: f64 = v.iter().zip(&gv).map(|(a, b)| a * b).sum();
            num / v.iter().map(|a| a * a).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Dense matrix of a metric block, for inspection and tests.
pub fn metric_matrix(m: &Metric, len: usize) -> DMatrix<f64> {
    match m {
        Metric::Scalar(a) => DMatrix::identity(len, len) * *a,
        Metric::Diagonal(d) => DMatrix::from_diagonal(&DVector::from_column_slice(d)),
        Metric::Dense(s) => s.matrix().clone(),
    }
}
