use super::{LinOp, LinearOperator, VarShape};
use crate::error::{Error, Result};

/// `M x N` arrangement of operators mapping primal variables to dual variables.
/// Absent entries are zero operators.
#[derive(Debug, Clone)]
pub struct OpGrid {
    rows: usize,
    cols: usize,
    entries: Vec<Option<LinOp>>,
    primal: Vec<VarShape>,
    dual: Vec<VarShape>,
}

impl OpGrid {
    /// Infers variable shapes from the present entries; every row and column must
    /// hold at least one operator.
    pub fn new(entries: Vec<Vec<Option<LinOp>>>) -> Result<Self> {
        let rows = entries.len();
        let cols = entries.first().map_or(0, |r| r.len());
        let mut primal = Vec::with_capacity(cols);
        for i in 0..cols {
            let shape = entries
                .iter()
                .find_map(|r| r.get(i).and_then(|e| e.as_ref()).map(|op| op.in_shape().clone()))
                .ok_or_else(|| Error::Structural(format!("primal column {i} has no operator")))?;
            primal.push(shape);
        }
        let mut dual = Vec::with_capacity(rows);
        for (j, r) in entries.iter().enumerate() {
            let shape = r
                .iter()
                .find_map(|e| e.as_ref().map(|op| op.out_shape().clone()))
                .ok_or_else(|| Error::Structural(format!("dual row {j} has no operator")))?;
            dual.push(shape);
        }
        Self::with_shapes(primal, dual, entries)
    }

    /// Grid with explicit variable shapes; columns may be empty, rows may not.
    pub fn with_shapes(
        primal: Vec<VarShape>,
        dual: Vec<VarShape>,
        entries: Vec<Vec<Option<LinOp>>>,
    ) -> Result<Self> {
        let (rows, cols) = (dual.len(), primal.len());
        if rows == 0 || cols == 0 {
            return Err(Error::Structural("grid needs at least one row and one column".into()));
        }
        if entries.len() != rows || entries.iter().any(|r| r.len() != cols) {
            return Err(Error::Structural(format!("grid entries are not {rows}x{cols}")));
        }
        for (j, row) in entries.iter().enumerate() {
            if row.iter().all(Option::is_none) {
                return Err(Error::Structural(format!("dual row {j} has no operator")));
            }
            for (i, e) in row.iter().enumerate() {
                if let Some(op) = e {
                    if op.in_len() != primal[i].len() || op.out_len() != dual[j].len() {
                        return Err(Error::Structural(format!(
                            "entry ({j}, {i}) maps {} -> {}, expected {} -> {}",
                            op.in_shape(),
                            op.out_shape(),
                            primal[i],
                            dual[j]
                        )));
                    }
                }
            }
        }
        Ok(Self {
            rows,
            cols,
            entries: entries.into_iter().flatten().collect(),
            primal,
            dual,
        })
    }

    /// Number of dual variables `M`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of primal variables `N`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, j: usize, i: usize) -> Option<&LinOp> {
        self.entries[j * self.cols + i].as_ref()
    }

    /// Norm bound `μ_{j,i}` of a present entry.
    pub fn mu(&self, j: usize, i: usize) -> Option<f64> {
        self.get(j, i).map(LinOp::norm_bound)
    }

    pub fn primal_shapes(&self) -> &[VarShape] {
        &self.primal
    }

    pub fn dual_shapes(&self) -> &[VarShape] {
        &self.dual
    }

    /// Present entries as `(j, i, op)`.
    pub fn present(&self) -> impl Iterator<Item = (usize, usize, &LinOp)> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(move |(k, e)| e.as_ref().map(|op| (k / self.cols, k % self.cols, op)))
    }

    /// Dual row `j` of `L x`.
    pub fn forward_row(&self, j: usize, x: &[Vec<f64>], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut tmp = vec![0.0; out.len()];
        for (i, xi) in x.iter().enumerate() {
            if let Some(op) = self.get(j, i) {
                op.forward_into(xi, &mut tmp);
                out.iter_mut().zip(&tmp).for_each(|(o, t)| *o += t);
            }
        }
    }

    /// Primal column `i` of `L* z`.
    pub fn adjoint_col(&self, i: usize, z: &[Vec<f64>], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut tmp = vec![0.0; out.len()];
        for (j, zj) in z.iter().enumerate() {
            if let Some(op) = self.get(j, i) {
                op.adjoint_into(zj, &mut tmp);
                out.iter_mut().zip(&tmp).for_each(|(o, t)| *o += t);
            }
        }
    }

    pub fn forward(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|j| {
                let mut out = vec![0.0; self.dual[j].len()];
                self.forward_row(j, x, &mut out);
                out
            })
            .collect()
    }

    pub fn adjoint(&self, z: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..self.cols)
            .map(|i| {
                let mut out = vec![0.0; self.primal[i].len()];
                self.adjoint_col(i, z, &mut out);
                out
            })
            .collect()
    }

    /// `√(Σ μ_{j,i}²)` over present entries, an upper bound of `‖L‖`.
    pub fn block_norm_bound(&self) -> f64 {
        self.present().map(|(_, _, op)| op.norm_bound().powi(2)).sum::<f64>().sqrt()
    }

    /// The whole grid as one operator on stacked vectors.
    pub fn stacked(&self) -> GridOperator<'_> {
        GridOperator::new(self)
    }
}

/// Stacked view of an [`OpGrid`]: primal variables concatenated on the input
/// side, dual variables on the output side.
#[derive(Debug)]
pub struct GridOperator<'a> {
    grid: &'a OpGrid,
    in_shape: VarShape,
    out_shape: VarShape,
}

impl<'a> GridOperator<'a> {
    pub fn new(grid: &'a OpGrid) -> Self {
        let n = grid.primal.iter().map(VarShape::len).sum();
        let m = grid.dual.iter().map(VarShape::len).sum();
        Self {
            grid,
            in_shape: VarShape::possibly_empty(n),
            out_shape: VarShape::possibly_empty(m),
        }
    }
}

pub(crate) fn split(flat: &[f64], shapes: &[VarShape]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(shapes.len());
    let mut at = 0;
    for s in shapes {
        out.push(flat[at..at + s.len()].to_vec());
        at += s.len();
    }
    out
}

pub(crate) fn join(parts: &[Vec<f64>], out: &mut [f64]) {
    let mut at = 0;
    for p in parts {
        out[at..at + p.len()].copy_from_slice(p);
        at += p.len();
    }
}

impl LinearOperator for GridOperator<'_> {
    fn in_shape(&self) -> &VarShape {
        &self.in_shape
    }
    fn out_shape(&self) -> &VarShape {
        &self.out_shape
    }
    fn forward(&self, x: &[f64], y: &mut [f64]) {
        let parts = split(x, &self.grid.primal);
        join(&self.grid.forward(&parts), y);
    }
    fn adjoint(&self, y: &[f64], x: &mut [f64]) {
        let parts = split(y, &self.grid.dual);
        join(&self.grid.adjoint(&parts), x);
    }
    fn norm_bound(&self) -> f64 {
        self.grid.block_norm_bound()
    }
}
