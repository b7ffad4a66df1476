//! Proximity operators, projections and their metric-weighted (skewed) forms.

mod fista;
mod metric;

use std::ops::Add;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::norm2;

pub use fista::{skewed_prox_fista, FistaOptions};
pub(crate) use fista::fista_minimize;
pub use metric::{DenseSpd, Metric};

/// Value in `(-∞, +∞]`. Indicator functions evaluate to [`ExtReal::Infinite`]
/// outside their set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(*v),
            ExtReal::Infinite => None,
        }
    }
}

impl Add for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::Infinite,
        }
    }
}

impl std::iter::Sum for ExtReal {
    fn sum<I: Iterator<Item = ExtReal>>(iter: I) -> Self {
        iter.fold(ExtReal::Finite(0.0), Add::add)
    }
}

/// Contiguous partition of a flat vector into groups for the mixed `ℓ1,2` norm.
#[derive(Debug, Clone, PartialEq)]
pub enum Groups {
    /// Consecutive groups of equal size.
    Uniform(usize),
    /// Consecutive groups of the given sizes; zero sizes are allowed and skipped.
    Sizes(Arc<Vec<usize>>),
}

impl Groups {
    pub fn sizes(sizes: Vec<usize>) -> Self {
        Groups::Sizes(Arc::new(sizes))
    }

    fn check(&self, len: usize) -> Result<()> {
        match self {
            Groups::Uniform(0) => Err(Error::Structural("group size must be positive".into())),
            Groups::Uniform(s) if !len.is_multiple_of(*s) => Err(Error::Structural(format!(
                "groups of size {s} do not tile a vector of length {len}"
            ))),
            Groups::Sizes(s) if s.iter().sum::<usize>() != len => Err(Error::Structural(format!(
                "group sizes sum to {}, vector has length {len}",
                s.iter().sum::<usize>()
            ))),
            _ => Ok(()),
        }
    }

    fn for_each_mut(&self, x: &mut [f64], mut f: impl FnMut(&mut [f64])) {
        match self {
            Groups::Uniform(s) => x.chunks_exact_mut(*s).for_each(f),
            Groups::Sizes(sizes) => {
                let mut rest = x;
                for &s in sizes.iter() {
                    let (head, tail) = rest.split_at_mut(s);
                    if s > 0 {
                        f(head);
                    }
                    rest = tail;
                }
            }
        }
    }

    fn norms(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        let mut tmp = x.to_vec();
        self.for_each_mut(&mut tmp, |g| out.push(norm2(g)));
        out
    }
}

/// Proper lower-semicontinuous convex functions with cheap proximity operators.
#[derive(Debug, Clone, PartialEq)]
pub enum ProxFn {
    /// `f ≡ 0`.
    Zero,
    /// `w ‖x‖₁`.
    L1 { weight: f64 },
    /// `w Σ_g ‖x_g‖₂` over contiguous groups.
    GroupL12 { weight: f64, groups: Groups },
    /// Indicator of `{x : ‖x - c‖₂ ≤ r}`.
    L2Ball { center: Arc<Vec<f64>>, radius: f64 },
    /// Indicator of `{x : ‖x‖₁ ≤ r}`.
    L1Ball { radius: f64 },
    /// Indicator of the nonnegative orthant.
    Nonneg,
    /// Indicator of `{0}`.
    ZeroSet,
}

impl ProxFn {
    pub fn l1(weight: f64) -> Result<Self> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::Domain(format!("l1 weight must be positive, got {weight}")));
        }
        Ok(ProxFn::L1 { weight })
    }

    pub fn group_l12(weight: f64, groups: Groups) -> Result<Self> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::Domain(format!("group weight must be positive, got {weight}")));
        }
        Ok(ProxFn::GroupL12 { weight, groups })
    }

    pub fn l2_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::Domain(format!("ball radius must be nonnegative, got {radius}")));
        }
        Ok(ProxFn::L2Ball {
            center: Arc::new(center),
            radius,
        })
    }

    pub fn l1_ball(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::Domain(format!("ball radius must be nonnegative, got {radius}")));
        }
        Ok(ProxFn::L1Ball { radius })
    }

    /// Elementwise-separable functions keep a closed-form prox under any diagonal metric.
    pub fn is_separable(&self) -> bool {
        matches!(self, ProxFn::Zero | ProxFn::L1 { .. } | ProxFn::Nonneg | ProxFn::ZeroSet)
    }

    pub fn is_indicator(&self) -> bool {
        matches!(
            self,
            ProxFn::L2Ball { .. } | ProxFn::L1Ball { .. } | ProxFn::Nonneg | ProxFn::ZeroSet
        )
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        match self {
            ProxFn::GroupL12 { groups, .. } => groups.check(len),
            ProxFn::L2Ball { center, .. } if center.len() != len => Err(Error::Structural(format!(
                "ball center has length {}, variable has length {len}",
                center.len()
            ))),
            _ => Ok(()),
        }
    }

    /// Exact evaluation; indicators are infinite off their set.
    pub fn eval(&self, x: &[f64]) -> ExtReal {
        self.eval_tol(x, 0.0)
    }

    /// Evaluation where indicator constraints may be violated by `tol` (relative to
    /// the radius for balls, absolute for `{0}` and the orthant).
    pub fn eval_tol(&self, x: &[f64], tol: f64) -> ExtReal {
        let inside = |ok: bool| if ok { ExtReal::Finite(0.0) } else { ExtReal::Infinite };
        match self {
            ProxFn::Zero => ExtReal::Finite(0.0),
            ProxFn::L1 { weight } => ExtReal::Finite(weight * x.iter().map(|v| v.abs()).sum::<f64>()),
            ProxFn::GroupL12 { weight, groups } => {
                ExtReal::Finite(weight * groups.norms(x).iter().sum::<f64>())
            }
            ProxFn::L2Ball { center, radius } => {
                let d = x.iter().zip(center.iter()).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
                inside(d <= radius + tol * radius.max(1.0))
            }
            ProxFn::L1Ball { radius } => {
                let d: f64 = x.iter().map(|v| v.abs()).sum();
                inside(d <= radius + tol * radius.max(1.0))
            }
            ProxFn::Nonneg => inside(x.iter().all(|&v| v >= -tol)),
            ProxFn::ZeroSet => inside(x.iter().all(|&v| v.abs() <= tol)),
        }
    }

    /// Standard proximity operator `argmin_y ½‖x - y‖² + step f(y)`.
    pub fn prox(&self, x: &[f64], step: f64) -> Result<Vec<f64>> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Domain(format!("prox step must be positive, got {step}")));
        }
        self.check_len(x.len())?;
        Ok(match self {
            ProxFn::Zero => x.to_vec(),
            ProxFn::L1 { weight } => prox_l1(x, step * weight),
            ProxFn::GroupL12 { weight, groups } => prox_group_l12(x, groups, step * weight)?,
            ProxFn::L2Ball { center, radius } => project_l2_ball(x, center, *radius),
            ProxFn::L1Ball { radius } => project_l1_ball(x, *radius),
            ProxFn::Nonneg => project_nonneg(x),
            ProxFn::ZeroSet => project_zero(x),
        })
    }
}

/// Soft thresholding `sign(x) max(|x| - w, 0)`.
pub fn prox_l1(x: &[f64], w: f64) -> Vec<f64> {
    x.iter().map(|&v| soft(v, w)).collect()
}

#[inline]
fn soft(v: f64, w: f64) -> f64 {
    v.signum() * (v.abs() - w).max(0.0)
}

/// Group shrinkage `x_g max(1 - w / ‖x_g‖, 0)` for every group.
pub fn prox_group_l12(x: &[f64], groups: &Groups, w: f64) -> Result<Vec<f64>> {
    groups.check(x.len())?;
    let mut out = x.to_vec();
    groups.for_each_mut(&mut out, |g| {
        let n = norm2(g);
        let scale = if n > w { 1.0 - w / n } else { 0.0 };
        g.iter_mut().for_each(|v| *v *= scale);
    });
    Ok(out)
}

pub fn project_l2_ball(x: &[f64], center: &[f64], radius: f64) -> Vec<f64> {
    let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
    let n = norm2(&d);
    if n <= radius {
        return x.to_vec();
    }
    let s = radius / n;
    center.iter().zip(&d).map(|(c, v)| c + s * v).collect()
}

/// Euclidean projection onto the `ℓ1` ball of radius `radius` centred at zero,
/// by sorting magnitudes and locating the soft threshold.
pub fn project_l1_ball(x: &[f64], radius: f64) -> Vec<f64> {
    let total: f64 = x.iter().map(|v| v.abs()).sum();
    if total <= radius {
        return x.to_vec();
    }
    if radius <= 0.0 {
        return vec![0.0; x.len()];
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cumsum += m;
        let candidate = (cumsum - radius) / (k + 1) as f64;
        if m > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    prox_l1(x, theta)
}

pub fn project_nonneg(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.max(0.0)).collect()
}

pub fn project_zero(x: &[f64]) -> Vec<f64> {
    vec![0.0; x.len()]
}

/// `argmin_y ½⟨x - y, G(x - y)⟩ + f(y)` with default inner-solver settings.
pub fn prox_diag(f: &ProxFn, x: &[f64], metric: &Metric) -> Result<Vec<f64>> {
    prox_diag_with(f, x, metric, &FistaOptions::default())
}

/// Skewed proximity operator. Closed form when the metric is a multiple of the
/// identity or when `f` is separable and the metric diagonal; FISTA otherwise.
pub fn prox_diag_with(f: &ProxFn, x: &[f64], metric: &Metric, opts: &FistaOptions) -> Result<Vec<f64>> {
    metric.validate(x.len())?;
    if let Some(a) = metric.uniform() {
        return f.prox(x, 1.0 / a);
    }
    match (f, metric) {
        (ProxFn::Zero, _) => Ok(x.to_vec()),
        (ProxFn::ZeroSet, _) => Ok(project_zero(x)),
        (ProxFn::L1 { weight }, Metric::Diagonal(d)) => {
            Ok(x.iter().zip(d.iter()).map(|(&v, &g)| soft(v, weight / g)).collect())
        }
        (ProxFn::Nonneg, Metric::Diagonal(_)) => Ok(project_nonneg(x)),
        _ => skewed_prox_fista(f, x, metric, opts),
    }
}

/// Proximity operator of the convex conjugate through the generalized Moreau
/// identity `prox_{G,f*}(x) = x - G⁻¹ prox_{G⁻¹,f}(G x)`.
pub fn prox_conjugate(f: &ProxFn, x: &[f64], metric: &Metric) -> Result<Vec<f64>> {
    prox_conjugate_with(f, x, metric, &FistaOptions::default())
}

pub fn prox_conjugate_with(f: &ProxFn, x: &[f64], metric: &Metric, opts: &FistaOptions) -> Result<Vec<f64>> {
    metric.validate(x.len())?;
    let gx = metric.apply(x);
    let p = prox_diag_with(f, &gx, &metric.inverse(), opts)?;
    let back = metric.apply_inverse(&p);
    Ok(x.iter().zip(&back).map(|(a, b)| a - b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(p, q)| (p - q).abs() <= tol)
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(prox_l1(&[3.0, -0.5], 1.0), vec![2.0, 0.0]);
        assert_eq!(prox_l1(&[0.0], 1.0), vec![0.0]);
        assert!(close(&prox_l1(&[1.0, 1.0], 1e-300), &[1.0, 1.0], 1e-12));
    }

    #[test]
    fn group_shrinkage_examples() {
        let g = Groups::Uniform(2);
        assert!(close(&prox_group_l12(&[3.0, 4.0], &g, 1.0).unwrap(), &[2.4, 3.2], 1e-12));
        assert_eq!(prox_group_l12(&[0.0, 0.0], &g, 1.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(prox_group_l12(&[0.3, 0.4], &g, 1.0).unwrap(), vec![0.0, 0.0]);
        assert!(prox_group_l12(&[1.0, 2.0, 3.0], &g, 1.0).is_err());
        let ragged = Groups::sizes(vec![1, 0, 2]);
        let out = prox_group_l12(&[-2.0, 3.0, 4.0], &ragged, 1.0).unwrap();
        assert!(close(&out, &[-1.0, 2.4, 3.2], 1e-12));
    }

    #[test]
    fn l2_ball_examples() {
        assert_eq!(project_l2_ball(&[0.1, 0.2], &[0.0, 0.0], 1.0), vec![0.1, 0.2]);
        assert!(close(&project_l2_ball(&[3.0, 4.0], &[0.0, 0.0], 1.0), &[0.6, 0.8], 1e-15));
        assert_eq!(project_l2_ball(&[3.0, 4.0], &[1.0, 1.0], 0.0), vec![1.0, 1.0]);
    }

    #[test]
    fn l1_ball_examples() {
        assert_eq!(project_l1_ball(&[0.2, -0.3], 1.0), vec![0.2, -0.3]);
        assert_eq!(project_l1_ball(&[2.0, 0.0], 1.0), vec![1.0, 0.0]);
        assert!(close(&project_l1_ball(&[1.0, 1.0], 1.0), &[0.5, 0.5], 1e-15));
        let p = project_l1_ball(&[3.0, -1.0, 0.5, 2.0], 2.5);
        assert!(p.iter().map(|v| v.abs()).sum::<f64>() <= 2.5 + 1e-10);
    }

    #[test]
    fn orthant_and_zero() {
        assert_eq!(project_nonneg(&[-1.0, 2.0]), vec![0.0, 2.0]);
        assert_eq!(project_zero(&[5.0, -5.0]), vec![0.0, 0.0]);
        let once = project_nonneg(&[-1.0, 2.0, -0.0]);
        assert_eq!(project_nonneg(&once), once);
    }

    #[test]
    fn eval_semantics() {
        let ball = ProxFn::l2_ball(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(ball.eval(&[0.6, 0.8]), ExtReal::Finite(0.0));
        assert_eq!(ball.eval(&[0.6, 0.81]), ExtReal::Infinite);
        assert_eq!(ball.eval_tol(&[0.6, 0.8000001], 1e-6), ExtReal::Finite(0.0));
        assert_eq!(ProxFn::l1(2.0).unwrap().eval(&[1.0, -1.0]), ExtReal::Finite(4.0));
        assert_eq!(ProxFn::ZeroSet.eval(&[0.0, 1e-3]), ExtReal::Infinite);
        assert_eq!(ExtReal::Finite(1.0) + ExtReal::Infinite, ExtReal::Infinite);
    }

    #[test]
    fn scalar_metric_reduces_to_standard_prox() {
        let f = ProxFn::l1(1.0).unwrap();
        let out = prox_diag(&f, &[3.0], &Metric::Scalar(2.0)).unwrap();
        assert!(close(&out, &[2.5], 1e-15));
    }

    #[test]
    fn separable_indicator_ignores_metric() {
        let x = [-1.0, 0.5, 2.0];
        let m = Metric::diagonal(vec![1.0, 7.0, 0.1]);
        assert_eq!(prox_diag(&ProxFn::Nonneg, &x, &m).unwrap(), project_nonneg(&x));
    }

    #[test]
    fn diagonal_l1_closed_form() {
        let f = ProxFn::l1(1.0).unwrap();
        let m = Metric::diagonal(vec![1.0, 4.0]);
        let out = prox_diag(&f, &[1.0, 1.0], &m).unwrap();
        assert!(close(&out, &[0.0, 0.75], 1e-15));
        let fista = skewed_prox_fista(&f, &[1.0, 1.0], &m, &FistaOptions::default()).unwrap();
        assert!(close(&fista, &[0.0, 0.75], 1e-6));
    }

    #[test]
    fn fista_scalar_metric_matches_closed_form() {
        let f = ProxFn::group_l12(0.7, Groups::Uniform(3)).unwrap();
        let x = [1.0, -2.0, 0.5, 0.1, 0.2, -0.1];
        let direct = f.prox(&x, 1.0 / 3.0).unwrap();
        let fista = skewed_prox_fista(&f, &x, &Metric::Scalar(3.0), &FistaOptions::default()).unwrap();
        assert!(close(&direct, &fista, 1e-8));
    }

    #[test]
    fn conjugate_examples() {
        let x = [2.0, -0.5];
        // conjugate of the indicator of {0} is the zero function
        let out = prox_conjugate(&ProxFn::ZeroSet, &x, &Metric::diagonal(vec![3.0, 0.2])).unwrap();
        assert!(close(&out, &x, 1e-15));
        // conjugate of the l1 norm is the indicator of the l∞ unit ball
        let out = prox_conjugate(&ProxFn::l1(1.0).unwrap(), &x, &Metric::Scalar(1.0)).unwrap();
        assert!(close(&out, &[1.0, -0.5], 1e-15));
    }

    #[test]
    fn rejects_bad_metric() {
        let f = ProxFn::l1(1.0).unwrap();
        assert!(matches!(prox_diag(&f, &[1.0], &Metric::Scalar(-1.0)), Err(Error::Domain(_))));
        assert!(f.prox(&[1.0], 0.0).is_err());
    }
}
