use nalgebra::{DMatrix, DVector};
use ppds_core::linops::matrix_op;
use ppds_core::precond::{design_ovdp, design_sp};
use ppds_core::solver::{objective, ppds_step, solve, IterateState, SolveOptions, StopRule};
use ppds_core::{OpGrid, ProblemSpec, ProxFn, Term, VarShape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn soft(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

fn ball(v: &DVector<f64>, c: &DVector<f64>, r: f64) -> DVector<f64> {
    let d = v - c;
    let n = d.norm();
    if n <= r {
        v.clone()
    } else {
        c + d * (r / n)
    }
}

/// `min λ‖x‖₁ + ι_{‖Lx - c‖ ≤ r}` by the plain primal-dual iteration with scalar
/// steps `τ` and `σ`, written against the dense matrix.
fn textbook(l: &DMatrix<f64>, c: &DVector<f64>, r: f64, lam: f64, tau: f64, sigma: f64, steps: usize) -> Vec<DVector<f64>> {
    let mut x = DVector::zeros(l.ncols());
    let mut z = DVector::zeros(l.nrows());
    let mut out = Vec::new();
    for _ in 0..steps {
        let v = &x - tau * l.transpose() * &z;
        let xn = v.map(|e| soft(e, tau * lam));
        let w = &z + sigma * l * (2.0 * &xn - &x);
        z = &w - sigma * ball(&(&w / sigma), c, r);
        x = xn;
        out.push(x.clone());
    }
    out
}

fn random(seed: u64, m: usize, n: usize) -> (DMatrix<f64>, DVector<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng));
    let c = DVector::from_fn(m, |_, _| 3.0 + Distribution::<f64>::sample(&StandardNormal, &mut rng));
    (l, c)
}

fn spec_for(l: &DMatrix<f64>, c: &DVector<f64>, r: f64, lam: f64) -> ProblemSpec {
    let grid = OpGrid::new(vec![vec![Some(matrix_op(l.clone()).unwrap())]]).unwrap();
    ProblemSpec::new(
        vec![Term::new(VarShape::vector(l.ncols()).unwrap(), ProxFn::l1(lam).unwrap())],
        vec![Term::new(
            VarShape::vector(l.nrows()).unwrap(),
            ProxFn::l2_ball(c.iter().cloned().collect(), r).unwrap(),
        )],
        grid,
    )
    .unwrap()
}

#[test]
fn scalar_design_reduces_to_plain_primal_dual() {
    for seed in 0..5 {
        let (l, c) = random(seed, 4, 6);
        let (r, lam, gamma1) = (0.5, 0.7, 0.05);
        let spec = spec_for(&l, &c, r, lam);
        let mu = spec.grid.block_norm_bound();
        let pc = design_sp(&spec.grid, gamma1, mu).unwrap();
        let reference = textbook(&l, &c, r, lam, gamma1, 1.0 / (mu * mu * gamma1), 100);
        let mut state = IterateState::zeros(&spec);
        for (t, want) in reference.iter().enumerate() {
            state = ppds_step(&spec, &pc, &state).unwrap();
            assert_eq!(state.t, t + 1);
            let gap = state.x[0].iter().zip(want.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(gap <= 1e-12 * (1.0 + want.amax()), "seed {seed} step {t}: gap {gap}");
        }
    }
}

#[test]
fn designs_agree_on_the_optimal_value() {
    let (l, c) = random(11, 3, 5);
    let spec = spec_for(&l, &c, 0.4, 0.3);
    let opts = SolveOptions {
        max_iters: 50_000,
        stop: StopRule::NormalizedStep(1e-13),
        record_every: 50_000,
        check_condition: false,
        ..Default::default()
    };
    let mu = spec.grid.block_norm_bound();
    let mut values = Vec::new();
    for pc in [
        design_sp(&spec.grid, 1.0 / mu, mu).unwrap(),
        design_ovdp(&spec.grid, 0.0).unwrap(),
        design_ovdp(&spec.grid, 1.0).unwrap(),
        design_ovdp(&spec.grid, 2.0).unwrap(),
    ] {
        let (state, _) = solve(&spec, &pc, &opts).unwrap();
        let lx = &l * DVector::from_column_slice(&state.x[0]);
        let dist = (&lx - &c).norm();
        assert!(dist <= 0.4 * (1.0 + 1e-9), "violation {dist}");
        values.push(ppds_core::solver::objective_tol(&spec, &state.x, 1e-9).value().unwrap());
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(hi - lo <= 1e-8 * lo, "{values:?}");
    assert!(objective(&spec, &[vec![0.0; 5]]).value().is_none());
}
