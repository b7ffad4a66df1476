use ppds_core::prox::{prox_conjugate, prox_diag};
use ppds_core::{Groups, Metric, ProxFn};
use proptest::prelude::*;

fn vec_of(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, n)
}

/// Point, second point, positive diagonal and a function on dimension `n`.
fn case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, ProxFn)> {
    (1usize..=6).prop_flat_map(|n| {
        let f = prop_oneof![
            Just(ProxFn::Zero),
            Just(ProxFn::ZeroSet),
            Just(ProxFn::Nonneg),
            (0.1..2.0f64).prop_map(|w| ProxFn::l1(w).unwrap()),
            (0.1..2.0f64).prop_map(|r| ProxFn::l1_ball(r).unwrap()),
            (vec_of(n), 0.1..2.0f64).prop_map(|(c, r)| ProxFn::l2_ball(c, r).unwrap()),
            (0.1..2.0f64).prop_map(|w| ProxFn::group_l12(w, Groups::Uniform(1)).unwrap()),
            (0.1..2.0f64).prop_map(move |w| ProxFn::group_l12(w, Groups::sizes(vec![n])).unwrap()),
        ];
        (vec_of(n), vec_of(n), prop::collection::vec(0.2..4.0f64, n), f)
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn weighted_dist(a: &[f64], b: &[f64], g: &[f64]) -> f64 {
    a.iter().zip(b).zip(g).map(|((x, y), w)| w * (x - y).powi(2)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn euclidean_prox_is_firmly_nonexpansive((x, y, _g, f) in case(), step in 0.1..3.0f64) {
        let px = f.prox(&x, step).unwrap();
        let py = f.prox(&y, step).unwrap();
        let lhs: f64 = px.iter().zip(&py).map(|(a, b)| (a - b).powi(2)).sum();
        let rhs: f64 = px.iter().zip(&py).zip(x.iter().zip(&y)).map(|((a, b), (c, d))| (a - b) * (c - d)).sum();
        prop_assert!(lhs <= rhs + 1e-10);
        prop_assert!(dist(&px, &py) <= dist(&x, &y) + 1e-10);
    }

    #[test]
    fn projections_are_idempotent((x, _y, _g, f) in case()) {
        prop_assume!(f.is_indicator());
        let p = f.prox(&x, 1.0).unwrap();
        let pp = f.prox(&p, 1.0).unwrap();
        prop_assert!(dist(&p, &pp) <= 1e-12);
        prop_assert!(f.eval_tol(&p, 1e-12).is_finite());
    }

    #[test]
    fn projections_satisfy_variational_inequality((x, y, _g, f) in case()) {
        prop_assume!(f.is_indicator());
        // <x - P x, q - P x> <= 0 for every q in the set; q = P y is one.
        let p = f.prox(&x, 1.0).unwrap();
        let q = f.prox(&y, 1.0).unwrap();
        let inner: f64 = x.iter().zip(&p).zip(&q).map(|((a, b), c)| (a - b) * (c - b)).sum();
        prop_assert!(inner <= 1e-9 * (1.0 + dist(&x, &p) * dist(&q, &p)));
    }

    #[test]
    fn moreau_decomposition_identity_metric((x, _y, _g, f) in case()) {
        let p = prox_diag(&f, &x, &Metric::Scalar(1.0)).unwrap();
        let c = prox_conjugate(&f, &x, &Metric::Scalar(1.0)).unwrap();
        let residual = x.iter().zip(p.iter().zip(&c)).map(|(a, (b, d))| (a - b - d).abs()).fold(0.0, f64::max);
        prop_assert!(residual <= 1e-12);
    }

    #[test]
    fn skewed_prox_is_nonexpansive_in_its_metric((x, y, g, f) in case()) {
        let m = Metric::diagonal(g.clone());
        let px = prox_diag(&f, &x, &m).unwrap();
        let py = prox_diag(&f, &y, &m).unwrap();
        // Inner solves stop at relative tolerance 1e-8.
        prop_assert!(weighted_dist(&px, &py, &g) <= weighted_dist(&x, &y, &g) + 1e-6);
    }

    #[test]
    fn skewed_prox_beats_nearby_points((x, _y, g, f) in case(), dir in vec_of(6), t in 1e-3..0.1f64) {
        // p minimizes F(q) = ½|q - x|²_G + f(q); feasible perturbations cannot do better.
        let m = Metric::diagonal(g.clone());
        let p = prox_diag(&f, &x, &m).unwrap();
        let objective = |q: &[f64]| {
            f.eval_tol(q, 1e-9).value().map(|v| 0.5 * weighted_dist(q, &x, &g).powi(2) + v)
        };
        let base = objective(&p).expect("prox output lies in the domain");
        let q: Vec<f64> = p.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
        let q = if f.is_indicator() { f.prox(&q, 1.0).unwrap() } else { q };
        if let Some(v) = objective(&q) {
            prop_assert!(base <= v + 1e-7 * (1.0 + base.abs()));
        }
    }
}
