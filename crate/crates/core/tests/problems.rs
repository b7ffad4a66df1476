use ppds_core::linops::mixing_op;
use ppds_core::problems::{
    build_gsr, build_mnr, build_unmix, gsr_data, mnr_data, mpsnr, unmix_data, GsrConfig, MnrConfig, UnmixConfig,
};
use ppds_core::solver::objective;
use ppds_core::ExtReal;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[test]
fn noiseless_truth_is_feasible() {
    for seed in 0..100 {
        let m = MnrConfig::with_standard_params([8, 8, 4], 0.05, 0.1, seed);
        let md = mnr_data(&m).unwrap();
        let spec = build_mnr(&m, &md.truth).unwrap();
        let zeros = vec![0.0; m.len()];
        assert!(objective(&spec, &[md.truth.clone(), zeros.clone(), zeros]).is_finite(), "mnr seed {seed}");

        let u = UnmixConfig::with_standard_params(6, 6, 16, 4, 0.05, seed);
        let ud = unmix_data(&u).unwrap();
        let spec = build_unmix(&u, &ud.endmembers, &ud.clean).unwrap();
        assert!(objective(&spec, std::slice::from_ref(&ud.truth)).is_finite(), "unmix seed {seed}");

        let g = GsrConfig::with_standard_params(60, 5, seed);
        let gd = gsr_data(&g).unwrap();
        let clean: Vec<f64> = gd.truth.iter().zip(&gd.mask).filter(|(_, m)| **m).map(|(v, _)| *v).collect();
        let spec = build_gsr(&g, &gd.graph, &gd.mask, &clean).unwrap();
        assert!(objective(&spec, std::slice::from_ref(&gd.truth)).is_finite(), "gsr seed {seed}");
    }
}

#[test]
fn noisy_truth_falls_outside_the_data_ball() {
    // ε = 0.9σ√M sits below the expected noise norm σ√M.
    let mut unmix_feasible = 0;
    for seed in 0..20 {
        let u = UnmixConfig::with_standard_params(16, 16, 32, 4, 0.05, seed);
        let ud = unmix_data(&u).unwrap();
        let spec = build_unmix(&u, &ud.endmembers, &ud.observed).unwrap();
        if objective(&spec, std::slice::from_ref(&ud.truth)).is_finite() {
            unmix_feasible += 1;
        }
    }
    assert_eq!(unmix_feasible, 0);

    let mut gsr_feasible = 0;
    for seed in 0..100 {
        let g = GsrConfig::with_standard_params(200, 6, seed);
        let gd = gsr_data(&g).unwrap();
        let spec = build_gsr(&g, &gd.graph, &gd.mask, &gd.observed).unwrap();
        if objective(&spec, std::slice::from_ref(&gd.truth)).is_finite() {
            gsr_feasible += 1;
        }
    }
    assert!(gsr_feasible < 50, "{gsr_feasible} of 100 feasible");
}

#[test]
fn best_feasible_scaling_of_noiseless_abundances() {
    let u = UnmixConfig::with_standard_params(8, 8, 16, 4, 0.05, 5);
    let ud = unmix_data(&u).unwrap();
    let spec = build_unmix(&u, &ud.endmembers, &ud.clean).unwrap();
    let mixed = mixing_op(ud.endmembers.clone(), u.pixels()).unwrap().apply(&ud.truth);
    let predicted = 1.0 - u.epsilon / norm(&mixed);
    assert!(predicted > 0.0 && predicted < 1.0);

    let mut best = (f64::INFINITY, f64::NAN);
    for k in 0..=200_000 {
        let c = k as f64 * 1e-5;
        let scaled: Vec<f64> = ud.truth.iter().map(|v| c * v).collect();
        if let ExtReal::Finite(v) = objective(&spec, &[scaled]) {
            if v < best.0 {
                best = (v, c);
            }
        }
    }
    assert!((best.1 - predicted).abs() <= 1e-5, "search {} vs predicted {predicted}", best.1);
    assert!(objective(&spec, std::slice::from_ref(&ud.truth)).is_finite());
}

#[test]
fn mpsnr_ignores_a_shared_band_permutation() {
    let m = MnrConfig::with_standard_params([6, 5, 4], 0.05, 0.1, 2);
    let d = mnr_data(&m).unwrap();
    let perm = [2usize, 0, 3, 1];
    let band = 30;
    let permute = |x: &[f64]| -> Vec<f64> { perm.iter().flat_map(|&k| x[k * band..(k + 1) * band].to_vec()).collect() };
    let a = mpsnr(&d.observed, &d.truth, m.dims).unwrap().value().unwrap();
    let b = mpsnr(&permute(&d.observed), &permute(&d.truth), m.dims).unwrap().value().unwrap();
    assert!((a - b).abs() <= 1e-12 * a.abs());
}
