//! Shared fixtures for the benchmarks.

pub use ppds_core;

use ppds_core::problems::{build_gsr, build_mnr, gsr_data, mnr_data, GsrConfig, MnrConfig};
use ppds_core::ProblemSpec;

pub const SEED: u64 = 7;

pub fn mnr_spec(n: usize, bands: usize) -> ProblemSpec {
    let cfg = MnrConfig::with_standard_params([n, n, bands], 0.05, 0.1, SEED);
    let d = mnr_data(&cfg).expect("mnr data");
    build_mnr(&cfg, &d.observed).expect("mnr spec")
}

pub fn gsr_spec(vertices: usize) -> ProblemSpec {
    let cfg = GsrConfig::with_standard_params(vertices, 6, SEED);
    let d = gsr_data(&cfg).expect("gsr data");
    build_gsr(&cfg, &d.graph, &d.mask, &d.observed).expect("gsr spec")
}

/// Deterministic test vector with entries in `[-1, 1]`.
pub fn ramp(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((i * 7919) % 2001) as f64 / 1000.0 - 1.0).collect()
}
