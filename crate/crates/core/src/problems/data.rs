//! Seed-deterministic synthetic data: hyperspectral phantoms, endmembers,
//! abundances, random sensor graphs and piecewise-smooth graph signals.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linops::GraphSpec;

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_dims(dims: [usize; 3]) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::Structural(format!("cube dims must be positive, got {dims:?}")));
    }
    Ok(())
}

/// Piecewise-constant spatial regions (a Voronoi partition of the image plane)
/// each carrying a smooth spectrum. Values lie in `[0, 1]`.
pub fn gen_hsi_phantom(dims: [usize; 3], seed: u64) -> Result<Vec<f64>> {
    check_dims(dims)?;
    let [n1, n2, n3] = dims;
    let mut rng = rng(seed);
    let regions = 5.min(n1 * n2);
    let centers: Vec<(f64, f64)> = (0..regions).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
    let spectra: Vec<Vec<f64>> = (0..regions)
        .map(|_| {
            let base = rng.random_range(0.2..0.7);
            let amp = rng.random_range(0.05..0.2);
            let freq = rng.random_range(0.5..2.0);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            (0..n3)
                .map(|k| {
                    let s = k as f64 / n3.max(2) as f64;
                    (base + amp * (std::f64::consts::TAU * freq * s + phase).sin()).clamp(0.0, 1.0)
                })
                .collect()
        })
        .collect();
    let mut cube = vec![0.0; n1 * n2 * n3];
    for j in 0..n2 {
        for i in 0..n1 {
            let (px, py) = ((i as f64 + 0.5) / n1 as f64, (j as f64 + 0.5) / n2 as f64);
            let region = (0..regions)
                .min_by(|&a, &b| {
                    let da = (centers[a].0 - px).powi(2) + (centers[a].1 - py).powi(2);
                    let db = (centers[b].0 - px).powi(2) + (centers[b].1 - py).powi(2);
                    da.total_cmp(&db)
                })
                .expect("at least one region");
            for k in 0..n3 {
                cube[i + n1 * (j + n2 * k)] = spectra[region][k];
            }
        }
    }
    Ok(cube)
}

/// Vertical stripes: a `fraction` of the `(j, k)` columns receive an offset drawn
/// uniformly from `[-amplitude, amplitude]`, constant along the first axis.
pub fn gen_stripes(dims: [usize; 3], fraction: f64, amplitude: f64, seed: u64) -> Result<Vec<f64>> {
    check_dims(dims)?;
    if !(0.0..=1.0).contains(&fraction) || amplitude < 0.0 {
        return Err(Error::Domain("stripe fraction must be in [0, 1] and amplitude nonnegative".into()));
    }
    let [n1, n2, n3] = dims;
    let mut out = vec![0.0; n1 * n2 * n3];
    if amplitude == 0.0 || fraction == 0.0 {
        return Ok(out);
    }
    let mut rng = rng(seed);
    let columns = n2 * n3;
    let count = (fraction * columns as f64).round() as usize;
    for c in sample(&mut rng, columns, count).into_iter() {
        let offset = rng.random_range(-amplitude..=amplitude);
        for i in 0..n1 {
            out[i + n1 * c] = offset;
        }
    }
    Ok(out)
}

/// Smooth nonnegative spectra (`bands x n_end`), each column scaled to unit maximum.
pub fn gen_endmembers(bands: usize, n_end: usize, seed: u64) -> Result<DMatrix<f64>> {
    if bands == 0 || n_end == 0 {
        return Err(Error::Structural("endmember matrix needs positive sizes".into()));
    }
    let mut rng = rng(seed);
    let mut e = DMatrix::zeros(bands, n_end);
    for c in 0..n_end {
        let base = rng.random_range(0.05..0.3);
        let bumps: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| (rng.random::<f64>(), rng.random_range(0.05..0.25), rng.random_range(0.2..1.0)))
            .collect();
        for b in 0..bands {
            let s = b as f64 / bands.max(2) as f64;
            e[(b, c)] = base
                + bumps
                    .iter()
                    .map(|(mu, w, h)| h * (-(s - mu).powi(2) / (2.0 * w * w)).exp())
                    .sum::<f64>();
        }
        let top = e.column(c).max();
        e.column_mut(c).unscale_mut(top);
    }
    Ok(e)
}

/// Abundances laid out endmember-major (`a[e * pixels + p]`). Only `n_active`
/// endmembers are used; each pixel draws nonnegative weights over them whose sum
/// is at most 1.
pub fn gen_abundances(pixels: usize, n_end: usize, n_active: usize, seed: u64) -> Result<Vec<f64>> {
    if pixels == 0 || n_end == 0 || n_active == 0 || n_active > n_end {
        return Err(Error::Structural(format!(
            "need 0 < n_active <= n_end and pixels > 0 (pixels {pixels}, n_end {n_end}, n_active {n_active})"
        )));
    }
    let mut rng = rng(seed);
    let active: Vec<usize> = sample(&mut rng, n_end, n_active).into_vec();
    let mut a = vec![0.0; pixels * n_end];
    for p in 0..pixels {
        let raw: Vec<f64> = (0..n_active).map(|_| -rng.random::<f64>().max(1e-12).ln()).collect();
        let total: f64 = raw.iter().sum();
        let scale = rng.random_range(0.8..1.0) / total;
        for (&e, w) in active.iter().zip(&raw) {
            a[e * pixels + p] = w * scale;
        }
    }
    Ok(a)
}

/// Random geometric sensor graph: points uniform in the unit square, each vertex
/// linked to its `k` nearest neighbours with Gaussian-kernel weights, then
/// symmetrized by taking the larger weight.
pub fn gen_graph(n: usize, k: usize, seed: u64) -> Result<(GraphSpec, Vec<[f64; 2]>)> {
    if k == 0 || k >= n {
        return Err(Error::Structural(format!("need 0 < k < n, got k = {k}, n = {n}")));
    }
    let mut rng = rng(seed);
    let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
    let dist2 = |a: usize, b: usize| (pts[a][0] - pts[b][0]).powi(2) + (pts[a][1] - pts[b][1]).powi(2);
    let neighbours: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            let mut d: Vec<(usize, f64)> = (0..n).filter(|&j| j != i).map(|j| (j, dist2(i, j))).collect();
            d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            d.truncate(k);
            d
        })
        .collect();
    let mean_d2 = neighbours.iter().flatten().map(|(_, d)| d).sum::<f64>() / (n * k) as f64;
    let mut w = std::collections::BTreeMap::new();
    for (i, nb) in neighbours.iter().enumerate() {
        for &(j, d) in nb {
            let v = (-d / (2.0 * mean_d2)).exp();
            for key in [(i, j), (j, i)] {
                let e = w.entry(key).or_insert(0.0f64);
                *e = e.max(v);
            }
        }
    }
    let g = GraphSpec::new(n, w.into_iter().map(|((i, j), v)| (i, j, v)))?;
    Ok((g, pts))
}

/// Piecewise-smooth signal: vertices are split into `pieces` clusters grown by
/// breadth-first search from random seeds; each cluster has its own level plus a
/// gentle ramp in hop distance from its seed. Values lie in `[0, 1]`.
pub fn gen_graph_signal(g: &GraphSpec, pieces: usize, seed: u64) -> Result<Vec<f64>> {
    let n = g.num_vertices();
    if pieces == 0 || pieces > n {
        return Err(Error::Structural(format!("need 0 < pieces <= {n}, got {pieces}")));
    }
    let mut rng = rng(seed);
    let seeds = sample(&mut rng, n, pieces).into_vec();
    let mut adj = vec![Vec::new(); n];
    for &(i, j, _) in g.edges() {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut owner = vec![usize::MAX; n];
    let mut hops = vec![0usize; n];
    let mut queue = VecDeque::new();
    for (c, &s) in seeds.iter().enumerate() {
        owner[s] = c;
        queue.push_back(s);
    }
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if owner[u] == usize::MAX {
                owner[u] = owner[v];
                hops[u] = hops[v] + 1;
                queue.push_back(u);
            }
        }
    }
    let levels: Vec<(f64, f64)> = (0..pieces)
        .map(|_| (rng.random_range(0.15..0.85), rng.random_range(-0.03..0.03)))
        .collect();
    Ok((0..n)
        .map(|v| {
            // vertices unreachable from every seed keep a mid-range constant
            let (level, slope) = levels.get(owner[v]).copied().unwrap_or((0.5, 0.0));
            (level + slope * hops[v] as f64).clamp(0.0, 1.0)
        })
        .collect())
}

/// Mask selecting `round(rate * n)` (at least one) entries uniformly without replacement.
pub fn gen_sampling_mask(n: usize, rate: f64, seed: u64) -> Result<Vec<bool>> {
    if !(rate > 0.0 && rate <= 1.0) || n == 0 {
        return Err(Error::Domain(format!("sampling rate must be in (0, 1], got {rate}")));
    }
    let m = ((rate * n as f64).round() as usize).clamp(1, n);
    let mut mask = vec![false; n];
    for i in sample(&mut rng(seed), n, m).into_iter() {
        mask[i] = true;
    }
    Ok(mask)
}

/// `x + σ ξ` with independent standard normal `ξ`.
pub fn add_gaussian(x: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    if sigma == 0.0 {
        return x.to_vec();
    }
    let mut rng = rng(seed);
    x.iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v + sigma * z
        })
        .collect()
}

/// Sets `round(p * n)` entries, chosen uniformly without replacement, to 0 or 1
/// with equal probability.
pub fn add_salt_pepper(x: &[f64], p: f64, seed: u64) -> Vec<f64> {
    let mut out = x.to_vec();
    let count = (p * x.len() as f64).round() as usize;
    if count == 0 {
        return out;
    }
    let mut rng = rng(seed);
    for i in sample(&mut rng, x.len(), count.min(x.len())).into_iter() {
        out[i] = if rng.random::<bool>() { 1.0 } else { 0.0 };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phantom_is_deterministic_and_in_range() {
        let a = gen_hsi_phantom([6, 5, 4], 3).unwrap();
        assert_eq!(a, gen_hsi_phantom([6, 5, 4], 3).unwrap());
        assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_ne!(a, gen_hsi_phantom([6, 5, 4], 4).unwrap());
    }

    #[test]
    fn stripes_are_constant_along_first_axis() {
        let s = gen_stripes([4, 3, 2], 0.5, 0.1, 1).unwrap();
        for c in 0..6 {
            assert!(s[4 * c..4 * c + 4].iter().all(|&v| v == s[4 * c]));
        }
        assert_eq!(s.iter().filter(|v| **v != 0.0).count(), 12);
    }

    #[test]
    fn endmembers_unit_max() {
        let e = gen_endmembers(20, 4, 1).unwrap();
        for c in 0..4 {
            assert!((e.column(c).max() - 1.0).abs() < 1e-15);
            assert!(e.column(c).min() >= 0.0);
        }
    }

    #[test]
    fn abundances_sum_at_most_one() {
        let a = gen_abundances(30, 4, 2, 5).unwrap();
        for p in 0..30 {
            let s: f64 = (0..4).map(|e| a[e * 30 + p]).sum();
            assert!(s <= 1.0 + 1e-12);
        }
        assert!(a.iter().all(|v| *v >= 0.0));
        let used = (0..4).filter(|e| a[e * 30..(e + 1) * 30].iter().any(|v| *v > 0.0)).count();
        assert_eq!(used, 2);
    }

    #[test]
    fn graph_is_symmetric_without_loops() {
        let (g, _) = gen_graph(40, 5, 9).unwrap();
        for &(i, j, w) in g.edges() {
            assert_ne!(i, j);
            assert_eq!(g.weight(j, i), w);
        }
        assert!(gen_graph(5, 5, 0).is_err());
        let (h, _) = gen_graph(40, 5, 9).unwrap();
        assert_eq!(g.edges(), h.edges());
    }

    #[test]
    fn noise_identities() {
        let x = vec![0.3; 10];
        assert_eq!(add_gaussian(&x, 0.0, 1), x);
        assert_eq!(add_salt_pepper(&x, 0.0, 1), x);
        let sp = add_salt_pepper(&x, 0.5, 1);
        assert_eq!(sp.iter().filter(|v| **v == 0.0 || **v == 1.0).count(), 5);
    }

    #[test]
    fn gaussian_std_matches() {
        let x = vec![0.0; 1_000_000];
        let y = add_gaussian(&x, 0.05, 11);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
        assert!((var.sqrt() / 0.05 - 1.0).abs() < 0.01);
    }
}
