//! Latin hypercube collocation sampling and the midpoint quadrature rule.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pde::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Counts {
    pub n_int: usize,
    pub n_sb: usize,
    pub n_tb: usize,
}

/// Stratified-permutation Latin hypercube sample in the unit cube: per axis,
/// exactly one point in each of `n` equal strata. Axes flagged half-open
/// draw in (lo, hi] instead of [lo, hi) so time never lands on t = 0.
fn lhs_unit(n: usize, dims: usize, half_open: &[bool], rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut pts = Array2::zeros((n, dims));
    let mut perm: Vec<usize> = (0..n).collect();
    for d in 0..dims {
        perm.shuffle(rng);
        for (i, &stratum) in perm.iter().enumerate() {
            let u: f64 = rng.gen::<f64>(); // in [0, 1)
            let frac = if half_open[d] { 1.0 - u } else { u };
            pts[[i, d]] = (stratum as f64 + frac) / n as f64;
        }
    }
    pts
}

fn scale_to(bounds: &[[f64; 2]], mut unit: Array2<f64>) -> Array2<f64> {
    for (d, &[a, b]) in bounds.iter().enumerate() {
        for v in unit.column_mut(d) {
            *v = a + (b - a) * *v;
        }
    }
    unit
}

/// Latin hypercube sample over an axis-aligned box, one row per point.
pub fn lhs_sample(bounds: &[[f64; 2]], n: usize, seed: u64) -> Result<Array2<f64>> {
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    if bounds.iter().any(|&[a, b]| !(a < b)) {
        return Err(Error::InvalidInput("bounds must satisfy a < b".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half_open = vec![false; bounds.len()];
    Ok(scale_to(bounds, lhs_unit(n, bounds.len(), &half_open, &mut rng)))
}

/// Interior, matched periodic boundary pairs, and initial collocation sets
/// for one problem. Generated once per run and frozen.
#[derive(Debug, Clone)]
pub struct PointSet {
    /// N_int x (d+1) space-time points with t in (0, T].
    pub interior: Array2<f64>,
    /// N_sb x (d+1): points on the low face of their periodic axis.
    pub boundary_a: Array2<f64>,
    /// Mirrored partners on the high face; same free coordinates and t.
    pub boundary_b: Array2<f64>,
    /// Periodic axis of each boundary pair.
    pub boundary_axis: Vec<usize>,
    /// N_tb x d spatial points (t = 0 implied).
    pub initial: Array2<f64>,
    pub seed: u64,
}

pub fn sample_problem_points(spec: &ProblemSpec, counts: Counts, seed: u64) -> Result<PointSet> {
    spec.validate()?;
    if counts.n_int == 0 || counts.n_sb == 0 || counts.n_tb == 0 {
        return Err(Error::InvalidInput("collocation counts must be positive".into()));
    }
    let d = spec.space_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // interior over box x (0, T], time axis half-open
    let mut half_open = vec![false; d + 1];
    half_open[d] = true;
    let mut int_bounds: Vec<[f64; 2]> = spec.domain.clone();
    int_bounds.push([0.0, spec.horizon]);
    let interior = scale_to(
        &int_bounds,
        lhs_unit(counts.n_int, d + 1, &half_open, &mut rng),
    );

    // boundary pairs: free coordinates (other spatial axes + t) sampled on
    // the face, then mirrored across the periodic axis
    let mut boundary_a = Array2::zeros((counts.n_sb, d + 1));
    let mut boundary_b = Array2::zeros((counts.n_sb, d + 1));
    let mut boundary_axis = Vec::with_capacity(counts.n_sb);
    let free_half_open: Vec<bool> = (0..d).map(|k| k == d - 1).collect();
    let free = lhs_unit(counts.n_sb, d, &free_half_open, &mut rng);
    for i in 0..counts.n_sb {
        let axis = i % d;
        boundary_axis.push(axis);
        let mut slot = 0;
        for v in 0..d {
            if v == axis {
                boundary_a[[i, v]] = spec.domain[v][0];
                boundary_b[[i, v]] = spec.domain[v][1];
            } else {
                let [a, b] = spec.domain[v];
                let coord = a + (b - a) * free[[i, slot]];
                boundary_a[[i, v]] = coord;
                boundary_b[[i, v]] = coord;
                slot += 1;
            }
        }
        let t = spec.horizon * free[[i, d - 1]];
        boundary_a[[i, d]] = t;
        boundary_b[[i, d]] = t;
    }

    let no_half_open = vec![false; d];
    let initial = scale_to(
        &spec.domain,
        lhs_unit(counts.n_tb, d, &no_half_open, &mut rng),
    );

    Ok(PointSet {
        interior,
        boundary_a,
        boundary_b,
        boundary_axis,
        initial,
        seed,
    })
}

/// Midpoint rule grid: cell centers with uniform weights |Λ|/M.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    /// M x d cell midpoints.
    pub nodes: Array2<f64>,
    pub weights: Vec<f64>,
    pub cells_per_axis: usize,
}

pub fn quadrature_grid(bounds: &[[f64; 2]], cells_per_axis: usize) -> Result<QuadratureGrid> {
    if cells_per_axis == 0 {
        return Err(Error::InvalidInput("cells_per_axis must be positive".into()));
    }
    if bounds.iter().any(|&[a, b]| !(a < b)) {
        return Err(Error::InvalidInput("bounds must satisfy a < b".into()));
    }
    let d = bounds.len();
    let n = cells_per_axis;
    let m = n.pow(d as u32);
    let volume: f64 = bounds.iter().map(|&[a, b]| b - a).product();
    let mut nodes = Array2::zeros((m, d));
    for i in 0..m {
        let mut rem = i;
        for v in 0..d {
            let idx = rem % n;
            rem /= n;
            let [a, b] = bounds[v];
            nodes[[i, v]] = a + (b - a) * (idx as f64 + 0.5) / n as f64;
        }
    }
    Ok(QuadratureGrid {
        nodes,
        weights: vec![volume / m as f64; m],
        cells_per_axis: n,
    })
}

pub fn midpoint_quadrature(f: impl Fn(&[f64]) -> f64, grid: &QuadratureGrid) -> f64 {
    let mut acc = 0.0;
    for (node, &w) in grid.nodes.rows().into_iter().zip(&grid.weights) {
        acc += w * f(node.as_slice().unwrap());
    }
    acc
}

/// CSV export of a point set for reproducibility audits: one row per point
/// with a role column; boundary rows carry their pair index and axis.
pub fn export_points_csv(points: &PointSet, space_dim: usize, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    let coord_header: Vec<String> = (0..space_dim)
        .map(|v| format!("x{v}"))
        .chain(std::iter::once("t".to_string()))
        .collect();
    writeln!(buf, "role,index,{},pair_axis", coord_header.join(","))?;
    let write_rows = |buf: &mut Vec<u8>, role: &str, pts: &Array2<f64>, axes: Option<&[usize]>| {
        for (i, row) in pts.rows().into_iter().enumerate() {
            let coords: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            let axis = axes.map(|a| a[i].to_string()).unwrap_or_default();
            writeln!(buf, "{role},{i},{},{axis}", coords.join(",")).unwrap();
        }
    };
    write_rows(&mut buf, "interior", &points.interior, None);
    write_rows(&mut buf, "boundary_a", &points.boundary_a, Some(&points.boundary_axis));
    write_rows(&mut buf, "boundary_b", &points.boundary_b, Some(&points.boundary_axis));
    // initial rows get an explicit t = 0 column for a uniform schema
    let n_tb = points.initial.nrows();
    let mut initial_t = Array2::zeros((n_tb, space_dim + 1));
    for i in 0..n_tb {
        for v in 0..space_dim {
            initial_t[[i, v]] = points.initial[[i, v]];
        }
    }
    write_rows(&mut buf, "initial", &initial_t, None);
    crate::io_util::write_atomic(path, &buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::InitialCondition;
    use proptest::prelude::*;

    #[test]
    fn lhs_stratification_small() {
        let pts = lhs_sample(&[[0.0, 1.0], [0.0, 1.0]], 4, 3).unwrap();
        for d in 0..2 {
            let mut seen = [false; 4];
            for i in 0..4 {
                let q = (pts[[i, d]] * 4.0).floor() as usize;
                assert!(!seen[q], "two points in quartile {q} of axis {d}");
                seen[q] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    proptest! {
        #[test]
        fn lhs_stratification_holds(n in 1usize..200, seed in 0u64..1000) {
            let pts = lhs_sample(&[[-1.0, 1.0]], n, seed).unwrap();
            let mut seen = vec![false; n];
            for i in 0..n {
                let u = (pts[[i, 0]] + 1.0) / 2.0;
                let stratum = ((u * n as f64).floor() as usize).min(n - 1);
                prop_assert!(!seen[stratum]);
                seen[stratum] = true;
            }
        }
    }

    #[test]
    fn lhs_determinism_and_errors() {
        let a = lhs_sample(&[[0.0, 2.0], [1.0, 3.0]], 64, 9).unwrap();
        let b = lhs_sample(&[[0.0, 2.0], [1.0, 3.0]], 64, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, lhs_sample(&[[0.0, 2.0], [1.0, 3.0]], 64, 10).unwrap());
        assert!(lhs_sample(&[[0.0, 1.0]], 0, 0).is_err());
        let single = lhs_sample(&[[0.0, 1.0]], 1, 0).unwrap();
        assert!(single[[0, 0]] >= 0.0 && single[[0, 0]] < 1.0);
    }

    #[test]
    fn problem_points_structure() {
        let spec = ProblemSpec::ac1d(InitialCondition::AcI1);
        let counts = Counts { n_int: 500, n_sb: 64, n_tb: 128 };
        let ps = sample_problem_points(&spec, counts, 0).unwrap();
        assert_eq!(ps.interior.dim(), (500, 2));
        assert_eq!(ps.initial.dim(), (128, 1));
        // interior time strictly positive, within horizon
        for i in 0..500 {
            let t = ps.interior[[i, 1]];
            assert!(t > 0.0 && t <= spec.horizon);
            let x = ps.interior[[i, 0]];
            assert!((-1.0..1.0).contains(&x));
        }
        // pairs sit on opposite faces and share t
        for i in 0..64 {
            assert_eq!(ps.boundary_a[[i, 0]], -1.0);
            assert_eq!(ps.boundary_b[[i, 0]], 1.0);
            assert_eq!(ps.boundary_a[[i, 1]], ps.boundary_b[[i, 1]]);
            assert!(ps.boundary_a[[i, 1]] > 0.0);
        }
    }

    #[test]
    fn problem_points_2d_pairs() {
        let spec = ProblemSpec::ac2d();
        let counts = Counts { n_int: 100, n_sb: 32, n_tb: 16 };
        let ps = sample_problem_points(&spec, counts, 1).unwrap();
        for i in 0..32 {
            let axis = ps.boundary_axis[i];
            assert_eq!(axis, i % 2);
            assert_eq!(ps.boundary_a[[i, axis]], 0.0);
            assert_eq!(ps.boundary_b[[i, axis]], 1.0);
            let other = 1 - axis;
            assert_eq!(ps.boundary_a[[i, other]], ps.boundary_b[[i, other]]);
            assert_eq!(ps.boundary_a[[i, 2]], ps.boundary_b[[i, 2]]);
        }
    }

    #[test]
    fn midpoint_hand_values() {
        let g1 = quadrature_grid(&[[0.0, 1.0]], 7).unwrap();
        assert!((midpoint_quadrature(|_| 1.0, &g1) - 1.0).abs() < 1e-14);
        assert!((g1.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);

        let g2 = quadrature_grid(&[[0.0, 1.0]], 2).unwrap();
        let got = midpoint_quadrature(|x| x[0] * x[0], &g2);
        assert!((got - 0.3125).abs() < 1e-15);

        // exact for affine integrands
        let g3 = quadrature_grid(&[[-2.0, 3.0], [1.0, 4.0]], 5).unwrap();
        let aff = midpoint_quadrature(|x| 2.0 * x[0] - 0.5 * x[1] + 1.0, &g3);
        // ∫∫ (2x - y/2 + 1) over [-2,3]x[1,4] = 15 - 18.75 + 15
        assert!((aff - 11.25).abs() / 11.25 < 1e-13);
    }

    #[test]
    fn midpoint_convergence_rates() {
        // log-log slope of the error vs M should be close to -2/d
        for d in 1..=3usize {
            let bounds = vec![[0.0, 1.0]; d];
            // exp is aperiodic, so the O(M^{-2/d}) midpoint error is visible
            // (periodic integrands over a full period converge much faster)
            let f = |x: &[f64]| x.iter().map(|&v| v.exp()).product::<f64>();
            let exact = (std::f64::consts::E - 1.0).powi(d as i32);
            let mut logs = Vec::new();
            for &n in &[4usize, 8, 16, 32] {
                if n.pow(d as u32) > 40_000 {
                    continue;
                }
                let g = quadrature_grid(&bounds, n).unwrap();
                let err = (midpoint_quadrature(f, &g) - exact).abs();
                logs.push(((n.pow(d as u32) as f64).ln(), err.ln()));
            }
            let slope = ols_slope(&logs);
            let want = -2.0 / d as f64;
            assert!(
                (slope - want).abs() < 0.1 * want.abs(),
                "d={d}: slope {slope} want {want}"
            );
        }
    }

    fn ols_slope(pts: &[(f64, f64)]) -> f64 {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }

    #[test]
    fn export_csv_roundtrip_shape() {
        let spec = ProblemSpec::ac1d(InitialCondition::AcI1);
        let ps = sample_problem_points(&spec, Counts { n_int: 10, n_sb: 4, n_tb: 6 }, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("points.csv");
        export_points_csv(&ps, 1, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 10 + 4 + 4 + 6);
        assert_eq!(lines[0], "role,index,x0,t,pair_axis");
    }
}
