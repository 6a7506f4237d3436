//! Error metrics and convergence diagnostics: relative-L2 error against the
//! reference solution, pointwise error fields, the quadrature-weighted
//! training-error functionals with their boundary constants, and the
//! error-vs-loss scaling fit.

use std::path::Path;

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io_util::write_atomic;
use crate::loss::{Gammas, LossEvaluator, ResidualBatch};
use crate::net::{input_jets, BatchEval, NetworkArch, ParamVector};
use crate::pde::{boundary_laplacian_residuals, ProblemKind, ProblemSpec};
use crate::sampling::PointSet;
use crate::spectral::SolutionGrid;
use crate::taylor::{index_order, Jet, Truncation};

/// Relative L2 error ‖pred − exact‖ / ‖exact‖ (Euclidean norms over the
/// sample values).
pub fn relative_l2(pred: &[f64], exact: &[f64]) -> Result<f64> {
    if pred.len() != exact.len() {
        return Err(Error::DimensionMismatch {
            expected: exact.len(),
            got: pred.len(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (&p, &e) in pred.iter().zip(exact) {
        num += (p - e) * (p - e);
        den += e * e;
    }
    if den == 0.0 {
        return Err(Error::DegenerateInput(
            "relative L2 error against an identically zero reference".into(),
        ));
    }
    Ok((num / den).sqrt())
}

/// Network values (output 0) at a batch of space-time points, via an
/// order-zero batched forward pass.
pub fn network_values(
    arch: &NetworkArch,
    params: &ParamVector,
    points: &Array2<f64>,
) -> Result<Vec<f64>> {
    let trunc = Truncation::total_order(arch.input_dim, 0)?;
    let mut eval = BatchEval::new();
    eval.forward(arch, &trunc, params, points)?;
    Ok((0..points.nrows())
        .map(|p| eval.coeff(&trunc, 0, p, 0))
        .collect())
}

/// |u_θ − u_ref| on reference grid nodes at selected snapshots.
#[derive(Debug, Clone)]
pub struct ErrorField {
    /// One row per node: spatial coordinates then t.
    pub points: Array2<f64>,
    pub predicted: Vec<f64>,
    pub reference: Vec<f64>,
    pub abs_error: Vec<f64>,
}

impl ErrorField {
    pub fn max_abs_error(&self) -> f64 {
        self.abs_error.iter().cloned().fold(0.0, f64::max)
    }

    pub fn export_csv(&self, space_dim: usize, path: &Path) -> Result<()> {
        use std::io::Write;
        let mut buf = Vec::new();
        let coords: Vec<String> = (0..space_dim).map(|v| format!("x{v}")).collect();
        writeln!(buf, "{},t,predicted,reference,abs_error", coords.join(","))?;
        for i in 0..self.points.nrows() {
            let row: Vec<String> = self
                .points
                .row(i)
                .iter()
                .map(|c| format!("{c:.17e}"))
                .collect();
            writeln!(
                buf,
                "{},{:.17e},{:.17e},{:.17e}",
                row.join(","),
                self.predicted[i],
                self.reference[i],
                self.abs_error[i]
            )?;
        }
        write_atomic(path, &buf)
    }
}

/// Pointwise error of the network against the reference on the reference's
/// own grid nodes at the given snapshot indices.
pub fn pointwise_error_field(
    arch: &NetworkArch,
    params: &ParamVector,
    reference: &SolutionGrid,
    snapshot_indices: &[usize],
) -> Result<ErrorField> {
    let d = reference.space_dim;
    if arch.input_dim != d + 1 {
        return Err(Error::DimensionMismatch {
            expected: d + 1,
            got: arch.input_dim,
        });
    }
    let m = reference.points_per_snapshot();
    let n = reference.n;
    let axes: Vec<Vec<f64>> = (0..d).map(|v| reference.axis_nodes(v)).collect();
    let total = snapshot_indices.len() * m;
    let mut points = Array2::zeros((total, d + 1));
    let mut ref_vals = Vec::with_capacity(total);
    for (si, &ti) in snapshot_indices.iter().enumerate() {
        if ti >= reference.times.len() {
            return Err(Error::InvalidInput(format!(
                "snapshot index {ti} out of range ({} stored)",
                reference.times.len()
            )));
        }
        let snap = reference.snapshot(ti);
        for i in 0..m {
            let row = si * m + i;
            // node layout is row-major with axis 0 fastest
            points[[row, 0]] = axes[0][i % n];
            if d == 2 {
                points[[row, 1]] = axes[1][i / n];
            }
            points[[row, d]] = reference.times[ti];
            ref_vals.push(snap[i]);
        }
    }
    let pred = network_values(arch, params, &points)?;
    let abs_error = pred
        .iter()
        .zip(&ref_vals)
        .map(|(&p, &r)| (p - r).abs())
        .collect();
    Ok(ErrorField {
        points,
        predicted: pred,
        reference: ref_vals,
        abs_error,
    })
}

/// Term-by-term quadrature-weighted training-error functional. The interior
/// sums carry the adaptive weights times the uniform space-time quadrature
/// weight; initial and boundary sums carry uniform quadrature weights alone.
#[derive(Debug, Clone, Serialize)]
pub struct TheoryErrorReport {
    pub kind: String,
    /// Weighted interior sum of the evolution residual.
    pub e_t_int: f64,
    /// ακ-scaled weighted sum of the constraint residual (decoupled CH only).
    pub e_t_int1: f64,
    pub e_t_tb: f64,
    /// Boundary sub-terms: Σ λ_sb |R|² for value, gradient, and (CH only)
    /// their Laplacians.
    pub sb1: f64,
    pub sb2: f64,
    pub delta_sb1: f64,
    pub delta_sb2: f64,
    /// Composed boundary contribution including the constant factor.
    pub e_t_sb: f64,
    /// Sup-norm constant estimate: c₁²·C̃·√T for the Allen-Cahn form, 2ακ·M̂
    /// for Cahn-Hilliard; already folded into `e_t_sb`.
    pub boundary_constant: f64,
    /// Set when no reference solution was supplied: the constant then uses
    /// network norms only and underestimates the true value.
    pub constant_is_lower_bound: bool,
    pub e_t_squared: f64,
}

impl TheoryErrorReport {
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidInput(format!("report serialization: {e}")))?;
        write_atomic(path, text.as_bytes())
    }

    /// Recompose the total from the stored terms (used as a self-check).
    pub fn recompose(&self) -> f64 {
        self.e_t_tb + self.e_t_int + self.e_t_int1 + self.e_t_sb
    }
}

fn face_measure(spec: &ProblemSpec, axis: usize) -> f64 {
    (0..spec.space_dim)
        .filter(|&w| w != axis)
        .map(|w| spec.domain[w][1] - spec.domain[w][0])
        .product()
}

fn boundary_measure(spec: &ProblemSpec) -> f64 {
    (0..spec.space_dim)
        .map(|v| 2.0 * face_measure(spec, v))
        .sum()
}

fn domain_volume(spec: &ProblemSpec) -> f64 {
    spec.domain.iter().map(|&[a, b]| b - a).product()
}

/// Evenly spaced points on both faces of every periodic axis, crossed with
/// midpoints in time; about `n_total` points in all.
fn dense_boundary_points(spec: &ProblemSpec, n_total: usize) -> Array2<f64> {
    let d = spec.space_dim;
    let per_face = (n_total / (2 * d)).max(4);
    let mut rows: Vec<f64> = Vec::new();
    let mut count = 0;
    for axis in 0..d {
        for face in 0..2 {
            let x_axis = spec.domain[axis][face];
            if d == 1 {
                for j in 0..per_face {
                    let t = spec.horizon * (j as f64 + 0.5) / per_face as f64;
                    rows.extend_from_slice(&[x_axis, t]);
                    count += 1;
                }
            } else {
                // near-square grid over (free coordinate, time)
                let m = (per_face as f64).sqrt().ceil() as usize;
                let free = 1 - axis;
                let [fa, fb] = spec.domain[free];
                for jf in 0..m {
                    let xf = fa + (fb - fa) * (jf as f64 + 0.5) / m as f64;
                    for jt in 0..m {
                        let t = spec.horizon * (jt as f64 + 0.5) / m as f64;
                        let mut p = [0.0; 3];
                        p[axis] = x_axis;
                        p[free] = xf;
                        p[2] = t;
                        rows.extend_from_slice(&p);
                        count += 1;
                    }
                }
            }
        }
    }
    Array2::from_shape_vec((count, d + 1), rows).unwrap()
}

fn jet_sup(jet: &Jet, order: usize) -> f64 {
    jet.partials()
        .iter()
        .filter(|(alpha, _)| index_order(alpha) <= order)
        .map(|&(_, v)| v.abs())
        .fold(0.0, f64::max)
}

/// Sampled sup of |∂^α u_θ| over the boundary cylinder for |α| ≤ order,
/// one value per network output.
fn network_boundary_sup(
    spec: &ProblemSpec,
    arch: &NetworkArch,
    params: &ParamVector,
    n_dense: usize,
    order: usize,
) -> Result<Vec<f64>> {
    let pts = dense_boundary_points(spec, n_dense);
    let mut sups = vec![0.0f64; arch.output_dim];
    for row in pts.rows() {
        let jets = input_jets(arch, params, row.as_slice().unwrap(), order)?;
        for (out, jet) in jets.iter().enumerate() {
            sups[out] = sups[out].max(jet_sup(jet, order));
        }
    }
    Ok(sups)
}

/// All spatial derivative-order combinations with total order ≤ `order`.
fn spatial_orders(d: usize, order: usize) -> Vec<Vec<usize>> {
    let mut combos = Vec::new();
    if d == 1 {
        for o in 0..=order {
            combos.push(vec![o]);
        }
    } else {
        for ox in 0..=order {
            for oy in 0..=(order - ox) {
                combos.push(vec![ox, oy]);
            }
        }
    }
    combos
}

fn sup_at_boundary_nodes(field: &[f64], d: usize, n: usize) -> f64 {
    let mut sup: f64 = 0.0;
    if d == 1 {
        sup = sup.max(field[0].abs());
    } else {
        for i in 0..n {
            sup = sup.max(field[i].abs()); // iy = 0 row
            sup = sup.max(field[i * n].abs()); // ix = 0 column
        }
    }
    sup
}

/// Sampled sup of the reference's spatial derivatives up to `order` over the
/// boundary nodes of every stored snapshot. Spatial derivatives only — the
/// full C^k norm also contains time derivatives, so this is an estimate.
fn reference_boundary_sup(grid: &SolutionGrid, order: usize) -> f64 {
    let d = grid.space_dim;
    let mut sup: f64 = 0.0;
    for ti in 0..grid.times.len() {
        for orders in spatial_orders(d, order) {
            let field;
            let values = if orders.iter().all(|&o| o == 0) {
                grid.snapshot(ti)
            } else {
                field = grid.derivative_snapshot_order(ti, &orders);
                &field
            };
            sup = sup.max(sup_at_boundary_nodes(values, d, grid.n));
        }
    }
    sup
}

/// Same, for the Laplacian of the reference (the chemical-potential proxy of
/// the decoupled Cahn-Hilliard system) and its first derivatives.
fn reference_laplacian_sup(grid: &SolutionGrid, order: usize) -> f64 {
    let d = grid.space_dim;
    let mut sup: f64 = 0.0;
    for ti in 0..grid.times.len() {
        for orders in spatial_orders(d, order) {
            let mut field = vec![0.0; grid.points_per_snapshot()];
            for axis in 0..d {
                let mut o = orders.clone();
                o[axis] += 2;
                for (acc, v) in field.iter_mut().zip(grid.derivative_snapshot_order(ti, &o)) {
                    *acc += v;
                }
            }
            sup = sup.max(sup_at_boundary_nodes(&field, d, grid.n));
        }
    }
    sup
}

/// The quadrature-weighted training-error functional: every residual sum in
/// the generalization-error bound, evaluated on the training points with
/// midpoint-style quadrature weights, the adaptive weights on the interior
/// term, and the boundary constant estimated from sampled sup-norms.
pub fn theory_training_error(
    spec: &ProblemSpec,
    arch: &NetworkArch,
    params: &ParamVector,
    points: &PointSet,
    rae_weights: &[f64],
    reference: Option<&SolutionGrid>,
) -> Result<TheoryErrorReport> {
    let d = spec.space_dim;
    let n_int = points.interior.nrows();
    let n_tb = points.initial.nrows();
    let n_sb = points.boundary_a.nrows();
    if rae_weights.len() != n_int {
        return Err(Error::DimensionMismatch {
            expected: n_int,
            got: rae_weights.len(),
        });
    }

    let unit_gamma = Gammas {
        gamma_int: 1.0,
        gamma_tb: 1.0,
        gamma_sb: 1.0,
    };
    let mut evaluator = LossEvaluator::new(spec.clone(), arch.clone(), unit_gamma, points)?;
    let batch: ResidualBatch = evaluator.residuals(params)?;

    let vol = domain_volume(spec);
    let w_int = vol * spec.horizon / n_int as f64;
    let w_tb = vol / n_tb as f64;

    let mut e_t_int = 0.0;
    let mut e_t_int1 = 0.0;
    for i in 0..n_int {
        e_t_int += rae_weights[i] * w_int * batch.r_int[i] * batch.r_int[i];
        if spec.kind == ProblemKind::ChDecoupled {
            e_t_int1 += rae_weights[i] * w_int * batch.r_int1[i] * batch.r_int1[i];
        }
    }
    e_t_int1 *= spec.alpha * spec.kappa;

    let mut e_t_tb = 0.0;
    for &r in &batch.r_tb {
        e_t_tb += w_tb * r * r;
    }

    // per-pair quadrature weights: each axis's pair family covers one face
    // of the boundary crossed with (0, T]
    let mut axis_counts = vec![0usize; d];
    for &axis in &points.boundary_axis {
        axis_counts[axis] += 1;
    }
    let pair_weight = |axis: usize| -> f64 {
        face_measure(spec, axis) * spec.horizon / axis_counts[axis] as f64
    };

    let is_ch = matches!(spec.kind, ProblemKind::ChCoupled | ProblemKind::ChDecoupled);
    let mut sb1 = 0.0;
    let mut sb2 = 0.0;
    let mut delta_sb1 = 0.0;
    let mut delta_sb2 = 0.0;
    for i in 0..n_sb {
        let w = pair_weight(points.boundary_axis[i]);
        sb1 += w * batch.r_sb1[i] * batch.r_sb1[i];
        for dir in 0..d {
            let r = batch.r_sb2[i * d + dir];
            sb2 += w * r * r;
        }
        if is_ch {
            let a = points.boundary_a.row(i);
            let b = points.boundary_b.row(i);
            let jet_a = input_jets(arch, params, a.as_slice().unwrap(), 3)?;
            let jet_b = input_jets(arch, params, b.as_slice().unwrap(), 3)?;
            let (l1, l2) = boundary_laplacian_residuals(&jet_a[0], &jet_b[0], d)?;
            delta_sb1 += w * l1 * l1;
            for v in l2 {
                delta_sb2 += w * v * v;
            }
        }
    }

    // boundary constant from sampled sup-norms on a grid 4x as dense as the
    // boundary training set
    let n_dense = 4 * n_sb;
    let root_bd = boundary_measure(spec).sqrt();
    let (boundary_constant, e_t_sb) = match spec.kind {
        ProblemKind::Ac => {
            let net = network_boundary_sup(spec, arch, params, n_dense, 1)?[0];
            let ref_sup = reference.map(|g| reference_boundary_sup(g, 1)).unwrap_or(0.0);
            let c_tilde = root_bd * (ref_sup + net);
            let factor = spec.c1_sq * c_tilde * spec.horizon.sqrt();
            (factor, factor * (sb1.sqrt() + sb2.sqrt()))
        }
        ProblemKind::ChCoupled => {
            let net = network_boundary_sup(spec, arch, params, n_dense, 3)?[0];
            let ref_sup = reference.map(|g| reference_boundary_sup(g, 3)).unwrap_or(0.0);
            let m_hat = root_bd * (ref_sup + net);
            let factor = 2.0 * spec.alpha * spec.kappa * m_hat;
            (
                factor,
                factor * (sb1.sqrt() + delta_sb1.sqrt() + sb2.sqrt() + delta_sb2.sqrt()),
            )
        }
        ProblemKind::ChDecoupled => {
            let net = network_boundary_sup(spec, arch, params, n_dense, 1)?;
            let (ref_u, ref_mu) = reference
                .map(|g| (reference_boundary_sup(g, 1), reference_laplacian_sup(g, 1)))
                .unwrap_or((0.0, 0.0));
            let m_u = root_bd * (ref_u + net[0]);
            let m_mu = root_bd * (ref_mu + net[1]);
            let factor = 2.0 * spec.alpha * spec.kappa * m_u.max(m_mu);
            (
                factor,
                factor * (sb1.sqrt() + delta_sb1.sqrt() + sb2.sqrt() + delta_sb2.sqrt()),
            )
        }
    };

    let report = TheoryErrorReport {
        kind: format!("{:?}", spec.kind),
        e_t_int,
        e_t_int1,
        e_t_tb,
        sb1,
        sb2,
        delta_sb1,
        delta_sb2,
        e_t_sb,
        boundary_constant,
        constant_is_lower_bound: reference.is_none(),
        e_t_squared: e_t_tb + e_t_int + e_t_int1 + e_t_sb,
    };
    debug_assert!(
        (report.e_t_squared - report.recompose()).abs()
            <= 1e-12 * report.e_t_squared.abs().max(1.0)
    );
    Ok(report)
}

/// Ordinary least squares of log10(error) against log10(loss).
#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// Loss interval the fit was restricted to.
    pub loss_range: (f64, f64),
    /// (log10 loss, log10 error) pairs used.
    pub points: Vec<(f64, f64)>,
}

impl ScalingFit {
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidInput(format!("fit serialization: {e}")))?;
        write_atomic(path, text.as_bytes())
    }
}

/// Default fit window: the final two decades of loss decrease, excluding the
/// first 10% of iterations as transient.
pub fn default_loss_range(losses: &[f64]) -> Option<(f64, f64)> {
    let skip = losses.len() / 10;
    let tail = &losses[skip..];
    let min = tail
        .iter()
        .cloned()
        .filter(|l| l.is_finite() && *l > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return None;
    }
    Some((min, 100.0 * min))
}

pub fn scaling_fit(
    losses: &[f64],
    errors: &[f64],
    loss_range: Option<(f64, f64)>,
) -> Result<ScalingFit> {
    if losses.len() != errors.len() {
        return Err(Error::DimensionMismatch {
            expected: losses.len(),
            got: errors.len(),
        });
    }
    let range = match loss_range.or_else(|| default_loss_range(losses)) {
        Some(r) => r,
        None => {
            return Err(Error::DegenerateInput(
                "no positive finite losses to fit".into(),
            ))
        }
    };
    let mut pts = Vec::new();
    for (&l, &e) in losses.iter().zip(errors) {
        if l.is_finite() && e.is_finite() && l > 0.0 && e > 0.0 && l >= range.0 && l <= range.1 {
            pts.push((l.log10(), e.log10()));
        }
    }
    if pts.len() < 10 {
        return Err(Error::InvalidInput(format!(
            "scaling fit needs at least 10 points in range, found {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in &pts {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateInput(
            "all losses in the fit range are identical".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok(ScalingFit {
        slope,
        intercept: mean_y - slope * mean_x,
        loss_range: range,
        points: pts,
    })
}
