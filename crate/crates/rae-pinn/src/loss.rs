//! Composite PINN loss: weighted interior residuals plus initial and
//! periodic boundary mismatch, with the exact parameter gradient.
//!
//! The hot path runs one batched jet forward pass per point group, forms
//! residual cotangents by hand (the residuals are short closed-form
//! expressions in the jet partials), and backpropagates through the batch
//! evaluator. Interior truncations are anisotropic downward-closed index
//! sets, so a fourth-order Cahn-Hilliard residual in 1D costs 6 jet
//! coefficients instead of the 15 of a full fourth-order jet.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{BatchEval, NetworkArch, ParamVector};
use crate::pde::{ProblemKind, ProblemSpec};
use crate::knn::NeighborIndex;
use crate::sampling::PointSet;
use crate::taylor::{mi, MultiIndex, Truncation};
use crate::weighting::WeightState;

/// Interior weighting handed to one loss evaluation. The adaptive variant
/// can refresh the weights from the residuals of the current forward pass
/// (the update happens after the residual sweep, before the loss and its
/// cotangents are formed), so no second forward pass is needed.
pub enum Weighting<'a> {
    Fixed(&'a [f64]),
    Adaptive {
        state: &'a mut WeightState,
        index: &'a NeighborIndex,
        update: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gammas {
    pub gamma_int: f64,
    pub gamma_tb: f64,
    pub gamma_sb: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub l_int: f64,
    pub l_tb: f64,
    pub l_sb: f64,
    pub gamma: Gammas,
    pub total: f64,
}

impl LossBreakdown {
    pub fn assemble(l_int: f64, l_tb: f64, l_sb: f64, gamma: Gammas) -> Self {
        LossBreakdown {
            l_int,
            l_tb,
            l_sb,
            gamma,
            total: gamma.gamma_int * l_int + gamma.gamma_tb * l_tb + gamma.gamma_sb * l_sb,
        }
    }
}

/// Pointwise residuals from one loss evaluation.
#[derive(Debug, Clone, Default)]
pub struct ResidualBatch {
    /// AC / coupled CH interior residual; second (evolution) residual for
    /// the decoupled form.
    pub r_int: Vec<f64>,
    /// First decoupled residual μ - Δu; empty otherwise.
    pub r_int1: Vec<f64>,
    pub r_tb: Vec<f64>,
    pub r_sb1: Vec<f64>,
    /// Gradient-difference residuals, space_dim entries per boundary pair.
    pub r_sb2: Vec<f64>,
}

impl ResidualBatch {
    /// Per-interior-point magnitude fed to the adaptive weighting; the
    /// decoupled form combines both residuals in quadrature.
    pub fn interior_magnitudes(&self) -> Vec<f64> {
        if self.r_int1.is_empty() {
            self.r_int.iter().map(|r| r.abs()).collect()
        } else {
            self.r_int
                .iter()
                .zip(&self.r_int1)
                .map(|(r2, r1)| (r1 * r1 + r2 * r2).sqrt())
                .collect()
        }
    }
}

/// Smallest downward-closed index set the interior residual can read.
pub fn interior_truncation(spec: &ProblemSpec) -> Result<Truncation> {
    let d = spec.space_dim;
    let vars = d + 1;
    let mut gens: Vec<MultiIndex> = Vec::new();
    let mut t_gen = [0u8; crate::taylor::MAX_VARS];
    t_gen[d] = 1;
    gens.push(t_gen);
    match spec.kind {
        ProblemKind::Ac | ProblemKind::ChDecoupled => {
            for v in 0..d {
                let mut g = [0u8; crate::taylor::MAX_VARS];
                g[v] = 2;
                gens.push(g);
            }
        }
        ProblemKind::ChCoupled => {
            for v in 0..d {
                let mut g = [0u8; crate::taylor::MAX_VARS];
                g[v] = 4;
                gens.push(g);
            }
            if d == 2 {
                gens.push(mi(&[2, 2, 0]));
            }
        }
    }
    Truncation::downward_closure(vars, &gens)
}

/// Cached slot positions and factorials inside the interior truncation.
struct IntSlots {
    val: usize,
    t: usize,
    d1: Vec<usize>,
    d2: Vec<usize>,
    /// Pure fourth-order slots per spatial variable (coupled CH only).
    d4: Vec<usize>,
    /// The x²y² slot of the 2D biharmonic.
    cross: Option<usize>,
}

impl IntSlots {
    fn build(spec: &ProblemSpec, trunc: &Truncation) -> Result<Self> {
        let d = spec.space_dim;
        let slot = |alpha: &MultiIndex| {
            trunc.position(alpha).ok_or_else(|| {
                Error::InvalidInput(format!("interior truncation misses index {alpha:?}"))
            })
        };
        let mut t_idx = [0u8; crate::taylor::MAX_VARS];
        t_idx[d] = 1;
        let mut d1 = Vec::new();
        let mut d2 = Vec::new();
        let mut d4 = Vec::new();
        for v in 0..d {
            let mut a = [0u8; crate::taylor::MAX_VARS];
            a[v] = 1;
            d1.push(slot(&a)?);
            a[v] = 2;
            d2.push(slot(&a)?);
            if spec.kind == ProblemKind::ChCoupled {
                a[v] = 4;
                d4.push(slot(&a)?);
            }
        }
        let cross = if spec.kind == ProblemKind::ChCoupled && d == 2 {
            Some(slot(&mi(&[2, 2, 0]))?)
        } else {
            None
        };
        Ok(IntSlots {
            val: slot(&[0u8; crate::taylor::MAX_VARS])?,
            t: slot(&t_idx)?,
            d1,
            d2,
            d4,
            cross,
        })
    }
}

/// Permutation-invariant sum: contributions are sorted by value before the
/// reduction, so reordering the collocation points cannot change the loss
/// even in the last bit.
fn stable_sum(buf: &mut Vec<f64>) -> f64 {
    buf.sort_by(f64::total_cmp);
    buf.iter().sum()
}

/// Batched evaluator of the composite loss over a fixed point set.
///
/// One instance owns the collocation points and all forward/backward
/// buffers; repeated calls allocate nothing of consequence.
pub struct LossEvaluator {
    pub spec: ProblemSpec,
    pub arch: NetworkArch,
    pub gamma: Gammas,
    trunc_int: Truncation,
    trunc_sb: Truncation,
    trunc_tb: Truncation,
    slots: IntSlots,
    interior: Array2<f64>,
    boundary_a: Array2<f64>,
    boundary_b: Array2<f64>,
    /// Initial points with the t = 0 column appended.
    initial: Array2<f64>,
    /// ψ(x) at the initial points.
    initial_values: Vec<f64>,
    eval_int: BatchEval,
    eval_a: BatchEval,
    eval_b: BatchEval,
    eval_tb: BatchEval,
    sum_buf: Vec<f64>,
}

impl LossEvaluator {
    pub fn new(
        spec: ProblemSpec,
        arch: NetworkArch,
        gamma: Gammas,
        points: &PointSet,
    ) -> Result<Self> {
        spec.validate()?;
        arch.validate()?;
        if arch.input_dim != spec.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.input_dim(),
                got: arch.input_dim,
            });
        }
        let want_outputs = if spec.kind == ProblemKind::ChDecoupled { 2 } else { 1 };
        if arch.output_dim != want_outputs {
            return Err(Error::DimensionMismatch {
                expected: want_outputs,
                got: arch.output_dim,
            });
        }
        let d = spec.space_dim;
        if points.interior.ncols() != d + 1 || points.initial.ncols() != d {
            return Err(Error::InvalidInput(
                "point set does not match the problem dimension".into(),
            ));
        }
        let trunc_int = interior_truncation(&spec)?;
        let slots = IntSlots::build(&spec, &trunc_int)?;
        let n_tb = points.initial.nrows();
        let mut initial = Array2::zeros((n_tb, d + 1));
        let mut initial_values = Vec::with_capacity(n_tb);
        for i in 0..n_tb {
            for v in 0..d {
                initial[[i, v]] = points.initial[[i, v]];
            }
            initial_values.push(spec.ic_eval(points.initial.row(i).as_slice().unwrap()));
        }
        Ok(LossEvaluator {
            trunc_sb: Truncation::total_order(d + 1, 1)?,
            trunc_tb: Truncation::total_order(d + 1, 0)?,
            trunc_int,
            slots,
            interior: points.interior.clone(),
            boundary_a: points.boundary_a.clone(),
            boundary_b: points.boundary_b.clone(),
            initial,
            initial_values,
            eval_int: BatchEval::new(),
            eval_a: BatchEval::new(),
            eval_b: BatchEval::new(),
            eval_tb: BatchEval::new(),
            sum_buf: Vec::new(),
            spec,
            arch,
            gamma,
        })
    }

    pub fn n_interior(&self) -> usize {
        self.interior.nrows()
    }

    pub fn interior_points(&self) -> &Array2<f64> {
        &self.interior
    }

    /// Loss, residuals and (optionally) the exact gradient of the total
    /// loss. With [`Weighting::Adaptive`] and `update` set, the weight state
    /// is refreshed from this pass's residuals before the loss is assembled.
    /// `grad` is overwritten, not accumulated.
    pub fn evaluate(
        &mut self,
        params: &ParamVector,
        weighting: Weighting,
        mut grad: Option<&mut ParamVector>,
    ) -> Result<(LossBreakdown, ResidualBatch)> {
        let n_int = self.interior.nrows();
        let expected = match &weighting {
            Weighting::Fixed(l) => l.len(),
            Weighting::Adaptive { state, .. } => state.lambda.len(),
        };
        if expected != n_int {
            return Err(Error::DimensionMismatch {
                expected: n_int,
                got: expected,
            });
        }
        if let Some(g) = grad.as_deref_mut() {
            if g.len() != params.len() {
                return Err(Error::DimensionMismatch {
                    expected: params.len(),
                    got: g.len(),
                });
            }
            g.values.fill(0.0);
        }
        let mut batch = ResidualBatch::default();

        let l_int = self.interior_term(params, weighting, &mut batch, &mut grad)?;
        let l_tb = self.initial_term(params, &mut batch, &mut grad)?;
        let l_sb = self.boundary_term(params, &mut batch, &mut grad)?;
        Ok((
            LossBreakdown::assemble(l_int, l_tb, l_sb, self.gamma),
            batch,
        ))
    }

    /// Residuals only (no weights, no gradient); used by the weighting
    /// pipeline and the diagnostics.
    pub fn residuals(&mut self, params: &ParamVector) -> Result<ResidualBatch> {
        let ones = vec![1.0; self.interior.nrows()];
        Ok(self.evaluate(params, Weighting::Fixed(&ones), None)?.1)
    }

    fn interior_term(
        &mut self,
        params: &ParamVector,
        weighting: Weighting,
        batch: &mut ResidualBatch,
        grad: &mut Option<&mut ParamVector>,
    ) -> Result<f64> {
        let n = self.interior.nrows();
        if n == 0 {
            return Ok(0.0);
        }
        let spec = &self.spec;
        let trunc = &self.trunc_int;
        let c = trunc.len();
        self.eval_int
            .forward(&self.arch, trunc, params, &self.interior)?;

        let s = &self.slots;
        let fac = |slot: usize| trunc.factorial(slot);
        let decoupled = spec.kind == ProblemKind::ChDecoupled;

        // first sweep: residuals only
        batch.r_int.reserve(n);
        for p in 0..n {
            let read = |out: usize, slot: usize| self.eval_int.coeff(trunc, out, p, slot) * fac(slot);
            let u = read(0, s.val);
            let u_t = read(0, s.t);
            let lap: f64 = s.d2.iter().map(|&sl| read(0, sl)).sum();
            match spec.kind {
                ProblemKind::Ac => {
                    batch.r_int.push(u_t - spec.c1_sq * lap + spec.f.eval(u));
                }
                ProblemKind::ChCoupled => {
                    let gsq: f64 = s.d1.iter().map(|&sl| read(0, sl).powi(2)).sum();
                    let mut biharm: f64 = s.d4.iter().map(|&sl| read(0, sl)).sum();
                    if let Some(cr) = s.cross {
                        biharm += 2.0 * read(0, cr);
                    }
                    batch.r_int.push(
                        u_t + spec.alpha * spec.kappa * biharm
                            - spec.kappa * (spec.f.d2(u) * gsq + spec.f.d1(u) * lap),
                    );
                }
                ProblemKind::ChDecoupled => {
                    let mu = read(1, s.val);
                    let lap_mu: f64 = s.d2.iter().map(|&sl| read(1, sl)).sum();
                    let gsq: f64 = s.d1.iter().map(|&sl| read(0, sl).powi(2)).sum();
                    batch.r_int1.push(mu - lap);
                    batch.r_int.push(
                        u_t + spec.alpha * spec.kappa * lap_mu
                            - spec.kappa * (spec.f.d2(u) * gsq + spec.f.d1(u) * lap),
                    );
                }
            }
        }
        if !decoupled {
            debug_assert_eq!(batch.r_int.len(), n);
        }

        // weights resolve after the residual sweep, before loss assembly
        let lambda: &[f64] = match weighting {
            Weighting::Fixed(l) => l,
            Weighting::Adaptive {
                state,
                index,
                update,
            } => {
                if update {
                    state.update(&batch.interior_magnitudes(), index)?;
                }
                &state.lambda
            }
        };

        // second sweep: weighted loss and residual cotangents
        let mut bar = grad
            .as_ref()
            .map(|_| Array2::zeros((self.arch.output_dim, n * c)));
        self.sum_buf.clear();
        let scale = self.gamma.gamma_int / n as f64;
        for p in 0..n {
            let read = |out: usize, slot: usize| self.eval_int.coeff(trunc, out, p, slot) * fac(slot);
            match spec.kind {
                ProblemKind::Ac => {
                    let r = batch.r_int[p];
                    self.sum_buf.push(lambda[p] * r * r);
                    if let Some(bar) = bar.as_mut() {
                        let u = read(0, s.val);
                        let g = 2.0 * scale * lambda[p] * r;
                        bar[[0, p * c + s.val]] = g * spec.f.d1(u) * fac(s.val);
                        bar[[0, p * c + s.t]] = g * fac(s.t);
                        for &sl in &s.d2 {
                            bar[[0, p * c + sl]] = -g * spec.c1_sq * fac(sl);
                        }
                    }
                }
                ProblemKind::ChCoupled => {
                    let r = batch.r_int[p];
                    self.sum_buf.push(lambda[p] * r * r);
                    if let Some(bar) = bar.as_mut() {
                        let u = read(0, s.val);
                        let lap: f64 = s.d2.iter().map(|&sl| read(0, sl)).sum();
                        let gsq: f64 = s.d1.iter().map(|&sl| read(0, sl).powi(2)).sum();
                        let ak = spec.alpha * spec.kappa;
                        let g = 2.0 * scale * lambda[p] * r;
                        // f''' of a cubic is the constant 6·c3
                        let dr_du = -spec.kappa * (6.0 * spec.f.c3 * gsq + spec.f.d2(u) * lap);
                        bar[[0, p * c + s.val]] = g * dr_du * fac(s.val);
                        bar[[0, p * c + s.t]] = g * fac(s.t);
                        for &sl in &s.d1 {
                            let uv = read(0, sl);
                            bar[[0, p * c + sl]] =
                                g * (-2.0 * spec.kappa * spec.f.d2(u) * uv) * fac(sl);
                        }
                        for &sl in &s.d2 {
                            bar[[0, p * c + sl]] = g * (-spec.kappa * spec.f.d1(u)) * fac(sl);
                        }
                        for &sl in &s.d4 {
                            bar[[0, p * c + sl]] = g * ak * fac(sl);
                        }
                        if let Some(cr) = s.cross {
                            bar[[0, p * c + cr]] = g * 2.0 * ak * fac(cr);
                        }
                    }
                }
                ProblemKind::ChDecoupled => {
                    let r1 = batch.r_int1[p];
                    let r2 = batch.r_int[p];
                    self.sum_buf.push(lambda[p] * (r1 * r1 + r2 * r2));
                    if let Some(bar) = bar.as_mut() {
                        let u = read(0, s.val);
                        let lap: f64 = s.d2.iter().map(|&sl| read(0, sl)).sum();
                        let gsq: f64 = s.d1.iter().map(|&sl| read(0, sl).powi(2)).sum();
                        let ak = spec.alpha * spec.kappa;
                        let g1 = 2.0 * scale * lambda[p] * r1;
                        let g2 = 2.0 * scale * lambda[p] * r2;
                        let dr2_du = -spec.kappa * (6.0 * spec.f.c3 * gsq + spec.f.d2(u) * lap);
                        bar[[0, p * c + s.val]] = g2 * dr2_du * fac(s.val);
                        bar[[0, p * c + s.t]] = g2 * fac(s.t);
                        for &sl in &s.d1 {
                            let uv = read(0, sl);
                            bar[[0, p * c + sl]] =
                                g2 * (-2.0 * spec.kappa * spec.f.d2(u) * uv) * fac(sl);
                        }
                        for &sl in &s.d2 {
                            bar[[0, p * c + sl]] =
                                (-g1 - g2 * spec.kappa * spec.f.d1(u)) * fac(sl);
                            bar[[1, p * c + sl]] = g2 * ak * fac(sl);
                        }
                        bar[[1, p * c + s.val]] = g1 * fac(s.val);
                    }
                }
            }
        }
        if let (Some(g), Some(bar)) = (grad.as_deref_mut(), bar.as_ref()) {
            self.eval_int.backward(&self.arch, trunc, params, bar, g)?;
        }
        Ok(stable_sum(&mut self.sum_buf) / n as f64)
    }

    fn initial_term(
        &mut self,
        params: &ParamVector,
        batch: &mut ResidualBatch,
        grad: &mut Option<&mut ParamVector>,
    ) -> Result<f64> {
        let n = self.initial.nrows();
        if n == 0 {
            return Ok(0.0);
        }
        let trunc = &self.trunc_tb;
        let c = trunc.len();
        self.eval_tb
            .forward(&self.arch, trunc, params, &self.initial)?;
        let val_slot = trunc
            .position(&[0u8; crate::taylor::MAX_VARS])
            .expect("value slot always present");
        let mut bar = grad
            .as_ref()
            .map(|_| Array2::zeros((self.arch.output_dim, n * c)));
        self.sum_buf.clear();
        let scale = self.gamma.gamma_tb / n as f64;
        for p in 0..n {
            let r = self.eval_tb.coeff(trunc, 0, p, val_slot) - self.initial_values[p];
            batch.r_tb.push(r);
            self.sum_buf.push(r * r);
            if let Some(bar) = bar.as_mut() {
                bar[[0, p * c + val_slot]] = 2.0 * scale * r;
            }
        }
        if let (Some(g), Some(bar)) = (grad.as_deref_mut(), bar.as_ref()) {
            self.eval_tb.backward(&self.arch, trunc, params, bar, g)?;
        }
        Ok(stable_sum(&mut self.sum_buf) / n as f64)
    }

    fn boundary_term(
        &mut self,
        params: &ParamVector,
        batch: &mut ResidualBatch,
        grad: &mut Option<&mut ParamVector>,
    ) -> Result<f64> {
        let n = self.boundary_a.nrows();
        if n == 0 {
            return Ok(0.0);
        }
        let d = self.spec.space_dim;
        let trunc = &self.trunc_sb;
        let c = trunc.len();
        self.eval_a
            .forward(&self.arch, trunc, params, &self.boundary_a)?;
        self.eval_b
            .forward(&self.arch, trunc, params, &self.boundary_b)?;
        let val_slot = trunc
            .position(&[0u8; crate::taylor::MAX_VARS])
            .expect("value slot always present");
        let mut d1_slots = Vec::with_capacity(d);
        for v in 0..d {
            let mut a = [0u8; crate::taylor::MAX_VARS];
            a[v] = 1;
            d1_slots.push(trunc.position(&a).expect("order-1 truncation"));
        }
        let n_out = self.arch.output_dim;
        let mut bar_a = grad.as_ref().map(|_| Array2::zeros((n_out, n * c)));
        let mut bar_b = grad.as_ref().map(|_| Array2::zeros((n_out, n * c)));
        self.sum_buf.clear();
        let scale = self.gamma.gamma_sb / n as f64;
        // periodicity is imposed on every network output (for the decoupled
        // form μ inherits the periodicity of u)
        for p in 0..n {
            let mut contrib = 0.0;
            for out in 0..n_out {
                let r1 = self.eval_a.coeff(trunc, out, p, val_slot)
                    - self.eval_b.coeff(trunc, out, p, val_slot);
                if out == 0 {
                    batch.r_sb1.push(r1);
                }
                contrib += r1 * r1;
                if let (Some(ba), Some(bb)) = (bar_a.as_mut(), bar_b.as_mut()) {
                    let g = 2.0 * scale * r1;
                    ba[[out, p * c + val_slot]] = g;
                    bb[[out, p * c + val_slot]] = -g;
                }
                for &sl in &d1_slots {
                    let r2 = self.eval_a.coeff(trunc, out, p, sl)
                        - self.eval_b.coeff(trunc, out, p, sl);
                    if out == 0 {
                        batch.r_sb2.push(r2);
                    }
                    contrib += r2 * r2;
                    if let (Some(ba), Some(bb)) = (bar_a.as_mut(), bar_b.as_mut()) {
                        let g = 2.0 * scale * r2;
                        ba[[out, p * c + sl]] = g;
                        bb[[out, p * c + sl]] = -g;
                    }
                }
            }
            self.sum_buf.push(contrib);
        }
        if let Some(g) = grad.as_deref_mut() {
            self.eval_a
                .backward(&self.arch, trunc, params, bar_a.as_ref().unwrap(), g)?;
            self.eval_b
                .backward(&self.arch, trunc, params, bar_b.as_ref().unwrap(), g)?;
        }
        Ok(stable_sum(&mut self.sum_buf) / n as f64)
    }
}
