//! Problem definitions for the Allen-Cahn and Cahn-Hilliard equations and
//! the pointwise residual operators that map jets to PINN residuals.
//!
//! Conventions: input coordinates are (x[, y], t) with time last; `f` is a
//! general cubic so the same kernels serve f = 3u³-3u (1D AC), λ(u³-u)
//! (2D AC) and u³-u (CH).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taylor::{Jet, MultiIndex, MAX_VARS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Ac,
    ChCoupled,
    ChDecoupled,
}

/// f(u) = c3 u³ + c2 u² + c1 u + c0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cubic {
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl Cubic {
    /// scale·(u³ - u), the double-well derivative both equations use.
    pub fn double_well(scale: f64) -> Self {
        Cubic {
            c3: scale,
            c2: 0.0,
            c1: -scale,
            c0: 0.0,
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        ((self.c3 * u + self.c2) * u + self.c1) * u + self.c0
    }

    pub fn d1(&self, u: f64) -> f64 {
        (3.0 * self.c3 * u + 2.0 * self.c2) * u + self.c1
    }

    pub fn d2(&self, u: f64) -> f64 {
        6.0 * self.c3 * u + 2.0 * self.c2
    }

    /// F with F' = f and F(0) = 0; the free-energy density integrand.
    pub fn antiderivative(&self, u: f64) -> f64 {
        (((self.c3 / 4.0 * u + self.c2 / 3.0) * u + self.c1 / 2.0) * u + self.c0) * u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialCondition {
    #[serde(rename = "ac_i1")]
    AcI1,
    #[serde(rename = "ac_i2")]
    AcI2,
    #[serde(rename = "ac2d_tanh_disc")]
    Ac2dTanhDisc,
    #[serde(rename = "ch1d_cos")]
    Ch1dCos,
    #[serde(rename = "ch2d_cos3")]
    Ch2dCos3,
}

impl InitialCondition {
    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::AcI1 => "ac_i1",
            InitialCondition::AcI2 => "ac_i2",
            InitialCondition::Ac2dTanhDisc => "ac2d_tanh_disc",
            InitialCondition::Ch1dCos => "ch1d_cos",
            InitialCondition::Ch2dCos3 => "ch2d_cos3",
        }
    }

    /// `epsilon` is the interface width of the 2D tanh disc; unused otherwise.
    pub fn eval(&self, x: &[f64], epsilon: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            InitialCondition::AcI1 => x[0] * x[0] * (2.0 * PI * x[0]).sin(),
            InitialCondition::AcI2 => (PI * x[0]).cos() - (-4.0 * (PI * x[0]).powi(2)).exp(),
            InitialCondition::Ac2dTanhDisc => {
                let r = ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)).sqrt();
                ((0.35 - r) / (2.0 * epsilon)).tanh()
            }
            InitialCondition::Ch1dCos => -(2.0 * PI * x[0]).cos(),
            InitialCondition::Ch2dCos3 => 0.4 * (3.0 * PI * x[0]).cos() * (3.0 * PI * x[1]).cos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub space_dim: usize,
    /// Per-axis [a, b] bounds of the spatial box.
    pub domain: Vec<[f64; 2]>,
    pub horizon: f64,
    /// AC diffusion coefficient c₁² (equals λε² for the 2D problem).
    pub c1_sq: f64,
    /// CH mobility κ.
    pub kappa: f64,
    /// CH interface coefficient; enters the equation as ακ.
    pub alpha: f64,
    /// 2D AC reaction scale; recorded even though it is folded into c1_sq and f.
    pub lambda: f64,
    /// 2D AC interface width (also parameterizes the tanh-disc IC).
    pub epsilon: f64,
    pub f: Cubic,
    pub ic: InitialCondition,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if self.space_dim == 0 || self.space_dim > 2 {
            return Err(Error::InvalidInput(format!(
                "space_dim {} not in {{1, 2}}",
                self.space_dim
            )));
        }
        if self.domain.len() != self.space_dim {
            return Err(Error::DimensionMismatch {
                expected: self.space_dim,
                got: self.domain.len(),
            });
        }
        if self.domain.iter().any(|&[a, b]| !(a < b)) {
            return Err(Error::InvalidInput("domain bounds must satisfy a < b".into()));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidInput("horizon T must be positive".into()));
        }
        if self.kappa < 0.0 || self.alpha < 0.0 {
            return Err(Error::InvalidInput(
                "kappa and alpha must be non-negative".into(),
            ));
        }
        if !(self.f.c3 > 0.0) {
            return Err(Error::InvalidInput(
                "cubic nonlinearity needs a positive leading coefficient".into(),
            ));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.space_dim + 1
    }

    /// Highest derivative order the interior residual reads.
    pub fn interior_order(&self) -> usize {
        match self.kind {
            ProblemKind::Ac | ProblemKind::ChDecoupled => 2,
            ProblemKind::ChCoupled => 4,
        }
    }

    pub fn ic_eval(&self, x: &[f64]) -> f64 {
        self.ic.eval(x, self.epsilon)
    }

    /// 1D Allen-Cahn on [-1,1]x(0,1]: u_t - 0.001 u_xx + 3u³ - 3u = 0.
    pub fn ac1d(ic: InitialCondition) -> Self {
        ProblemSpec {
            kind: ProblemKind::Ac,
            space_dim: 1,
            domain: vec![[-1.0, 1.0]],
            horizon: 1.0,
            c1_sq: 0.001,
            kappa: 0.0,
            alpha: 0.0,
            lambda: 0.0,
            epsilon: 0.0,
            f: Cubic::double_well(3.0),
            ic,
        }
    }

    /// 2D Allen-Cahn on [0,1]²x(0,5]: u_t = ε²λΔu - λ(u³-u), λ=10, ε=0.025.
    pub fn ac2d() -> Self {
        let (lambda, epsilon) = (10.0, 0.025);
        ProblemSpec {
            kind: ProblemKind::Ac,
            space_dim: 2,
            domain: vec![[0.0, 1.0], [0.0, 1.0]],
            horizon: 5.0,
            c1_sq: lambda * epsilon * epsilon,
            kappa: 0.0,
            alpha: 0.0,
            lambda,
            epsilon,
            f: Cubic::double_well(lambda),
            ic: InitialCondition::Ac2dTanhDisc,
        }
    }

    /// 1D Cahn-Hilliard on [-1,1]x(0,0.5]: u_t = (κ(u³-u) - ακ u_xx)_xx.
    pub fn ch1d() -> Self {
        ProblemSpec {
            kind: ProblemKind::ChCoupled,
            space_dim: 1,
            domain: vec![[-1.0, 1.0]],
            horizon: 0.5,
            c1_sq: 0.0,
            kappa: 1.0,
            alpha: 0.02,
            lambda: 0.0,
            epsilon: 0.0,
            f: Cubic::double_well(1.0),
            ic: InitialCondition::Ch1dCos,
        }
    }

    /// 2D Cahn-Hilliard on [0,1]²x(0,0.003]: u_t = κΔ(-a²Δu + u³-u) with
    /// a = 0.02, i.e. alpha = a² = 4e-4 in the generic ακ form.
    pub fn ch2d() -> Self {
        ProblemSpec {
            kind: ProblemKind::ChCoupled,
            space_dim: 2,
            domain: vec![[0.0, 1.0], [0.0, 1.0]],
            horizon: 0.003,
            c1_sq: 0.0,
            kappa: 1.0,
            alpha: 0.02 * 0.02,
            lambda: 0.0,
            epsilon: 0.0,
            f: Cubic::double_well(1.0),
            ic: InitialCondition::Ch2dCos3,
        }
    }
}

fn unit(v: usize) -> MultiIndex {
    let mut alpha = [0u8; MAX_VARS];
    alpha[v] = 1;
    alpha
}

fn get(jet: &Jet, alpha: &MultiIndex) -> Result<f64> {
    jet.partial(alpha).ok_or(Error::InsufficientJetOrder {
        need: alpha.iter().map(|&e| e as usize).sum(),
        got: jet.max_order,
    })
}

/// Σ_i ∂²u/∂x_i² over the spatial variables.
pub fn laplacian(jet: &Jet, space_dim: usize) -> Result<f64> {
    let mut lap = 0.0;
    for v in 0..space_dim {
        let mut alpha = [0u8; MAX_VARS];
        alpha[v] = 2;
        lap += get(jet, &alpha)?;
    }
    Ok(lap)
}

/// Δ²u: u_xxxx in 1D, u_xxxx + 2u_xxyy + u_yyyy in 2D.
pub fn biharmonic(jet: &Jet, space_dim: usize) -> Result<f64> {
    let mut alpha = [0u8; MAX_VARS];
    alpha[0] = 4;
    let mut b = get(jet, &alpha)?;
    if space_dim == 2 {
        b += get(jet, &[0, 4, 0])? + 2.0 * get(jet, &[2, 2, 0])?;
    }
    Ok(b)
}

/// |∇u|² over the spatial variables.
pub fn grad_sq(jet: &Jet, space_dim: usize) -> Result<f64> {
    let mut g = 0.0;
    for v in 0..space_dim {
        let d = get(jet, &unit(v))?;
        g += d * d;
    }
    Ok(g)
}

/// AC interior residual from raw derivative values: u_t - c₁²Δu + f(u).
pub fn ac_residual_raw(u: f64, u_t: f64, lap: f64, spec: &ProblemSpec) -> f64 {
    u_t - spec.c1_sq * lap + spec.f.eval(u)
}

/// Coupled CH interior residual: u_t + ακΔ²u - κ(f″(u)|∇u|² + f′(u)Δu),
/// using Δf(u) = f″(u)|∇u|² + f′(u)Δu.
pub fn ch_residual_raw(
    u: f64,
    u_t: f64,
    grad_sq: f64,
    lap: f64,
    biharm: f64,
    spec: &ProblemSpec,
) -> f64 {
    u_t + spec.alpha * spec.kappa * biharm
        - spec.kappa * (spec.f.d2(u) * grad_sq + spec.f.d1(u) * lap)
}

pub fn ac_residual_int(jet: &Jet, spec: &ProblemSpec) -> Result<f64> {
    let u = jet.value();
    let u_t = get(jet, &unit(spec.space_dim))?;
    let lap = laplacian(jet, spec.space_dim)?;
    Ok(ac_residual_raw(u, u_t, lap, spec))
}

pub fn ch_residual_int_coupled(jet: &Jet, spec: &ProblemSpec) -> Result<f64> {
    let u = jet.value();
    let u_t = get(jet, &unit(spec.space_dim))?;
    let gsq = grad_sq(jet, spec.space_dim)?;
    let lap = laplacian(jet, spec.space_dim)?;
    let bih = biharmonic(jet, spec.space_dim)?;
    Ok(ch_residual_raw(u, u_t, gsq, lap, bih, spec))
}

/// Decoupled CH residual pair: (μ - Δu, u_t + ακΔμ - κΔf(u)).
pub fn ch_residual_int_decoupled(
    jet_u: &Jet,
    jet_mu: &Jet,
    spec: &ProblemSpec,
) -> Result<(f64, f64)> {
    if jet_u.point != jet_mu.point {
        return Err(Error::UnmatchedPair(
            "u and mu jets must be evaluated at the same point".into(),
        ));
    }
    let u = jet_u.value();
    let mu = jet_mu.value();
    let u_t = get(jet_u, &unit(spec.space_dim))?;
    let lap_u = laplacian(jet_u, spec.space_dim)?;
    let lap_mu = laplacian(jet_mu, spec.space_dim)?;
    let gsq = grad_sq(jet_u, spec.space_dim)?;
    let r1 = mu - lap_u;
    let r2 = u_t + spec.alpha * spec.kappa * lap_mu
        - spec.kappa * (spec.f.d2(u) * gsq + spec.f.d1(u) * lap_u);
    Ok((r1, r2))
}

/// Initial-condition mismatch u_θ(x, 0) - ψ(x); `point` is spatial only.
pub fn residual_tb(forward_value: f64, spec: &ProblemSpec, point: &[f64]) -> f64 {
    forward_value - spec.ic_eval(point)
}

fn check_pair(a: &Jet, b: &Jet, space_dim: usize) -> Result<()> {
    if a.point.len() != b.point.len() || a.point.len() != space_dim + 1 {
        return Err(Error::UnmatchedPair("point dimensions differ".into()));
    }
    if a.point[space_dim] != b.point[space_dim] {
        return Err(Error::UnmatchedPair("boundary pair times differ".into()));
    }
    let differing = (0..space_dim)
        .filter(|&v| a.point[v] != b.point[v])
        .count();
    if differing > 1 {
        return Err(Error::UnmatchedPair(
            "boundary pair differs in more than one spatial coordinate".into(),
        ));
    }
    Ok(())
}

/// Periodic boundary residuals at a matched pair: value difference and the
/// per-direction gradient differences.
pub fn residual_sb(jet_a: &Jet, jet_b: &Jet, space_dim: usize) -> Result<(f64, Vec<f64>)> {
    check_pair(jet_a, jet_b, space_dim)?;
    let r1 = jet_a.value() - jet_b.value();
    let mut r2 = Vec::with_capacity(space_dim);
    for v in 0..space_dim {
        r2.push(get(jet_a, &unit(v))? - get(jet_b, &unit(v))?);
    }
    Ok((r1, r2))
}

/// Laplacian of the periodic boundary residuals (CH theory error terms):
/// Δ(u_a - u_b) and Δ(∂u_a/∂x_d - ∂u_b/∂x_d) per direction.
pub fn boundary_laplacian_residuals(
    jet_a: &Jet,
    jet_b: &Jet,
    space_dim: usize,
) -> Result<(f64, Vec<f64>)> {
    check_pair(jet_a, jet_b, space_dim)?;
    if jet_a.max_order < 3 || jet_b.max_order < 3 {
        return Err(Error::InsufficientJetOrder {
            need: 3,
            got: jet_a.max_order.min(jet_b.max_order),
        });
    }
    let lap1 = laplacian(jet_a, space_dim)? - laplacian(jet_b, space_dim)?;
    let mut lap2 = Vec::with_capacity(space_dim);
    for d in 0..space_dim {
        let mut diff = 0.0;
        for v in 0..space_dim {
            let mut alpha = [0u8; MAX_VARS];
            alpha[v] = 2;
            alpha[d] += 1;
            diff += get(jet_a, &alpha)? - get(jet_b, &alpha)?;
        }
        lap2.push(diff);
    }
    Ok((lap1, lap2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taylor::{mi, Truncation};
    use std::f64::consts::PI;

    /// Jet with prescribed partial derivatives (converted to coefficients).
    fn synth_jet(point: &[f64], order: usize, partials: &[(MultiIndex, f64)]) -> Jet {
        let trunc = Truncation::total_order(point.len(), order).unwrap();
        let mut coeffs = vec![0.0; trunc.len()];
        for (alpha, d) in partials {
            let slot = trunc.position(alpha).unwrap();
            coeffs[slot] = d / trunc.factorial(slot);
        }
        Jet::from_coeffs(point, &trunc, &coeffs)
    }

    #[test]
    fn equilibria_annihilate_residuals() {
        let ac = ProblemSpec::ac1d(InitialCondition::AcI1);
        let ch = ProblemSpec::ch1d();
        for u in [-1.0, 0.0, 1.0] {
            let jet2 = synth_jet(&[0.3, 0.2], 2, &[(mi(&[0, 0]), u)]);
            let jet4 = synth_jet(&[0.3, 0.2], 4, &[(mi(&[0, 0]), u)]);
            assert_eq!(ac_residual_int(&jet2, &ac).unwrap(), 0.0);
            assert_eq!(ch_residual_int_coupled(&jet4, &ch).unwrap(), 0.0);
        }
    }

    #[test]
    fn ac_constant_two_hand_value() {
        let ac = ProblemSpec::ac1d(InitialCondition::AcI1);
        let jet = synth_jet(&[0.0, 0.5], 2, &[(mi(&[0, 0]), 2.0)]);
        // 3*8 - 3*2 = 18
        assert_eq!(ac_residual_int(&jet, &ac).unwrap(), 18.0);
    }

    #[test]
    fn ac_symbolic_oracle() {
        // u(x, t) = x² sin(2πx), independent of t
        let ac = ProblemSpec::ac1d(InitialCondition::AcI1);
        let x: f64 = 0.37;
        let (s, c) = ((2.0 * PI * x).sin(), (2.0 * PI * x).cos());
        let u = x * x * s;
        let uxx = 2.0 * s + 8.0 * PI * x * c - 4.0 * PI * PI * x * x * s;
        let jet = synth_jet(&[x, 0.0], 2, &[(mi(&[0, 0]), u), (mi(&[2, 0]), uxx)]);
        let want = -ac.c1_sq * uxx + ac.f.eval(u);
        let got = ac_residual_int(&jet, &ac).unwrap();
        assert!((got - want).abs() / want.abs() < 1e-12);
    }

    #[test]
    fn ch_symbolic_oracle_and_kappa_zero() {
        // u(x) = sin(πx), u_t = 0
        let mut ch = ProblemSpec::ch1d();
        let x: f64 = 0.23;
        let u = (PI * x).sin();
        let ux = PI * (PI * x).cos();
        let uxx = -PI * PI * u;
        let uxxxx = PI.powi(4) * u;
        let jet = synth_jet(
            &[x, 0.1],
            4,
            &[
                (mi(&[0, 0]), u),
                (mi(&[1, 0]), ux),
                (mi(&[2, 0]), uxx),
                (mi(&[4, 0]), uxxxx),
            ],
        );
        let want = ch.alpha * ch.kappa * uxxxx
            - ch.kappa * (6.0 * u * ux * ux + (3.0 * u * u - 1.0) * uxx);
        let got = ch_residual_int_coupled(&jet, &ch).unwrap();
        assert!((got - want).abs() / want.abs() < 1e-12);

        ch.kappa = 0.0;
        let jet_t = synth_jet(
            &[x, 0.1],
            4,
            &[(mi(&[0, 0]), u), (mi(&[0, 1]), 0.7), (mi(&[4, 0]), uxxxx)],
        );
        assert_eq!(ch_residual_int_coupled(&jet_t, &ch).unwrap(), 0.7);
    }

    #[test]
    fn decoupled_matches_coupled_with_exact_mu() {
        let ch = ProblemSpec::ch1d();
        let x: f64 = -0.4;
        let u = (2.0 * PI * x).cos();
        let ux = -2.0 * PI * (2.0 * PI * x).sin();
        let uxx = -(2.0 * PI).powi(2) * u;
        let uxxxx = (2.0 * PI).powi(4) * u;
        let u_t = 0.31;
        let jet_u = synth_jet(
            &[x, 0.2],
            4,
            &[
                (mi(&[0, 0]), u),
                (mi(&[1, 0]), ux),
                (mi(&[0, 1]), u_t),
                (mi(&[2, 0]), uxx),
                (mi(&[4, 0]), uxxxx),
            ],
        );
        // mu = Δu exactly: value u_xx, second derivative u_xxxx
        let jet_mu = synth_jet(
            &[x, 0.2],
            2,
            &[(mi(&[0, 0]), uxx), (mi(&[2, 0]), uxxxx)],
        );
        let (r1, r2) = ch_residual_int_decoupled(&jet_u, &jet_mu, &ch).unwrap();
        assert_eq!(r1, 0.0);
        let coupled = ch_residual_int_coupled(&jet_u, &ch).unwrap();
        assert!((r2 - coupled).abs() < 1e-12);

        // u = x², mu ≡ 2 → first component 0
        let ju = synth_jet(&[x, 0.2], 2, &[(mi(&[0, 0]), x * x), (mi(&[2, 0]), 2.0)]);
        let jm = synth_jet(&[x, 0.2], 2, &[(mi(&[0, 0]), 2.0)]);
        assert_eq!(ch_residual_int_decoupled(&ju, &jm, &ch).unwrap().0, 0.0);
    }

    #[test]
    fn initial_conditions_hand_values() {
        let ac1 = ProblemSpec::ac1d(InitialCondition::AcI1);
        assert!(residual_tb(0.0, &ac1, &[0.5]).abs() < 1e-15); // 0.25 sin(π) = 0
        let ac2 = ProblemSpec::ac1d(InitialCondition::AcI2);
        assert!(residual_tb(0.0, &ac2, &[0.0]).abs() < 1e-15); // cos 0 - exp 0 = 0
        let ch1 = ProblemSpec::ch1d();
        assert_eq!(residual_tb(0.0, &ch1, &[0.0]), 1.0); // -(-cos 0)
        let ch2 = ProblemSpec::ch2d();
        assert_eq!(residual_tb(0.0, &ch2, &[0.0, 0.0]), -0.4);
        let ac2d = ProblemSpec::ac2d();
        let center = residual_tb(0.0, &ac2d, &[0.5, 0.5]);
        assert!((center + (0.35f64 / 0.05).tanh()).abs() < 1e-12);
    }

    #[test]
    fn boundary_antisymmetry_and_periodic_function() {
        // u(x) = sin(2πx) is exactly 2-periodic on [-1, 1]
        let make = |x: f64| {
            let u = (2.0 * PI * x).sin();
            let ux = 2.0 * PI * (2.0 * PI * x).cos();
            synth_jet(&[x, 0.4], 2, &[(mi(&[0, 0]), u), (mi(&[1, 0]), ux)])
        };
        let (a, b) = (make(-1.0), make(1.0));
        let (r1, r2) = residual_sb(&a, &b, 1).unwrap();
        assert!(r1.abs() < 1e-12 && r2[0].abs() < 1e-12);

        let c = synth_jet(&[0.2, 0.4], 2, &[(mi(&[0, 0]), 0.9), (mi(&[1, 0]), -0.3)]);
        let (fwd1, fwd2) = residual_sb(&a, &c, 1).unwrap();
        let (bwd1, bwd2) = residual_sb(&c, &a, 1).unwrap();
        assert_eq!(fwd1, -bwd1);
        assert_eq!(fwd2[0], -bwd2[0]);

        // mismatched times rejected
        let d = synth_jet(&[0.2, 0.9], 2, &[(mi(&[0, 0]), 0.9)]);
        assert!(residual_sb(&a, &d, 1).is_err());
    }

    #[test]
    fn boundary_laplacian_values_and_order_check() {
        let a = synth_jet(
            &[0.0, 0.1],
            3,
            &[(mi(&[2, 0]), 5.0), (mi(&[3, 0]), 7.0)],
        );
        let b = synth_jet(
            &[1.0, 0.1],
            3,
            &[(mi(&[2, 0]), 2.0), (mi(&[3, 0]), 3.0)],
        );
        let (l1, l2) = boundary_laplacian_residuals(&a, &b, 1).unwrap();
        assert_eq!(l1, 3.0);
        assert_eq!(l2[0], 4.0);

        let low = synth_jet(&[0.0, 0.1], 2, &[(mi(&[2, 0]), 5.0)]);
        assert!(matches!(
            boundary_laplacian_residuals(&low, &low.clone(), 1),
            Err(Error::InsufficientJetOrder { need: 3, .. })
        ));
    }

    #[test]
    fn coefficient_linearity_decomposition() {
        // r = u_t + s·(ακ B) - s·(κ Δf) decomposes linearly in s
        let base = ProblemSpec::ch1d();
        let jet = synth_jet(
            &[0.1, 0.2],
            4,
            &[
                (mi(&[0, 0]), 0.6),
                (mi(&[1, 0]), -0.2),
                (mi(&[0, 1]), 0.9),
                (mi(&[2, 0]), 1.3),
                (mi(&[4, 0]), -2.1),
            ],
        );
        let r_base = ch_residual_int_coupled(&jet, &base).unwrap();
        let mut scaled = base.clone();
        let s = 3.5;
        scaled.kappa *= s;
        let r_scaled = ch_residual_int_coupled(&jet, &scaled).unwrap();
        let u_t = 0.9;
        assert!((r_scaled - (u_t + s * (r_base - u_t))).abs() < 1e-14);
    }

    #[test]
    fn spec_validation() {
        for spec in [
            ProblemSpec::ac1d(InitialCondition::AcI1),
            ProblemSpec::ac1d(InitialCondition::AcI2),
            ProblemSpec::ac2d(),
            ProblemSpec::ch1d(),
            ProblemSpec::ch2d(),
        ] {
            spec.validate().unwrap();
        }
        let mut bad = ProblemSpec::ch1d();
        bad.alpha = -1.0;
        assert!(bad.validate().is_err());
        let mut bad = ProblemSpec::ac1d(InitialCondition::AcI1);
        bad.horizon = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn scaled_kappa_linearity_in_alpha_term() {
        // 2D biharmonic assembly: u = sin(πx)sin(πy) has Δ²u = 4π⁴ u
        let ch = ProblemSpec::ch2d();
        let (x, y) = (0.3, 0.7);
        let u = (PI * x).sin() * (PI * y).sin();
        let jet = synth_jet(
            &[x, y, 0.001],
            4,
            &[
                (mi(&[0, 0, 0]), u),
                (mi(&[4, 0, 0]), PI.powi(4) * u),
                (mi(&[0, 4, 0]), PI.powi(4) * u),
                (mi(&[2, 2, 0]), PI.powi(4) * u),
                (mi(&[2, 0, 0]), -PI * PI * u),
                (mi(&[0, 2, 0]), -PI * PI * u),
                (mi(&[1, 0, 0]), PI * (PI * x).cos() * (PI * y).sin()),
                (mi(&[0, 1, 0]), PI * (PI * x).sin() * (PI * y).cos()),
            ],
        );
        assert!((biharmonic(&jet, 2).unwrap() - 4.0 * PI.powi(4) * u).abs() < 1e-9);
        let gx = PI * (PI * x).cos() * (PI * y).sin();
        let gy = PI * (PI * x).sin() * (PI * y).cos();
        let want = ch.alpha * ch.kappa * 4.0 * PI.powi(4) * u
            - ch.kappa
                * (ch.f.d2(u) * (gx * gx + gy * gy) + ch.f.d1(u) * (-2.0 * PI * PI * u));
        let got = ch_residual_int_coupled(&jet, &ch).unwrap();
        assert!((got - want).abs() / want.abs().max(1e-9) < 1e-12);
    }
}
