//! Truncated multivariate Taylor-series ("jet") arithmetic.
//!
//! A jet stores the coefficients of a function's Taylor expansion at a point,
//! truncated to a downward-closed set of multi-indices. Propagating jets
//! through the network yields exact input derivatives: the coefficient of the
//! multi-index `α` times `α!` is the partial derivative `D^α`.
//!
//! Truncation sets need not be the full total-order simplex: any
//! divisor-closed set of monomials is a valid quotient, which lets the
//! training hot path carry only the coefficients a residual actually reads
//! (e.g. `{1, x, t, x²}` for the second-order interior residual).

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Maximum number of input variables (space dims + time).
pub const MAX_VARS: usize = 3;

/// Maximum supported total derivative order.
pub const MAX_ORDER: usize = 4;

/// Exponent tuple; entries beyond the active variable count are zero.
pub type MultiIndex = [u8; MAX_VARS];

pub fn index_order(alpha: &MultiIndex) -> usize {
    alpha.iter().map(|&e| e as usize).sum()
}

fn index_factorial(alpha: &MultiIndex) -> f64 {
    let fact = |n: u8| -> f64 { (1..=n as u64).product::<u64>().max(1) as f64 };
    alpha.iter().map(|&e| fact(e)).product()
}

/// Graded-lexicographic comparison so the constant term is always slot 0.
fn grlex(a: &MultiIndex, b: &MultiIndex) -> std::cmp::Ordering {
    index_order(a).cmp(&index_order(b)).then_with(|| a.cmp(b))
}

#[derive(Clone, Copy)]
struct ProdEntry {
    out: u32,
    lhs: u32,
    rhs: u32,
}

/// A fixed truncation scheme: the multi-index basis plus precomputed
/// multiplication tables for the quotient ring.
pub struct Truncation {
    vars: usize,
    indices: Vec<MultiIndex>,
    pos: HashMap<MultiIndex, usize>,
    prod: Vec<ProdEntry>,
    /// `prod` minus the rhs-constant entries; multiplying by a jet whose
    /// constant term is zero only touches these.
    prod_shift: Vec<ProdEntry>,
    factorial: Vec<f64>,
    max_degree: usize,
}

impl Truncation {
    /// All multi-indices with `|α| ≤ order` over `vars` variables.
    pub fn total_order(vars: usize, order: usize) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::UnsupportedOrder(order));
        }
        if vars == 0 || vars > MAX_VARS {
            return Err(Error::InvalidInput(format!(
                "variable count {vars} out of range 1..={MAX_VARS}"
            )));
        }
        let mut set = Vec::new();
        let mut alpha = [0u8; MAX_VARS];
        enumerate_bounded(vars, order, 0, &mut alpha, &mut set);
        Ok(Self::from_indices(vars, set))
    }

    /// The downward (divisor) closure of the given generator set.
    pub fn downward_closure(vars: usize, generators: &[MultiIndex]) -> Result<Self> {
        if vars == 0 || vars > MAX_VARS {
            return Err(Error::InvalidInput(format!(
                "variable count {vars} out of range 1..={MAX_VARS}"
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for g in generators {
            if index_order(g) > MAX_ORDER {
                return Err(Error::UnsupportedOrder(index_order(g)));
            }
            let mut div = [0u8; MAX_VARS];
            collect_divisors(g, 0, &mut div, &mut seen);
        }
        seen.insert([0u8; MAX_VARS]);
        Ok(Self::from_indices(vars, seen.into_iter().collect()))
    }

    fn from_indices(vars: usize, mut indices: Vec<MultiIndex>) -> Self {
        indices.sort_by(grlex);
        indices.dedup();
        let pos: HashMap<MultiIndex, usize> =
            indices.iter().enumerate().map(|(i, a)| (*a, i)).collect();
        let mut prod = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                let mut sum = [0u8; MAX_VARS];
                for v in 0..MAX_VARS {
                    sum[v] = a[v] + b[v];
                }
                if let Some(&out) = pos.get(&sum) {
                    prod.push(ProdEntry {
                        out: out as u32,
                        lhs: i as u32,
                        rhs: j as u32,
                    });
                }
            }
        }
        let prod_shift = prod.iter().copied().filter(|e| e.rhs != 0).collect();
        let factorial = indices.iter().map(index_factorial).collect();
        let max_degree = indices.iter().map(index_order).max().unwrap_or(0);
        Self {
            vars,
            indices,
            pos,
            prod,
            prod_shift,
            factorial,
            max_degree,
        }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    /// Number of coefficients carried per jet.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.pos.get(alpha).copied()
    }

    /// `α!` for the index at `slot`; converts coefficients to derivatives.
    pub fn factorial(&self, slot: usize) -> f64 {
        self.factorial[slot]
    }

    /// Truncated product `out = a ⊙ b`.
    pub fn mul(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        let n = self.indices.len();
        assert!(a.len() == n && b.len() == n && out.len() == n);
        out.fill(0.0);
        for e in &self.prod {
            // table indices are < n by construction
            unsafe {
                *out.get_unchecked_mut(e.out as usize) +=
                    a.get_unchecked(e.lhs as usize) * b.get_unchecked(e.rhs as usize);
            }
        }
    }

    /// Adjoint of `x ↦ g ⊙ x`: accumulates `xbar += (∂(g⊙x)/∂x)ᵀ · obar`.
    pub fn mul_adjoint_acc(&self, g: &[f64], obar: &[f64], xbar: &mut [f64]) {
        let n = self.indices.len();
        assert!(g.len() == n && obar.len() == n && xbar.len() == n);
        for e in &self.prod {
            unsafe {
                *xbar.get_unchecked_mut(e.rhs as usize) +=
                    g.get_unchecked(e.lhs as usize) * obar.get_unchecked(e.out as usize);
            }
        }
    }

    /// Composes `tanh` with the jet `s`, writing the activation jet into `a`
    /// and the jet of `tanh' ∘ s = 1 - a⊙a` into `dphi`. `scratch` must hold
    /// two buffers of the same length as `s`.
    #[inline]
    pub fn tanh_jet(&self, s: &[f64], a: &mut [f64], dphi: &mut [f64], scratch: &mut [f64]) {
        debug_assert!(self.max_degree <= MAX_ORDER);
        let n = self.indices.len();
        assert!(s.len() == n && a.len() == n && dphi.len() == n && scratch.len() == 2 * n);
        let s0 = s[0];
        let t = s0.tanh();
        let d1 = 1.0 - t * t;
        let d2 = -2.0 * t * d1;
        let d3 = -2.0 * d1 * d1 - 2.0 * t * d2;
        let d4 = -6.0 * d1 * d2 - 2.0 * t * d3;
        // Taylor coefficients tanh^(k)(s0)/k!.
        let c = [t, d1, d2 / 2.0, d3 / 6.0, d4 / 24.0];

        // Manual element loops instead of fill/copy_from_slice: this runs
        // once per unit and point, and the libc memset/memcpy calls those
        // emit dominate the whole training iteration for small n.
        let (mut pw, mut next) = scratch.split_at_mut(n);
        unsafe {
            *pw.get_unchecked_mut(0) = 0.0; // ŝ = s - s0
            for i in 1..n {
                *pw.get_unchecked_mut(i) = *s.get_unchecked(i);
            }
            *a.get_unchecked_mut(0) = c[0];
            for i in 1..n {
                *a.get_unchecked_mut(i) = 0.0;
            }
            for k in 1..=self.max_degree {
                let ck = c[k];
                for i in 0..n {
                    *a.get_unchecked_mut(i) += ck * *pw.get_unchecked(i);
                }
                if k < self.max_degree {
                    // next = pw ⊙ ŝ; ŝ is read off `s` through the shifted
                    // table, which skips the (zeroed) constant term
                    for i in 0..n {
                        *next.get_unchecked_mut(i) = 0.0;
                    }
                    for e in &self.prod_shift {
                        *next.get_unchecked_mut(e.out as usize) +=
                            pw.get_unchecked(e.lhs as usize) * s.get_unchecked(e.rhs as usize);
                    }
                    std::mem::swap(&mut pw, &mut next);
                }
            }
            // dphi = 1 - a ⊙ a, inlined to avoid the call and refill
            for i in 0..n {
                *dphi.get_unchecked_mut(i) = 0.0;
            }
            for e in &self.prod {
                *dphi.get_unchecked_mut(e.out as usize) -=
                    a.get_unchecked(e.lhs as usize) * a.get_unchecked(e.rhs as usize);
            }
            *dphi.get_unchecked_mut(0) += 1.0;
        }
    }
}

fn enumerate_bounded(
    vars: usize,
    budget: usize,
    var: usize,
    alpha: &mut MultiIndex,
    out: &mut Vec<MultiIndex>,
) {
    if var == vars {
        out.push(*alpha);
        return;
    }
    for e in 0..=budget {
        alpha[var] = e as u8;
        enumerate_bounded(vars, budget - e, var + 1, alpha, out);
    }
    alpha[var] = 0;
}

fn collect_divisors(
    g: &MultiIndex,
    var: usize,
    cur: &mut MultiIndex,
    out: &mut std::collections::HashSet<MultiIndex>,
) {
    if var == MAX_VARS {
        out.insert(*cur);
        return;
    }
    for e in 0..=g[var] {
        cur[var] = e;
        collect_divisors(g, var + 1, cur, out);
    }
    cur[var] = 0;
}

/// Value plus all input-partials of a scalar field at one point, up to a
/// total order. Partials are true derivatives `D^α u` (coefficients already
/// scaled by `α!`), ordered graded-lexicographically.
#[derive(Debug, Clone)]
pub struct Jet {
    pub point: Vec<f64>,
    pub max_order: usize,
    partials: Vec<(MultiIndex, f64)>,
}

impl Jet {
    pub(crate) fn from_coeffs(point: &[f64], trunc: &Truncation, coeffs: &[f64]) -> Self {
        let partials = trunc
            .indices()
            .iter()
            .zip(coeffs)
            .enumerate()
            .map(|(slot, (alpha, &c))| (*alpha, c * trunc.factorial(slot)))
            .collect();
        Jet {
            point: point.to_vec(),
            max_order: trunc.max_degree(),
            partials,
        }
    }

    /// `D^α u` at the jet's point; `None` if `|α|` exceeds the stored order.
    pub fn partial(&self, alpha: &MultiIndex) -> Option<f64> {
        self.partials
            .iter()
            .find(|(a, _)| a == alpha)
            .map(|(_, v)| *v)
    }

    /// All stored `(α, D^α u)` pairs in graded-lexicographic order.
    pub fn partials(&self) -> &[(MultiIndex, f64)] {
        &self.partials
    }

    pub fn value(&self) -> f64 {
        self.partials[0].1
    }
}

/// Shorthand for building a spatial+time multi-index in tests and kernels.
pub fn mi(exps: &[u8]) -> MultiIndex {
    let mut alpha = [0u8; MAX_VARS];
    alpha[..exps.len()].copy_from_slice(exps);
    alpha
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_order_counts() {
        // C(vars+order, order)
        assert_eq!(Truncation::total_order(2, 2).unwrap().len(), 6);
        assert_eq!(Truncation::total_order(2, 4).unwrap().len(), 15);
        assert_eq!(Truncation::total_order(3, 4).unwrap().len(), 35);
        assert!(Truncation::total_order(2, 5).is_err());
    }

    #[test]
    fn downward_closure_interior_schemes() {
        // 1D Allen-Cahn interior: u, u_x, u_xx, u_t
        let t = Truncation::downward_closure(2, &[mi(&[2, 0]), mi(&[0, 1])]).unwrap();
        assert_eq!(t.len(), 4);
        // 1D Cahn-Hilliard interior: u..u_xxxx plus u_t
        let t = Truncation::downward_closure(2, &[mi(&[4, 0]), mi(&[0, 1])]).unwrap();
        assert_eq!(t.len(), 6);
        // 2D Cahn-Hilliard interior
        let t = Truncation::downward_closure(
            3,
            &[mi(&[4, 0, 0]), mi(&[2, 2, 0]), mi(&[0, 4, 0]), mi(&[0, 0, 1])],
        )
        .unwrap();
        assert_eq!(t.len(), 14);
    }

    #[test]
    fn mul_matches_dense_polynomial_product() {
        let t = Truncation::total_order(2, 3).unwrap();
        let n = t.len();
        let a: Vec<f64> = (0..n).map(|i| 0.3 + 0.1 * i as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| 1.0 - 0.07 * i as f64).collect();
        let mut out = vec![0.0; n];
        t.mul(&a, &b, &mut out);
        // brute force: for each output index, sum over all exact splits
        for (k, gamma) in t.indices().iter().enumerate() {
            let mut want = 0.0;
            for (i, ai) in t.indices().iter().enumerate() {
                for (j, bj) in t.indices().iter().enumerate() {
                    if (0..MAX_VARS).all(|v| ai[v] + bj[v] == gamma[v]) {
                        want += a[i] * b[j];
                    }
                }
            }
            assert!((out[k] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn tanh_jet_matches_univariate_derivatives() {
        // s(x) = 0.3 + 1.7 x as a jet; tanh(s) derivatives by central differences
        let t = Truncation::total_order(1, 4).unwrap();
        let n = t.len();
        let (s0, w) = (0.3, 1.7);
        let mut s = vec![0.0; n];
        s[t.position(&mi(&[0])).unwrap()] = s0;
        s[t.position(&mi(&[1])).unwrap()] = w;
        let mut a = vec![0.0; n];
        let mut dphi = vec![0.0; n];
        let mut scratch = vec![0.0; 2 * n];
        t.tanh_jet(&s, &mut a, &mut dphi, &mut scratch);

        let f = |x: f64| (s0 + w * x).tanh();
        let h = 1e-3;
        let d1 = (f(h) - f(-h)) / (2.0 * h);
        let d2 = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
        let d3 = (f(2.0 * h) - 2.0 * f(h) + 2.0 * f(-h) - f(-2.0 * h)) / (2.0 * h * h * h);
        let d4 =
            (f(2.0 * h) - 4.0 * f(h) + 6.0 * f(0.0) - 4.0 * f(-h) + f(-2.0 * h)) / h.powi(4);

        let coeff = |k: u8| a[t.position(&mi(&[k])).unwrap()];
        assert!((coeff(0) - f(0.0)).abs() < 1e-14);
        assert!((coeff(1) - d1).abs() / d1.abs() < 1e-6);
        assert!((coeff(2) * 2.0 - d2).abs() / d2.abs().max(1e-3) < 1e-5);
        assert!((coeff(3) * 6.0 - d3).abs() / d3.abs().max(1e-3) < 1e-4);
        assert!((coeff(4) * 24.0 - d4).abs() / d4.abs().max(1e-2) < 1e-3);

        // dphi constant term is tanh'(s0)
        assert!((dphi[0] - (1.0 - f(0.0) * f(0.0))).abs() < 1e-14);
    }

    #[test]
    fn jet_partials_scaled_by_factorial() {
        let t = Truncation::total_order(2, 2).unwrap();
        let mut coeffs = vec![0.0; t.len()];
        let slot = t.position(&mi(&[2, 0])).unwrap();
        coeffs[slot] = 3.0; // coefficient of x^2 -> u_xx = 6
        let jet = Jet::from_coeffs(&[0.0, 0.0], &t, &coeffs);
        assert_eq!(jet.partial(&mi(&[2, 0])), Some(6.0));
        assert_eq!(jet.partial(&mi(&[0, 1])), Some(0.0));
        assert_eq!(jet.partial(&mi(&[3, 0])), None);
    }
}
