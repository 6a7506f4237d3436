//! Optimizers for the two training phases: Adam with bias correction and an
//! exponential learning-rate schedule, then L-BFGS (two-loop recursion,
//! strong Wolfe line search) for refinement.

use crate::error::{Error, Result};

pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::DimensionMismatch {
                expected: self.m.len(),
                got: params.len().min(grad.len()),
            });
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= lr * mhat / (vhat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// base_lr · decay_rate^floor(iteration / decay_every).
pub fn lr_schedule(base_lr: f64, iteration: u64, decay_rate: f64, decay_every: u64) -> f64 {
    base_lr * decay_rate.powi((iteration / decay_every.max(1)) as i32)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LbfgsStop {
    GradNorm,
    MaxIters,
    LineSearchFailed(String),
    Callback,
}

pub struct LbfgsResult {
    pub params: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub stop: LbfgsStop,
}

pub struct LbfgsOptions {
    pub max_iters: usize,
    pub memory: usize,
    pub grad_tol: f64,
    pub c1: f64,
    pub c2: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            max_iters: 1000,
            memory: 10,
            grad_tol: 1e-9,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 25,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimizes `f` (value and gradient) from `x0`. The callback sees
/// (iteration, value, params) after each accepted step; returning false
/// stops the run (used by the training loop's loss-delta early stop).
pub fn lbfgs_minimize<F, C>(
    mut f: F,
    x0: Vec<f64>,
    opts: &LbfgsOptions,
    mut on_iter: C,
) -> Result<LbfgsResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    C: FnMut(usize, f64, &[f64]) -> bool,
{
    let n = x0.len();
    let mut x = x0;
    let (mut fx, mut g) = f(&x)?;
    // curvature pairs (s, y, 1/sᵀy), newest last
    let mut pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();

    for iter in 0..opts.max_iters {
        let gnorm = norm(&g);
        if gnorm < opts.grad_tol {
            return Ok(LbfgsResult {
                params: x,
                value: fx,
                iterations: iter,
                stop: LbfgsStop::GradNorm,
            });
        }

        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = vec![0.0; pairs.len()];
        for (i, (s, y, rho)) in pairs.iter().enumerate().rev() {
            let a = rho * dot(s, &d);
            alphas[i] = a;
            for (dj, yj) in d.iter_mut().zip(y) {
                *dj -= a * yj;
            }
        }
        if let Some((s, y, _)) = pairs.last() {
            let gamma = dot(s, y) / dot(y, y);
            for dj in d.iter_mut() {
                *dj *= gamma;
            }
        }
        for (i, (s, y, rho)) in pairs.iter().enumerate() {
            let b = rho * dot(y, &d);
            for (dj, sj) in d.iter_mut().zip(s) {
                *dj += (alphas[i] - b) * sj;
            }
        }

        let mut dg = dot(&g, &d);
        if dg >= 0.0 {
            // not a descent direction; fall back to steepest descent
            d = g.iter().map(|v| -v).collect();
            dg = -gnorm * gnorm;
            pairs.clear();
        }

        let (alpha, fx_new, g_new) =
            match wolfe_line_search(&mut f, &x, &d, fx, dg, opts) {
                Ok(v) => v,
                Err(reason) => {
                    return Ok(LbfgsResult {
                        params: x,
                        value: fx,
                        iterations: iter,
                        stop: LbfgsStop::LineSearchFailed(reason),
                    })
                }
            };

        let mut s = vec![0.0; n];
        let mut y = vec![0.0; n];
        for i in 0..n {
            s[i] = alpha * d[i];
            x[i] += s[i];
            y[i] = g_new[i] - g[i];
        }
        let sy = dot(&s, &y);
        // skip pairs with non-positive curvature; they would break the
        // positive-definiteness of the implicit Hessian approximation
        if sy > 1e-10 {
            if pairs.len() == opts.memory {
                pairs.remove(0);
            }
            pairs.push((s, y, 1.0 / sy));
        }
        fx = fx_new;
        g = g_new;

        if !on_iter(iter, fx, &x) {
            return Ok(LbfgsResult {
                params: x,
                value: fx,
                iterations: iter + 1,
                stop: LbfgsStop::Callback,
            });
        }
    }
    Ok(LbfgsResult {
        params: x,
        value: fx,
        iterations: opts.max_iters,
        stop: LbfgsStop::MaxIters,
    })
}

/// Strong Wolfe line search (bracket then zoom). Returns (alpha, value,
/// gradient) at the accepted step or the failure reason.
fn wolfe_line_search<F>(
    f: &mut F,
    x: &[f64],
    d: &[f64],
    f0: f64,
    dg0: f64,
    opts: &LbfgsOptions,
) -> std::result::Result<(f64, f64, Vec<f64>), String>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let eval = |f: &mut F, alpha: f64| -> std::result::Result<(f64, Vec<f64>, f64), String> {
        let xa: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        let (v, g) = f(&xa).map_err(|e| e.to_string())?;
        let slope = dot(&g, d);
        Ok((v, g, slope))
    };

    let (c1, c2) = (opts.c1, opts.c2);
    let mut alpha_prev = 0.0;
    let mut f_prev = f0;
    let mut alpha = 1.0;
    let mut trials = 0;

    // bracketing phase
    let (mut lo, mut hi, mut f_lo) = loop {
        trials += 1;
        if trials > opts.max_line_search {
            return Err("bracketing exceeded trial budget".into());
        }
        let (fa, ga, slope) = eval(f, alpha)?;
        if fa > f0 + c1 * alpha * dg0 || (trials > 1 && fa >= f_prev) {
            break (alpha_prev, alpha, f_prev);
        }
        if slope.abs() <= -c2 * dg0 {
            return Ok((alpha, fa, ga));
        }
        if slope >= 0.0 {
            break (alpha, alpha_prev, fa);
        }
        alpha_prev = alpha;
        f_prev = fa;
        alpha *= 2.0;
    };

    // zoom phase
    loop {
        trials += 1;
        if trials > opts.max_line_search {
            return Err("zoom exceeded trial budget".into());
        }
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() * norm(d) < 1e-16 {
            return Err("zoom interval collapsed".into());
        }
        let (fm, gm, slope) = eval(f, mid)?;
        if fm > f0 + c1 * mid * dg0 || fm >= f_lo {
            hi = mid;
        } else {
            if slope.abs() <= -c2 * dg0 {
                return Ok((mid, fm, gm));
            }
            if slope * (hi - lo) >= 0.0 {
                hi = lo;
            }
            lo = mid;
            f_lo = fm;
        }
    }
}
