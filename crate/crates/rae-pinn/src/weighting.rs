//! The self-adaptive residual weighting pipeline: normalized raw weights,
//! k-nearest-neighbor averaging, and an exponential moving average. Weights
//! are treated as constants during loss differentiation.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::knn::NeighborIndex;

/// w_i = |R_i| · N / Σ|R_j|; all ones when every residual is zero, so the
/// scheme reduces to a vanilla PINN in the degenerate case.
pub fn raw_weights(abs_residuals: &[f64]) -> Result<Vec<f64>> {
    let n = abs_residuals.len();
    let mut sum = 0.0;
    for (i, &r) in abs_residuals.iter().enumerate() {
        if !r.is_finite() {
            return Err(Error::NonFinite {
                point: i,
                context: "interior residual in weight update".into(),
            });
        }
        sum += r.abs();
    }
    if sum == 0.0 {
        return Ok(vec![1.0; n]);
    }
    let scale = n as f64 / sum;
    Ok(abs_residuals.iter().map(|r| r.abs() * scale).collect())
}

/// Arithmetic mean of the raw weights over each point's neighbor list.
pub fn knn_average(w_raw: &[f64], index: &NeighborIndex) -> Vec<f64> {
    index
        .neighbors
        .iter()
        .map(|list| {
            let s: f64 = list.iter().map(|&j| w_raw[j as usize]).sum();
            s / list.len() as f64
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct WeightState {
    pub w_raw: Vec<f64>,
    pub lambda_knear: Vec<f64>,
    /// EMA state λ; initialized to all-ones so iteration 0 is vanilla.
    pub lambda: Vec<f64>,
    pub beta: f64,
    pub k_int: usize,
    pub iteration: u64,
}

impl WeightState {
    pub fn new(n: usize, beta: f64, k_int: usize) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidInput(format!("beta {beta} not in (0, 1]")));
        }
        Ok(WeightState {
            w_raw: vec![1.0; n],
            lambda_knear: vec![1.0; n],
            lambda: vec![1.0; n],
            beta,
            k_int,
            iteration: 0,
        })
    }

    /// λ^k = β λ_Knear^k + (1-β) λ^{k-1}, componentwise.
    pub fn ema_update(&mut self, lambda_knear: Vec<f64>) {
        for (l, &k) in self.lambda.iter_mut().zip(&lambda_knear) {
            *l = self.beta * k + (1.0 - self.beta) * *l;
        }
        self.lambda_knear = lambda_knear;
        self.iteration += 1;
    }

    /// Full pipeline step from current interior residual magnitudes.
    pub fn update(&mut self, abs_residuals: &[f64], index: &NeighborIndex) -> Result<()> {
        if abs_residuals.len() != self.lambda.len() {
            return Err(Error::DimensionMismatch {
                expected: self.lambda.len(),
                got: abs_residuals.len(),
            });
        }
        self.w_raw = raw_weights(abs_residuals)?;
        let knear = knn_average(&self.w_raw, index);
        self.ema_update(knear);
        Ok(())
    }

    /// CSV dump (point index, w_raw, lambda_knear, lambda) for heatmaps.
    pub fn dump_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        writeln!(buf, "index,w_raw,lambda_knear,lambda")?;
        for i in 0..self.lambda.len() {
            writeln!(
                buf,
                "{i},{:.17e},{:.17e},{:.17e}",
                self.w_raw[i], self.lambda_knear[i], self.lambda[i]
            )?;
        }
        crate::io_util::write_atomic(path, &buf)
    }
}
