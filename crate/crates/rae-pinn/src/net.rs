//! The tanh multilayer perceptron: parameter layout, Xavier initialization,
//! plain forward evaluation, input-derivative jets, and exact parameter
//! gradients via reverse mode over the jet computation.
//!
//! All batched work is phrased as dense matrix products with activation
//! matrices of shape (units, points * coeffs), so one forward/backward pair
//! per layer is three GEMM calls. Gradient accumulation order is fixed by
//! the layout, which makes results run-to-run identical.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::taylor::{Jet, MultiIndex, Truncation, MAX_ORDER};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkArch {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub output_dim: usize,
}

impl NetworkArch {
    pub fn new(input_dim: usize, hidden_widths: Vec<usize>, output_dim: usize) -> Result<Self> {
        let arch = NetworkArch {
            input_dim,
            hidden_widths,
            output_dim,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim < 2 {
            return Err(Error::InvalidInput(format!(
                "input_dim {} must be at least 2 (space + time)",
                self.input_dim
            )));
        }
        if self.output_dim < 1 || self.hidden_widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidInput(
                "all layer widths must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// (out, in) dimensions per affine layer, hidden layers then output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_widths.len() + 1);
        let mut prev = self.input_dim;
        for &w in &self.hidden_widths {
            dims.push((w, prev));
            prev = w;
        }
        dims.push((self.output_dim, prev));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims()
            .iter()
            .map(|&(o, i)| o * i + o)
            .sum()
    }
}

/// Flat trainable parameters. Layout: for each layer in order, the weight
/// matrix row-major (out x in), then the bias vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub values: Vec<f64>,
}

impl ParamVector {
    pub fn zeros(arch: &NetworkArch) -> Self {
        ParamVector {
            values: vec![0.0; arch.param_count()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Read-only weight/bias views into a flat parameter vector.
pub struct LayerViews<'a> {
    pub w: Vec<ArrayView2<'a, f64>>,
    pub b: Vec<ArrayView1<'a, f64>>,
}

pub fn layer_views<'a>(arch: &NetworkArch, params: &'a ParamVector) -> Result<LayerViews<'a>> {
    if params.len() != arch.param_count() {
        return Err(Error::DimensionMismatch {
            expected: arch.param_count(),
            got: params.len(),
        });
    }
    let mut w = Vec::new();
    let mut b = Vec::new();
    let mut off = 0;
    for (o, i) in arch.layer_dims() {
        w.push(ArrayView2::from_shape((o, i), &params.values[off..off + o * i]).unwrap());
        off += o * i;
        b.push(ArrayView1::from_shape(o, &params.values[off..off + o]).unwrap());
        off += o;
    }
    Ok(LayerViews { w, b })
}

/// Splits a flat vector into owned (weights, biases) per layer.
pub fn unpack(arch: &NetworkArch, params: &ParamVector) -> Result<Vec<(Array2<f64>, Array1<f64>)>> {
    let views = layer_views(arch, params)?;
    Ok(views
        .w
        .iter()
        .zip(&views.b)
        .map(|(w, b)| (w.to_owned(), b.to_owned()))
        .collect())
}

/// Inverse of [`unpack`]; bitwise round-trip.
pub fn pack(arch: &NetworkArch, layers: &[(Array2<f64>, Array1<f64>)]) -> Result<ParamVector> {
    let dims = arch.layer_dims();
    if layers.len() != dims.len() {
        return Err(Error::DimensionMismatch {
            expected: dims.len(),
            got: layers.len(),
        });
    }
    let mut values = Vec::with_capacity(arch.param_count());
    for ((w, b), (o, i)) in layers.iter().zip(dims) {
        if w.dim() != (o, i) || b.len() != o {
            return Err(Error::DimensionMismatch {
                expected: o * i + o,
                got: w.len() + b.len(),
            });
        }
        values.extend(w.iter());
        values.extend(b.iter());
    }
    Ok(ParamVector { values })
}

/// Xavier-normal initialization: weights ~ Normal(0, 2/(fan_in+fan_out)),
/// biases zero. Deterministic per seed.
pub fn init_xavier(arch: &NetworkArch, seed: u64) -> Result<ParamVector> {
    arch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(arch.param_count());
    for (o, i) in arch.layer_dims() {
        let std = (2.0 / (i + o) as f64).sqrt();
        let dist = Normal::new(0.0, std).expect("std is positive");
        for _ in 0..o * i {
            values.push(dist.sample(&mut rng));
        }
        values.extend(std::iter::repeat(0.0).take(o));
    }
    Ok(ParamVector { values })
}

/// Plain scalar forward pass (output_dim must be 1).
pub fn forward(arch: &NetworkArch, params: &ParamVector, point: &[f64]) -> Result<f64> {
    let out = forward_multi(arch, params, point)?;
    if out.len() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: out.len(),
        });
    }
    Ok(out[0])
}

pub fn forward_multi(arch: &NetworkArch, params: &ParamVector, point: &[f64]) -> Result<Vec<f64>> {
    if point.len() != arch.input_dim {
        return Err(Error::DimensionMismatch {
            expected: arch.input_dim,
            got: point.len(),
        });
    }
    let views = layer_views(arch, params)?;
    let n_layers = views.w.len();
    let mut a: Vec<f64> = point.to_vec();
    for k in 0..n_layers {
        let (w, b) = (&views.w[k], &views.b[k]);
        let mut s: Vec<f64> = b.to_vec();
        for (u, row) in w.rows().into_iter().enumerate() {
            for (x, wi) in a.iter().zip(row) {
                s[u] += wi * x;
            }
        }
        if k + 1 < n_layers {
            for v in s.iter_mut() {
                *v = v.tanh();
            }
        }
        a = s;
    }
    Ok(a)
}

fn ensure_shape(mat: &mut Array2<f64>, rows: usize, cols: usize) {
    if mat.dim() != (rows, cols) {
        *mat = Array2::zeros((rows, cols));
    }
}

/// Batched jet evaluator with cached activations for the backward pass.
///
/// One instance amortizes buffer allocations across training iterations.
/// Activation matrices have shape (units, P*C): the jet coefficients of
/// point p occupy columns p*C .. (p+1)*C.
pub struct BatchEval {
    acts: Vec<Array2<f64>>,
    dphis: Vec<Array2<f64>>,
    out: Array2<f64>,
    n_points: usize,
    scratch: Vec<f64>,
    // pre-activation and backward cotangent buffers, reused across iterations
    preacts: Vec<Array2<f64>>,
    sbars: Vec<Array2<f64>>,
    abars: Vec<Array2<f64>>,
}

impl BatchEval {
    pub fn new() -> Self {
        BatchEval {
            acts: Vec::new(),
            dphis: Vec::new(),
            out: Array2::zeros((0, 0)),
            n_points: 0,
            scratch: Vec::new(),
            preacts: Vec::new(),
            sbars: Vec::new(),
            abars: Vec::new(),
        }
    }

    /// Propagates input jets through the network for every row of `points`
    /// (shape (P, input_dim)), caching what the backward pass needs.
    pub fn forward(
        &mut self,
        arch: &NetworkArch,
        trunc: &Truncation,
        params: &ParamVector,
        points: &Array2<f64>,
    ) -> Result<()> {
        if points.ncols() != arch.input_dim {
            return Err(Error::DimensionMismatch {
                expected: arch.input_dim,
                got: points.ncols(),
            });
        }
        if trunc.vars() != arch.input_dim {
            return Err(Error::DimensionMismatch {
                expected: arch.input_dim,
                got: trunc.vars(),
            });
        }
        let views = layer_views(arch, params)?;
        let p_count = points.nrows();
        let c = trunc.len();
        let cols = p_count * c;
        let n_hidden = arch.hidden_widths.len();

        // Seed slots: position of each variable's first-order index. A
        // value-only truncation has none; anything carrying derivatives
        // must include every variable's linear term or dependence on that
        // variable would be silently dropped.
        let mut lin_slot = Vec::with_capacity(arch.input_dim);
        for v in 0..arch.input_dim {
            let mut alpha: MultiIndex = [0; crate::taylor::MAX_VARS];
            alpha[v] = 1;
            match trunc.position(&alpha) {
                Some(slot) => lin_slot.push(Some(slot)),
                None if trunc.max_degree() == 0 => lin_slot.push(None),
                None => {
                    return Err(Error::InvalidInput(format!(
                        "truncation lacks the first-order index of variable {v}"
                    )))
                }
            }
        }

        self.acts.resize_with(n_hidden + 1, || Array2::zeros((0, 0)));
        self.dphis.resize_with(n_hidden, || Array2::zeros((0, 0)));
        self.acts.truncate(n_hidden + 1);
        self.dphis.truncate(n_hidden);
        self.n_points = p_count;
        self.scratch.resize(2 * c, 0.0);

        ensure_shape(&mut self.acts[0], arch.input_dim, cols);
        {
            let a0 = &mut self.acts[0];
            a0.fill(0.0);
            for p in 0..p_count {
                for v in 0..arch.input_dim {
                    a0[[v, p * c]] = points[[p, v]];
                    if let Some(slot) = lin_slot[v] {
                        a0[[v, p * c + slot]] = 1.0;
                    }
                }
            }
        }

        self.preacts.resize_with(n_hidden, || Array2::zeros((0, 0)));
        for k in 0..n_hidden {
            let units = arch.hidden_widths[k];
            ensure_shape(&mut self.preacts[k], units, cols);
            let s = &mut self.preacts[k];
            general_mat_mul(1.0, &views.w[k], &self.acts[k], 0.0, s);
            {
                let s_buf = s.as_slice_mut().unwrap();
                for u in 0..units {
                    let bu = views.b[k][u];
                    for p in 0..p_count {
                        s_buf[u * cols + p * c] += bu;
                    }
                }
            }
            ensure_shape(&mut self.acts[k + 1], units, cols);
            ensure_shape(&mut self.dphis[k], units, cols);
            let s_buf = self.preacts[k].as_slice().unwrap();
            let a_buf = self.acts[k + 1].as_slice_mut().unwrap();
            let d_buf = self.dphis[k].as_slice_mut().unwrap();
            for u in 0..units {
                for p in 0..p_count {
                    let lo = u * cols + p * c;
                    trunc.tanh_jet(
                        &s_buf[lo..lo + c],
                        &mut a_buf[lo..lo + c],
                        &mut d_buf[lo..lo + c],
                        &mut self.scratch,
                    );
                }
            }
        }

        ensure_shape(&mut self.out, arch.output_dim, cols);
        general_mat_mul(
            1.0,
            &views.w[n_hidden],
            &self.acts[n_hidden],
            0.0,
            &mut self.out,
        );
        {
            let o_buf = self.out.as_slice_mut().unwrap();
            for u in 0..arch.output_dim {
                let bu = views.b[n_hidden][u];
                for p in 0..p_count {
                    o_buf[u * cols + p * c] += bu;
                }
            }
        }

        for p in 0..p_count {
            for u in 0..arch.output_dim {
                for slot in 0..c {
                    if !self.out[[u, p * c + slot]].is_finite() {
                        return Err(Error::NonFinite {
                            point: p,
                            context: format!("output {u} jet coefficient {slot}"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Jet coefficient `slot` of output `out_idx` at point `p`.
    pub fn coeff(&self, trunc: &Truncation, out_idx: usize, p: usize, slot: usize) -> f64 {
        self.out[[out_idx, p * trunc.len() + slot]]
    }

    /// Materializes per-point, per-output jets from the last forward pass.
    pub fn jets(&self, trunc: &Truncation, points: &Array2<f64>) -> Vec<Vec<Jet>> {
        let c = trunc.len();
        (0..self.n_points)
            .map(|p| {
                let point: Vec<f64> = points.row(p).to_vec();
                (0..self.out.nrows())
                    .map(|u| {
                        let coeffs: Vec<f64> =
                            (0..c).map(|s| self.out[[u, p * c + s]]).collect();
                        Jet::from_coeffs(&point, trunc, &coeffs)
                    })
                    .collect()
            })
            .collect()
    }

    /// Reverse pass: given cotangents of the output jet coefficients
    /// (same shape as the output matrix), accumulates dL/dθ into `grad`.
    pub fn backward(
        &mut self,
        arch: &NetworkArch,
        trunc: &Truncation,
        params: &ParamVector,
        out_bar: &Array2<f64>,
        grad: &mut ParamVector,
    ) -> Result<()> {
        let views = layer_views(arch, params)?;
        if grad.len() != params.len() {
            return Err(Error::DimensionMismatch {
                expected: params.len(),
                got: grad.len(),
            });
        }
        let c = trunc.len();
        let cols = self.n_points * c;
        if out_bar.dim() != (arch.output_dim, cols) {
            return Err(Error::DimensionMismatch {
                expected: arch.output_dim * cols,
                got: out_bar.len(),
            });
        }
        let n_hidden = arch.hidden_widths.len();
        let dims = arch.layer_dims();

        // Offsets of each layer's weight/bias block in the flat vector.
        let mut offsets = Vec::with_capacity(dims.len());
        let mut off = 0;
        for &(o, i) in &dims {
            offsets.push(off);
            off += o * i + o;
        }

        let n_points = self.n_points;
        let mut accumulate = |layer: usize, sbar: &Array2<f64>, a_prev: &Array2<f64>| {
            let (o, i) = dims[layer];
            let base = offsets[layer];
            {
                let mut gw =
                    ndarray::ArrayViewMut2::from_shape((o, i), &mut grad.values[base..base + o * i])
                        .unwrap();
                general_mat_mul(1.0, sbar, &a_prev.t(), 1.0, &mut gw);
            }
            let gb = &mut grad.values[base + o * i..base + o * i + o];
            for u in 0..o {
                for p in 0..n_points {
                    gb[u] += sbar[[u, p * c]];
                }
            }
        };

        self.sbars.resize_with(n_hidden, || Array2::zeros((0, 0)));
        self.abars.resize_with(n_hidden, || Array2::zeros((0, 0)));

        // Output layer is affine, so its cotangent is out_bar itself.
        accumulate(n_hidden, out_bar, &self.acts[n_hidden]);

        for k in (0..n_hidden).rev() {
            // cotangent of hidden layer k's activation output
            let (w_next, bar_next): (_, &Array2<f64>) = if k == n_hidden - 1 {
                (&views.w[n_hidden], out_bar)
            } else {
                (&views.w[k + 1], &self.sbars[k + 1])
            };
            ensure_shape(&mut self.abars[k], dims[k + 1].1, cols);
            general_mat_mul(1.0, &w_next.t(), bar_next, 0.0, &mut self.abars[k]);

            let units = arch.hidden_widths[k];
            ensure_shape(&mut self.sbars[k], units, cols);
            self.sbars[k].fill(0.0);
            {
                let d_buf = self.dphis[k].as_slice().unwrap();
                let a_buf = self.abars[k].as_slice().unwrap();
                let s_buf = self.sbars[k].as_slice_mut().unwrap();
                for u in 0..units {
                    for p in 0..self.n_points {
                        let lo = u * cols + p * c;
                        trunc.mul_adjoint_acc(
                            &d_buf[lo..lo + c],
                            &a_buf[lo..lo + c],
                            &mut s_buf[lo..lo + c],
                        );
                    }
                }
            }
            accumulate(k, &self.sbars[k], &self.acts[k]);
        }
        Ok(())
    }
}

impl Default for BatchEval {
    fn default() -> Self {
        Self::new()
    }
}

/// All input-partials up to `max_order` at one point, one jet per output.
pub fn input_jets(
    arch: &NetworkArch,
    params: &ParamVector,
    point: &[f64],
    max_order: usize,
) -> Result<Vec<Jet>> {
    if max_order > MAX_ORDER {
        return Err(Error::UnsupportedOrder(max_order));
    }
    if point.len() != arch.input_dim {
        return Err(Error::DimensionMismatch {
            expected: arch.input_dim,
            got: point.len(),
        });
    }
    let trunc = Truncation::total_order(arch.input_dim, max_order)?;
    let pts = Array2::from_shape_vec((1, point.len()), point.to_vec()).unwrap();
    let mut eval = BatchEval::new();
    eval.forward(arch, &trunc, params, &pts)?;
    Ok(eval.jets(&trunc, &pts).pop().unwrap())
}

/// Scalar-field variant of [`input_jets`] (output_dim must be 1).
pub fn input_jet(
    arch: &NetworkArch,
    params: &ParamVector,
    point: &[f64],
    max_order: usize,
) -> Result<Jet> {
    let mut jets = input_jets(arch, params, point, max_order)?;
    if jets.len() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: jets.len(),
        });
    }
    Ok(jets.pop().unwrap())
}

/// A scalar loss built from network jets at finitely many points.
///
/// Implementors return the loss value together with its cotangents: the
/// partial derivative of the value with respect to every stored jet partial
/// `D^α u`, indexed `[point][output][partial slot]` in the same order as
/// `Jet::partials()`.
pub trait JetFunctional {
    /// Evaluation points, one row per point.
    fn points(&self) -> Array2<f64>;

    /// Highest total derivative order the functional reads.
    fn max_order(&self) -> usize;

    fn value_with_cotangents(&self, jets: &[Vec<Jet>]) -> (f64, Vec<Vec<Vec<f64>>>);
}

/// Exact gradient of a jet functional with respect to the parameters.
/// Returns the loss value and dL/dθ.
pub fn param_gradient(
    arch: &NetworkArch,
    params: &ParamVector,
    functional: &dyn JetFunctional,
) -> Result<(f64, ParamVector)> {
    let order = functional.max_order();
    if order > MAX_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    let trunc = Truncation::total_order(arch.input_dim, order)?;
    let points = functional.points();
    let mut eval = BatchEval::new();
    eval.forward(arch, &trunc, params, &points)?;
    let jets = eval.jets(&trunc, &points);
    let (value, cots) = functional.value_with_cotangents(&jets);

    let c = trunc.len();
    let mut out_bar = Array2::zeros((arch.output_dim, points.nrows() * c));
    for (p, per_point) in cots.iter().enumerate() {
        for (u, per_out) in per_point.iter().enumerate() {
            for (slot, &g) in per_out.iter().enumerate() {
                // dL/dcoeff = dL/dpartial * α! since partial = coeff * α!
                out_bar[[u, p * c + slot]] = g * trunc.factorial(slot);
            }
        }
    }
    let mut grad = ParamVector::zeros(arch);
    eval.backward(arch, &trunc, params, &out_bar, &mut grad)?;
    Ok((value, grad))
}

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"RAEPINN\0";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Trained parameters plus enough metadata to refuse mismatched artifacts.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub arch: NetworkArch,
    pub params: ParamVector,
    pub problem_id: String,
    pub config_hash: [u8; 32],
    pub code_version: String,
}

impl Checkpoint {
    /// Byte layout (all integers little-endian):
    ///   magic "RAEPINN\0" (8) | version u32 | input_dim u32 | output_dim u32
    ///   | n_hidden u32 | hidden widths u32 each | problem_id (u32 len + utf8)
    ///   | code_version (u32 len + utf8) | config_hash (32)
    ///   | param_count u64 | params f64 each
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(CHECKPOINT_MAGIC);
        buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.arch.input_dim as u32).to_le_bytes());
        buf.extend_from_slice(&(self.arch.output_dim as u32).to_le_bytes());
        buf.extend_from_slice(&(self.arch.hidden_widths.len() as u32).to_le_bytes());
        for &w in &self.arch.hidden_widths {
            buf.extend_from_slice(&(w as u32).to_le_bytes());
        }
        for s in [&self.problem_id, &self.code_version] {
            buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
            buf.extend_from_slice(s.as_bytes());
        }
        buf.extend_from_slice(&self.config_hash);
        buf.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for &v in &self.params.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        crate::io_util::write_atomic(path, &buf)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let fmt_err = |m: &str| Error::Format {
            path: path.display().to_string(),
            message: m.to_string(),
        };
        let mut file = std::fs::File::open(path)?;
        let mut buf = Vec::new();
        file.read_to_end(&mut buf)?;
        let mut cur = std::io::Cursor::new(&buf);

        let mut magic = [0u8; 8];
        cur.read_exact(&mut magic)
            .map_err(|_| fmt_err("truncated header"))?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(fmt_err("bad magic"));
        }
        let read_u32 = |cur: &mut std::io::Cursor<&Vec<u8>>| -> Result<u32> {
            let mut b = [0u8; 4];
            cur.read_exact(&mut b).map_err(|_| fmt_err("truncated"))?;
            Ok(u32::from_le_bytes(b))
        };
        let version = read_u32(&mut cur)?;
        if version != CHECKPOINT_VERSION {
            return Err(fmt_err(&format!("unsupported version {version}")));
        }
        let input_dim = read_u32(&mut cur)? as usize;
        let output_dim = read_u32(&mut cur)? as usize;
        let n_hidden = read_u32(&mut cur)? as usize;
        if n_hidden > 64 {
            return Err(fmt_err("implausible hidden layer count"));
        }
        let mut hidden_widths = Vec::with_capacity(n_hidden);
        for _ in 0..n_hidden {
            hidden_widths.push(read_u32(&mut cur)? as usize);
        }
        let read_string = |cur: &mut std::io::Cursor<&Vec<u8>>| -> Result<String> {
            let len = read_u32(cur)? as usize;
            if len > 4096 {
                return Err(fmt_err("implausible string length"));
            }
            let mut b = vec![0u8; len];
            cur.read_exact(&mut b).map_err(|_| fmt_err("truncated"))?;
            String::from_utf8(b).map_err(|_| fmt_err("invalid utf8"))
        };
        let problem_id = read_string(&mut cur)?;
        let code_version = read_string(&mut cur)?;
        let mut config_hash = [0u8; 32];
        cur.read_exact(&mut config_hash)
            .map_err(|_| fmt_err("truncated hash"))?;
        let mut b8 = [0u8; 8];
        cur.read_exact(&mut b8)
            .map_err(|_| fmt_err("truncated count"))?;
        let count = u64::from_le_bytes(b8) as usize;

        let arch = NetworkArch::new(input_dim, hidden_widths, output_dim)?;
        if count != arch.param_count() {
            return Err(fmt_err(&format!(
                "parameter count {count} does not match architecture ({})",
                arch.param_count()
            )));
        }
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            cur.read_exact(&mut b8)
                .map_err(|_| fmt_err("truncated parameters"))?;
            values.push(f64::from_le_bytes(b8));
        }
        Ok(Checkpoint {
            arch,
            params: ParamVector { values },
            problem_id,
            code_version,
            config_hash,
        })
    }
}
