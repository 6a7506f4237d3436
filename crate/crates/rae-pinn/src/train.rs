//! Full-batch training loop: an Adam phase with per-stride adaptive weight
//! updates, then an L-BFGS phase with frozen weights, with periodic logging
//! against the reference solution and checkpointing.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::io_util::write_atomic;
use crate::knn::{build_neighbor_index, NeighborIndex};
use crate::loss::{Gammas, LossEvaluator, Weighting};
use crate::metrics::relative_l2;
use crate::net::{init_xavier, BatchEval, Checkpoint, NetworkArch, ParamVector};
use crate::optim::{lbfgs_minimize, lr_schedule, AdamState, LbfgsOptions};
use crate::pde::ProblemSpec;
use crate::sampling::PointSet;
use crate::spectral::SolutionGrid;
use crate::taylor::{mi, Truncation};
use crate::weighting::WeightState;

#[derive(Debug, Clone, PartialEq)]
pub enum WeightingMode {
    Rae { k_int: usize, beta: f64, stride: u64 },
    Vanilla,
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub adam_iters: u64,
    pub lbfgs_iters: usize,
    pub base_lr: f64,
    /// Multiplicative decay applied every `lr_decay_every` iterations;
    /// 1.0 disables the schedule.
    pub lr_decay_rate: f64,
    pub lr_decay_every: u64,
    pub weighting: WeightingMode,
    pub log_every: u64,
    /// Extra checkpoints every this many iterations (0 = phase boundaries
    /// only). Ignored without a checkpoint directory.
    pub checkpoint_every: u64,
    /// Stop when |L_k − L_{k−1}| falls below this.
    pub early_stop_delta: f64,
    pub seed: u64,
    pub problem_id: String,
    pub config_hash: [u8; 32],
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            adam_iters: 1000,
            lbfgs_iters: 0,
            base_lr: 1e-3,
            lr_decay_rate: 1.0,
            lr_decay_every: 5000,
            weighting: WeightingMode::Rae {
                k_int: 20,
                beta: 0.1,
                stride: 1,
            },
            log_every: 100,
            checkpoint_every: 0,
            early_stop_delta: 1e-7,
            seed: 0,
            problem_id: String::new(),
            config_hash: [0; 32],
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainLogRecord {
    pub iteration: u64,
    pub l_int: f64,
    pub l_tb: f64,
    pub l_sb: f64,
    pub total: f64,
    pub rel_l2_u: f64,
    pub rel_l2_ux: f64,
    /// 2D problems only.
    pub rel_l2_uy: Option<f64>,
    pub lr: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainLog {
    pub records: Vec<TrainLogRecord>,
    pub space_dim: usize,
}

impl TrainLog {
    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.total).collect()
    }

    pub fn errors_u(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.rel_l2_u).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        use std::io::Write;
        let mut buf = Vec::new();
        let uy = if self.space_dim == 2 { ",rel_l2_uy" } else { "" };
        writeln!(
            buf,
            "iteration,l_int,l_tb,l_sb,total,rel_l2_u,rel_l2_ux{uy},lr,wall_ms"
        )?;
        for r in &self.records {
            let uy = match r.rel_l2_uy {
                Some(v) => format!(",{v:.17e}"),
                None => String::new(),
            };
            writeln!(
                buf,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}{uy},{:.17e},{:.3}",
                r.iteration, r.l_int, r.l_tb, r.l_sb, r.total, r.rel_l2_u, r.rel_l2_ux, r.lr,
                r.wall_ms
            )?;
        }
        write_atomic(path, &buf)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Format {
            path: path.display().to_string(),
            message: "empty log".into(),
        })?;
        let has_uy = header.contains("rel_l2_uy");
        let mut records = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            let want = if has_uy { 10 } else { 9 };
            if f.len() != want {
                return Err(Error::Format {
                    path: path.display().to_string(),
                    message: format!("expected {want} fields, got {}", f.len()),
                });
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::Format {
                    path: path.display().to_string(),
                    message: format!("bad number `{s}`"),
                })
            };
            records.push(TrainLogRecord {
                iteration: parse(f[0])? as u64,
                l_int: parse(f[1])?,
                l_tb: parse(f[2])?,
                l_sb: parse(f[3])?,
                total: parse(f[4])?,
                rel_l2_u: parse(f[5])?,
                rel_l2_ux: parse(f[6])?,
                rel_l2_uy: if has_uy { Some(parse(f[7])?) } else { None },
                lr: parse(f[if has_uy { 8 } else { 7 }])?,
                wall_ms: parse(f[if has_uy { 9 } else { 8 }])?,
            });
        }
        Ok(TrainLog {
            records,
            space_dim: if has_uy { 2 } else { 1 },
        })
    }
}

/// Fixed evaluation set for the periodic reference comparison: values and
/// first spatial derivatives of the reference at (strided) grid nodes over a
/// few snapshot times.
#[derive(Debug, Clone)]
pub struct EvalSet {
    /// One row per point: spatial coordinates then t.
    pub points: Array2<f64>,
    pub u: Vec<f64>,
    pub ux: Vec<f64>,
    pub uy: Option<Vec<f64>>,
    pub space_dim: usize,
}

const EVAL_MAX_NODES_PER_AXIS: usize = 64;
const EVAL_MAX_SNAPSHOTS: usize = 6;

impl EvalSet {
    pub fn from_reference(grid: &SolutionGrid) -> Result<Self> {
        let d = grid.space_dim;
        let n = grid.n;
        let node_stride = n.div_ceil(EVAL_MAX_NODES_PER_AXIS).max(1);
        let kept: Vec<usize> = (0..n).step_by(node_stride).collect();
        let n_times = grid.times.len();
        if n_times == 0 {
            return Err(Error::DegenerateInput("reference has no snapshots".into()));
        }
        // up to EVAL_MAX_SNAPSHOTS times, always including the last
        let time_stride = n_times.div_ceil(EVAL_MAX_SNAPSHOTS).max(1);
        let mut times: Vec<usize> = (0..n_times).step_by(time_stride).collect();
        if *times.last().unwrap() != n_times - 1 {
            times.push(n_times - 1);
        }

        let axes: Vec<Vec<f64>> = (0..d).map(|v| grid.axis_nodes(v)).collect();
        let per_snap = kept.len().pow(d as u32);
        let total = times.len() * per_snap;
        let mut points = Array2::zeros((total, d + 1));
        let mut u = Vec::with_capacity(total);
        let mut ux = Vec::with_capacity(total);
        let mut uy = if d == 2 { Some(Vec::with_capacity(total)) } else { None };

        for (si, &ti) in times.iter().enumerate() {
            let snap = grid.snapshot(ti);
            let dx = grid.derivative_snapshot(ti, 0);
            let dy = if d == 2 {
                Some(grid.derivative_snapshot(ti, 1))
            } else {
                None
            };
            for local in 0..per_snap {
                let (ix, iy) = if d == 1 {
                    (kept[local], 0)
                } else {
                    (kept[local % kept.len()], kept[local / kept.len()])
                };
                let flat = iy * n + ix;
                let row = si * per_snap + local;
                points[[row, 0]] = axes[0][ix];
                if d == 2 {
                    points[[row, 1]] = axes[1][iy];
                }
                points[[row, d]] = grid.times[ti];
                u.push(snap[flat]);
                ux.push(dx[flat]);
                if let (Some(uy), Some(dy)) = (uy.as_mut(), dy.as_ref()) {
                    uy.push(dy[flat]);
                }
            }
        }
        Ok(EvalSet {
            points,
            u,
            ux,
            uy,
            space_dim: d,
        })
    }
}

/// Relative-L2 errors (u, u_x[, u_y]) of the network on an evaluation set,
/// from a single order-1 batched forward pass.
pub fn eval_errors(
    arch: &NetworkArch,
    params: &ParamVector,
    eval: &EvalSet,
) -> Result<(f64, f64, Option<f64>)> {
    let d = eval.space_dim;
    let trunc = Truncation::total_order(d + 1, 1)?;
    let slot_val = trunc.position(&mi(&[])).unwrap();
    let slot_x = trunc.position(&mi(&[1])).unwrap();
    let slot_y = if d == 2 {
        trunc.position(&mi(&[0, 1]))
    } else {
        None
    };
    let mut be = BatchEval::new();
    be.forward(arch, &trunc, params, &eval.points)?;
    let n = eval.points.nrows();
    let mut pu = Vec::with_capacity(n);
    let mut px = Vec::with_capacity(n);
    let mut py = Vec::with_capacity(if d == 2 { n } else { 0 });
    for p in 0..n {
        pu.push(be.coeff(&trunc, 0, p, slot_val));
        px.push(be.coeff(&trunc, 0, p, slot_x));
        if let Some(sy) = slot_y {
            py.push(be.coeff(&trunc, 0, p, sy));
        }
    }
    let eu = relative_l2(&pu, &eval.u)?;
    let ex = relative_l2(&px, &eval.ux)?;
    let ey = match (&eval.uy, d) {
        (Some(uy), 2) => Some(relative_l2(&py, uy)?),
        _ => None,
    };
    Ok((eu, ex, ey))
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub params: ParamVector,
    pub log: TrainLog,
    /// Final adaptive weight state (absent in vanilla mode).
    pub weight_state: Option<WeightState>,
    pub stopped_early: bool,
    pub iterations_run: u64,
}

struct Logger<'a> {
    log: TrainLog,
    arch: &'a NetworkArch,
    eval: Option<&'a EvalSet>,
    start: Instant,
}

impl<'a> Logger<'a> {
    fn record(
        &mut self,
        iteration: u64,
        loss: &crate::loss::LossBreakdown,
        params: &ParamVector,
        lr: f64,
    ) -> Result<()> {
        let (eu, ex, ey) = match self.eval {
            Some(e) => eval_errors(self.arch, params, e)?,
            None => (
                f64::NAN,
                f64::NAN,
                if self.log.space_dim == 2 {
                    Some(f64::NAN)
                } else {
                    None
                },
            ),
        };
        self.log.records.push(TrainLogRecord {
            iteration,
            l_int: loss.l_int,
            l_tb: loss.l_tb,
            l_sb: loss.l_sb,
            total: loss.total,
            rel_l2_u: eu,
            rel_l2_ux: ex,
            rel_l2_uy: ey,
            lr,
            wall_ms: self.start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(())
    }
}

fn checkpoint_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.ckpt"))
}

fn save_checkpoint(
    dir: &Path,
    name: &str,
    arch: &NetworkArch,
    params: &ParamVector,
    opts: &TrainOptions,
) -> Result<()> {
    let ck = Checkpoint {
        arch: arch.clone(),
        params: params.clone(),
        problem_id: opts.problem_id.clone(),
        config_hash: opts.config_hash,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    ck.save(&checkpoint_path(dir, name))
}

/// Trains a network on the given collocation sets: Adam phase with the
/// adaptive weights refreshed every `stride` iterations, then an L-BFGS
/// phase with the weights frozen at their final values. Logs every
/// `log_every` iterations plus the final one. A non-finite loss aborts the
/// run after writing a checkpoint of the last finite-loss parameters.
pub fn train(
    spec: &ProblemSpec,
    arch: &NetworkArch,
    points: &PointSet,
    gamma: Gammas,
    opts: &TrainOptions,
    eval: Option<&EvalSet>,
    checkpoint_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    let n_int = points.interior.nrows();
    let mut evaluator = LossEvaluator::new(spec.clone(), arch.clone(), gamma, points)?;

    let adaptive: Option<(WeightState, NeighborIndex, u64)> = match &opts.weighting {
        WeightingMode::Rae { k_int, beta, stride } => {
            let index = build_neighbor_index(&points.interior, *k_int)?;
            Some((WeightState::new(n_int, *beta, *k_int)?, index, (*stride).max(1)))
        }
        WeightingMode::Vanilla => None,
    };
    let ones = vec![1.0; n_int];
    let (mut state, index, stride) = match adaptive {
        Some((s, i, st)) => (Some(s), Some(i), st),
        None => (None, None, 1),
    };

    let mut params = init_xavier(arch, opts.seed)?;
    let mut grad = ParamVector::zeros(arch);
    let mut adam = AdamState::new(params.len());
    let mut logger = Logger {
        log: TrainLog {
            records: Vec::new(),
            space_dim: spec.space_dim,
        },
        arch,
        eval,
        start: Instant::now(),
    };

    let mut last_good: Option<ParamVector> = None;
    let mut prev_loss: Option<f64> = None;
    let mut stopped_early = false;
    let mut iterations_run = 0u64;

    // ---- Adam phase ----
    for iter in 0..opts.adam_iters {
        let lr = lr_schedule(opts.base_lr, iter, opts.lr_decay_rate, opts.lr_decay_every);
        let weighting = match (&mut state, &index) {
            (Some(s), Some(idx)) => Weighting::Adaptive {
                state: s,
                index: idx,
                update: iter % stride == 0,
            },
            _ => Weighting::Fixed(&ones),
        };
        let (loss, _) = evaluator.evaluate(&params, weighting, Some(&mut grad))?;
        iterations_run = iter + 1;

        if !loss.total.is_finite() {
            if let (Some(dir), Some(good)) = (checkpoint_dir, last_good.as_ref()) {
                save_checkpoint(dir, "abort_last_good", arch, good, opts)?;
            }
            return Err(Error::NonFinite {
                point: iter as usize,
                context: "training loss; last finite parameters checkpointed".into(),
            });
        }
        last_good = Some(params.clone());

        if iter % opts.log_every == 0 || iter + 1 == opts.adam_iters {
            logger.record(iter, &loss, &params, lr)?;
        }
        if let (Some(dir), true) = (
            checkpoint_dir,
            opts.checkpoint_every > 0 && iter > 0 && iter % opts.checkpoint_every == 0,
        ) {
            save_checkpoint(dir, &format!("iter_{iter}"), arch, &params, opts)?;
        }

        if let Some(prev) = prev_loss {
            if (loss.total - prev).abs() < opts.early_stop_delta {
                stopped_early = true;
                if logger.log.records.last().map(|r| r.iteration) != Some(iter) {
                    logger.record(iter, &loss, &params, lr)?;
                }
                break;
            }
        }
        prev_loss = Some(loss.total);

        adam.step(&mut params.values, &grad.values, lr)?;
    }
    if let Some(dir) = checkpoint_dir {
        save_checkpoint(dir, "adam_final", arch, &params, opts)?;
    }

    // ---- L-BFGS phase (weights frozen) ----
    if opts.lbfgs_iters > 0 && !stopped_early {
        let frozen: Vec<f64> = match &state {
            Some(s) => s.lambda.clone(),
            None => ones.clone(),
        };
        let lbfgs_opts = LbfgsOptions {
            max_iters: opts.lbfgs_iters,
            ..LbfgsOptions::default()
        };
        let adam_iters = opts.adam_iters;
        let log_every = opts.log_every;
        let delta = opts.early_stop_delta;
        let mut lbfgs_prev = prev_loss;
        // shared between the objective and the per-iteration callback
        let last_breakdown = std::cell::Cell::new(None);
        let mut cb_err: Option<Error> = None;
        let result = lbfgs_minimize(
            |x| {
                let p = ParamVector {
                    values: x.to_vec(),
                };
                let mut g = ParamVector::zeros(arch);
                let (loss, _) = evaluator.evaluate(&p, Weighting::Fixed(&frozen), Some(&mut g))?;
                if !loss.total.is_finite() {
                    return Err(Error::NonFinite {
                        point: 0,
                        context: "L-BFGS loss".into(),
                    });
                }
                last_breakdown.set(Some(loss));
                Ok((loss.total, g.values))
            },
            params.values.clone(),
            &lbfgs_opts,
            |k, value, x| {
                let iteration = adam_iters + k as u64;
                iterations_run = iteration;
                if k as u64 % log_every == 0 || k == opts.lbfgs_iters {
                    if let Some(loss) = last_breakdown.get() {
                        let p = ParamVector { values: x.to_vec() };
                        if let Err(e) = logger.record(iteration, &loss, &p, 0.0) {
                            cb_err = Some(e);
                            return false;
                        }
                    }
                }
                if let Some(prev) = lbfgs_prev {
                    if (value - prev).abs() < delta {
                        stopped_early = true;
                        return false;
                    }
                }
                lbfgs_prev = Some(value);
                true
            },
        )?;
        if let Some(e) = cb_err {
            return Err(e);
        }
        // any stop reason (including line-search failure) is graceful here:
        // keep the best parameters found
        params = ParamVector {
            values: result.params,
        };
    }

    if let Some(dir) = checkpoint_dir {
        save_checkpoint(dir, "final", arch, &params, opts)?;
    }
    // make sure the last state is on the log even off-stride
    if logger
        .log
        .records
        .last()
        .map(|r| r.iteration + 1 < iterations_run)
        .unwrap_or(true)
    {
        let frozen: Vec<f64> = match &state {
            Some(s) => s.lambda.clone(),
            None => ones.clone(),
        };
        let (loss, _) = evaluator.evaluate(&params, Weighting::Fixed(&frozen), None)?;
        logger.record(iterations_run.saturating_sub(1), &loss, &params, 0.0)?;
    }

    Ok(TrainOutcome {
        params,
        log: logger.log,
        weight_state: state,
        stopped_early,
        iterations_run,
    })
}
