//! Command-line driver: train networks, build spectral reference solutions,
//! evaluate checkpoints, and emit scaling/theory-error diagnostics.
//!
//! Artifacts live under the output directory:
//!   config_resolved.toml   fully resolved configuration
//!   reference.grid         spectral reference solution
//!   checkpoints/           training checkpoints (final.ckpt last)
//!   train_log.csv          per-iteration losses and errors
//!   rae_weights.csv        final adaptive weights (rae mode)
//!   points.csv             collocation points (export-points)
//!   error_report.json + pointwise_error.csv   (evaluate)
//!   scaling_fit.json + theory_error.json      (diagnose)

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rae_pinn::config::{self, ExperimentConfig, ResolvedConfig, WeightingModeName};
use rae_pinn::metrics::{
    default_loss_range, pointwise_error_field, scaling_fit, theory_training_error,
};
use rae_pinn::net::Checkpoint;
use rae_pinn::sampling::{export_points_csv, sample_problem_points};
use rae_pinn::spectral::{spectral_solve, SolutionGrid};
use rae_pinn::train::{self, EvalSet, TrainLog};
use rae_pinn::{Error, Result};

#[derive(Parser)]
#[command(name = "rae-pinn", version, about = "Residual-adaptive PINN trainer for Allen-Cahn and Cahn-Hilliard equations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a network and write checkpoint + log
    Train(CommonOpts),
    /// Solve the problem with the pseudo-spectral reference solver
    Reference(CommonOpts),
    /// Compare a trained checkpoint against the reference solution
    Evaluate(CommonOpts),
    /// Fit the error-vs-loss scaling law and assemble the theory error report
    Diagnose(CommonOpts),
    /// Write the collocation point set as CSV
    #[command(name = "export-points")]
    ExportPoints(CommonOpts),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WeightingArg {
    Rae,
    Vanilla,
}

#[derive(Args)]
struct CommonOpts {
    /// TOML config file (may name a preset and override fields)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset: ac1d_i1 | ac1d_i2 | ac2d | ch1d | ch2d
    #[arg(long)]
    preset: Option<String>,
    /// Override the RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (defaults to the config's output_dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the interior weighting mode
    #[arg(long, value_enum)]
    weighting: Option<WeightingArg>,
    /// Override the adaptive-weight recomputation stride
    #[arg(long)]
    stride: Option<u64>,
    /// Override the logging interval
    #[arg(long)]
    log_every: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Train(o) => run_train(o),
        Cmd::Reference(o) => run_reference(o),
        Cmd::Evaluate(o) => run_evaluate(o),
        Cmd::Diagnose(o) => run_diagnose(o),
        Cmd::ExportPoints(o) => run_export_points(o),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Load the config (file or preset), apply flag overrides, and pick the
/// output directory. Flag overrides feed into the config hash like file
/// overrides would.
fn resolve(opts: &CommonOpts) -> Result<(ExperimentConfig, PathBuf)> {
    let mut resolved: ResolvedConfig = match (&opts.config, &opts.preset) {
        (Some(path), _) => config::load_config(path)?,
        (None, Some(name)) => {
            let cfg = config::preset(name)?;
            let hash = cfg.hash()?;
            ResolvedConfig {
                config: cfg,
                preset: Some(name.clone()),
                overridden: Vec::new(),
                hash,
            }
        }
        (None, None) => {
            return Err(Error::Config {
                path: "<args>".into(),
                message: "either --config or --preset is required".into(),
            })
        }
    };
    let cfg = &mut resolved.config;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = opts.weighting {
        cfg.weighting.mode = match mode {
            WeightingArg::Rae => WeightingModeName::Rae,
            WeightingArg::Vanilla => WeightingModeName::Vanilla,
        };
    }
    if let Some(stride) = opts.stride {
        cfg.weighting.stride = stride;
    }
    if let Some(every) = opts.log_every {
        cfg.optimizer.log_every = every;
    }
    cfg.validate()?;
    let out = opts
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    if let Some(name) = &resolved.preset {
        eprintln!("config: preset {name}, {} override(s)", resolved.overridden.len());
    }
    Ok((resolved.config, out))
}

fn hex(hash: &[u8; 32]) -> String {
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

fn reference_path(out: &Path) -> PathBuf {
    out.join("reference.grid")
}

fn solve_reference(cfg: &ExperimentConfig) -> Result<SolutionGrid> {
    let mut grid = spectral_solve(
        &cfg.problem,
        cfg.reference.n_modes,
        cfg.reference.dt,
        &cfg.snapshot_times(),
    )?;
    grid.problem_id = cfg.problem_id();
    grid.config_hash = cfg.hash()?;
    Ok(grid)
}

/// Load a compatible reference grid from the output directory, solving and
/// saving one if absent.
fn ensure_reference(cfg: &ExperimentConfig, out: &Path) -> Result<SolutionGrid> {
    let path = reference_path(out);
    if path.exists() {
        let grid = SolutionGrid::load(&path)?;
        if grid.problem_id != cfg.problem_id() {
            return Err(Error::ArtifactMismatch(format!(
                "reference {} solves `{}` but the config wants `{}`",
                path.display(),
                grid.problem_id,
                cfg.problem_id()
            )));
        }
        return Ok(grid);
    }
    eprintln!("reference: solving {} ...", cfg.problem_id());
    let grid = solve_reference(cfg)?;
    grid.save(&path)?;
    Ok(grid)
}

fn write_resolved_config(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let text = cfg.to_toml_string()?;
    rae_pinn::io_util::write_atomic(&out.join("config_resolved.toml"), text.as_bytes())
}

fn run_train(opts: &CommonOpts) -> Result<()> {
    let (cfg, out) = resolve(opts)?;
    std::fs::create_dir_all(&out)?;
    write_resolved_config(&cfg, &out)?;

    let reference = ensure_reference(&cfg, &out)?;
    let eval = EvalSet::from_reference(&reference)?;

    let points = sample_problem_points(&cfg.problem, cfg.counts, cfg.seed)?;
    let arch = cfg.arch()?;
    let train_opts = cfg.train_options()?;
    let ckpt_dir = out.join("checkpoints");
    std::fs::create_dir_all(&ckpt_dir)?;

    eprintln!(
        "train: {} | {} params | {} Adam + {} L-BFGS iterations | seed {}",
        cfg.problem_id(),
        arch.param_count(),
        train_opts.adam_iters,
        train_opts.lbfgs_iters,
        cfg.seed
    );
    let outcome = train::train(
        &cfg.problem,
        &arch,
        &points,
        cfg.gammas,
        &train_opts,
        Some(&eval),
        Some(ckpt_dir.as_path()),
    )?;

    outcome.log.write_csv(&out.join("train_log.csv"))?;
    if let Some(state) = &outcome.weight_state {
        state.dump_csv(&out.join("rae_weights.csv"))?;
    }
    let last = outcome.log.records.last();
    if let Some(r) = last {
        println!(
            "done: {} iterations (early stop: {}), total loss {:.6e}, relative L2 {:.6e}",
            outcome.iterations_run, outcome.stopped_early, r.total, r.rel_l2_u
        );
    }
    println!("checkpoint: {}", ckpt_dir.join("final.ckpt").display());
    Ok(())
}

fn run_reference(opts: &CommonOpts) -> Result<()> {
    let (cfg, out) = resolve(opts)?;
    std::fs::create_dir_all(&out)?;
    let grid = solve_reference(&cfg)?;
    let path = reference_path(&out);
    grid.save(&path)?;
    let last = grid.times.len() - 1;
    println!(
        "reference: {} | {} snapshots on a {}^{} grid | final mass {:.6e}",
        grid.problem_id,
        grid.times.len(),
        grid.n,
        grid.space_dim,
        grid.mass(last)
    );
    println!("saved: {}", path.display());
    Ok(())
}

fn load_final_checkpoint(cfg: &ExperimentConfig, out: &Path) -> Result<Checkpoint> {
    let path = out.join("checkpoints").join("final.ckpt");
    if !path.exists() {
        return Err(Error::MissingPrerequisite(format!(
            "no trained checkpoint at {}; run `rae-pinn train` first",
            path.display()
        )));
    }
    let ck = Checkpoint::load(&path)?;
    if ck.problem_id != cfg.problem_id() {
        return Err(Error::ArtifactMismatch(format!(
            "checkpoint solves `{}` but the config wants `{}`",
            ck.problem_id,
            cfg.problem_id()
        )));
    }
    Ok(ck)
}

fn load_reference(cfg: &ExperimentConfig, out: &Path) -> Result<SolutionGrid> {
    let path = reference_path(out);
    if !path.exists() {
        return Err(Error::MissingPrerequisite(format!(
            "no reference solution at {}; run `rae-pinn reference` first",
            path.display()
        )));
    }
    let grid = SolutionGrid::load(&path)?;
    if grid.problem_id != cfg.problem_id() {
        return Err(Error::ArtifactMismatch(format!(
            "reference solves `{}` but the config wants `{}`",
            grid.problem_id,
            cfg.problem_id()
        )));
    }
    Ok(grid)
}

fn run_evaluate(opts: &CommonOpts) -> Result<()> {
    let (cfg, out) = resolve(opts)?;
    let ck = load_final_checkpoint(&cfg, &out)?;
    let reference = load_reference(&cfg, &out)?;
    if ck.config_hash != reference.config_hash {
        eprintln!("note: checkpoint and reference come from different configs");
    }

    let snapshots: Vec<usize> = (0..reference.times.len()).collect();
    let field = pointwise_error_field(&ck.arch, &ck.params, &reference, &snapshots)?;
    let rel_l2 = rae_pinn::metrics::relative_l2(&field.predicted, &field.reference)?;
    field.export_csv(reference.space_dim, &out.join("pointwise_error.csv"))?;

    let report = serde_json::json!({
        "problem_id": ck.problem_id,
        "relative_l2_u": rel_l2,
        "max_abs_error": field.max_abs_error(),
        "n_points": field.predicted.len(),
        "n_snapshots": snapshots.len(),
        "checkpoint_config_hash": hex(&ck.config_hash),
        "reference_config_hash": hex(&reference.config_hash),
        "code_version": ck.code_version,
    });
    let text = serde_json::to_string_pretty(&report).expect("json serialization");
    rae_pinn::io_util::write_atomic(&out.join("error_report.json"), text.as_bytes())?;

    println!(
        "evaluate: {} | relative L2 {:.6e} | max abs error {:.6e}",
        ck.problem_id,
        rel_l2,
        field.max_abs_error()
    );
    println!("report: {}", out.join("error_report.json").display());
    Ok(())
}

/// Final lambda column of rae_weights.csv, if training saved one.
fn load_rae_weights(out: &Path, n_int: usize) -> Result<Option<Vec<f64>>> {
    let path = out.join("rae_weights.csv");
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path)?;
    let mut lambda = Vec::with_capacity(n_int);
    for (ln, line) in text.lines().enumerate().skip(1) {
        let field = line.rsplit(',').next().ok_or_else(|| Error::Format {
            path: path.display().to_string(),
            message: format!("line {}: empty row", ln + 1),
        })?;
        let v: f64 = field.trim().parse().map_err(|e| Error::Format {
            path: path.display().to_string(),
            message: format!("line {}: {e}", ln + 1),
        })?;
        lambda.push(v);
    }
    if lambda.len() != n_int {
        return Err(Error::Format {
            path: path.display().to_string(),
            message: format!("expected {n_int} weights, found {}", lambda.len()),
        });
    }
    Ok(Some(lambda))
}

fn run_diagnose(opts: &CommonOpts) -> Result<()> {
    let (cfg, out) = resolve(opts)?;
    let ck = load_final_checkpoint(&cfg, &out)?;
    let reference = load_reference(&cfg, &out)?;

    let log_path = out.join("train_log.csv");
    if !log_path.exists() {
        return Err(Error::MissingPrerequisite(format!(
            "no training log at {}; run `rae-pinn train` first",
            log_path.display()
        )));
    }
    let log = TrainLog::load_csv(&log_path)?;

    // error-vs-loss scaling over the final decades of the run
    let mut losses = Vec::new();
    let mut errors = Vec::new();
    for r in &log.records {
        if r.total.is_finite() && r.rel_l2_u.is_finite() {
            losses.push(r.total);
            errors.push(r.rel_l2_u);
        }
    }
    let fit = scaling_fit(&losses, &errors, default_loss_range(&losses))?;
    fit.save_json(&out.join("scaling_fit.json"))?;

    // quadrature-weighted training error functional at the trained parameters;
    // collocation points are resampled deterministically from the config seed
    let points = sample_problem_points(&cfg.problem, cfg.counts, cfg.seed)?;
    let n_int = points.interior.nrows();
    let weights = load_rae_weights(&out, n_int)?.unwrap_or_else(|| vec![1.0; n_int]);
    let report = theory_training_error(
        &cfg.problem,
        &ck.arch,
        &ck.params,
        &points,
        &weights,
        Some(&reference),
    )?;
    report.save_json(&out.join("theory_error.json"))?;

    println!(
        "diagnose: {} | scaling slope {:.4} over loss range [{:.3e}, {:.3e}] | E_T {:.6e}",
        ck.problem_id,
        fit.slope,
        fit.loss_range.0,
        fit.loss_range.1,
        report.e_t_squared.sqrt()
    );
    println!(
        "reports: {} and {}",
        out.join("scaling_fit.json").display(),
        out.join("theory_error.json").display()
    );
    Ok(())
}

fn run_export_points(opts: &CommonOpts) -> Result<()> {
    let (cfg, out) = resolve(opts)?;
    std::fs::create_dir_all(&out)?;
    let points = sample_problem_points(&cfg.problem, cfg.counts, cfg.seed)?;
    let path = out.join("points.csv");
    export_points_csv(&points, cfg.problem.space_dim, &path)?;
    println!(
        "points: {} interior, {} boundary pairs, {} initial -> {}",
        points.interior.nrows(),
        points.boundary_a.nrows(),
        points.initial.nrows(),
        path.display()
    );
    Ok(())
}
