//! C ABI for the rae-pinn trainer and reference solver.
//!
//! All objects are opaque handles created and destroyed by this library.
//! Every fallible call returns a `RaeStatus`; on failure a human-readable
//! message is stored per thread and can be fetched with `rae_last_error`.
//! Pointers returned through out-parameters are owned by the caller and
//! must be released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use rae_pinn::config::{self, ExperimentConfig};
use rae_pinn::metrics;
use rae_pinn::net::{BatchEval, Checkpoint};
use rae_pinn::sampling::sample_problem_points;
use rae_pinn::spectral::{spectral_solve, SolutionGrid};
use rae_pinn::taylor::Truncation;
use rae_pinn::train::{self, EvalSet};
use rae_pinn::Error;

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RaeStatus {
    RaeOk = 0,
    RaeErrNullPointer = 1,
    RaeErrUtf8 = 2,
    RaeErrInvalidArgument = 3,
    RaeErrConfig = 4,
    RaeErrNumerical = 5,
    RaeErrIo = 6,
    RaeErrMismatch = 7,
    RaeErrMissingPrerequisite = 8,
    RaeErrPanic = 9,
}

/// Opaque experiment configuration.
pub struct RaeConfig(ExperimentConfig);

/// Opaque spectral reference solution.
pub struct RaeGrid(SolutionGrid);

/// Opaque trained model (network weights plus provenance).
pub struct RaeModel(Checkpoint);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> RaeStatus {
    match err {
        Error::Config { .. } => RaeStatus::RaeErrConfig,
        Error::Io(_) | Error::Format { .. } => RaeStatus::RaeErrIo,
        Error::ArtifactMismatch(_) | Error::UnmatchedPair(_) => RaeStatus::RaeErrMismatch,
        Error::MissingPrerequisite(_) => RaeStatus::RaeErrMissingPrerequisite,
        Error::NonFinite { .. } | Error::BlowUp(_) | Error::LineSearchFailed(_) => {
            RaeStatus::RaeErrNumerical
        }
        _ => RaeStatus::RaeErrInvalidArgument,
    }
}

fn fail(err: Error) -> RaeStatus {
    let code = status_of(&err);
    set_error(&err.to_string());
    code
}

/// Run `f` with panics converted to `RaeErrPanic`.
fn guarded(f: impl FnOnce() -> RaeStatus) -> RaeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            RaeStatus::RaeErrPanic
        }
    }
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Result<&'a str, RaeStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(RaeStatus::RaeErrNullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        RaeStatus::RaeErrUtf8
    })
}

macro_rules! nonnull {
    ($ptr:expr) => {
        if $ptr.is_null() {
            set_error(concat!("null pointer: ", stringify!($ptr)));
            return RaeStatus::RaeErrNullPointer;
        }
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rae_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rae_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parse a TOML experiment description (may name a preset and override
/// fields) into a validated configuration.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rae_config_from_toml(
    text: *const c_char,
    out: *mut *mut RaeConfig,
) -> RaeStatus {
    guarded(|| {
        nonnull!(out);
        let text = match cstr(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match config::from_toml_str(text, "<ffi>") {
            Ok(resolved) => {
                *out = Box::into_raw(Box::new(RaeConfig(resolved.config)));
                RaeStatus::RaeOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Load one of the built-in presets: ac1d_i1, ac1d_i2, ac2d, ch1d, ch2d.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rae_config_preset(
    name: *const c_char,
    out: *mut *mut RaeConfig,
) -> RaeStatus {
    guarded(|| {
        nonnull!(out);
        let name = match cstr(name) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match config::preset(name) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(RaeConfig(cfg)));
                RaeStatus::RaeOk
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `cfg` must come from this library; passing it again is undefined.
#[no_mangle]
pub unsafe extern "C" fn rae_config_free(cfg: *mut RaeConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Override the RNG seed of a configuration.
///
/// # Safety
/// `cfg` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn rae_config_set_seed(cfg: *mut RaeConfig, seed: u64) -> RaeStatus {
    guarded(|| {
        nonnull!(cfg);
        (*cfg).0.seed = seed;
        RaeStatus::RaeOk
    })
}

/// Write the config's SHA-256 hash as 64 hex characters plus NUL.
/// `buf_len` must be at least 65.
///
/// # Safety
/// `cfg` must be a live handle; `buf` must point to `buf_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rae_config_hash_hex(
    cfg: *const RaeConfig,
    buf: *mut c_char,
    buf_len: usize,
) -> RaeStatus {
    guarded(|| {
        nonnull!(cfg);
        nonnull!(buf);
        if buf_len < 65 {
            set_error("buffer too small: need 65 bytes");
            return RaeStatus::RaeErrInvalidArgument;
        }
        let hash = match (*cfg).0.hash() {
            Ok(h) => h,
            Err(e) => return fail(e),
        };
        let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
        std::ptr::copy_nonoverlapping(hex.as_ptr(), buf as *mut u8, 64);
        *buf.add(64) = 0;
        RaeStatus::RaeOk
    })
}

/// Solve the configured problem with the pseudo-spectral reference solver.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rae_reference_solve(
    cfg: *const RaeConfig,
    out: *mut *mut RaeGrid,
) -> RaeStatus {
    guarded(|| {
        nonnull!(cfg);
        nonnull!(out);
        let cfg = &(*cfg).0;
        let result = (|| {
            let mut grid = spectral_solve(
                &cfg.problem,
                cfg.reference.n_modes,
                cfg.reference.dt,
                &cfg.snapshot_times(),
            )?;
            grid.problem_id = cfg.problem_id();
            grid.config_hash = cfg.hash()?;
            Ok(grid)
        })();
        match result {
            Ok(grid) => {
                *out = Box::into_raw(Box::new(RaeGrid(grid)));
                RaeStatus::RaeOk
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rae_grid_load(path: *const c_char, out: *mut *mut RaeGrid) -> RaeStatus {
    guarded(|| {
        nonnull!(out);
        let path = match cstr(path) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match SolutionGrid::load(Path::new(path)) {
            Ok(grid) => {
                *out = Box::into_raw(Box::new(RaeGrid(grid)));
                RaeStatus::RaeOk
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `grid` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rae_grid_save(grid: *const RaeGrid, path: *const c_char) -> RaeStatus {
    guarded(|| {
        nonnull!(grid);
        let path = match cstr(path) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match (*grid).0.save(Path::new(path)) {
            Ok(()) => RaeStatus::RaeOk,
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `grid` must come from this library; passing it again is undefined.
#[no_mangle]
pub unsafe extern "C" fn rae_grid_free(grid: *mut RaeGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Interpolate the reference solution at `n` space-time points given
/// row-major as (x..., t) with `point_dim` = space dimension + 1.
/// Writes `n` values to `out_values`.
///
/// # Safety
/// `points` must hold `n * point_dim` doubles and `out_values` `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn rae_grid_evaluate(
    grid: *const RaeGrid,
    points: *const f64,
    n: usize,
    point_dim: usize,
    out_values: *mut f64,
) -> RaeStatus {
    guarded(|| {
        nonnull!(grid);
        nonnull!(points);
        nonnull!(out_values);
        let g = &(*grid).0;
        if point_dim != g.space_dim + 1 {
            return fail(Error::DimensionMismatch {
                expected: g.space_dim + 1,
                got: point_dim,
            });
        }
        let flat = std::slice::from_raw_parts(points, n * point_dim);
        let arr = ndarray::Array2::from_shape_vec((n, point_dim), flat.to_vec())
            .expect("shape matches slice length");
        match g.evaluate(&arr) {
            Ok(values) => {
                std::ptr::copy_nonoverlapping(values.as_ptr(), out_values, n);
                RaeStatus::RaeOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Train a network under the given configuration. `reference` may be null;
/// when provided (and matching the problem) the training log tracks
/// relative L2 errors against it.
///
/// # Safety
/// `cfg` must be a live handle; `reference` null or a live handle; `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rae_train(
    cfg: *const RaeConfig,
    reference: *const RaeGrid,
    out: *mut *mut RaeModel,
) -> RaeStatus {
    guarded(|| {
        nonnull!(cfg);
        nonnull!(out);
        let cfg = &(*cfg).0;
        let reference = if reference.is_null() {
            None
        } else {
            Some(&(*reference).0)
        };
        let result = (|| {
            let eval = match reference {
                Some(grid) => {
                    if grid.problem_id != cfg.problem_id() {
                        return Err(Error::ArtifactMismatch(format!(
                            "reference solves `{}` but the config wants `{}`",
                            grid.problem_id,
                            cfg.problem_id()
                        )));
                    }
                    Some(EvalSet::from_reference(grid)?)
                }
                None => None,
            };
            let points = sample_problem_points(&cfg.problem, cfg.counts, cfg.seed)?;
            let arch = cfg.arch()?;
            let opts = cfg.train_options()?;
            let outcome = train::train(
                &cfg.problem,
                &arch,
                &points,
                cfg.gammas,
                &opts,
                eval.as_ref(),
                None,
            )?;
            Ok(Checkpoint {
                arch,
                params: outcome.params,
                problem_id: cfg.problem_id(),
                config_hash: cfg.hash()?,
                code_version: env!("CARGO_PKG_VERSION").to_string(),
            })
        })();
        match result {
            Ok(ck) => {
                *out = Box::into_raw(Box::new(RaeModel(ck)));
                RaeStatus::RaeOk
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `model` must come from this library; passing it again is undefined.
#[no_mangle]
pub unsafe extern "C" fn rae_model_free(model: *mut RaeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rae_model_save(model: *const RaeModel, path: *const c_char) -> RaeStatus {
    guarded(|| {
        nonnull!(model);
        let path = match cstr(path) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match (*model).0.save(Path::new(path)) {
            Ok(()) => RaeStatus::RaeOk,
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rae_model_load(path: *const c_char, out: *mut *mut RaeModel) -> RaeStatus {
    guarded(|| {
        nonnull!(out);
        let path = match cstr(path) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match Checkpoint::load(Path::new(path)) {
            Ok(ck) => {
                *out = Box::into_raw(Box::new(RaeModel(ck)));
                RaeStatus::RaeOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Evaluate the network at `n` space-time points given row-major as
/// (x..., t) with `point_dim` matching the network input dimension.
/// Writes `n` values (the first network output) to `out_values`.
///
/// # Safety
/// `points` must hold `n * point_dim` doubles and `out_values` `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn rae_model_predict(
    model: *const RaeModel,
    points: *const f64,
    n: usize,
    point_dim: usize,
    out_values: *mut f64,
) -> RaeStatus {
    guarded(|| {
        nonnull!(model);
        nonnull!(points);
        nonnull!(out_values);
        let ck = &(*model).0;
        if point_dim != ck.arch.input_dim {
            return fail(Error::DimensionMismatch {
                expected: ck.arch.input_dim,
                got: point_dim,
            });
        }
        let flat = std::slice::from_raw_parts(points, n * point_dim);
        let arr = ndarray::Array2::from_shape_vec((n, point_dim), flat.to_vec())
            .expect("shape matches slice length");
        let trunc = match Truncation::total_order(point_dim, 0) {
            Ok(t) => t,
            Err(e) => return fail(e),
        };
        let mut eval = BatchEval::new();
        match eval.forward(&ck.arch, &trunc, &ck.params, &arr) {
            Ok(()) => {
                for p in 0..n {
                    *out_values.add(p) = eval.coeff(&trunc, 0, p, 0);
                }
                RaeStatus::RaeOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Relative L2 error of the model against a reference grid over every
/// stored snapshot. Refuses grids solving a different problem.
///
/// # Safety
/// `model` and `grid` must be live handles; `out_error` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rae_model_relative_l2(
    model: *const RaeModel,
    grid: *const RaeGrid,
    out_error: *mut f64,
) -> RaeStatus {
    guarded(|| {
        nonnull!(model);
        nonnull!(grid);
        nonnull!(out_error);
        let ck = &(*model).0;
        let g = &(*grid).0;
        if ck.problem_id != g.problem_id {
            return fail(Error::ArtifactMismatch(format!(
                "checkpoint solves `{}` but the grid holds `{}`",
                ck.problem_id, g.problem_id
            )));
        }
        let snapshots: Vec<usize> = (0..g.times.len()).collect();
        let result = (|| {
            let field = metrics::pointwise_error_field(&ck.arch, &ck.params, g, &snapshots)?;
            metrics::relative_l2(&field.predicted, &field.reference)
        })();
        match result {
            Ok(err) => {
                *out_error = err;
                RaeStatus::RaeOk
            }
            Err(e) => fail(e),
        }
    })
}
