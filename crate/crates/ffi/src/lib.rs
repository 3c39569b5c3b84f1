//! C interface to `fk-core`.
//!
//! Objects cross the boundary as opaque handles created by `fk_*_new` (or
//! returned by `fk_train`) and released by the matching `fk_*_free`. Every
//! fallible call returns an [`FkStatus`]; on failure the message is kept per
//! thread and can be copied out with [`fk_last_error_message`]. Panics never
//! unwind into the caller: they surface as `FK_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fk_core::estimators::{BubbleRadius, EstimatorConfig};
use fk_core::montecarlo::{mc_estimate_capped, overshoot_stats, DEFAULT_STEP_CAP};
use fk_core::problems::{self, ProblemEntry};
use fk_core::stochastics::{expected_exit_time, levy_fpt_cdf};
use fk_core::tdl::{
    self, Feature, FeatureBasis, LearningSchedule, LinearModel, StopRule, TrainMode, TrainOptions,
};
use fk_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownName = 3,
    DimensionMismatch = 4,
    OutsideDomain = 5,
    MissingExactSolution = 6,
    StepCapExceeded = 7,
    Numerical = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

impl From<&Error> for FkStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::UnknownName(_) => FkStatus::UnknownName,
            Error::DimensionMismatch { .. } => FkStatus::DimensionMismatch,
            Error::StartOutsideDomain => FkStatus::OutsideDomain,
            Error::MissingExactSolution => FkStatus::MissingExactSolution,
            Error::StepCapExceeded(_) => FkStatus::StepCapExceeded,
            Error::InvalidParameter(_)
            | Error::InvalidTime { .. }
            | Error::InvalidThreshold { .. }
            | Error::InvalidBarrier { .. }
            | Error::InvalidState(_) => FkStatus::InvalidArgument,
            Error::AmbiguousProjection
            | Error::RejectionBudgetExceeded(_)
            | Error::UnboundedDomain
            | Error::DegenerateLambda
            | Error::IterationCapExceeded(_) => FkStatus::Numerical,
        }
    }
}

/// A built-in boundary value problem.
pub struct FkProblem(ProblemEntry);

/// Exit condition and estimator choices for walks.
pub struct FkEstimatorConfig(EstimatorConfig);

/// A trained linear surrogate.
pub struct FkModel(LinearModel);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FkMcResult {
    pub estimate: f64,
    pub std_error: f64,
    pub n_walkers: u64,
    pub mean_steps: f64,
    pub mean_exit_time: f64,
    pub n_capped: u64,
    pub n_unconverged: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FkTrainMode {
    Restart = 0,
    FixedCohort = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FkStopKind {
    Exits = 0,
    Steps = 1,
}

/// Options for [`fk_train`]. Start from [`fk_train_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FkTrainOptions {
    pub n_walkers: usize,
    pub dt: f64,
    pub mode: FkTrainMode,
    pub stop_kind: FkStopKind,
    pub stop_count: u64,
    pub seed: u64,
    pub max_steps: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: FkStatus, msg: impl Into<String>) -> FkStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> FkStatus {
    fail(FkStatus::from(&e), e.to_string())
}

fn guard(f: impl FnOnce() -> FkStatus) -> FkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == FkStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(FkStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, FkStatus> {
    if p.is_null() {
        return Err(fail(FkStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(FkStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], FkStatus> {
    if p.is_null() {
        return Err(fail(FkStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(FkStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length
/// excluding the terminator, or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn fk_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Looks up a built-in problem: `poisson-disk`, `dirichlet-disk` or `barrier-1d`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fk_problem_new(name: *const c_char, out: *mut *mut FkProblem) -> FkStatus {
    guard(|| {
        non_null!(out);
        let name = try_status!(str_arg(name, "name"));
        match problems::lookup(name) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(FkProblem(p)));
                FkStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `problem` must be null or a handle from [`fk_problem_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fk_problem_free(problem: *mut FkProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Spatial dimension of the problem, or 0 for a null handle.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fk_problem_dim(problem: *const FkProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.0.spec.dim())
}

/// Exact solution at `x`, when the problem has one.
///
/// # Safety
/// `problem` must be a live handle, `x` valid for `dim` reads and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fk_problem_exact(
    problem: *const FkProblem,
    x: *const f64,
    dim: usize,
    out: *mut f64,
) -> FkStatus {
    guard(|| {
        non_null!(problem, out);
        let p = &(*problem).0.spec;
        let x = try_status!(slice_arg(x, dim, "x"));
        if dim != p.dim() {
            return from_error(Error::DimensionMismatch {
                expected: p.dim(),
                got: dim,
            });
        }
        match p.exact_at(x) {
            Ok(u) => {
                *out = u;
                FkStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Max-sampling exits with corrected estimates throughout.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fk_estimator_config_new(out: *mut *mut FkEstimatorConfig) -> FkStatus {
    guard(|| {
        non_null!(out);
        *out = Box::into_raw(Box::new(FkEstimatorConfig(EstimatorConfig::default())));
        FkStatus::Ok
    })
}

/// Naive exit condition and naive estimates.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fk_estimator_config_new_naive(
    out: *mut *mut FkEstimatorConfig,
) -> FkStatus {
    guard(|| {
        non_null!(out);
        *out = Box::into_raw(Box::new(FkEstimatorConfig(EstimatorConfig::naive())));
        FkStatus::Ok
    })
}

/// Sets one option by name, using the command-line spellings: `exit`,
/// `bubble-radius`, `t-est`, `x-est`, `f-est`, `g-est`, `theta`, `epsilon`,
/// `brf-max-iter`. The configuration is left unchanged on error.
///
/// # Safety
/// `config` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn fk_estimator_config_set(
    config: *mut FkEstimatorConfig,
    key: *const c_char,
    value: *const c_char,
) -> FkStatus {
    guard(|| {
        non_null!(config);
        let key = try_status!(str_arg(key, "key"));
        let value = try_status!(str_arg(value, "value"));
        let mut cfg = (*config).0;
        let parsed = match key {
            "exit" => value.parse().map(|v| cfg.exit = v),
            "bubble-radius" => value.parse::<BubbleRadius>().map(|v| cfg.bubble_radius = v),
            "t-est" => value.parse().map(|v| cfg.t_est = v),
            "x-est" => value.parse().map(|v| cfg.x_est = v),
            "f-est" => value.parse().map(|v| cfg.f_est = v),
            "g-est" => value.parse().map(|v| cfg.g_est = v),
            "theta" => parse_num(value).map(|v| cfg.brf.theta = v),
            "epsilon" => parse_num(value).map(|v| cfg.brf.epsilon = v),
            "brf-max-iter" => value
                .parse()
                .map(|v| cfg.brf.max_iter = v)
                .map_err(|_| Error::InvalidParameter(format!("brf-max-iter '{value}'"))),
            _ => Err(Error::UnknownName(format!("option '{key}'"))),
        };
        match parsed.and_then(|_| cfg.validate()) {
            Ok(()) => {
                (*config).0 = cfg;
                FkStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

fn parse_num(s: &str) -> fk_core::Result<f64> {
    s.parse()
        .map_err(|_| Error::InvalidParameter(format!("number '{s}'")))
}

/// # Safety
/// `config` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fk_estimator_config_free(config: *mut FkEstimatorConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Monte Carlo estimate of `u(x)` from `n` walkers with time step `dt`.
/// `step_cap` of 0 selects the default per-walker cap.
///
/// # Safety
/// Handles must be live, `x` valid for `dim` reads and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fk_mc_estimate(
    problem: *const FkProblem,
    config: *const FkEstimatorConfig,
    x: *const f64,
    dim: usize,
    n: u64,
    dt: f64,
    seed: u64,
    step_cap: u64,
    out: *mut FkMcResult,
) -> FkStatus {
    guard(|| {
        non_null!(problem, config, out);
        let x = try_status!(slice_arg(x, dim, "x"));
        let cap = if step_cap == 0 {
            DEFAULT_STEP_CAP
        } else {
            step_cap
        };
        match mc_estimate_capped(&(*problem).0.spec, x, n, dt, &(*config).0, seed, cap) {
            Ok(r) => {
                *out = FkMcResult {
                    estimate: r.estimate,
                    std_error: r.stderr,
                    n_walkers: r.n_walkers,
                    mean_steps: r.mean_steps,
                    mean_exit_time: r.mean_exit_time,
                    n_capped: r.n_capped,
                    n_unconverged: r.n_unconverged,
                };
                FkStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

#[no_mangle]
pub extern "C" fn fk_train_options_default() -> FkTrainOptions {
    let d = TrainOptions::default();
    FkTrainOptions {
        n_walkers: d.n_walkers,
        dt: d.dt,
        mode: FkTrainMode::Restart,
        stop_kind: FkStopKind::Exits,
        stop_count: match d.stop {
            StopRule::Exits(n) | StopRule::Steps(n) => n,
        },
        seed: d.seed,
        max_steps: d.max_steps,
    }
}

/// Trains a linear surrogate by TD learning with the automatic rate
/// schedule. `basis` is a feature list such as `"T0*T0,T2*T0,T0*T2"`, or
/// null for the problem's default basis. The new model is written to `out`.
///
/// # Safety
/// Handles must be live, `basis` null or NUL-terminated, `options` and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn fk_train(
    problem: *const FkProblem,
    config: *const FkEstimatorConfig,
    basis: *const c_char,
    options: *const FkTrainOptions,
    out: *mut *mut FkModel,
) -> FkStatus {
    guard(|| {
        non_null!(problem, config, options, out);
        let entry = &(*problem).0;
        let basis: FeatureBasis = if basis.is_null() {
            match &entry.default_basis {
                Some(b) => b.clone(),
                None => {
                    return fail(
                        FkStatus::InvalidArgument,
                        format!("problem '{}' has no default basis", entry.name),
                    )
                }
            }
        } else {
            let spec = try_status!(str_arg(basis, "basis"));
            match FeatureBasis::parse(spec) {
                Ok(b) => b,
                Err(e) => return from_error(e),
            }
        };
        let o = *options;
        let opts = TrainOptions {
            n_walkers: o.n_walkers,
            dt: o.dt,
            mode: match o.mode {
                FkTrainMode::Restart => TrainMode::Restart,
                FkTrainMode::FixedCohort => TrainMode::FixedCohort,
            },
            stop: match o.stop_kind {
                FkStopKind::Exits => StopRule::Exits(o.stop_count),
                FkStopKind::Steps => StopRule::Steps(o.stop_count),
            },
            seed: o.seed,
            max_steps: o.max_steps,
            ..TrainOptions::default()
        };
        let run = LearningSchedule::auto(&entry.spec, &basis, o.dt, o.seed)
            .and_then(|s| tdl::train(&entry.spec, basis, &(*config).0, &s, &opts));
        match run {
            Ok(report) => {
                *out = Box::into_raw(Box::new(FkModel(report.model)));
                FkStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of coefficients, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fk_model_len(model: *const FkModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.coefficients.len())
}

/// Copies the coefficients into `out`, which must hold `fk_model_len` values.
///
/// # Safety
/// `model` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn fk_model_coefficients(
    model: *const FkModel,
    out: *mut f64,
    len: usize,
) -> FkStatus {
    guard(|| {
        non_null!(model, out);
        let c = &(*model).0.coefficients;
        if len < c.len() {
            return fail(
                FkStatus::BufferTooSmall,
                format!("buffer holds {len} values, model has {}", c.len()),
            );
        }
        ptr::copy_nonoverlapping(c.as_ptr(), out, c.len());
        FkStatus::Ok
    })
}

/// Evaluates the surrogate at `x`.
///
/// # Safety
/// `model` must be a live handle, `x` valid for `dim` reads and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fk_model_eval(
    model: *const FkModel,
    x: *const f64,
    dim: usize,
    out: *mut f64,
) -> FkStatus {
    guard(|| {
        non_null!(model, out);
        let x = try_status!(slice_arg(x, dim, "x"));
        let m = &(*model).0;
        let need = m
            .basis
            .features()
            .iter()
            .map(|f| match f {
                Feature::Chebyshev(d) => d.len(),
                _ => 2,
            })
            .max()
            .unwrap_or(0);
        if dim < need {
            return from_error(Error::DimensionMismatch {
                expected: need,
                got: dim,
            });
        }
        *out = m.eval(x);
        FkStatus::Ok
    })
}

/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fk_model_free(model: *mut FkModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Mean overshoot past a barrier in units of `sqrt(dt)`, from `n` walkers.
///
/// # Safety
/// `mean` and `std_error` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fk_overshoot(
    dt: f64,
    n: u64,
    seed: u64,
    mean: *mut f64,
    std_error: *mut f64,
) -> FkStatus {
    guard(|| {
        non_null!(mean, std_error);
        match overshoot_stats(dt, n, seed) {
            Ok(r) => {
                *mean = r.mean;
                *std_error = r.stderr;
                FkStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// CDF of the first passage time of Brownian motion to level `a`.
#[no_mangle]
pub extern "C" fn fk_levy_fpt_cdf(a: f64, t: f64) -> f64 {
    levy_fpt_cdf(a, t)
}

/// Expected first hitting time of level `a` by the bridge from 0 to `x` over `[0, dt]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fk_expected_exit_time(a: f64, x: f64, dt: f64, out: *mut f64) -> FkStatus {
    guard(|| {
        non_null!(out);
        match expected_exit_time(a, x, dt) {
            Ok(v) => {
                *out = v;
                FkStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
