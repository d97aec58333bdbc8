//! C interface to the pjbsvd solvers.
//!
//! Problems and results are opaque heap handles released with their `_free`
//! function. Every entry point returns a [`PjbdStatus`]; on failure the
//! message is kept per thread and read back with [`pjbd_last_error_message`].
//! Matrices cross the boundary as column-major `double` arrays, complex
//! entries as (real, imaginary) pairs.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use num_complex::Complex64;
use pjbsvd::ascf::{InitMode, Updating};
use pjbsvd::dynamic::{Accel, AnyProblem, AnyReport, SolveOptions};
use pjbsvd::generator::GeneratorConfig;
use pjbsvd::{Error, FieldKind, Mat, Partition, ProblemSet};

pub const PJBD_FIELD_REAL: u32 = 0;
pub const PJBD_FIELD_COMPLEX: u32 = 1;
pub const PJBD_UPDATING_GS: u32 = 0;
pub const PJBD_UPDATING_JACOBI: u32 = 1;
pub const PJBD_ACCEL_NONE: u32 = 0;
pub const PJBD_ACCEL_LOCG: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PjbdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Dimension = 3,
    Contract = 4,
    NonFinite = 5,
    Io = 6,
    Format = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// A set of matrices with its block partition.
pub struct PjbdProblem {
    inner: AnyProblem,
}

/// The outcome of one solve.
pub struct PjbdResult {
    inner: AnyReport,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PjbdGeneratorParams {
    pub n2: usize,
    /// `n1 = round(ratio·n2)`.
    pub ratio: f64,
    pub num_matrices: usize,
    pub blocks: *const usize,
    pub num_blocks: usize,
    pub eta: f64,
    pub scale: f64,
    /// `PJBD_FIELD_*`.
    pub field: u32,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PjbdSolveParams {
    /// `PJBD_UPDATING_*`.
    pub updating: u32,
    /// `PJBD_ACCEL_*`.
    pub accel: u32,
    pub tol: f64,
    pub max_iter: usize,
    pub inner_max_iter: usize,
    /// Nonzero starts from the leading identity columns and ignores `init_seed`.
    pub identity_init: u8,
    pub init_seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PjbdSummary {
    pub converged: u8,
    pub field: u32,
    pub iterations: usize,
    pub n1: usize,
    pub n2: usize,
    pub k: usize,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub final_kkt: f64,
    pub elapsed_seconds: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

struct Fail(PjbdStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Input(_) => PjbdStatus::InvalidInput,
            Error::Dimension { .. } => PjbdStatus::Dimension,
            Error::Contract(_) => PjbdStatus::Contract,
            Error::NonFinite { .. } => PjbdStatus::NonFinite,
            Error::Io { .. } => PjbdStatus::Io,
            Error::Format { .. } | Error::Json(_) | Error::Csv(_) => PjbdStatus::Format,
        };
        Fail(status, e.to_string())
    }
}

fn fail(status: PjbdStatus, msg: impl Into<String>) -> Fail {
    Fail(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> PjbdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PjbdStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            PjbdStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| fail(PjbdStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn path_arg(p: *const c_char, name: &str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(fail(PjbdStatus::NullPointer, format!("`{name}` is null")));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PjbdStatus::InvalidInput, format!("`{name}` is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(PjbdStatus::NullPointer, format!("`{name}` is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn field_of(code: u32) -> Result<FieldKind, Fail> {
    match code {
        PJBD_FIELD_REAL => Ok(FieldKind::Real),
        PJBD_FIELD_COMPLEX => Ok(FieldKind::Complex),
        other => Err(fail(PjbdStatus::InvalidInput, format!("unknown field code {other}"))),
    }
}

fn field_code(f: FieldKind) -> u32 {
    match f {
        FieldKind::Real => PJBD_FIELD_REAL,
        FieldKind::Complex => PJBD_FIELD_COMPLEX,
    }
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(fail(PjbdStatus::NullPointer, "output handle pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pjbd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length without the NUL.
#[no_mangle]
pub unsafe extern "C" fn pjbd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Fills `params` with the library defaults for a GS solve.
#[no_mangle]
pub unsafe extern "C" fn pjbd_solve_params_default(params: *mut PjbdSolveParams) -> PjbdStatus {
    guard(|| {
        if params.is_null() {
            return Err(fail(PjbdStatus::NullPointer, "`params` is null"));
        }
        let d = SolveOptions::default();
        *params = PjbdSolveParams {
            updating: PJBD_UPDATING_GS,
            accel: PJBD_ACCEL_NONE,
            tol: d.tol,
            max_iter: d.max_iter,
            inner_max_iter: d.inner_max_iter,
            identity_init: 0,
            init_seed: 0,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pjbd_problem_generate(params: *const PjbdGeneratorParams, out: *mut *mut PjbdProblem) -> PjbdStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let blocks = slice_arg(p.blocks, p.num_blocks, "blocks")?;
        let partition = Partition::new(blocks.to_vec())?;
        let mut cfg = GeneratorConfig::new(p.n2, p.num_matrices, partition, p.eta, p.seed).with_field(field_of(p.field)?);
        cfg.ratio = p.ratio;
        cfg.scale = p.scale;
        let inner = AnyProblem::generate(&cfg)?;
        store(out, PjbdProblem { inner })
    })
}

/// Builds a problem from `num_matrices` consecutive column-major `n1 × n2`
/// matrices in `data` (`2·n1·n2` doubles per matrix when complex).
#[no_mangle]
pub unsafe extern "C" fn pjbd_problem_from_data(
    field: u32,
    n1: usize,
    n2: usize,
    num_matrices: usize,
    data: *const f64,
    data_len: usize,
    blocks: *const usize,
    num_blocks: usize,
    out: *mut *mut PjbdProblem,
) -> PjbdStatus {
    guard(|| {
        let field = field_of(field)?;
        let per = if field == FieldKind::Complex { 2 } else { 1 };
        let need = n1
            .checked_mul(n2)
            .and_then(|x| x.checked_mul(per))
            .and_then(|x| x.checked_mul(num_matrices))
            .ok_or_else(|| fail(PjbdStatus::InvalidInput, "dimensions overflow"))?;
        if data_len != need {
            return Err(fail(
                PjbdStatus::Dimension,
                format!("expected {need} doubles for {num_matrices} matrices of {n1}×{n2}, got {data_len}"),
            ));
        }
        let data = slice_arg(data, data_len, "data")?;
        let partition = Partition::new(slice_arg(blocks, num_blocks, "blocks")?.to_vec())?;
        let chunk = n1 * n2 * per;
        let inner = match field {
            FieldKind::Real => {
                let ms = (0..num_matrices)
                    .map(|i| Mat::from_column_slice(n1, n2, &data[i * chunk..(i + 1) * chunk]))
                    .collect();
                AnyProblem::Real(ProblemSet::new(ms, partition)?)
            }
            FieldKind::Complex => {
                let ms = (0..num_matrices)
                    .map(|i| {
                        let d = &data[i * chunk..(i + 1) * chunk];
                        Mat::from_fn(n1, n2, |r, c| {
                            let j = 2 * (c * n1 + r);
                            Complex64::new(d[j], d[j + 1])
                        })
                    })
                    .collect();
                AnyProblem::Complex(ProblemSet::new(ms, partition)?)
            }
        };
        store(out, PjbdProblem { inner })
    })
}

#[no_mangle]
pub unsafe extern "C" fn pjbd_problem_load(dir: *const c_char, out: *mut *mut PjbdProblem) -> PjbdStatus {
    guard(|| {
        let dir = path_arg(dir, "dir")?;
        let (inner, _) = AnyProblem::load(&dir)?;
        store(out, PjbdProblem { inner })
    })
}

#[no_mangle]
pub unsafe extern "C" fn pjbd_problem_save(problem: *const PjbdProblem, dir: *const c_char) -> PjbdStatus {
    guard(|| {
        let p = deref(problem, "problem")?;
        let dir = path_arg(dir, "dir")?;
        p.inner.save(&dir, None)?;
        Ok(())
    })
}

/// Any output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn pjbd_problem_dims(
    problem: *const PjbdProblem,
    n1: *mut usize,
    n2: *mut usize,
    k: *mut usize,
    num_matrices: *mut usize,
    field: *mut u32,
) -> PjbdStatus {
    guard(|| {
        let p = &deref(problem, "problem")?.inner;
        if let Some(x) = n1.as_mut() {
            *x = p.n1();
        }
        if let Some(x) = n2.as_mut() {
            *x = p.n2();
        }
        if let Some(x) = k.as_mut() {
            *x = p.k();
        }
        if let Some(x) = num_matrices.as_mut() {
            *x = p.len();
        }
        if let Some(x) = field.as_mut() {
            *x = field_code(p.field());
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn pjbd_problem_free(problem: *mut PjbdProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Solves with `params`, or the defaults when `params` is null.
#[no_mangle]
pub unsafe extern "C" fn pjbd_solve(problem: *const PjbdProblem, params: *const PjbdSolveParams, out: *mut *mut PjbdResult) -> PjbdStatus {
    guard(|| {
        let p = &deref(problem, "problem")?.inner;
        let mut options = SolveOptions::default();
        if let Some(s) = params.as_ref() {
            options.updating = match s.updating {
                PJBD_UPDATING_GS => Updating::GaussSeidel,
                PJBD_UPDATING_JACOBI => Updating::Jacobi,
                other => return Err(fail(PjbdStatus::InvalidInput, format!("unknown updating code {other}"))),
            };
            options.accel = match s.accel {
                PJBD_ACCEL_NONE => Accel::None,
                PJBD_ACCEL_LOCG => Accel::Locg,
                other => return Err(fail(PjbdStatus::InvalidInput, format!("unknown acceleration code {other}"))),
            };
            options.tol = s.tol;
            options.max_iter = s.max_iter;
            options.inner_max_iter = s.inner_max_iter;
            options.init = if s.identity_init != 0 {
                InitMode::Identity
            } else {
                InitMode::Seeded(s.init_seed)
            };
        }
        let inner = p.solve(&options)?;
        store(out, PjbdResult { inner })
    })
}

#[no_mangle]
pub unsafe extern "C" fn pjbd_result_summary(result: *const PjbdResult, out: *mut PjbdSummary) -> PjbdStatus {
    guard(|| {
        let r = &deref(result, "result")?.inner;
        if out.is_null() {
            return Err(fail(PjbdStatus::NullPointer, "`out` is null"));
        }
        let ((n1, k), (n2, _)) = r.shapes();
        *out = PjbdSummary {
            converged: r.converged() as u8,
            field: field_code(r.field()),
            iterations: r.iterations(),
            n1,
            n2,
            k,
            initial_objective: r.initial_objective(),
            final_objective: r.final_objective(),
            final_kkt: r.final_kkt(),
            elapsed_seconds: r.elapsed_seconds(),
        };
        Ok(())
    })
}

/// Writes up to `capacity` per-iteration objective and KKT values (either
/// array may be null) and stores the trace length in `len`.
#[no_mangle]
pub unsafe extern "C" fn pjbd_result_trace(
    result: *const PjbdResult,
    objective: *mut f64,
    kkt: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> PjbdStatus {
    guard(|| {
        let trace = deref(result, "result")?.inner.trace();
        if let Some(l) = len.as_mut() {
            *l = trace.len();
        }
        for (i, rec) in trace.iter().take(capacity).enumerate() {
            if !objective.is_null() {
                *objective.add(i) = rec.objective;
            }
            if !kkt.is_null() {
                *kkt.add(i) = rec.kkt;
            }
        }
        Ok(())
    })
}

unsafe fn copy_out(values: Vec<f64>, buf: *mut f64, len: usize, needed: *mut usize) -> Result<(), Fail> {
    if let Some(n) = needed.as_mut() {
        *n = values.len();
    }
    if buf.is_null() && len == 0 {
        return Ok(());
    }
    if buf.is_null() {
        return Err(fail(PjbdStatus::NullPointer, "`buf` is null"));
    }
    if len < values.len() {
        return Err(fail(
            PjbdStatus::BufferTooSmall,
            format!("buffer holds {len} doubles, {} needed", values.len()),
        ));
    }
    std::ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

/// Copies `U` column-major into `buf`. Passing a null `buf` with `len = 0`
/// only reports the required number of doubles in `needed`.
#[no_mangle]
pub unsafe extern "C" fn pjbd_result_copy_u(result: *const PjbdResult, buf: *mut f64, len: usize, needed: *mut usize) -> PjbdStatus {
    guard(|| copy_out(deref(result, "result")?.inner.u_values(), buf, len, needed))
}

#[no_mangle]
pub unsafe extern "C" fn pjbd_result_copy_v(result: *const PjbdResult, buf: *mut f64, len: usize, needed: *mut usize) -> PjbdStatus {
    guard(|| copy_out(deref(result, "result")?.inner.v_values(), buf, len, needed))
}

#[no_mangle]
pub unsafe extern "C" fn pjbd_result_free(result: *mut PjbdResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
