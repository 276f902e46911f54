//! C ABI for the spreadcp library.
//!
//! Models and fields cross the boundary as opaque handles owned by the
//! caller and released with the matching `_free`. Every fallible call
//! returns an [`SpcpStatus`]; the message of the last failure on the
//! calling thread is available from [`spcp_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use spreadcp::analysis::{triangle_estimate, susceptibility};
use spreadcp::io::{run_experiment, ExperimentConfig, Store};
use spreadcp::lace::{forward_solve, invert_to_pi, lace_constants};
use spreadcp::{make_uniform_kernel, Error, ModelParams, SpaceTimeField};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpcpStatus {
    Ok = 0,
    /// Bad parameter or malformed input.
    Validation = 1,
    /// A numerical invariant failed.
    Invariant = 2,
    /// A backend size cap was exceeded.
    Cap = 3,
    Io = 4,
    NullPointer = 5,
    Panic = 6,
}

/// Model parameters: kernel, `eps`, `lambda`, horizon and window.
pub struct SpcpModel(ModelParams);

/// A real field on `{0..=n_max} x [-R, R]^d`.
pub struct SpcpField(SpaceTimeField);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SpcpLaceConstants {
    pub residual: f64,
    pub lambda_c_eps: f64,
    pub a_eps: f64,
    pub v_eps: f64,
    pub denominator_margin: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SpcpStatus {
    match e {
        Error::Io(_) => SpcpStatus::Io,
        other => match other.exit_code() {
            1 => SpcpStatus::Validation,
            3 => SpcpStatus::Cap,
            _ => SpcpStatus::Invariant,
        },
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), SpcpStatus>) -> SpcpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpcpStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(msg);
            SpcpStatus::Panic
        }
    }
}

fn lib<T>(r: spreadcp::Result<T>) -> Result<T, SpcpStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, SpcpStatus> {
    // SAFETY: the caller passes a handle obtained from this library or null.
    unsafe { p.as_ref() }.ok_or_else(|| {
        set_error(format!("{what} is null"));
        SpcpStatus::NullPointer
    })
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), SpcpStatus> {
    if out.is_null() {
        set_error("output pointer is null".into());
        return Err(SpcpStatus::NullPointer);
    }
    // SAFETY: checked non-null; the caller provides writable storage.
    unsafe { *out = Box::into_raw(Box::new(v)) };
    Ok(())
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a Path, SpcpStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        return Err(SpcpStatus::NullPointer);
    }
    // SAFETY: non-null, and the caller passes a NUL-terminated string.
    let s = unsafe { CStr::from_ptr(p) }.to_str().map_err(|e| {
        set_error(format!("{what}: {e}"));
        SpcpStatus::Validation
    })?;
    Ok(Path::new(s))
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn spcp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn spcp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Uniform kernel of range `range` in dimension `d`. A `radius` of 0
/// selects `range * n_max`.
///
/// # Safety
/// `out` must point to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn spcp_model_new(
    d: usize,
    range: usize,
    eps: f64,
    lambda: f64,
    n_max: usize,
    radius: usize,
    out: *mut *mut SpcpModel,
) -> SpcpStatus {
    guard(|| {
        let k = lib(make_uniform_kernel(d, range))?;
        let r = if radius == 0 { range * n_max } else { radius };
        let p = lib(ModelParams::with_radius(k, eps, lambda, n_max, r))?;
        unsafe { put(out, SpcpModel(p)) }
    })
}

/// # Safety
/// `model` must come from [`spcp_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn spcp_model_free(model: *mut SpcpModel) {
    if !model.is_null() {
        // SAFETY: allocated by `put`.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// # Safety
/// `field` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn spcp_field_free(field: *mut SpcpField) {
    if !field.is_null() {
        // SAFETY: allocated by `put`.
        drop(unsafe { Box::from_raw(field) });
    }
}

/// Exact `tau` by the subset chain (window of at most 20 sites).
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spcp_exact_two_point(model: *const SpcpModel, out: *mut *mut SpcpField) -> SpcpStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let f = lib(spreadcp::exact::exact_two_point_dp(&m.0))?;
        unsafe { put(out, SpcpField(f)) }
    })
}

/// Monte Carlo estimate of `tau`; deterministic in `seed`.
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spcp_estimate_two_point(
    model: *const SpcpModel,
    samples: u64,
    seed: u64,
    out: *mut *mut SpcpField,
) -> SpcpStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let est = lib(spreadcp::simulate::estimate_two_point(&m.0, samples, seed))?;
        unsafe { put(out, SpcpField(est.result.mean)) }
    })
}

/// `tau` from `pi` by the forward recursion.
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spcp_forward_solve(
    pi: *const SpcpField,
    model: *const SpcpModel,
    out: *mut *mut SpcpField,
) -> SpcpStatus {
    guard(|| {
        let (f, m) = unsafe { (deref(pi, "pi")?, deref(model, "model")?) };
        let tau = lib(forward_solve(&f.0, &m.0))?;
        unsafe { put(out, SpcpField(tau)) }
    })
}

/// `pi` from `tau` by the inverse recursion.
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spcp_invert_to_pi(
    tau: *const SpcpField,
    model: *const SpcpModel,
    out: *mut *mut SpcpField,
) -> SpcpStatus {
    guard(|| {
        let (f, m) = unsafe { (deref(tau, "tau")?, deref(model, "model")?) };
        let pi = lib(invert_to_pi(&f.0, &m.0))?;
        unsafe { put(out, SpcpField(pi)) }
    })
}

/// The delta field, i.e. the `pi` of the random walk.
///
/// # Safety
/// `model` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spcp_field_delta(model: *const SpcpModel, out: *mut *mut SpcpField) -> SpcpStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let p = &m.0;
        unsafe { put(out, SpcpField(SpaceTimeField::delta(p.d(), p.eps, p.n_max, p.radius))) }
    })
}

/// Dimension, horizon and window radius of a field. Null outputs are
/// skipped.
///
/// # Safety
/// `field` must be valid; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn spcp_field_shape(
    field: *const SpcpField,
    d: *mut usize,
    n_max: *mut usize,
    radius: *mut usize,
) -> SpcpStatus {
    guard(|| {
        let f = &unsafe { deref(field, "field") }?.0;
        for (p, v) in [(d, f.d), (n_max, f.n_max), (radius, f.radius)] {
            if !p.is_null() {
                // SAFETY: non-null and writable per the contract.
                unsafe { *p = v };
            }
        }
        Ok(())
    })
}

/// Number of values, `(n_max + 1) (2R + 1)^d`.
///
/// # Safety
/// `field` must be valid or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn spcp_field_len(field: *const SpcpField) -> usize {
    // SAFETY: caller contract.
    unsafe { field.as_ref() }.map_or(0, |f| f.0.data.len())
}

/// Copies the values in row-major `(n, x)` order, the last coordinate
/// fastest. `len` must equal [`spcp_field_len`].
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn spcp_field_copy(field: *const SpcpField, buf: *mut f64, len: usize) -> SpcpStatus {
    guard(|| {
        let f = &unsafe { deref(field, "field") }?.0;
        if buf.is_null() {
            set_error("buf is null".into());
            return Err(SpcpStatus::NullPointer);
        }
        if len != f.data.len() {
            set_error(format!("buffer holds {len} values, field has {}", f.data.len()));
            return Err(SpcpStatus::Validation);
        }
        // SAFETY: `buf` holds `len` doubles per the contract.
        unsafe { ptr::copy_nonoverlapping(f.data.as_ptr(), buf, len) };
        Ok(())
    })
}

/// Value at slice `n` and offset `x` (`d` coordinates).
///
/// # Safety
/// `x` must hold `d` coordinates and `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spcp_field_get(
    field: *const SpcpField,
    n: usize,
    x: *const i64,
    value: *mut f64,
) -> SpcpStatus {
    guard(|| {
        let f = &unsafe { deref(field, "field") }?.0;
        let _ = unsafe { deref(x, "x") }?;
        let _ = unsafe { deref(value.cast_const(), "value") }?;
        // SAFETY: `x` holds `d` coordinates per the contract.
        let coords = unsafe { std::slice::from_raw_parts(x, f.d) };
        let idx = f.window().index(coords).filter(|_| n <= f.n_max).ok_or_else(|| {
            set_error(format!("({n}, {coords:?}) outside the window"));
            SpcpStatus::Validation
        })?;
        // SAFETY: checked non-null above.
        unsafe { *value = f.slice(n)[idx] };
        Ok(())
    })
}

/// Critical-point residual and the constants `A`, `v` from `pi`.
///
/// # Safety
/// Handles must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spcp_lace_constants(
    pi: *const SpcpField,
    model: *const SpcpModel,
    sigma2: f64,
    out: *mut SpcpLaceConstants,
) -> SpcpStatus {
    guard(|| {
        let (f, m) = unsafe { (deref(pi, "pi")?, deref(model, "model")?) };
        let _ = unsafe { deref(out.cast_const(), "out") }?;
        let c = lib(lace_constants(&f.0, &m.0, sigma2))?;
        // SAFETY: checked non-null above.
        unsafe {
            *out = SpcpLaceConstants {
                residual: c.residual,
                lambda_c_eps: c.lambda_c_eps,
                a_eps: c.a_eps,
                v_eps: c.v_eps,
                denominator_margin: c.denominator_margin,
            }
        };
        Ok(())
    })
}

/// Truncated triangle sum of a `tau` field.
///
/// # Safety
/// `tau` must be valid and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn spcp_triangle(tau: *const SpcpField, value: *mut f64) -> SpcpStatus {
    guard(|| {
        let f = unsafe { deref(tau, "tau") }?;
        let _ = unsafe { deref(value.cast_const(), "value") }?;
        let t = lib(triangle_estimate(&f.0))?;
        // SAFETY: checked non-null above.
        unsafe { *value = t.value };
        Ok(())
    })
}

/// `eps sum_n tau^_n(0)` over the horizon.
///
/// # Safety
/// `tau` must be valid and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn spcp_susceptibility(tau: *const SpcpField, value: *mut f64) -> SpcpStatus {
    guard(|| {
        let f = unsafe { deref(tau, "tau") }?;
        let _ = unsafe { deref(value.cast_const(), "value") }?;
        // SAFETY: checked non-null above.
        unsafe { *value = susceptibility(&f.0) };
        Ok(())
    })
}

/// Runs a TOML experiment config into `out_dir`, using the store named by
/// `SPREADCP_STORE`.
///
/// # Safety
/// Both arguments must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn spcp_run_config(config: *const c_char, out_dir: *const c_char) -> SpcpStatus {
    guard(|| {
        let (cfg, out) = unsafe { (path_arg(config, "config")?, path_arg(out_dir, "out_dir")?) };
        let c = lib(ExperimentConfig::load(cfg))?;
        lib(run_experiment(&c, Some(out), &Store::from_env()))?;
        Ok(())
    })
}
