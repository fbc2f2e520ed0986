//! C ABI over the `stimqkd` simulation library.
//!
//! Every fallible function returns an [`SqStatus`] and writes its result through an
//! out-pointer. On failure a message is kept per thread and can be read with
//! [`sq_last_error`]. Objects cross the boundary as opaque handles that must be released
//! with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stimqkd::harness::{sweep, Preset, ScenarioConfig, Scheme, SweepOutput};
use stimqkd::{Error, MubSet};

/// Result codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidDimension = 3,
    Grid = 4,
    Numerical = 5,
    Config = 6,
    Io = 7,
    OutOfRange = 8,
    Panic = 9,
}

/// Scheme selector for sweep rows.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqScheme {
    PrepareMeasure = 0,
    Stimulated = 1,
}

/// Built-in configuration presets.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqPreset {
    Desk = 0,
    Full = 1,
}

/// One aggregated point of a sweep.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SqRow {
    pub scheme: u32,
    pub dimension: u32,
    pub d_over_r0: f64,
    pub qer: f64,
    pub qer_se: f64,
    pub key_rate: f64,
    pub key_rate_se: f64,
    pub fidelity_loss: f64,
    pub fidelity_loss_se: f64,
    pub q_max: f64,
    pub realizations: u32,
}

/// Opaque pair of mutually unbiased coefficient bases.
pub struct SqMub(MubSet);

/// Opaque scenario configuration.
pub struct SqConfig(ScenarioConfig);

/// Opaque sweep result.
pub struct SqSweep(SweepOutput);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> SqStatus {
    match err {
        Error::InvalidDimension(_) | Error::NoUnbiasedPair(_) => SqStatus::InvalidDimension,
        Error::GridUndersampled { .. } | Error::InvalidGrid(_) | Error::MismatchedGrid | Error::WindowOverflow { .. } => {
            SqStatus::Grid
        }
        Error::Config(_) => SqStatus::Config,
        Error::Io(_) => SqStatus::Io,
        Error::InvalidSpec(_)
        | Error::InvalidParameter(_)
        | Error::DimensionMismatch(_)
        | Error::QerDomain(_)
        | Error::DiscTooSmall { .. }
        | Error::InsufficientSamples { .. } => SqStatus::InvalidArgument,
        _ => SqStatus::Numerical,
    }
}

/// Runs `body`, converting errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), (SqStatus, String)>) -> SqStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            SqStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {message}"));
            SqStatus::Panic
        }
    }
}

fn lib<T>(r: stimqkd::Result<T>) -> Result<T, (SqStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn fail<T>(status: SqStatus, message: &str) -> Result<T, (SqStatus, String)> {
    Err((status, message.to_string()))
}

/// Writes `value` through `out`, which has already been checked for null.
fn put<T>(out: *mut T, value: T) -> Result<(), (SqStatus, String)> {
    // SAFETY: callers reject null pointers before reaching this point.
    unsafe { out.write(value) };
    Ok(())
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), (SqStatus, String)> {
    if p.is_null() {
        fail(SqStatus::NullPointer, &format!("{name} is null"))
    } else {
        Ok(())
    }
}

/// Message describing the most recent failure on this thread, or null.
///
/// The pointer stays valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn sq_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Largest error rate with a positive key rate in dimension `d`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sq_q_max(d: u32, out: *mut f64) -> SqStatus {
    guard(|| {
        non_null(out, "out")?;
        put(out, lib(stimqkd::q_max(d as usize))?)
    })
}

/// Secure key rate in bits per sifted photon.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sq_secure_key_rate(d: u32, qer: f64, out: *mut f64) -> SqStatus {
    guard(|| {
        non_null(out, "out")?;
        put(out, lib(stimqkd::secure_key_rate(d as usize, qer))?)
    })
}

/// Plane-wave Rytov variance.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sq_rytov_variance(cn2: f64, wavelength: f64, path_length: f64, out: *mut f64) -> SqStatus {
    guard(|| {
        non_null(out, "out")?;
        put(out, lib(stimqkd::rytov_variance(cn2, wavelength, path_length))?)
    })
}

/// Fried parameter in metres.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sq_fried_parameter(cn2: f64, wavelength: f64, path_length: f64, out: *mut f64) -> SqStatus {
    guard(|| {
        non_null(out, "out")?;
        put(out, lib(stimqkd::fried_parameter(cn2, wavelength, path_length))?)
    })
}

/// Probe waist that matches idler and probe diameters at the receiver.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sq_optimize_probe_waist(
    path_length: f64,
    gamma: f64,
    wavelength: f64,
    l_max: u32,
    out: *mut f64,
) -> SqStatus {
    guard(|| {
        non_null(out, "out")?;
        put(out, lib(stimqkd::optimize_probe_waist(path_length, gamma, wavelength, l_max))?)
    })
}

/// Builds the certified pair of unbiased bases for dimension `d`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sq_mub_new(d: u32, out: *mut *mut SqMub) -> SqStatus {
    guard(|| {
        non_null(out, "out")?;
        let set = lib(stimqkd::build_mub_pair(d as usize))?;
        put(out, Box::into_raw(Box::new(SqMub(set))))
    })
}

/// Dimension of the bases, or 0 for a null handle.
///
/// # Safety
/// `mub` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sq_mub_dimension(mub: *const SqMub) -> u32 {
    unsafe { mub.as_ref() }.map_or(0, |m| m.0.d as u32)
}

/// Copies the OAM charges indexing the coefficients into `out[0..d]`.
///
/// # Safety
/// `mub` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sq_mub_oam_range(mub: *const SqMub, out: *mut i32, len: usize) -> SqStatus {
    guard(|| {
        non_null(mub, "mub")?;
        non_null(out, "out")?;
        let set = &unsafe { &*mub }.0;
        if len < set.d {
            return fail(SqStatus::OutOfRange, "output buffer shorter than the dimension");
        }
        // SAFETY: `out` holds at least `len >= d` elements.
        let dst = unsafe { std::slice::from_raw_parts_mut(out, set.d) };
        dst.copy_from_slice(&set.oam_range);
        Ok(())
    })
}

/// Copies vector `index` of basis `basis` into split real and imaginary buffers.
///
/// # Safety
/// `mub` must be a live handle; `re` and `im` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sq_mub_vector(
    mub: *const SqMub,
    basis: u32,
    index: u32,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> SqStatus {
    guard(|| {
        non_null(mub, "mub")?;
        non_null(re, "re")?;
        non_null(im, "im")?;
        let set = &unsafe { &*mub }.0;
        let Some(b) = set.bases.get(basis as usize) else {
            return fail(SqStatus::OutOfRange, "basis index out of range");
        };
        if index as usize >= set.d || len < set.d {
            return fail(SqStatus::OutOfRange, "vector index or buffer length out of range");
        }
        for (k, c) in b.vector(index as usize).into_iter().enumerate() {
            // SAFETY: k < d <= len.
            unsafe {
                re.add(k).write(c.re);
                im.add(k).write(c.im);
            }
        }
        Ok(())
    })
}

/// Checks orthonormality and unbiasedness to `tol`; writes 1 on success, 0 otherwise.
///
/// # Safety
/// `mub` must be a live handle and `passed` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sq_mub_verify(mub: *const SqMub, tol: f64, passed: *mut i32) -> SqStatus {
    guard(|| {
        non_null(mub, "mub")?;
        non_null(passed, "passed")?;
        let report = stimqkd::verify_mub(&unsafe { &*mub }.0, tol);
        put(passed, i32::from(report.passed))
    })
}

/// Releases a basis handle. Null is ignored.
///
/// # Safety
/// `mub` must come from [`sq_mub_new`] and must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sq_mub_free(mub: *mut SqMub) {
    if !mub.is_null() {
        drop(unsafe { Box::from_raw(mub) });
    }
}

/// Creates a configuration from a preset.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sq_config_preset(preset: SqPreset, out: *mut *mut SqConfig) -> SqStatus {
    guard(|| {
        non_null(out, "out")?;
        let p = match preset {
            SqPreset::Desk => Preset::Desk,
            SqPreset::Full => Preset::Full,
        };
        put(out, Box::into_raw(Box::new(SqConfig(ScenarioConfig::preset(p)))))
    })
}

/// Parses and validates a TOML configuration.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sq_config_from_toml(toml: *const c_char, out: *mut *mut SqConfig) -> SqStatus {
    guard(|| {
        non_null(toml, "toml")?;
        non_null(out, "out")?;
        let Ok(text) = unsafe { CStr::from_ptr(toml) }.to_str() else {
            return fail(SqStatus::InvalidArgument, "configuration is not valid UTF-8");
        };
        let cfg = lib(ScenarioConfig::from_toml_str(text))?;
        put(out, Box::into_raw(Box::new(SqConfig(cfg))))
    })
}

/// Serializes a configuration to TOML. Free the result with [`sq_string_free`].
///
/// # Safety
/// `config` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sq_config_to_toml(config: *const SqConfig, out: *mut *mut c_char) -> SqStatus {
    guard(|| {
        non_null(config, "config")?;
        non_null(out, "out")?;
        let text = lib(unsafe { &*config }.0.to_toml_string())?;
        put(out, CString::new(text).map_err(|e| (SqStatus::Numerical, e.to_string()))?.into_raw())
    })
}

/// Overrides the number of channel realizations per point.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sq_config_set_realizations(config: *mut SqConfig, realizations: u32) -> SqStatus {
    guard(|| {
        non_null(config, "config")?;
        let cfg = &mut unsafe { &mut *config }.0;
        let previous = cfg.realizations;
        cfg.realizations = realizations as usize;
        if let Err(e) = cfg.validate() {
            cfg.realizations = previous;
            return lib(Err(e));
        }
        Ok(())
    })
}

/// Overrides the master seed.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sq_config_set_seed(config: *mut SqConfig, seed: u64) -> SqStatus {
    guard(|| {
        non_null(config, "config")?;
        unsafe { &mut *config }.0.master_seed = seed;
        Ok(())
    })
}

/// Releases a configuration handle. Null is ignored.
///
/// # Safety
/// `config` must come from this library and must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sq_config_free(config: *mut SqConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Runs every point of the configured sweep.
///
/// # Safety
/// `config` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sq_sweep_run(config: *const SqConfig, out: *mut *mut SqSweep) -> SqStatus {
    guard(|| {
        non_null(config, "config")?;
        non_null(out, "out")?;
        let result = lib(sweep(&unsafe { &*config }.0))?;
        put(out, Box::into_raw(Box::new(SqSweep(result))))
    })
}

/// Number of successful points, or 0 for a null handle.
///
/// # Safety
/// `sweep` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sq_sweep_row_count(sweep: *const SqSweep) -> usize {
    unsafe { sweep.as_ref() }.map_or(0, |s| s.0.rows.len())
}

/// Number of points that failed, or 0 for a null handle.
///
/// # Safety
/// `sweep` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sq_sweep_failure_count(sweep: *const SqSweep) -> usize {
    unsafe { sweep.as_ref() }.map_or(0, |s| s.0.failures.len())
}

/// Copies point `index` into `out`.
///
/// # Safety
/// `sweep` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sq_sweep_row(sweep: *const SqSweep, index: usize, out: *mut SqRow) -> SqStatus {
    guard(|| {
        non_null(sweep, "sweep")?;
        non_null(out, "out")?;
        let Some(row) = unsafe { &*sweep }.0.rows.get(index) else {
            return fail(SqStatus::OutOfRange, "row index out of range");
        };
        let r = &row.result;
        put(
            out,
            SqRow {
                scheme: match row.scheme {
                    Scheme::Pm => SqScheme::PrepareMeasure as u32,
                    Scheme::Stimpdc => SqScheme::Stimulated as u32,
                },
                dimension: row.d as u32,
                d_over_r0: row.d_over_r0,
                qer: r.qer.mean,
                qer_se: r.qer.se,
                key_rate: r.key_rate.mean,
                key_rate_se: r.key_rate.se,
                fidelity_loss: r.fidelity_loss.mean,
                fidelity_loss_se: r.fidelity_loss.se,
                q_max: row.q_max,
                realizations: r.realizations as u32,
            },
        )
    })
}

/// Renders the sweep as CSV. Free the result with [`sq_string_free`].
///
/// # Safety
/// `sweep` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sq_sweep_csv(sweep: *const SqSweep, out: *mut *mut c_char) -> SqStatus {
    guard(|| {
        non_null(sweep, "sweep")?;
        non_null(out, "out")?;
        let csv = unsafe { &*sweep }.0.csv();
        put(out, CString::new(csv).map_err(|e| (SqStatus::Numerical, e.to_string()))?.into_raw())
    })
}

/// Releases a sweep handle. Null is ignored.
///
/// # Safety
/// `sweep` must come from [`sq_sweep_run`] and must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sq_sweep_free(sweep: *mut SqSweep) {
    if !sweep.is_null() {
        drop(unsafe { Box::from_raw(sweep) });
    }
}
