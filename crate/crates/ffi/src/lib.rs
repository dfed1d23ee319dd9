//! C ABI over the voltsim core: opaque handles, status codes, and a
//! thread-local channel carrying the last error message.
//!
//! Ownership rules: `*_new`/`*_generate`/`*_import` hand back a pointer the
//! caller must release with the matching `*_free`. Output parameters are
//! written only when the call returns `VOLTSIM_STATUS_OK`. All functions
//! are safe to call from multiple threads as long as each handle is used
//! from one thread at a time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use voltsim::fvm::FaultVariationMap;
use voltsim::profile::{self, PlatformProfile};
use voltsim::secded::{decode72, encode64, Codeword72, DecodeOutcome};
use voltsim::power::PowerCurve;
use voltsim::Error;

/// Result discriminant returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoltsimStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A value argument failed validation; see `voltsim_last_error`.
    InvalidArgument = 2,
    /// Filesystem failure.
    Io = 3,
    /// A file exists but could not be parsed.
    Parse = 4,
    /// Requested voltage is below the crash boundary.
    CrashRegion = 5,
    /// A resource pool is too small for the request.
    Capacity = 6,
    /// Unexpected internal failure.
    Internal = 7,
}

/// Outcome of decoding one 72-bit SECDED word.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoltsimDecode {
    /// Valid codeword; data returned unchanged.
    Clean = 0,
    /// One data or check bit was flipped and has been corrected.
    Corrected = 1,
    /// Only the overall parity bit was flipped; data untouched.
    ParityCorrected = 2,
    /// Uncorrectable double error detected; data is unreliable.
    DoubleDetected = 3,
}

/// Opaque platform description handle.
pub struct VoltsimProfile(PlatformProfile);

/// Opaque fault-variation map handle.
pub struct VoltsimFvm(FaultVariationMap);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn fail(e: &Error) -> VoltsimStatus {
    set_error(e.to_string());
    match e {
        Error::Io { .. } => VoltsimStatus::Io,
        Error::Parse { .. } | Error::VersionMismatch { .. } => VoltsimStatus::Parse,
        Error::CrashRegion { .. } => VoltsimStatus::CrashRegion,
        Error::CapacityExceeded { .. } => VoltsimStatus::Capacity,
        Error::UnknownProfile { .. }
        | Error::InvalidConfig { .. }
        | Error::VoltageRange { .. }
        | Error::GridMismatch { .. }
        | Error::Geometry { .. } => VoltsimStatus::InvalidArgument,
    }
}

fn guarded(f: impl FnOnce() -> VoltsimStatus) -> VoltsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".into());
            VoltsimStatus::Internal
        }
    }
}

/// # Safety
/// `text` must be a valid NUL-terminated string or null.
unsafe fn cstr<'a>(text: *const c_char) -> Option<&'a str> {
    if text.is_null() {
        return None;
    }
    CStr::from_ptr(text).to_str().ok()
}

/// Copies the last error message into `buf` (NUL-terminated, truncated to
/// `cap` bytes) and returns the full message length in bytes. With a null
/// or empty buffer it only reports the length.
///
/// # Safety
/// `buf` must point to at least `cap` writable bytes, or be null.
#[no_mangle]
pub unsafe extern "C" fn voltsim_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Resolves a built-in platform (`"vc707"`, `"kc705"`) or a profile JSON
/// path into a new handle.
///
/// # Safety
/// `name` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn voltsim_profile_new(
    name: *const c_char,
    out: *mut *mut VoltsimProfile,
) -> VoltsimStatus {
    guarded(|| {
        let Some(name) = cstr(name) else {
            set_error("profile name is null or not UTF-8".into());
            return VoltsimStatus::NullArgument;
        };
        if out.is_null() {
            set_error("output pointer is null".into());
            return VoltsimStatus::NullArgument;
        }
        match profile::resolve(name) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(VoltsimProfile(p)));
                VoltsimStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// # Safety
/// `p` must come from `voltsim_profile_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn voltsim_profile_free(p: *mut VoltsimProfile) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of BRAM tiles on the platform; 0 for a null handle.
///
/// # Safety
/// `p` must be a live profile handle or null.
#[no_mangle]
pub unsafe extern "C" fn voltsim_profile_num_brams(p: *const VoltsimProfile) -> u32 {
    if p.is_null() {
        return 0;
    }
    (*p).0.num_brams
}

/// Expected chip-wide fault rate in faults per Mbit at one voltage level.
///
/// # Safety
/// `p` must be a live profile handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn voltsim_expected_rate(
    p: *const VoltsimProfile,
    voltage_mv: u32,
    temp_c: f64,
    chip_scale: f64,
    out: *mut f64,
) -> VoltsimStatus {
    guarded(|| {
        if p.is_null() || out.is_null() {
            set_error("profile or output pointer is null".into());
            return VoltsimStatus::NullArgument;
        }
        match (*p).0.expected_rate(voltage_mv, temp_c, chip_scale) {
            Ok(rate) => {
                *out = rate;
                VoltsimStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Synthesizes a fault-variation map for the chip `(profile, chip_seed)`.
///
/// # Safety
/// `p` must be a live profile handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn voltsim_fvm_generate(
    p: *const VoltsimProfile,
    chip_seed: u64,
    chip_scale: f64,
    out: *mut *mut VoltsimFvm,
) -> VoltsimStatus {
    guarded(|| {
        if p.is_null() || out.is_null() {
            set_error("profile or output pointer is null".into());
            return VoltsimStatus::NullArgument;
        }
        match FaultVariationMap::generate(&(*p).0, chip_seed, chip_scale) {
            Ok(fvm) => {
                *out = Box::into_raw(Box::new(VoltsimFvm(fvm)));
                VoltsimStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Loads a serialized map. `profile` may be null, in which case the file's
/// stored profile name must resolve to a built-in platform.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `profile` a live handle
/// or null; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn voltsim_fvm_import(
    path: *const c_char,
    profile: *const VoltsimProfile,
    out: *mut *mut VoltsimFvm,
) -> VoltsimStatus {
    guarded(|| {
        let Some(path) = cstr(path) else {
            set_error("path is null or not UTF-8".into());
            return VoltsimStatus::NullArgument;
        };
        if out.is_null() {
            set_error("output pointer is null".into());
            return VoltsimStatus::NullArgument;
        }
        let p = if profile.is_null() { None } else { Some(&(*profile).0) };
        match FaultVariationMap::from_json_file(Path::new(path), p) {
            Ok(fvm) => {
                *out = Box::into_raw(Box::new(VoltsimFvm(fvm)));
                VoltsimStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Writes the canonical JSON form of the map.
///
/// # Safety
/// `fvm` must be a live map handle; `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn voltsim_fvm_export(
    fvm: *const VoltsimFvm,
    path: *const c_char,
) -> VoltsimStatus {
    guarded(|| {
        if fvm.is_null() {
            set_error("map handle is null".into());
            return VoltsimStatus::NullArgument;
        }
        let Some(path) = cstr(path) else {
            set_error("path is null or not UTF-8".into());
            return VoltsimStatus::NullArgument;
        };
        match (*fvm).0.to_json_file(Path::new(path)) {
            Ok(()) => VoltsimStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// # Safety
/// `fvm` must come from a generate or import call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn voltsim_fvm_free(fvm: *mut VoltsimFvm) {
    if !fvm.is_null() {
        drop(Box::from_raw(fvm));
    }
}

/// Fault cells whose onset lies at or above `voltage_mv` on the exact
/// grid, before run-to-run jitter.
///
/// # Safety
/// `fvm` must be a live map handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn voltsim_fvm_cell_count(
    fvm: *const VoltsimFvm,
    voltage_mv: u32,
    out: *mut u64,
) -> VoltsimStatus {
    guarded(|| {
        if fvm.is_null() || out.is_null() {
            set_error("map or output pointer is null".into());
            return VoltsimStatus::NullArgument;
        }
        *out = (*fvm).0.cells_at(voltage_mv);
        VoltsimStatus::Ok
    })
}

/// Active fault cells in one realized run at the given conditions.
///
/// # Safety
/// `fvm` must be a live map handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn voltsim_fvm_realize_count(
    fvm: *const VoltsimFvm,
    voltage_mv: u32,
    temp_c: f64,
    run_seed: u64,
    out: *mut u64,
) -> VoltsimStatus {
    guarded(|| {
        if fvm.is_null() || out.is_null() {
            set_error("map or output pointer is null".into());
            return VoltsimStatus::NullArgument;
        }
        match (*fvm).0.realize(voltage_mv, temp_c, run_seed) {
            Ok(mask) => {
                *out = mask.len() as u64;
                VoltsimStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Check byte (seven Hamming bits plus overall parity) for a 64-bit word.
#[no_mangle]
pub extern "C" fn voltsim_secded_encode(data: u64) -> u8 {
    encode64(data).parity
}

/// Decodes a received 72-bit word. When `corrected` is non-null it
/// receives the post-correction data (unchanged data for double errors).
///
/// # Safety
/// `corrected` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn voltsim_secded_decode(
    data: u64,
    parity: u8,
    corrected: *mut u64,
) -> VoltsimDecode {
    let decoded = decode72(Codeword72 { data, parity });
    if !corrected.is_null() {
        *corrected = decoded.data;
    }
    match decoded.outcome {
        DecodeOutcome::NoError => VoltsimDecode::Clean,
        DecodeOutcome::CorrectedSingle { .. } => VoltsimDecode::Corrected,
        DecodeOutcome::ParityBitCorrected => VoltsimDecode::ParityCorrected,
        DecodeOutcome::DoubleDetected => VoltsimDecode::DoubleDetected,
    }
}

/// BRAM subsystem power draw in watts at one voltage level.
///
/// # Safety
/// `p` must be a live profile handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn voltsim_power_watts(
    p: *const VoltsimProfile,
    voltage_mv: u32,
    ecc: bool,
    out: *mut f64,
) -> VoltsimStatus {
    guarded(|| {
        if p.is_null() || out.is_null() {
            set_error("profile or output pointer is null".into());
            return VoltsimStatus::NullArgument;
        }
        let curve = match PowerCurve::from_profile(&(*p).0) {
            Ok(c) => c,
            Err(e) => return fail(&e),
        };
        match curve.eval(voltage_mv, ecc, 1.0) {
            Ok(est) => {
                *out = est.watts;
                VoltsimStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}
