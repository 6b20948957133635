//! C ABI over the wallx engine. Handles are opaque; every call returns a
//! [`WallxStatus`] and writes results through out-pointers. Strings handed
//! out must be released with [`wallx_string_free`].

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use wallx::dtstore::{DtError, DtTable, Source};
use wallx::rational::fmt_q;
use wallx::wallcross::{Engine, Mode, WallcrossError, WindowConfig};
use wallx::P2Class;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotAvailable = 3,
    WindowOverflow = 4,
    Integrality = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallxMode {
    Behrend = 0,
    Euler = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallxSource {
    Bogomolov = 0,
    Builtin = 1,
    Series = 2,
    Rankzero = 3,
    User = 4,
}

/// Opaque engine handle.
pub struct WallxEngine {
    engine: Engine,
}

fn status_of(e: &WallcrossError) -> WallxStatus {
    match e {
        WallcrossError::Dt(d) => match **d {
            DtError::NotAvailable(_) | DtError::MissingPairValue { .. } => {
                WallxStatus::NotAvailable
            }
            DtError::ZeroClass | DtError::Load(_) | DtError::Conflict { .. } => {
                WallxStatus::InvalidArgument
            }
            _ => WallxStatus::Internal,
        },
        WallcrossError::WindowOverflow { .. } => WallxStatus::WindowOverflow,
        WallcrossError::ParityViolation(_)
        | WallcrossError::Lattice(_)
        | WallcrossError::SupportViolation { .. } => WallxStatus::Integrality,
        WallcrossError::Invalid(_) | WallcrossError::Parse(_) => WallxStatus::InvalidArgument,
    }
}

fn guarded(f: impl FnOnce() -> WallxStatus) -> WallxStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(WallxStatus::Internal)
}

fn give_string(s: String, out: *mut *mut c_char) {
    // rationals never contain NUL
    let c = CString::new(s).expect("no interior NUL");
    unsafe { *out = c.into_raw() };
}

/// Creates an engine. Negative window arguments select the defaults.
/// `dt_json` may be null or a JSON array of `{"r", "c", "m2", "value"}`.
///
/// # Safety
/// `dt_json` must be null or a valid NUL-terminated string; `out` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wallx_engine_new(
    m_window: i64,
    r_window: i64,
    n_pad: i64,
    dt_json: *const c_char,
    out: *mut *mut WallxEngine,
) -> WallxStatus {
    guarded(|| {
        if out.is_null() {
            return WallxStatus::NullPointer;
        }
        let mut w = WindowConfig::default();
        if m_window >= 0 {
            w.m_window = m_window;
        }
        if r_window >= 0 {
            w.r_window = r_window;
        }
        if n_pad >= 0 {
            w.n_pad = n_pad;
        }
        let mut dt = DtTable::new();
        if !dt_json.is_null() {
            let Ok(text) = CStr::from_ptr(dt_json).to_str() else {
                return WallxStatus::InvalidArgument;
            };
            if let Err(e) = dt.load_user_json(text) {
                return status_of(&e.into());
            }
        }
        dt.freeze();
        match Engine::new(dt, w) {
            Ok(engine) => {
                *out = Box::into_raw(Box::new(WallxEngine { engine }));
                WallxStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// # Safety
/// `engine` must be null or a handle from [`wallx_engine_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wallx_engine_free(engine: *mut WallxEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// `P_{n, c[l]}` as a decimal rational string such as `-21/4`.
///
/// # Safety
/// `engine` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wallx_pair(
    engine: *const WallxEngine,
    mode: WallxMode,
    c: i64,
    n: i64,
    out: *mut *mut c_char,
) -> WallxStatus {
    guarded(|| {
        if engine.is_null() || out.is_null() {
            return WallxStatus::NullPointer;
        }
        let mode = match mode {
            WallxMode::Behrend => Mode::Behrend,
            WallxMode::Euler => Mode::Euler,
        };
        match (*engine).engine.pair(mode, c, n) {
            Ok(v) => {
                give_string(fmt_q(&v), out);
                WallxStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// `DT(r, c, m2/2)` as a rational string, with its source.
///
/// # Safety
/// `engine` must be a live handle; `out` and `source` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn wallx_dt(
    engine: *const WallxEngine,
    r: i64,
    c: i64,
    m2: i64,
    out: *mut *mut c_char,
    source: *mut WallxSource,
) -> WallxStatus {
    guarded(|| {
        if engine.is_null() || out.is_null() || source.is_null() {
            return WallxStatus::NullPointer;
        }
        let Ok(cls) = P2Class::new(r, c, m2) else {
            return WallxStatus::InvalidArgument;
        };
        match (*engine).engine.dt(&cls) {
            Ok((v, src)) => {
                give_string(fmt_q(&v), out);
                *source = match src {
                    Source::Bogomolov => WallxSource::Bogomolov,
                    Source::Builtin => WallxSource::Builtin,
                    Source::Series => WallxSource::Series,
                    Source::Rankzero => WallxSource::Rankzero,
                    Source::User => WallxSource::User,
                };
                WallxStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn wallx_status_message(status: WallxStatus) -> *const c_char {
    let s: &'static CStr = match status {
        WallxStatus::Ok => c"ok",
        WallxStatus::NullPointer => c"null pointer argument",
        WallxStatus::InvalidArgument => c"invalid argument",
        WallxStatus::NotAvailable => c"DT value not available",
        WallxStatus::WindowOverflow => c"enumeration window overflow",
        WallxStatus::Integrality => c"integrality check failed",
        WallxStatus::Internal => c"internal error",
    };
    s.as_ptr()
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn wallx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
