//! C interface to `noonsim`.
//!
//! Every fallible function returns a [`NoonsimStatus`] and writes results
//! through out-pointers. After a failure, [`noonsim_last_error`] describes it;
//! the message is per thread and cleared by the next successful call.
//! Strings returned by this library are owned by the caller and must be
//! released with [`noonsim_string_free`]; handles are released with their
//! matching `_free` function.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use noonsim::analytics::{asymptotic_fidelity, delta0_of, p_cond};
use noonsim::dsl::{self, InterpretMode, Program};
use noonsim::generator::{run_generator, summarize, GeneratorConfig};
use noonsim::state::noon_fidelity;
use noonsim::{Error, StateVector};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoonsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    ParseError = 4,
    RuntimeError = 5,
    Panic = 6,
}

/// Opaque state vector.
pub struct NoonsimState {
    inner: StateVector,
}

/// Opaque parsed program.
pub struct NoonsimProgram {
    inner: Program,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(NoonsimStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Parse(_) | Error::Json(_) => NoonsimStatus::ParseError,
            Error::Contract { .. } | Error::ModeMismatch { .. } | Error::OutOfModeledRange { .. } => {
                NoonsimStatus::InvalidArgument
            }
            _ => NoonsimStatus::RuntimeError,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(NoonsimStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> NoonsimStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NoonsimStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            NoonsimStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(NoonsimStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(NoonsimStatus::RuntimeError, "string contains NUL".into()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn noonsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Why the most recent call on this thread failed, or NULL if it succeeded.
/// Free with `noonsim_string_free`.
#[no_mangle]
pub extern "C" fn noonsim_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn noonsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates `|N,N⟩`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noonsim_state_dual_fock(n: u32, out: *mut *mut NoonsimState) -> NoonsimStatus {
    guard(|| {
        let state = Box::new(NoonsimState {
            inner: StateVector::dual_fock(n),
        });
        write_out(out, Box::into_raw(state), "out")
    })
}

/// Parses a state from its JSON form
/// (`{"modes": M, "terms": [{"occ": [...], "re": x, "im": y}, ...]}`).
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noonsim_state_from_json(json: *const c_char, out: *mut *mut NoonsimState) -> NoonsimStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let state = StateVector::from_json(text)?;
        write_out(out, Box::into_raw(Box::new(NoonsimState { inner: state })), "out")
    })
}

/// Serializes a state to JSON. Free the result with `noonsim_string_free`.
///
/// # Safety
/// `state` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noonsim_state_to_json(state: *const NoonsimState, out: *mut *mut c_char) -> NoonsimStatus {
    guard(|| {
        let state = state.as_ref().ok_or_else(|| null("state"))?;
        write_out(out, to_c_string(state.inner.to_json())?, "out")
    })
}

/// # Safety
/// `state` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noonsim_state_mode_count(state: *const NoonsimState, out: *mut usize) -> NoonsimStatus {
    guard(|| {
        let state = state.as_ref().ok_or_else(|| null("state"))?;
        write_out(out, state.inner.mode_count(), "out")
    })
}

/// Releases a state handle. NULL is ignored.
///
/// # Safety
/// `state` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn noonsim_state_free(state: *mut NoonsimState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Fidelity of a two-mode state with the closest N00N state, and the phase
/// `φ` of `|S,0⟩ + e^{iφ}|0,S⟩` attaining it.
///
/// # Safety
/// `state` must be a live handle; `fidelity` and `phase` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn noonsim_noon_fidelity(
    state: *const NoonsimState,
    fidelity: *mut f64,
    phase: *mut f64,
) -> NoonsimStatus {
    guard(|| {
        let state = state.as_ref().ok_or_else(|| null("state"))?;
        if fidelity.is_null() || phase.is_null() {
            return Err(null("output pointer"));
        }
        let report = noon_fidelity(&state.inner)?;
        write_out(fidelity, report.fidelity, "fidelity")?;
        write_out(phase, report.optimal_phase, "phase")
    })
}

/// Parses and validates `.qoc` source. On a parse error the message
/// (with line and column) is available from `noonsim_last_error`.
///
/// # Safety
/// `source` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noonsim_program_parse(source: *const c_char, out: *mut *mut NoonsimProgram) -> NoonsimStatus {
    guard(|| {
        let text = read_str(source, "source")?;
        let program = dsl::parse(text).map_err(Error::from)?;
        write_out(out, Box::into_raw(Box::new(NoonsimProgram { inner: program })), "out")
    })
}

/// Source of a bundled program by file name (e.g. `"pipeline.qoc"`), or NULL.
/// The string is static and must not be freed.
///
/// # Safety
/// `name` must be NUL-terminated or NULL.
#[no_mangle]
pub unsafe extern "C" fn noonsim_bundled_program(name: *const c_char) -> *const c_char {
    static SOURCES: std::sync::OnceLock<Vec<(&'static str, CString)>> = std::sync::OnceLock::new();
    let Ok(name) = read_str(name, "name") else {
        return ptr::null();
    };
    let sources = SOURCES.get_or_init(|| {
        dsl::BUNDLED
            .iter()
            .map(|(n, src)| (*n, CString::new(*src).expect("no NUL in bundled source")))
            .collect()
    });
    sources
        .iter()
        .find(|(n, _)| *n == name)
        .map_or(ptr::null(), |(_, s)| s.as_ptr())
}

/// Releases a program handle. NULL is ignored.
///
/// # Safety
/// `program` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn noonsim_program_free(program: *mut NoonsimProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Runs a program on a state, following every detection outcome.
///
/// `params_json` is a JSON object of parameter values (`{"f": 0.5}`) or NULL.
/// The result is a JSON array of branches with fields `registers`,
/// `probability`, `discarded` and `state`.
///
/// # Safety
/// Handles must be live; strings NUL-terminated or NULL where allowed;
/// `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noonsim_program_run(
    program: *const NoonsimProgram,
    input: *const NoonsimState,
    params_json: *const c_char,
    out_json: *mut *mut c_char,
) -> NoonsimStatus {
    guard(|| {
        let program = program.as_ref().ok_or_else(|| null("program"))?;
        let input = input.as_ref().ok_or_else(|| null("input"))?;
        let params: BTreeMap<String, f64> = if params_json.is_null() {
            BTreeMap::new()
        } else {
            serde_json::from_str(read_str(params_json, "params_json")?).map_err(Error::from)?
        };
        let branches = dsl::interpret(&program.inner, &input.inner, &params, InterpretMode::Exhaustive)?;
        let records = branches
            .iter()
            .map(|b| {
                Ok(serde_json::json!({
                    "registers": b.registers,
                    "probability": b.probability,
                    "discarded": b.discarded,
                    "state": b.reduced_state()?,
                }))
            })
            .collect::<Result<Vec<_>, Error>>()?;
        let text = serde_json::to_string(&records).map_err(Error::from)?;
        write_out(out_json, to_c_string(text)?, "out_json")
    })
}

/// Exhaustive generator run summarized as JSON. `p_min = 0` selects the
/// default minimum output size.
///
/// # Safety
/// `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noonsim_generate_summary(n: u32, f: f64, p_min: u32, out_json: *mut *mut c_char) -> NoonsimStatus {
    guard(|| {
        let mut config = GeneratorConfig::new(n, f)?;
        if p_min > 0 {
            config = config.with_p_min(p_min);
            config.validate()?;
        }
        let outcomes = run_generator(&config)?;
        let text = serde_json::to_string(&summarize(&config, &outcomes)).map_err(Error::from)?;
        write_out(out_json, to_c_string(text)?, "out_json")
    })
}

/// Closed-form condensation probability.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noonsim_p_cond(n: u32, r: u32, out: *mut f64) -> NoonsimStatus {
    guard(|| write_out(out, p_cond(n, r)?, "out"))
}

/// Localized relative phase for detector counts `(l, r)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noonsim_delta0(l: u32, r: u32, out: *mut f64) -> NoonsimStatus {
    guard(|| write_out(out, delta0_of(l, r)?, "out"))
}

/// Large-N cat fidelity for a ratio of detected to remaining photons.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noonsim_asymptotic_fidelity(ratio: f64, out: *mut f64) -> NoonsimStatus {
    guard(|| write_out(out, asymptotic_fidelity(ratio)?, "out"))
}
