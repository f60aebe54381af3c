//! C ABI for the flowlat analyzer.
//!
//! Lattices, programs and environments are opaque handles created by
//! `flowlat_*_parse`/`flowlat_lattice_*` and released by the matching
//! `*_free`. Every fallible call returns a [`FlowlatStatus`]; on failure the
//! message is available from [`flowlat_last_error`] on the same thread.
//! Strings returned through `char **` out-parameters are owned by the caller
//! and released with [`flowlat_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use flowlat::formats;
use flowlat::harness::{self, HarnessConfig, Verdict};
use flowlat::lang::{parse_program_with, Command};
use flowlat::principal;
use flowlat::transform;
use flowlat::{Elem, Error, Lattice, TypeEnv};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowlatStatus {
    /// Success; for decisions, the property holds.
    Ok = 0,
    /// The judgement, check, or test does not hold.
    False = 1,
    NullArgument = 2,
    InvalidUtf8 = 3,
    ParseError = 4,
    LatticeError = 5,
    TypeError = 6,
    HarnessError = 7,
    Panic = 8,
}

pub struct FlowlatLattice {
    inner: Arc<Lattice>,
}

pub struct FlowlatProgram {
    inner: Command,
}

pub struct FlowlatEnv {
    inner: TypeEnv,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> FlowlatStatus {
    match e {
        Error::Syntax { .. }
        | Error::UnknownOperator { .. }
        | Error::MalformedFixedIndex { .. }
        | Error::FixedNotAllowed { .. }
        | Error::Format { .. } => FlowlatStatus::ParseError,
        Error::DuplicateElement(_)
        | Error::InvalidElementName(_)
        | Error::UnknownElement(_)
        | Error::CoverCycle(..)
        | Error::NotALattice { .. }
        | Error::EmptyLattice
        | Error::TooManyElements(_)
        | Error::EmptyUniverse
        | Error::UniverseTooLarge(_) => FlowlatStatus::LatticeError,
        Error::UndeclaredVariable(_)
        | Error::FixedVariable(_)
        | Error::FloatingVariable(_)
        | Error::FixedIndexNotInLattice { .. }
        | Error::DomainMismatch(_) => FlowlatStatus::TypeError,
        Error::EmptyDomain | Error::SearchSpaceTooLarge(_) => FlowlatStatus::HarnessError,
    }
}

struct Failure(FlowlatStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording any error or panic for [`flowlat_last_error`].
fn guard(f: impl FnOnce() -> Result<FlowlatStatus, Failure>) -> FlowlatStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            FlowlatStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(FlowlatStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(FlowlatStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(FlowlatStatus::NullArgument, format!("`{name}` is null")))
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<*mut T, Failure> {
    if p.is_null() {
        Err(Failure(FlowlatStatus::NullArgument, format!("`{name}` is null")))
    } else {
        Ok(p)
    }
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

unsafe fn pc_arg(lattice: &Lattice, pc: *const c_char) -> Result<Elem, Failure> {
    if pc.is_null() {
        return Ok(lattice.bottom());
    }
    Ok(lattice.parse_element(str_arg(pc, "pc")?)?)
}

fn decision(b: bool) -> FlowlatStatus {
    if b {
        FlowlatStatus::Ok
    } else {
        FlowlatStatus::False
    }
}

/// The message for the most recent failure on this thread, or NULL. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn flowlat_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn flowlat_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn flowlat_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// A built-in lattice: `two-point` or `diamond`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn flowlat_lattice_builtin(name: *const c_char, out: *mut *mut FlowlatLattice) -> FlowlatStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let lat = match str_arg(name, "name")? {
            "two-point" => Lattice::two_point(),
            "diamond" => Lattice::diamond(),
            other => return Err(Failure(FlowlatStatus::LatticeError, format!("unknown built-in lattice `{other}`"))),
        };
        *out = Box::into_raw(Box::new(FlowlatLattice { inner: Arc::new(lat) }));
        Ok(FlowlatStatus::Ok)
    })
}

/// A lattice from spec-file text (`lattice`, `elements`, `order` lines).
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn flowlat_lattice_parse(spec: *const c_char, out: *mut *mut FlowlatLattice) -> FlowlatStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let lat = formats::parse_lattice_spec(str_arg(spec, "spec")?)?;
        *out = Box::into_raw(Box::new(FlowlatLattice { inner: Arc::new(lat) }));
        Ok(FlowlatStatus::Ok)
    })
}

/// The powerset lattice over a comma-separated list of variables.
///
/// # Safety
/// `universe` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn flowlat_lattice_powerset(universe: *const c_char, out: *mut *mut FlowlatLattice) -> FlowlatStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let vars = str_arg(universe, "universe")?
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        let lat = Lattice::powerset(vars)?;
        *out = Box::into_raw(Box::new(FlowlatLattice { inner: Arc::new(lat) }));
        Ok(FlowlatStatus::Ok)
    })
}

/// # Safety
/// `lattice` must be NULL or a handle from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn flowlat_lattice_free(lattice: *mut FlowlatLattice) {
    if !lattice.is_null() {
        drop(Box::from_raw(lattice));
    }
}

/// Element-wise order test; writes the result to `out`.
///
/// # Safety
/// `lattice` must be a live handle, `a`/`b` NUL-terminated strings, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn flowlat_lattice_leq(
    lattice: *const FlowlatLattice,
    a: *const c_char,
    b: *const c_char,
    out: *mut bool,
) -> FlowlatStatus {
    guard(|| {
        let lat = &ref_arg(lattice, "lattice")?.inner;
        let out = out_arg(out, "out")?;
        let a = lat.parse_element(str_arg(a, "a")?)?;
        let b = lat.parse_element(str_arg(b, "b")?)?;
        *out = lat.leq(a, b);
        Ok(FlowlatStatus::Ok)
    })
}

/// Parses a program; with `fixed` set, `x@T` variables are accepted.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn flowlat_program_parse(text: *const c_char, fixed: bool, out: *mut *mut FlowlatProgram) -> FlowlatStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let c = parse_program_with(str_arg(text, "text")?, fixed)?;
        *out = Box::into_raw(Box::new(FlowlatProgram { inner: c }));
        Ok(FlowlatStatus::Ok)
    })
}

/// # Safety
/// `program` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn flowlat_program_to_string(program: *const FlowlatProgram, out: *mut *mut c_char) -> FlowlatStatus {
    guard(|| {
        let c = &ref_arg(program, "program")?.inner;
        *out_arg(out, "out")? = c_string(c.to_string());
        Ok(FlowlatStatus::Ok)
    })
}

/// # Safety
/// `program` must be NULL or a handle from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn flowlat_program_free(program: *mut FlowlatProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Parses an environment over `lattice`: either inline bindings
/// (`l:L,h:H`) or environment-file text (`x : L` lines).
///
/// # Safety
/// `lattice` must be a live handle, `text` a NUL-terminated string, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn flowlat_env_parse(
    lattice: *const FlowlatLattice,
    text: *const c_char,
    out: *mut *mut FlowlatEnv,
) -> FlowlatStatus {
    guard(|| {
        let lat = &ref_arg(lattice, "lattice")?.inner;
        let out = out_arg(out, "out")?;
        let text = str_arg(text, "text")?;
        let env = if text.contains('\n') || text.trim_start().starts_with('#') {
            formats::parse_env_file(text, lat)?.into_env()?
        } else {
            formats::parse_inline_env(text, lat)?
        };
        *out = Box::into_raw(Box::new(FlowlatEnv { inner: env }));
        Ok(FlowlatStatus::Ok)
    })
}

/// Renders an environment as environment-file text.
///
/// # Safety
/// `env` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn flowlat_env_to_string(env: *const FlowlatEnv, out: *mut *mut c_char) -> FlowlatStatus {
    guard(|| {
        let env = &ref_arg(env, "env")?.inner;
        *out_arg(out, "out")? = c_string(env.to_string());
        Ok(FlowlatStatus::Ok)
    })
}

/// # Safety
/// `env` must be NULL or a handle from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn flowlat_env_free(env: *mut FlowlatEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// The least post-environment of `program` from `pre` at `pc` (NULL for
/// bottom).
///
/// # Safety
/// Handles must be live, `pc` NULL or a NUL-terminated string, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn flowlat_infer(
    program: *const FlowlatProgram,
    pre: *const FlowlatEnv,
    pc: *const c_char,
    out: *mut *mut FlowlatEnv,
) -> FlowlatStatus {
    guard(|| {
        let c = &ref_arg(program, "program")?.inner;
        let pre = &ref_arg(pre, "pre")?.inner;
        let out = out_arg(out, "out")?;
        let pc = pc_arg(pre.lattice(), pc)?;
        let post = flowlat::spc(pc, pre, c)?;
        *out = Box::into_raw(Box::new(FlowlatEnv { inner: post }));
        Ok(FlowlatStatus::Ok)
    })
}

/// Decides `pc |- pre {program} post`: `FLOWLAT_STATUS_OK` when derivable,
/// `FLOWLAT_STATUS_FALSE` when not.
///
/// # Safety
/// Handles must be live and `pc` NULL or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn flowlat_check(
    program: *const FlowlatProgram,
    pre: *const FlowlatEnv,
    post: *const FlowlatEnv,
    pc: *const c_char,
) -> FlowlatStatus {
    guard(|| {
        let c = &ref_arg(program, "program")?.inner;
        let pre = &ref_arg(pre, "pre")?.inner;
        let post = &ref_arg(post, "post")?.inner;
        let pc = pc_arg(pre.lattice(), pc)?;
        Ok(decision(flowlat::spc(pc, pre, c)?.leq(post)?))
    })
}

/// The dependency sets of the principal typing, as environment-file text
/// over the powerset of the program's variables.
///
/// # Safety
/// `program` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn flowlat_principal(program: *const FlowlatProgram, out: *mut *mut c_char) -> FlowlatStatus {
    guard(|| {
        let c = &ref_arg(program, "program")?.inner;
        let out = out_arg(out, "out")?;
        let pt = principal::principal(c, c.floating_vars())?;
        *out = c_string(pt.delta_c.to_string());
        Ok(FlowlatStatus::Ok)
    })
}

/// Translates to a fixed-variable program. `out_post` and `out_inserted`
/// may be NULL.
///
/// # Safety
/// Handles must be live, `pc` NULL or a NUL-terminated string, non-NULL out
/// pointers writable.
#[no_mangle]
pub unsafe extern "C" fn flowlat_transform(
    program: *const FlowlatProgram,
    pre: *const FlowlatEnv,
    pc: *const c_char,
    out_program: *mut *mut FlowlatProgram,
    out_post: *mut *mut FlowlatEnv,
    out_inserted: *mut usize,
) -> FlowlatStatus {
    guard(|| {
        let c = &ref_arg(program, "program")?.inner;
        let pre = &ref_arg(pre, "pre")?.inner;
        let out_program = out_arg(out_program, "out_program")?;
        let pc = pc_arg(pre.lattice(), pc)?;
        let r = transform::translate(pc, pre, c)?;
        if !out_post.is_null() {
            *out_post = Box::into_raw(Box::new(FlowlatEnv { inner: r.post }));
        }
        if !out_inserted.is_null() {
            *out_inserted = r.inserted;
        }
        *out_program = Box::into_raw(Box::new(FlowlatProgram { inner: r.output }));
        Ok(FlowlatStatus::Ok)
    })
}

/// Flow-insensitive check of a fixed-variable program at `pc`.
///
/// # Safety
/// Handles must be live and `pc` NULL or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn flowlat_check_fixed(
    lattice: *const FlowlatLattice,
    program: *const FlowlatProgram,
    pc: *const c_char,
) -> FlowlatStatus {
    guard(|| {
        let lat = &ref_arg(lattice, "lattice")?.inner;
        let d = &ref_arg(program, "program")?.inner;
        let pc = pc_arg(lat, pc)?;
        Ok(decision(transform::check_fixed(lat, pc, d)?))
    })
}

/// Exhaustive noninterference test of `pre {program} post` over `domain`
/// (NULL for {0, 1}) with the given fuel (0 for the default). Returns
/// `FLOWLAT_STATUS_OK` on pass and `FLOWLAT_STATUS_FALSE` otherwise. When
/// `report` is non-NULL it receives a JSON record with the verdict,
/// witness, and statistics.
///
/// # Safety
/// Handles must be live; `domain` must point to `domain_len` values when
/// non-NULL; `report` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn flowlat_test_ni(
    program: *const FlowlatProgram,
    pre: *const FlowlatEnv,
    post: *const FlowlatEnv,
    domain: *const i64,
    domain_len: usize,
    fuel: u64,
    report: *mut *mut c_char,
) -> FlowlatStatus {
    guard(|| {
        let c = &ref_arg(program, "program")?.inner;
        let pre = &ref_arg(pre, "pre")?.inner;
        let post = &ref_arg(post, "post")?.inner;
        let mut config = HarnessConfig::default();
        if !domain.is_null() {
            config.domain = std::slice::from_raw_parts(domain, domain_len).to_vec();
        }
        if fuel > 0 {
            config.fuel = fuel;
        }
        let v = harness::ni_check(c, pre, post, &config)?;
        if !report.is_null() {
            *report = c_string(formats::verdict_to_json("test-ni", pre.lattice(), &v).to_string());
        }
        Ok(decision(v.outcome == Verdict::Pass))
    })
}
