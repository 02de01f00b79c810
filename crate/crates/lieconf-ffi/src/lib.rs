//! C ABI for the lieconf library.
//!
//! Algebras are held behind opaque handles; analysis results come back as
//! JSON strings in the same schema the `lieconf` command-line tool emits.
//! Every function returns a status code: 0 on success, 1 on errors, 2 when
//! axiom violations were detected, 3 when a degree cap or candidate budget
//! was exhausted. String outputs are allocated by this library and must be
//! released with [`lieconf_string_free`]; handles with
//! [`lieconf_algebra_free`]. On failure, [`lieconf_last_error`] returns a
//! message for the calling thread.

use lieconf::conformal::{CapConfig, ConformalAlgebra};
use lieconf::report;
use lieconf::textio::{self, Definition};
use lieconf::vertex::{RootConfig, VertexAlgebra};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

/// Opaque handle to a parsed algebra definition.
pub struct LieconfAlgebra {
    def: Definition,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(std::ptr::null_mut())
}

/// Wrap a fallible body: stores the error message and returns its code.
fn guarded(body: impl FnOnce() -> Result<i32, (String, i32)>) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(code)) => code,
        Ok(Err((msg, code))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            1
        }
    }
}

fn lieconf_err(e: lieconf::Error) -> (String, i32) {
    let code = e.exit_code();
    (e.to_string(), code)
}

/// Message of the most recent failure on this thread (caller frees).
#[no_mangle]
pub extern "C" fn lieconf_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| to_c_string(e.borrow().clone()))
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must have been returned by a `lieconf_*` function and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lieconf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a definition file. On success writes a fresh handle to `out` and
/// returns 0.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lieconf_parse(
    text: *const c_char,
    out: *mut *mut LieconfAlgebra,
) -> i32 {
    if text.is_null() || out.is_null() {
        set_error("null pointer argument");
        return 1;
    }
    let text = match CStr::from_ptr(text).to_str() {
        Ok(t) => t.to_owned(),
        Err(_) => {
            set_error("input is not valid UTF-8");
            return 1;
        }
    };
    guarded(|| match textio::parse_definition(&text) {
        Ok(def) => {
            let handle = Box::new(LieconfAlgebra { def });
            unsafe { *out = Box::into_raw(handle) };
            Ok(0)
        }
        Err(e) => Err((e.to_string(), 1)),
    })
}

/// The built-in counterexample vertex algebra.
#[no_mangle]
pub extern "C" fn lieconf_example() -> *mut LieconfAlgebra {
    let algebra = VertexAlgebra::example();
    Box::into_raw(Box::new(LieconfAlgebra {
        def: Definition::Vertex { name: "M".into(), algebra, warnings: vec![] },
    }))
}

/// Release an algebra handle.
///
/// # Safety
/// `alg` must come from `lieconf_parse` or `lieconf_example` and not yet be
/// freed.
#[no_mangle]
pub unsafe extern "C" fn lieconf_algebra_free(alg: *mut LieconfAlgebra) {
    if !alg.is_null() {
        drop(Box::from_raw(alg));
    }
}

/// Name of the algebra (caller frees).
///
/// # Safety
/// `alg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lieconf_algebra_name(alg: *const LieconfAlgebra) -> *mut c_char {
    if alg.is_null() {
        return std::ptr::null_mut();
    }
    to_c_string((*alg).def.name().to_string())
}

/// Canonical definition text of the algebra (caller frees).
///
/// # Safety
/// `alg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lieconf_serialize(alg: *const LieconfAlgebra) -> *mut c_char {
    if alg.is_null() {
        return std::ptr::null_mut();
    }
    let text = match &(*alg).def {
        Definition::Conformal { name, algebra, .. } => textio::serialize_conformal(name, algebra),
        Definition::Vertex { name, algebra, .. } => textio::serialize_vertex(name, algebra),
    };
    to_c_string(text)
}

fn cap_config(cap: usize) -> CapConfig {
    let cap = cap.max(1);
    CapConfig { initial: cap, max: cap * 16 }
}

/// Conformal view of the handle: vertex algebras contribute their Lie part.
fn conformal_view(
    def: &Definition,
) -> Result<(String, Arc<ConformalAlgebra>, Vec<String>), (String, i32)> {
    match def {
        Definition::Conformal { name, algebra, warnings } => {
            Ok((name.clone(), Arc::new(algebra.clone()), warnings.clone()))
        }
        Definition::Vertex { name, algebra, warnings } => {
            let lie = algebra.lie_functor().map_err(lieconf_err)?;
            let mut w = warnings.clone();
            w.push("using the Lie conformal part of the vertex algebra".into());
            Ok((name.clone(), Arc::new(lie), w))
        }
    }
}

fn emit_json<T: serde::Serialize>(rep: &T, out: *mut *mut c_char) {
    let json = serde_json::to_string_pretty(rep).unwrap_or_default();
    unsafe { *out = to_c_string(json) };
}

/// Axiom check; returns 0 when all axioms hold, 2 on violations.
///
/// # Safety
/// `alg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lieconf_check_json(
    alg: *const LieconfAlgebra,
    truncation: i64,
    out: *mut *mut c_char,
) -> i32 {
    if alg.is_null() || out.is_null() {
        set_error("null pointer argument");
        return 1;
    }
    let def = &(*alg).def;
    guarded(|| {
        let rep = match def {
            Definition::Conformal { name, algebra, warnings } => {
                report::build_check_conformal(name, warnings, algebra)
            }
            Definition::Vertex { name, algebra, warnings } => {
                report::build_check_vertex(name, warnings, algebra, truncation)
                    .map_err(lieconf_err)?
            }
        };
        emit_json(&rep, out);
        Ok(if rep.passes { 0 } else { 2 })
    })
}

/// Classification report (solvability, nilpotence, series data, centre).
///
/// # Safety
/// `alg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lieconf_classify_json(
    alg: *const LieconfAlgebra,
    cap: usize,
    out: *mut *mut c_char,
) -> i32 {
    if alg.is_null() || out.is_null() {
        set_error("null pointer argument");
        return 1;
    }
    let def = &(*alg).def;
    guarded(|| {
        let (name, algebra, warnings) = conformal_view(def)?;
        let rep = report::build_classify(&name, &warnings, &algebra, cap_config(cap));
        emit_json(&rep, out);
        Ok(if rep.axioms_verified { 0 } else { 2 })
    })
}

/// Derived and central series report.
///
/// # Safety
/// `alg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lieconf_series_json(
    alg: *const LieconfAlgebra,
    out: *mut *mut c_char,
) -> i32 {
    if alg.is_null() || out.is_null() {
        set_error("null pointer argument");
        return 1;
    }
    let def = &(*alg).def;
    guarded(|| {
        let (name, algebra, warnings) = conformal_view(def)?;
        let rep = report::build_series(&name, &warnings, &algebra);
        emit_json(&rep, out);
        Ok(if rep.axioms_verified { 0 } else { 2 })
    })
}

/// Modification of an element into a nilpotent-generating one.
///
/// # Safety
/// `alg` must be a live handle, `element` a valid NUL-terminated string,
/// and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lieconf_modify_json(
    alg: *const LieconfAlgebra,
    element: *const c_char,
    cap: usize,
    seed: u64,
    out: *mut *mut c_char,
) -> i32 {
    if alg.is_null() || element.is_null() || out.is_null() {
        set_error("null pointer argument");
        return 1;
    }
    let Ok(element) = CStr::from_ptr(element).to_str() else {
        set_error("element expression is not valid UTF-8");
        return 1;
    };
    let def = &(*alg).def;
    guarded(|| {
        let (name, algebra, warnings) = conformal_view(def)?;
        let rep = report::build_modify(&name, &warnings, algebra, element, cap_config(cap), seed)
            .map_err(lieconf_err)?;
        emit_json(&rep, out);
        Ok(0)
    })
}

/// Generalized weight decomposition for the adjoint action of an element;
/// with a null `element` on a vertex algebra, the root-space decomposition.
///
/// # Safety
/// `alg` must be a live handle, `element` null or a valid NUL-terminated
/// string, and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lieconf_decompose_json(
    alg: *const LieconfAlgebra,
    element: *const c_char,
    cap: usize,
    truncation: i64,
    budget: usize,
    seed: u64,
    out: *mut *mut c_char,
) -> i32 {
    if alg.is_null() || out.is_null() {
        set_error("null pointer argument");
        return 1;
    }
    let element = if element.is_null() {
        None
    } else {
        match CStr::from_ptr(element).to_str() {
            Ok(e) => Some(e.to_owned()),
            Err(_) => {
                set_error("element expression is not valid UTF-8");
                return 1;
            }
        }
    };
    let def = &(*alg).def;
    guarded(|| match (def, element) {
        (Definition::Vertex { name, algebra, warnings }, None) => {
            let cfg = RootConfig {
                cap: cap_config(cap),
                truncation,
                candidate_budget: budget,
                seed,
            };
            let rep = report::build_root(name, warnings, algebra, cfg).map_err(lieconf_err)?;
            emit_json(&rep, out);
            Ok(0)
        }
        (_, None) => Err(("decompose needs an element for a conformal algebra".into(), 1)),
        (_, Some(expr)) => {
            let (name, algebra, warnings) = conformal_view(def)?;
            let rep =
                report::build_decompose(&name, &warnings, algebra, &expr, cap_config(cap), seed)
                    .map_err(lieconf_err)?;
            emit_json(&rep, out);
            Ok(0)
        }
    })
}
