//! Exercise the C ABI from Rust: handle lifecycle, status codes, and JSON
//! payloads.

use lieconf_ffi::*;
use std::ffi::{CStr, CString};
use std::ptr;

fn take_string(p: *mut std::ffi::c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { lieconf_string_free(p) };
    s
}

const EXAMPLE: &str = "\
algebra M
generator e torsion D
generator u
generator n
bracket u n = 1 * n
bracket n n = 0
bracket u u = 0
";

#[test]
fn parse_classify_free_roundtrip() {
    let text = CString::new(EXAMPLE).unwrap();
    let mut handle: *mut LieconfAlgebra = ptr::null_mut();
    let rc = unsafe { lieconf_parse(text.as_ptr(), &mut handle) };
    assert_eq!(rc, 0);
    assert!(!handle.is_null());

    let name = take_string(unsafe { lieconf_algebra_name(handle) });
    assert_eq!(name, "M");

    let mut json: *mut std::ffi::c_char = ptr::null_mut();
    let rc = unsafe { lieconf_classify_json(handle, 4, &mut json) };
    assert_eq!(rc, 0);
    let v: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(v["solvable"], true);
    assert_eq!(v["nilpotent"], false);
    assert_eq!(v["derived_length"], 2);
    assert_eq!(v["stabilized_ideal_rank"], 1);

    unsafe { lieconf_algebra_free(handle) };
}

#[test]
fn example_handle_supports_root_decomposition() {
    let handle = lieconf_example();
    assert!(!handle.is_null());
    let mut json: *mut std::ffi::c_char = ptr::null_mut();
    let rc = unsafe { lieconf_decompose_json(handle, ptr::null(), 4, 8, 200, 0, &mut json) };
    assert_eq!(rc, 0);
    let v: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(v["n_part"], serde_json::json!(["n"]));
    assert_eq!(v["singularity"], 1);
    unsafe { lieconf_algebra_free(handle) };
}

#[test]
fn modify_through_the_abi() {
    let text = CString::new(EXAMPLE).unwrap();
    let mut handle: *mut LieconfAlgebra = ptr::null_mut();
    assert_eq!(unsafe { lieconf_parse(text.as_ptr(), &mut handle) }, 0);
    let elem = CString::new("u + D*n").unwrap();
    let mut json: *mut std::ffi::c_char = ptr::null_mut();
    let rc = unsafe { lieconf_modify_json(handle, elem.as_ptr(), 4, 0, &mut json) };
    assert_eq!(rc, 0);
    let v: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(v["original"], "u + D*n");
    assert_eq!(v["singularity"], 1);
    unsafe { lieconf_algebra_free(handle) };
}

#[test]
fn parse_errors_set_the_thread_message() {
    let text = CString::new("algebra A\ngenerator x\nbracket x q = 1 * x\n").unwrap();
    let mut handle: *mut LieconfAlgebra = ptr::null_mut();
    let rc = unsafe { lieconf_parse(text.as_ptr(), &mut handle) };
    assert_eq!(rc, 1);
    assert!(handle.is_null());
    let msg = take_string(lieconf_last_error());
    assert!(msg.contains("unknown generator"), "message: {msg}");
}

#[test]
fn axiom_violations_return_code_2() {
    let text = CString::new(
        "algebra B\ngenerator x\ngenerator y\nbracket x y = 1 * y\nbracket y x = 1 * y\nbracket x x = 0\nbracket y y = 0\n",
    )
    .unwrap();
    let mut handle: *mut LieconfAlgebra = ptr::null_mut();
    assert_eq!(unsafe { lieconf_parse(text.as_ptr(), &mut handle) }, 0);
    let mut json: *mut std::ffi::c_char = ptr::null_mut();
    let rc = unsafe { lieconf_check_json(handle, 4, &mut json) };
    assert_eq!(rc, 2);
    let v: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(v["passes"], false);
    unsafe { lieconf_algebra_free(handle) };
}

#[test]
fn null_arguments_are_rejected() {
    let mut json: *mut std::ffi::c_char = ptr::null_mut();
    assert_eq!(unsafe { lieconf_classify_json(ptr::null(), 4, &mut json) }, 1);
    assert_eq!(unsafe { lieconf_parse(ptr::null(), ptr::null_mut()) }, 1);
    unsafe { lieconf_algebra_free(ptr::null_mut()) };
    unsafe { lieconf_string_free(ptr::null_mut()) };
}

#[test]
fn serialization_reparses() {
    let handle = lieconf_example();
    let text = take_string(unsafe { lieconf_serialize(handle) });
    assert!(text.starts_with("vertex M"));
    let c = CString::new(text).unwrap();
    let mut again: *mut LieconfAlgebra = ptr::null_mut();
    assert_eq!(unsafe { lieconf_parse(c.as_ptr(), &mut again) }, 0);
    unsafe { lieconf_algebra_free(again) };
    unsafe { lieconf_algebra_free(handle) };
}
