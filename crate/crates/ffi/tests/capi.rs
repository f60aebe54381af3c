use std::ffi::{c_char, CStr, CString};
use std::ptr;

use flowlat_ffi::*;

fn cs(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take_string(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_string();
    flowlat_string_free(p);
    s
}

unsafe fn last_error() -> String {
    CStr::from_ptr(flowlat_last_error()).to_str().unwrap().to_string()
}

struct Fixture {
    lat: *mut FlowlatLattice,
    env: *mut FlowlatEnv,
}

impl Fixture {
    unsafe fn two_point(env: &str) -> Fixture {
        let mut lat = ptr::null_mut();
        assert_eq!(flowlat_lattice_builtin(cs("two-point").as_ptr(), &mut lat), FlowlatStatus::Ok);
        let mut e = ptr::null_mut();
        assert_eq!(flowlat_env_parse(lat, cs(env).as_ptr(), &mut e), FlowlatStatus::Ok);
        Fixture { lat, env: e }
    }
}

impl Drop for Fixture {
    fn drop(&mut self) {
        unsafe {
            flowlat_env_free(self.env);
            flowlat_lattice_free(self.lat);
        }
    }
}

unsafe fn program(text: &str, fixed: bool) -> *mut FlowlatProgram {
    let mut p = ptr::null_mut();
    assert_eq!(flowlat_program_parse(cs(text).as_ptr(), fixed, &mut p), FlowlatStatus::Ok);
    p
}

#[test]
fn check_and_transform_low_reuse_example() {
    unsafe {
        let fx = Fixture::two_point("l:L,h:H");
        let c = program("l := h ; l := 0 ; h := 0 ; l := h", false);
        assert_eq!(flowlat_check(c, fx.env, fx.env, ptr::null()), FlowlatStatus::Ok);

        let (mut d, mut post, mut inserted) = (ptr::null_mut(), ptr::null_mut(), usize::MAX);
        assert_eq!(
            flowlat_transform(c, fx.env, ptr::null(), &mut d, &mut post, &mut inserted),
            FlowlatStatus::Ok
        );
        let mut text = ptr::null_mut();
        assert_eq!(flowlat_program_to_string(d, &mut text), FlowlatStatus::Ok);
        assert_eq!(take_string(text), "l@H := h@H ; l@L := 0 ; h@L := 0 ; l@L := h@L");
        assert_eq!(inserted, 0);
        assert_eq!(flowlat_check_fixed(fx.lat, d, cs("L").as_ptr()), FlowlatStatus::Ok);

        let mut env_text = ptr::null_mut();
        assert_eq!(flowlat_env_to_string(post, &mut env_text), FlowlatStatus::Ok);
        assert_eq!(take_string(env_text), "h : L\nl : L\n");

        flowlat_env_free(post);
        flowlat_program_free(d);
        flowlat_program_free(c);
    }
}

#[test]
fn rejected_judgement_is_false_not_an_error() {
    unsafe {
        let fx = Fixture::two_point("l:L,h:H");
        let c = program("if h == 0 then l := h else l := 0 end", false);
        assert_eq!(flowlat_check(c, fx.env, fx.env, ptr::null()), FlowlatStatus::False);

        let mut report = ptr::null_mut();
        let status = flowlat_test_ni(c, fx.env, fx.env, ptr::null(), 0, 0, &mut report);
        assert_eq!(status, FlowlatStatus::Ok);
        assert!(take_string(report).contains("\"verdict\":\"pass\""));
        flowlat_program_free(c);
    }
}

#[test]
fn ni_counterexample_report() {
    unsafe {
        let fx = Fixture::two_point("l:L,h:H");
        let c = program("l := h", false);
        let domain = [0i64, 1, 2];
        let mut report = ptr::null_mut();
        let status = flowlat_test_ni(c, fx.env, fx.env, domain.as_ptr(), domain.len(), 8, &mut report);
        assert_eq!(status, FlowlatStatus::False);
        let report = take_string(report);
        assert!(report.contains("\"verdict\":\"counterexample\""), "{report}");
        assert!(report.contains("\"variable\":\"l\""), "{report}");
        flowlat_program_free(c);
    }
}

#[test]
fn infer_and_principal() {
    unsafe {
        let mut lat = ptr::null_mut();
        assert_eq!(flowlat_lattice_builtin(cs("diamond").as_ptr(), &mut lat), FlowlatStatus::Ok);
        let mut pre = ptr::null_mut();
        assert_eq!(flowlat_env_parse(lat, cs("x : M\ny : L\nz : N\n").as_ptr(), &mut pre), FlowlatStatus::Ok);
        let c = program("if x then y := z else y := 0 end", false);
        let mut post = ptr::null_mut();
        assert_eq!(flowlat_infer(c, pre, ptr::null(), &mut post), FlowlatStatus::Ok);
        let mut text = ptr::null_mut();
        assert_eq!(flowlat_env_to_string(post, &mut text), FlowlatStatus::Ok);
        assert_eq!(take_string(text), "x : M\ny : H\nz : N\n");

        let mut deps = ptr::null_mut();
        assert_eq!(flowlat_principal(c, &mut deps), FlowlatStatus::Ok);
        assert_eq!(take_string(deps), "x : {x}\ny : {x,z}\nz : {z}\n");

        let mut below = false;
        assert_eq!(flowlat_lattice_leq(lat, cs("M").as_ptr(), cs("N").as_ptr(), &mut below), FlowlatStatus::Ok);
        assert!(!below);

        flowlat_env_free(post);
        flowlat_env_free(pre);
        flowlat_program_free(c);
        flowlat_lattice_free(lat);
    }
}

#[test]
fn custom_and_powerset_lattices() {
    unsafe {
        let mut lat = ptr::null_mut();
        let spec = cs("lattice chain\nelements A B C\norder A < B\norder B < C\n");
        assert_eq!(flowlat_lattice_parse(spec.as_ptr(), &mut lat), FlowlatStatus::Ok);
        let mut below = false;
        assert_eq!(flowlat_lattice_leq(lat, cs("A").as_ptr(), cs("C").as_ptr(), &mut below), FlowlatStatus::Ok);
        assert!(below);
        flowlat_lattice_free(lat);

        let mut pw = ptr::null_mut();
        assert_eq!(flowlat_lattice_powerset(cs("a, b").as_ptr(), &mut pw), FlowlatStatus::Ok);
        assert_eq!(flowlat_lattice_leq(pw, cs("{a}").as_ptr(), cs("{a,b}").as_ptr(), &mut below), FlowlatStatus::Ok);
        assert!(below);
        flowlat_lattice_free(pw);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(flowlat_program_parse(cs("l := > h").as_ptr(), false, &mut p), FlowlatStatus::ParseError);
        assert!(p.is_null());
        assert!(last_error().contains("unknown operator"));

        assert_eq!(flowlat_program_parse(ptr::null(), false, &mut p), FlowlatStatus::NullArgument);
        let c = cs("skip");
        assert_eq!(flowlat_program_parse(c.as_ptr(), false, ptr::null_mut()), FlowlatStatus::NullArgument);

        let mut lat = ptr::null_mut();
        let bad = cs("lattice v\nelements A B C\norder A < B\norder A < C\n");
        assert_eq!(flowlat_lattice_parse(bad.as_ptr(), &mut lat), FlowlatStatus::LatticeError);
        assert!(last_error().contains("no upper bound"));
        assert_eq!(flowlat_lattice_builtin(cs("nope").as_ptr(), &mut lat), FlowlatStatus::LatticeError);

        let fx = Fixture::two_point("l:L");
        let c = program("l := q", false);
        assert_eq!(flowlat_check(c, fx.env, fx.env, ptr::null()), FlowlatStatus::TypeError);
        assert!(last_error().contains("undeclared variable `q`"));
        assert_eq!(flowlat_check(c, fx.env, fx.env, cs("X").as_ptr()), FlowlatStatus::LatticeError);

        let empty: [i64; 0] = [];
        let ok = program("l := 0", false);
        let status = flowlat_test_ni(ok, fx.env, fx.env, empty.as_ptr(), 0, 0, ptr::null_mut());
        assert_eq!(status, FlowlatStatus::HarnessError);

        let bytes = [0xffu8, 0];
        assert_eq!(
            flowlat_program_parse(bytes.as_ptr().cast(), false, &mut p),
            FlowlatStatus::InvalidUtf8
        );
        flowlat_program_free(ok);
        flowlat_program_free(c);
    }
}

#[test]
fn free_functions_accept_null() {
    unsafe {
        flowlat_string_free(ptr::null_mut());
        flowlat_program_free(ptr::null_mut());
        flowlat_env_free(ptr::null_mut());
        flowlat_lattice_free(ptr::null_mut());
        let v = CStr::from_ptr(flowlat_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}
