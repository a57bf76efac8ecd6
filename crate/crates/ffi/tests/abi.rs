use std::ffi::{c_char, c_int, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use ctxlab_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    ctxlab_string_free(s);
    out
}

unsafe fn last_error() -> String {
    CStr::from_ptr(ctxlab_last_error()).to_str().unwrap().to_string()
}

unsafe fn fixture(name: &str, lambda: Option<&str>) -> *mut CtxlabModel {
    let lambda = lambda.map(cstr);
    let mut m = ptr::null_mut();
    let status = ctxlab_model_fixture(cstr(name).as_ptr(), lambda.as_ref().map_or(ptr::null(), |l| l.as_ptr()), &mut m);
    assert_eq!(status, CtxlabStatus::Ok);
    m
}

unsafe fn ncf_text(m: *const CtxlabModel) -> String {
    let mut out = ptr::null_mut();
    assert_eq!(ctxlab_model_ncf(m, &mut out), CtxlabStatus::Ok);
    take(out)
}

#[test]
fn fixtures_report_exact_ncf() {
    unsafe {
        for (name, lambda, expected, contextual) in [
            ("triangle", None, "0/1", 1),
            ("pr", None, "0/1", 1),
            ("noisy_pr", Some("1/4"), "1/2", 1),
            ("noisy_pr", Some("1/2"), "1/1", 0),
            ("trivial", None, "1/1", 0),
        ] {
            let m = fixture(name, lambda);
            assert_eq!(ncf_text(m), expected, "{name}");
            let mut c: c_int = -1;
            assert_eq!(ctxlab_model_is_contextual(m, &mut c), CtxlabStatus::Ok);
            assert_eq!(c, contextual, "{name}");
            ctxlab_model_free(m);
        }
    }
}

#[test]
fn json_round_trip_and_combination() {
    unsafe {
        let pr = fixture("pr", None);
        let mut json = ptr::null_mut();
        assert_eq!(ctxlab_model_to_json(pr, &mut json), CtxlabStatus::Ok);
        let text = take(json);
        assert!(text.contains("\"sites\""));
        let mut back = ptr::null_mut();
        assert_eq!(ctxlab_model_from_json(cstr(&text).as_ptr(), &mut back), CtxlabStatus::Ok);
        let mut again = ptr::null_mut();
        assert_eq!(ctxlab_model_to_json(back, &mut again), CtxlabStatus::Ok);
        assert_eq!(take(again), text);

        let mut both = ptr::null_mut();
        assert_eq!(ctxlab_model_combine(pr, back, &mut both), CtxlabStatus::Ok);
        assert_eq!(ncf_text(both), "0/1");
        let t = fixture("triangle", None);
        let mut mixed = ptr::null_mut();
        assert_eq!(ctxlab_model_combine(pr, t, &mut mixed), CtxlabStatus::Invalid);
        assert!(mixed.is_null());
        for m in [pr, back, both, t] {
            ctxlab_model_free(m);
        }
    }
}

#[test]
fn failures_set_status_and_message() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(ctxlab_model_from_json(cstr("{").as_ptr(), &mut m), CtxlabStatus::Parse);
        assert!(m.is_null());
        assert!(last_error().contains("<json>:"), "{}", last_error());

        let bad = r#"{"scenario": {"maximal_contexts": [["a"]], "measurements": [{"id": "a", "outcomes": ["0", "1"]}]},
            "tables": [{"context": ["a"], "weights": [{"assign": {"a": "0"}, "p": "1/3"}]}]}"#;
        assert_eq!(ctxlab_model_from_json(cstr(bad).as_ptr(), &mut m), CtxlabStatus::Invalid);

        assert_eq!(ctxlab_model_from_json(ptr::null(), &mut m), CtxlabStatus::NullArgument);
        assert_eq!(ctxlab_model_ncf(ptr::null(), &mut ptr::null_mut()), CtxlabStatus::NullArgument);
        assert_eq!(ctxlab_model_fixture(cstr("noisy_pr").as_ptr(), ptr::null(), &mut m), CtxlabStatus::UnknownFixture);
        assert_eq!(ctxlab_model_fixture(cstr("noisy_pr").as_ptr(), cstr("x").as_ptr(), &mut m), CtxlabStatus::Parse);
        let invalid_utf8 = [0xffu8, 0];
        assert_eq!(
            ctxlab_model_fixture(invalid_utf8.as_ptr() as *const c_char, ptr::null(), &mut m),
            CtxlabStatus::InvalidUtf8
        );
        ctxlab_model_free(ptr::null_mut());
        ctxlab_string_free(ptr::null_mut());
    }
}

#[test]
fn run_matches_the_command_line() {
    unsafe {
        let args = [cstr("ctxlab"), cstr("ncf"), cstr("missing.json")];
        let argv: Vec<*const c_char> = args.iter().map(|a| a.as_ptr()).collect();
        let (mut code, mut out, mut err) = (-1, ptr::null_mut(), ptr::null_mut());
        assert_eq!(ctxlab_run(3, argv.as_ptr(), &mut code, &mut out, &mut err), CtxlabStatus::Ok);
        assert_eq!(code, 2);
        assert_eq!(take(out), "");
        assert!(take(err).contains("missing.json"));

        let args = [cstr("ctxlab"), cstr("--version")];
        let argv: Vec<*const c_char> = args.iter().map(|a| a.as_ptr()).collect();
        assert_eq!(ctxlab_run(2, argv.as_ptr(), &mut code, ptr::null_mut(), ptr::null_mut()), CtxlabStatus::Ok);
        assert_eq!(code, 0);
    }
}

/// `target/<profile>`, found from this test binary in `target/<profile>/deps`.
fn profile_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = profile_dir().join("libctxlab_ffi.a");
    assert!(lib.exists(), "static library not built at {}", lib.display());
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("ctxlab_smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success(), "C build failed");
    let run = Command::new(&out).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout), "ok\n");
}
