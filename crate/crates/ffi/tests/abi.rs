use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use carrot_ffi::*;

const ISOSCELES: &str = "fn isIsosceles(x, y, z) {
  if (x == y) { return 1; } else {
    if (y == z) { return 1; } else { return 0; }
  }
}
";

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = carrot_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take_string(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_string_lossy().into_owned();
    carrot_string_free(p);
    s
}

fn lessthan_entry() -> CarrotConfig {
    CarrotConfig {
        schemata: CARROT_SCHEMA_LESS_THAN,
        value_sets: false,
        pair_sets: false,
        points: CARROT_POINTS_ENTRY,
    }
}

unsafe fn run_spectrum(
    prog: *const CarrotProgram,
    args: &[i64],
    id: &str,
    cfg: &CarrotConfig,
) -> *mut CarrotSpectrum {
    let id = cstr(id);
    let mut trace = ptr::null_mut();
    let mut result = -1;
    assert_eq!(
        carrot_program_run(
            prog,
            ptr::null(),
            args.as_ptr(),
            args.len(),
            id.as_ptr(),
            &mut result,
            &mut trace
        ),
        CarrotStatus::CarrotOk
    );
    assert_eq!(carrot_trace_sample_count(trace), 2);
    let mut s = ptr::null_mut();
    assert_eq!(
        carrot_spectrum_compute(trace, cfg, &mut s),
        CarrotStatus::CarrotOk
    );
    carrot_trace_free(trace);
    s
}

#[test]
fn isosceles_pipeline() {
    unsafe {
        let src = cstr(ISOSCELES);
        let mut prog = ptr::null_mut();
        assert_eq!(
            carrot_program_parse(src.as_ptr(), &mut prog),
            CarrotStatus::CarrotOk
        );
        let cfg = lessthan_entry();
        let runs: Vec<_> = [[1, 2, 3], [2, 5, 5], [2, 2, 3], [2, 3, 2]]
            .iter()
            .enumerate()
            .map(|(i, a)| run_spectrum(prog, a, &format!("run_{}", i + 1), &cfg))
            .collect();
        assert_eq!(carrot_spectrum_live_count(runs[0]), 3);

        let good: Vec<*const CarrotSpectrum> = runs[..3].iter().map(|p| *p as *const _).collect();
        let mut model = ptr::null_mut();
        assert_eq!(
            carrot_model_build(good.as_ptr(), good.len(), &mut model),
            CarrotStatus::CarrotOk
        );
        assert_eq!(carrot_model_live_count(model), 1);
        assert_eq!(carrot_model_runs(model), 3);

        // Round trip through the text form.
        let mut text = ptr::null_mut();
        assert_eq!(carrot_model_write(model, &mut text), CarrotStatus::CarrotOk);
        let stored = take_string(text);
        assert!(stored.contains("inv isIsosceles:::ENTER LessThan x z"));
        let stored = cstr(&stored);
        let mut reread = ptr::null_mut();
        assert_eq!(
            carrot_model_parse(stored.as_ptr(), &mut reread),
            CarrotStatus::CarrotOk
        );
        assert_eq!(carrot_model_live_count(reread), 1);

        let mut report = ptr::null_mut();
        assert_eq!(
            carrot_diff(reread, runs[3], &mut report),
            CarrotStatus::CarrotOk
        );
        assert_eq!(carrot_report_invalidated_count(report), 1);
        assert_eq!(carrot_report_finding_count(report), 1);
        let mut out = ptr::null_mut();
        assert_eq!(
            carrot_report_render(report, CARROT_FORMAT_TEXT, &mut out),
            CarrotStatus::CarrotOk
        );
        assert_eq!(take_string(out), "isIsosceles:::ENTER  violated: x < z\n");
        assert_eq!(
            carrot_report_render(report, CARROT_FORMAT_STRUCTURED, &mut out),
            CarrotStatus::CarrotOk
        );
        assert_eq!(take_string(out).lines().count(), 1);
        assert_eq!(
            carrot_report_render(report, 9, &mut out),
            CarrotStatus::CarrotInvalidArgument
        );

        carrot_report_free(report);
        carrot_model_free(reread);
        carrot_model_free(model);
        for s in runs {
            carrot_spectrum_free(s);
        }
        carrot_program_free(prog);
    }
}

#[test]
fn absorb_in_place() {
    unsafe {
        let src = cstr(ISOSCELES);
        let mut prog = ptr::null_mut();
        assert_eq!(
            carrot_program_parse(src.as_ptr(), &mut prog),
            CarrotStatus::CarrotOk
        );
        let cfg = lessthan_entry();
        let a = run_spectrum(prog, &[1, 2, 3], "a", &cfg);
        let b = run_spectrum(prog, &[2, 5, 5], "b", &cfg);
        let first = [a as *const CarrotSpectrum];
        let mut model = ptr::null_mut();
        assert_eq!(
            carrot_model_build(first.as_ptr(), 1, &mut model),
            CarrotStatus::CarrotOk
        );
        assert_eq!(carrot_model_live_count(model), 3);
        assert_eq!(carrot_model_absorb(model, b), CarrotStatus::CarrotOk);
        assert_eq!(carrot_model_live_count(model), 2);

        let other = run_spectrum(prog, &[1, 2, 3], "c", &carrot_config_default());
        assert_eq!(
            carrot_model_absorb(model, other),
            CarrotStatus::CarrotIncompatible
        );
        assert!(!last_error().is_empty());

        for s in [a, b, other] {
            carrot_spectrum_free(s);
        }
        carrot_model_free(model);
        carrot_program_free(prog);
    }
}

#[test]
fn trace_round_trip() {
    let text = "run t1\nppt f:::ENTER\nvar a int\nvar b int\n\nsample f:::ENTER 1 2\nsample f:::ENTER -3 4\n";
    unsafe {
        let src = cstr(text);
        let mut trace = ptr::null_mut();
        assert_eq!(
            carrot_trace_parse(src.as_ptr(), &mut trace),
            CarrotStatus::CarrotOk
        );
        assert_eq!(carrot_trace_sample_count(trace), 2);
        let mut out = ptr::null_mut();
        assert_eq!(carrot_trace_write(trace, &mut out), CarrotStatus::CarrotOk);
        let written = take_string(out);
        let again = cstr(&written);
        let mut trace2 = ptr::null_mut();
        assert_eq!(
            carrot_trace_parse(again.as_ptr(), &mut trace2),
            CarrotStatus::CarrotOk
        );
        assert_eq!(carrot_trace_write(trace2, &mut out), CarrotStatus::CarrotOk);
        assert_eq!(take_string(out), written);

        let mut s = ptr::null_mut();
        assert_eq!(
            carrot_spectrum_compute(trace, ptr::null(), &mut s),
            CarrotStatus::CarrotOk
        );
        assert_eq!(carrot_spectrum_live_count(s), 1);
        assert_eq!(carrot_spectrum_write(s, &mut out), CarrotStatus::CarrotOk);
        assert!(take_string(out).starts_with("spectrum t1"));
        carrot_spectrum_free(s);
        carrot_trace_free(trace);
        carrot_trace_free(trace2);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut trace = ptr::null_mut();
        assert_eq!(
            carrot_trace_parse(ptr::null(), &mut trace),
            CarrotStatus::CarrotNullArgument
        );
        assert!(trace.is_null());

        let bad = cstr("run t\nsample f:::ENTER 1\n");
        assert_eq!(
            carrot_trace_parse(bad.as_ptr(), &mut trace),
            CarrotStatus::CarrotParseError
        );
        assert!(last_error().contains("line 2"), "{}", last_error());

        let not_utf8 = [0xffu8, 0xfe, 0];
        assert_eq!(
            carrot_trace_parse(not_utf8.as_ptr() as *const c_char, &mut trace),
            CarrotStatus::CarrotInvalidUtf8
        );

        let ok = cstr("run t\nppt f:::ENTER\nvar a int\nsample f:::ENTER 1\n");
        assert_eq!(
            carrot_trace_parse(ok.as_ptr(), ptr::null_mut()),
            CarrotStatus::CarrotNullArgument
        );
        assert_eq!(
            carrot_trace_parse(ok.as_ptr(), &mut trace),
            CarrotStatus::CarrotOk
        );
        let mut cfg = carrot_config_default();
        cfg.schemata = 1 << 7;
        let mut s = ptr::null_mut();
        assert_eq!(
            carrot_spectrum_compute(trace, &cfg, &mut s),
            CarrotStatus::CarrotInvalidArgument
        );
        cfg.schemata = CARROT_SCHEMA_ALL;
        cfg.points = 42;
        assert_eq!(
            carrot_spectrum_compute(trace, &cfg, &mut s),
            CarrotStatus::CarrotInvalidArgument
        );
        carrot_trace_free(trace);

        let mut model = ptr::null_mut();
        assert_eq!(
            carrot_model_build(ptr::null(), 0, &mut model),
            CarrotStatus::CarrotNullArgument
        );
        let none: [*const CarrotSpectrum; 0] = [];
        assert_eq!(
            carrot_model_build(none.as_ptr(), 0, &mut model),
            CarrotStatus::CarrotIncompatible
        );

        let src = cstr("fn f(a) { return g(a); }");
        let mut prog = ptr::null_mut();
        assert_eq!(
            carrot_program_parse(src.as_ptr(), &mut prog),
            CarrotStatus::CarrotParseError
        );
        assert!(last_error().contains('g'));

        // Freeing null is a no-op.
        carrot_trace_free(ptr::null_mut());
        carrot_model_free(ptr::null_mut());
        carrot_string_free(ptr::null_mut());
        assert_eq!(carrot_model_live_count(ptr::null()), 0);
    }
}

#[test]
fn halting_run_still_yields_trace() {
    unsafe {
        let src = cstr("fn f(a) { if (a < 0) { halt; } return a; }");
        let mut prog = ptr::null_mut();
        assert_eq!(
            carrot_program_parse(src.as_ptr(), &mut prog),
            CarrotStatus::CarrotOk
        );
        let id = cstr("r");
        let args = [-1i64];
        let mut trace = ptr::null_mut();
        let status = carrot_program_run(
            prog,
            ptr::null(),
            args.as_ptr(),
            1,
            id.as_ptr(),
            ptr::null_mut(),
            &mut trace,
        );
        assert_eq!(status, CarrotStatus::CarrotRuntimeError);
        assert!(last_error().contains("halt"));
        assert!(!trace.is_null());
        assert_eq!(carrot_trace_sample_count(trace), 1);
        carrot_trace_free(trace);

        let entry = cstr("nope");
        let status = carrot_program_run(
            prog,
            entry.as_ptr(),
            args.as_ptr(),
            1,
            id.as_ptr(),
            ptr::null_mut(),
            ptr::null_mut(),
        );
        assert_eq!(status, CarrotStatus::CarrotInvalidArgument);
        let status = carrot_program_run(
            prog,
            ptr::null(),
            args.as_ptr(),
            0,
            id.as_ptr(),
            ptr::null_mut(),
            ptr::null_mut(),
        );
        assert_eq!(status, CarrotStatus::CarrotInvalidArgument);
        carrot_program_free(prog);
    }
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_api() {
    let header = std::fs::read_to_string(manifest_dir().join("include/carrot.h")).unwrap();
    for sym in [
        "typedef enum CarrotStatus",
        "CARROT_OK = 0",
        "CARROT_PANIC",
        "typedef struct CarrotTrace CarrotTrace;",
        "typedef struct CarrotSpectrum CarrotSpectrum;",
        "typedef struct CarrotModel CarrotModel;",
        "typedef struct CarrotReport CarrotReport;",
        "typedef struct CarrotProgram CarrotProgram;",
        "typedef struct CarrotConfig",
        "const char *carrot_last_error(void);",
        "carrot_trace_parse(",
        "carrot_spectrum_compute(",
        "carrot_model_build(",
        "carrot_model_absorb(",
        "carrot_diff(",
        "carrot_report_render(",
        "carrot_program_run(",
        "void carrot_string_free(char *s);",
    ] {
        assert!(header.contains(sym), "header is missing `{sym}`");
    }
}

fn find_staticlib() -> Option<PathBuf> {
    // Test binaries live in target/<profile>/deps.
    let exe = std::env::current_exe().ok()?;
    let profile_dir = exe.parent()?.parent()?;
    let lib = profile_dir.join("libcarrot_ffi.a");
    lib.exists().then_some(lib)
}

fn have(tool: &str) -> bool {
    Command::new(tool)
        .arg("--version")
        .output()
        .is_ok_and(|o| o.status.success())
}

#[test]
fn c_program_links_against_header() {
    let Some(lib) = find_staticlib() else {
        eprintln!("skipping: static library not found next to the test binary");
        return;
    };
    if !have("cc") {
        eprintln!("skipping: no C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("isosceles");
    let dir_m = manifest_dir();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(dir_m.join("examples/isosceles.c"))
        .arg("-I")
        .arg(dir_m.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success(), "C example failed to compile");
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        "isIsosceles:::ENTER  violated: x < z\n"
    );
}
