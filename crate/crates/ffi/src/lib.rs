//! C ABI over the `carrot` library.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `carrot_*_parse`/`compute`/`build` call and released by the matching
//! `carrot_*_free`. Fallible calls return a [`CarrotStatus`]; on failure the
//! message is available from [`carrot_last_error`] on the same thread.
//! Strings handed out by the library are NUL-terminated and must be released
//! with [`carrot_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use carrot::minilang::{self, InputCase, RunOptions, RuntimeError};
use carrot::spectrum::{self, EngineConfig, PointSelection};
use carrot::{Schema, SchemaSet};

/// Result codes. `CARROT_OK` is zero; everything else is an error.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CarrotStatus {
    CarrotOk = 0,
    CarrotNullArgument = 1,
    CarrotInvalidUtf8 = 2,
    CarrotParseError = 3,
    CarrotIncompatible = 4,
    CarrotRuntimeError = 5,
    CarrotInvalidArgument = 6,
    CarrotPanic = 7,
}

use CarrotStatus::*;

pub const CARROT_SCHEMA_EQUALITY: u32 = 1;
pub const CARROT_SCHEMA_SUM: u32 = 2;
pub const CARROT_SCHEMA_LESS_THAN: u32 = 4;
pub const CARROT_SCHEMA_CONSTANT: u32 = 8;
pub const CARROT_SCHEMA_ALL: u32 = 15;

pub const CARROT_POINTS_ALL: u32 = 0;
pub const CARROT_POINTS_ENTRY: u32 = 1;
pub const CARROT_POINTS_EXIT: u32 = 2;

pub const CARROT_FORMAT_TEXT: u32 = 0;
pub const CARROT_FORMAT_STRUCTURED: u32 = 1;

/// Engine settings. `schemata` is a mask of `CARROT_SCHEMA_*`, `points` one
/// of `CARROT_POINTS_*`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CarrotConfig {
    pub schemata: u32,
    pub value_sets: bool,
    pub pair_sets: bool,
    pub points: u32,
}

pub struct CarrotTrace(carrot::Trace);
pub struct CarrotSpectrum(carrot::Spectrum);
pub struct CarrotModel(carrot::Model);
pub struct CarrotReport(carrot::DiffReport);
pub struct CarrotProgram(minilang::Program);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl ToString) {
    let msg = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(CarrotStatus, String);

type Outcome = Result<(), Fail>;

fn fail(status: CarrotStatus, msg: impl ToString) -> Fail {
    Fail(status, msg.to_string())
}

fn guard(f: impl FnOnce() -> Outcome) -> CarrotStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CarrotOk,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CarrotPanic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(fail(CarrotNullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CarrotInvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| fail(CarrotNullArgument, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Outcome {
    if out.is_null() {
        return Err(fail(CarrotNullArgument, "output pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Outcome {
    if out.is_null() {
        return Err(fail(CarrotNullArgument, "output pointer is null"));
    }
    let c =
        CString::new(s).map_err(|_| fail(CarrotInvalidArgument, "output contains a NUL byte"))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn engine_config(c: &CarrotConfig) -> Result<EngineConfig, Fail> {
    if c.schemata & !CARROT_SCHEMA_ALL != 0 {
        return Err(fail(
            CarrotInvalidArgument,
            format!("unknown schema bits {:#x}", c.schemata),
        ));
    }
    let schemata: SchemaSet = Schema::ALL
        .into_iter()
        .filter(|k| c.schemata & (1 << *k as u32) != 0)
        .collect();
    let points = match c.points {
        CARROT_POINTS_ALL => PointSelection::All,
        CARROT_POINTS_ENTRY => PointSelection::Entry,
        CARROT_POINTS_EXIT => PointSelection::Exit,
        n => {
            return Err(fail(
                CarrotInvalidArgument,
                format!("unknown point selection {n}"),
            ))
        }
    };
    Ok(EngineConfig {
        schemata,
        value_sets: c.value_sets,
        pair_sets: c.pair_sets,
        points,
    })
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn carrot_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub unsafe extern "C" fn carrot_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// All schemata, value sets and pair sets on, every point.
#[no_mangle]
pub extern "C" fn carrot_config_default() -> CarrotConfig {
    CarrotConfig {
        schemata: CARROT_SCHEMA_ALL,
        value_sets: true,
        pair_sets: true,
        points: CARROT_POINTS_ALL,
    }
}

#[no_mangle]
pub unsafe extern "C" fn carrot_trace_parse(
    src: *const c_char,
    out: *mut *mut CarrotTrace,
) -> CarrotStatus {
    guard(|| {
        let t = carrot::parse_trace(text(src, "src")?).map_err(|e| fail(CarrotParseError, e))?;
        put(out, CarrotTrace(t))
    })
}

#[no_mangle]
pub unsafe extern "C" fn carrot_trace_write(
    trace: *const CarrotTrace,
    out: *mut *mut c_char,
) -> CarrotStatus {
    guard(|| put_string(out, carrot::write_trace(&deref(trace, "trace")?.0)))
}

#[no_mangle]
pub unsafe extern "C" fn carrot_trace_sample_count(trace: *const CarrotTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.samples().len())
}

#[no_mangle]
pub unsafe extern "C" fn carrot_trace_free(trace: *mut CarrotTrace) {
    release(trace)
}

/// `config` may be null for the defaults.
#[no_mangle]
pub unsafe extern "C" fn carrot_spectrum_compute(
    trace: *const CarrotTrace,
    config: *const CarrotConfig,
    out: *mut *mut CarrotSpectrum,
) -> CarrotStatus {
    guard(|| {
        let trace = deref(trace, "trace")?;
        let config = engine_config(config.as_ref().unwrap_or(&carrot_config_default()))?;
        let s =
            carrot::compute_spectrum(&trace.0, config).map_err(|e| fail(CarrotIncompatible, e))?;
        put(out, CarrotSpectrum(s))
    })
}

#[no_mangle]
pub unsafe extern "C" fn carrot_spectrum_live_count(spectrum: *const CarrotSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.0.live.len())
}

#[no_mangle]
pub unsafe extern "C" fn carrot_spectrum_write(
    spectrum: *const CarrotSpectrum,
    out: *mut *mut c_char,
) -> CarrotStatus {
    guard(|| {
        put_string(
            out,
            spectrum::write_spectrum(&deref(spectrum, "spectrum")?.0),
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn carrot_spectrum_free(spectrum: *mut CarrotSpectrum) {
    release(spectrum)
}

/// Builds a model from `count` spectra (`count` >= 1).
#[no_mangle]
pub unsafe extern "C" fn carrot_model_build(
    spectra: *const *const CarrotSpectrum,
    count: usize,
    out: *mut *mut CarrotModel,
) -> CarrotStatus {
    guard(|| {
        if spectra.is_null() {
            return Err(fail(CarrotNullArgument, "spectra is null"));
        }
        let list = std::slice::from_raw_parts(spectra, count)
            .iter()
            .enumerate()
            .map(|(i, p)| deref(*p, &format!("spectra[{i}]")).map(|s| s.0.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let m = carrot::build_model(&list).map_err(|e| fail(CarrotIncompatible, e))?;
        put(out, CarrotModel(m))
    })
}

/// Folds one more spectrum into `model` in place.
#[no_mangle]
pub unsafe extern "C" fn carrot_model_absorb(
    model: *mut CarrotModel,
    spectrum: *const CarrotSpectrum,
) -> CarrotStatus {
    guard(|| {
        let s = deref(spectrum, "spectrum")?;
        let m = model
            .as_mut()
            .ok_or_else(|| fail(CarrotNullArgument, "model is null"))?;
        m.0.absorb(&s.0).map_err(|e| fail(CarrotIncompatible, e))
    })
}

#[no_mangle]
pub unsafe extern "C" fn carrot_model_live_count(model: *const CarrotModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.live.len())
}

#[no_mangle]
pub unsafe extern "C" fn carrot_model_runs(model: *const CarrotModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.runs_absorbed)
}

#[no_mangle]
pub unsafe extern "C" fn carrot_model_write(
    model: *const CarrotModel,
    out: *mut *mut c_char,
) -> CarrotStatus {
    guard(|| put_string(out, spectrum::write_model(&deref(model, "model")?.0)))
}

#[no_mangle]
pub unsafe extern "C" fn carrot_model_parse(
    src: *const c_char,
    out: *mut *mut CarrotModel,
) -> CarrotStatus {
    guard(|| {
        let m = spectrum::parse_model(text(src, "src")?).map_err(|e| fail(CarrotParseError, e))?;
        put(out, CarrotModel(m))
    })
}

#[no_mangle]
pub unsafe extern "C" fn carrot_model_free(model: *mut CarrotModel) {
    release(model)
}

#[no_mangle]
pub unsafe extern "C" fn carrot_diff(
    model: *const CarrotModel,
    bad: *const CarrotSpectrum,
    out: *mut *mut CarrotReport,
) -> CarrotStatus {
    guard(|| {
        let r = carrot::diff(&deref(model, "model")?.0, &deref(bad, "bad")?.0)
            .map_err(|e| fail(CarrotIncompatible, e))?;
        put(out, CarrotReport(r))
    })
}

#[no_mangle]
pub unsafe extern "C" fn carrot_report_invalidated_count(report: *const CarrotReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.invalidated.len())
}

/// Invalidations, value-set and pair-set extensions, and unmodeled points.
#[no_mangle]
pub unsafe extern "C" fn carrot_report_finding_count(report: *const CarrotReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.finding_count())
}

/// `format` is `CARROT_FORMAT_TEXT` or `CARROT_FORMAT_STRUCTURED`.
#[no_mangle]
pub unsafe extern "C" fn carrot_report_render(
    report: *const CarrotReport,
    format: u32,
    out: *mut *mut c_char,
) -> CarrotStatus {
    guard(|| {
        let format = match format {
            CARROT_FORMAT_TEXT => carrot::ReportFormat::Text,
            CARROT_FORMAT_STRUCTURED => carrot::ReportFormat::Structured,
            n => {
                return Err(fail(
                    CarrotInvalidArgument,
                    format!("unknown report format {n}"),
                ))
            }
        };
        put_string(
            out,
            carrot::render_report(&deref(report, "report")?.0, format),
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn carrot_report_free(report: *mut CarrotReport) {
    release(report)
}

#[no_mangle]
pub unsafe extern "C" fn carrot_program_parse(
    src: *const c_char,
    out: *mut *mut CarrotProgram,
) -> CarrotStatus {
    guard(|| {
        let p =
            minilang::parse_program(text(src, "src")?).map_err(|e| fail(CarrotParseError, e))?;
        put(out, CarrotProgram(p))
    })
}

/// Runs `entry` (null for the default entry) on `args` with default limits.
///
/// The trace is stored in `*out_trace` even when the run fails, so a halting
/// run can still be diffed. `out_result` and `out_trace` may be null.
#[no_mangle]
pub unsafe extern "C" fn carrot_program_run(
    program: *const CarrotProgram,
    entry: *const c_char,
    args: *const i64,
    arg_count: usize,
    run_id: *const c_char,
    out_result: *mut i64,
    out_trace: *mut *mut CarrotTrace,
) -> CarrotStatus {
    guard(|| {
        let program = &deref(program, "program")?.0;
        let entry = if entry.is_null() {
            program.default_entry().name.clone()
        } else {
            text(entry, "entry")?.to_owned()
        };
        let args = match arg_count {
            0 => Vec::new(),
            _ if args.is_null() => return Err(fail(CarrotNullArgument, "args is null")),
            n => std::slice::from_raw_parts(args, n).to_vec(),
        };
        let run_id = text(run_id, "run_id")?;
        let case = InputCase {
            entry,
            args,
            expected: None,
        };
        let traced = minilang::run_traced(program, &case, run_id, RunOptions::default());
        if !out_trace.is_null() {
            put(out_trace, CarrotTrace(traced.trace))?;
        }
        match traced.result {
            Ok(v) => {
                if !out_result.is_null() {
                    *out_result = v;
                }
                Ok(())
            }
            Err(e @ (RuntimeError::UnknownEntry(_) | RuntimeError::ArgCount { .. })) => {
                Err(fail(CarrotInvalidArgument, e))
            }
            Err(e) => Err(fail(CarrotRuntimeError, e)),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn carrot_program_free(program: *mut CarrotProgram) {
    release(program)
}
