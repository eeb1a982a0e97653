//! Fault localization with potential invariants.
//!
//! Execution traces are summarized into per-run *spectra* (the invariants a
//! run leaves unfalsified plus the values it observed), good-run spectra are
//! combined into a *model*, and a failing run is contrasted with that model
//! to report which invariants it violates.
//!
//! The pipeline, bottom-up:
//!
//! - [`trace`]: program points, samples, and the trace text format.
//! - [`invariant`]: the four schemata, value sets, pair value sets.
//! - [`spectrum`]: per-run spectra, the model, and their on-disk format.
//! - [`diff`](mod@diff): the localization report.
//! - [`convergence`]: model evolution and steady-state detection.
//! - [`minilang`]: a traced toy language used to produce traces.
//! - [`cli`]: the `carrot` command-line front end.

pub mod cli;
pub mod convergence;
pub mod diff;
pub mod fixtures;
pub mod invariant;
pub mod minilang;
pub mod spectrum;
pub mod trace;

pub use convergence::{convergence_curve, steady_state, ConvergenceCurve, CurveRecord};
pub use diff::{diff, render_report, DiffReport, ReportFormat};
pub use invariant::{
    instantiate_all, update_invariant, update_value_sets, InvariantInstance, Schema, SchemaSet,
    Status,
};
pub use spectrum::{
    absorb, build_model, compute_spectrum, Engine, EngineConfig, Model, ModelError, Spectrum,
};
pub use trace::{parse_trace, write_trace, PointKind, PptId, ProgramPoint, Sample, Trace};
