//! Command implementations behind the `carrot` binary.
//!
//! Each command returns its stdout text so it can be exercised without
//! spawning a process; `main.rs` only parses arguments and prints.

use std::cmp::Ordering;
use std::fs;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::convergence::{convergence_curve, steady_state, DEFAULT_WINDOW};
use crate::diff::{diff, render_report, ReportFormat};
use crate::minilang::{parse_cases, parse_program, run_corpus, LabelRule, RunOptions};
use crate::spectrum::{
    build_model, compute_spectrum, parse_model, parse_stored, write_model, write_spectrum,
    EngineConfig, Spectrum, Stored,
};
use crate::trace::{parse_trace, write_trace};

pub const STEP_BUDGET_ENV: &str = "CARROT_STEP_BUDGET";
pub const DEFAULT_MODEL_PATH: &str = "carrot.model";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub engine: EngineConfig,
    pub window: NonZeroUsize,
    pub format: ReportFormat,
    pub out: Option<PathBuf>,
    pub run: RunOptions,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            engine: EngineConfig::default(),
            window: NonZeroUsize::new(DEFAULT_WINDOW).expect("nonzero default"),
            format: ReportFormat::Text,
            out: None,
            run: RunOptions::default(),
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        if self.engine.schemata.is_empty() && !self.engine.value_sets {
            bail!("nothing to compute: enable at least one schema or value sets");
        }
        Ok(())
    }
}

/// Reads `CARROT_STEP_BUDGET` if set.
pub fn step_budget_from_env() -> Result<Option<u64>> {
    match std::env::var(STEP_BUDGET_ENV) {
        Ok(v) => {
            let n: u64 = v
                .trim()
                .parse()
                .with_context(|| format!("{STEP_BUDGET_ENV}=`{v}` is not a positive integer"))?;
            if n == 0 {
                bail!("{STEP_BUDGET_ENV} must be positive");
            }
            Ok(Some(n))
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(e).context(STEP_BUDGET_ENV),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Orders `run_2` before `run_10`.
fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn chunks(s: &str) -> Vec<(bool, &str)> {
        let mut out = Vec::new();
        let mut start = 0;
        let bytes = s.as_bytes();
        for i in 1..=bytes.len() {
            if i == bytes.len() || bytes[i].is_ascii_digit() != bytes[start].is_ascii_digit() {
                out.push((bytes[start].is_ascii_digit(), &s[start..i]));
                start = i;
            }
        }
        out
    }
    let (ca, cb) = (chunks(a), chunks(b));
    for ((da, sa), (db, sb)) in ca.iter().zip(&cb) {
        let ord = if *da && *db {
            let (ta, tb) = (sa.trim_start_matches('0'), sb.trim_start_matches('0'));
            ta.len().cmp(&tb.len()).then_with(|| ta.cmp(tb))
        } else {
            sa.cmp(sb)
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    ca.len().cmp(&cb.len()).then_with(|| a.cmp(b))
}

/// Expands glob patterns; literal paths are taken as given. Each pattern's
/// matches are sorted naturally, patterns keep their command-line order.
pub fn expand_inputs(patterns: &[String]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for pat in patterns {
        if pat.contains(['*', '?', '[']) {
            let mut hits = glob::glob(pat)
                .with_context(|| format!("bad pattern `{pat}`"))?
                .collect::<Result<Vec<_>, _>>()?;
            hits.sort_by(|a, b| natural_cmp(&a.to_string_lossy(), &b.to_string_lossy()));
            out.extend(hits);
        } else {
            out.push(PathBuf::from(pat));
        }
    }
    if out.is_empty() {
        bail!("no traces matched {}", patterns.join(" "));
    }
    Ok(out)
}

/// A trace file is summarized under `config`; a spectrum file is used as is.
pub fn load_spectrum(path: &Path, config: &EngineConfig) -> Result<Spectrum> {
    let text = read(path)?;
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .unwrap_or("");
    if first.starts_with("spectrum") || first.starts_with("model") {
        return match parse_stored(&text).with_context(|| path.display().to_string())? {
            Stored::Spectrum(s) => Ok(s),
            Stored::Model(_) => bail!(
                "{} is a model, expected a trace or spectrum",
                path.display()
            ),
        };
    }
    let trace = parse_trace(&text).with_context(|| path.display().to_string())?;
    compute_spectrum(&trace, *config).with_context(|| path.display().to_string())
}

fn load_all(patterns: &[String], config: &EngineConfig) -> Result<Vec<Spectrum>> {
    expand_inputs(patterns)?
        .iter()
        .map(|p| load_spectrum(p, config))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TraceSummary {
    pub files: Vec<PathBuf>,
    pub good: usize,
    pub bad: usize,
    pub warnings: Vec<String>,
}

/// Runs every case and writes `run_<index>_<good|bad>.trace` into `out_dir`.
pub fn cmd_trace(
    program: &Path,
    cases: &Path,
    out_dir: &Path,
    rule: LabelRule,
    options: RunOptions,
) -> Result<TraceSummary> {
    let prog = parse_program(&read(program)?).with_context(|| program.display().to_string())?;
    let cases_list =
        parse_cases(&read(cases)?, &prog).with_context(|| cases.display().to_string())?;
    let mut summary = TraceSummary::default();
    if cases_list.is_empty() {
        summary.warnings.push(format!(
            "{} contains no cases; no traces written",
            cases.display()
        ));
        return Ok(summary);
    }
    let corpus = run_corpus(&prog, &cases_list, rule, options)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    for run in &corpus.runs {
        let label = if run.good { "good" } else { "bad" };
        let path = out_dir.join(format!("run_{}_{label}.trace", run.index));
        write(&path, &write_trace(&run.trace))?;
        if run.good {
            summary.good += 1;
        } else {
            summary.bad += 1;
        }
        summary.files.push(path);
    }
    Ok(summary)
}

pub fn cmd_spectrum(trace: &Path, config: &Config) -> Result<String> {
    config.validate()?;
    let spectrum = load_spectrum(trace, &config.engine)?;
    Ok(write_spectrum(&spectrum))
}

/// Builds the model and writes it to `config.out` (default `carrot.model`).
/// Returns the stdout summary.
pub fn cmd_model(patterns: &[String], config: &Config) -> Result<String> {
    config.validate()?;
    let spectra = load_all(patterns, &config.engine)?;
    let model = build_model(&spectra)?;
    let out = config
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_MODEL_PATH));
    write(&out, &write_model(&model))?;
    Ok(format!(
        "live invariants: {}\nruns absorbed: {}\nwrote {}\n",
        model.live.len(),
        model.runs_absorbed,
        out.display()
    ))
}

/// Diffs a bad run against a cached model. The bad trace is summarized with
/// the model's own settings.
pub fn cmd_diff(model: &Path, bad: &Path, format: ReportFormat) -> Result<String> {
    let model = parse_model(&read(model)?).with_context(|| model.display().to_string())?;
    let spectrum = load_spectrum(bad, &model.config)?;
    let report = diff(&model, &spectrum)?;
    Ok(render_report(&report, format))
}

/// Returns `(csv, steady-state line)`.
pub fn cmd_converge(patterns: &[String], config: &Config) -> Result<(String, String)> {
    config.validate()?;
    let spectra = load_all(patterns, &config.engine)?;
    let curve = convergence_curve(&spectra)?;
    let state = match steady_state(&curve, config.window) {
        Some(i) => format!("steady_state={i}\n"),
        None => "steady_state=none\n".to_owned(),
    };
    Ok((curve.to_csv(), state))
}
