//! Input cases and corpus execution.
//!
//! Case file lines look like `[entry] arg1 arg2 ... [-> expected]`. The
//! entry defaults to the program's `main` (or first) function.

use std::str::FromStr;

use thiserror::Error;

use super::interp::{run_traced, RunOptions, RuntimeError};
use super::Program;
use crate::trace::{self, Trace};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputCase {
    pub entry: String,
    pub args: Vec<i64>,
    /// Oracle output used to label the run good or bad.
    pub expected: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct CaseError {
    pub line: usize,
    pub msg: String,
}

pub fn parse_cases(text: &str, program: &Program) -> Result<Vec<InputCase>, CaseError> {
    let mut out = Vec::new();
    for (line, raw) in trace::lines(text) {
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let err = |msg: String| CaseError { line, msg };
        let (lhs, expected) = match raw.split_once("->") {
            Some((lhs, rhs)) => {
                let rhs = rhs.trim();
                let v = trace::parse_int(rhs)
                    .ok_or_else(|| err(format!("expected value `{rhs}` is not an integer")))?;
                (lhs, Some(v))
            }
            None => (raw, None),
        };
        let mut words = lhs.split_whitespace().peekable();
        let entry = match words.peek() {
            Some(w) if trace::is_identifier(w) => {
                let name = words.next().unwrap_or_default();
                program
                    .function(name)
                    .ok_or_else(|| err(format!("no function named `{name}`")))?
            }
            _ => program.default_entry(),
        };
        let args = words
            .map(|w| {
                trace::parse_int(w).ok_or_else(|| err(format!("argument `{w}` is not an integer")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if args.len() != entry.params.len() {
            return Err(err(format!(
                "`{}` takes {} argument(s), case has {}",
                entry.name,
                entry.params.len(),
                args.len()
            )));
        }
        out.push(InputCase {
            entry: entry.name.clone(),
            args,
            expected,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelRule {
    /// Good iff the result equals the case's expected value.
    #[default]
    Oracle,
    /// Good unless the run halts.
    HaltOnly,
}

impl FromStr for LabelRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(LabelRule::Oracle),
            "halt" => Ok(LabelRule::HaltOnly),
            _ => Err(format!(
                "unknown label rule `{s}` (expected oracle or halt)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("case {index} has no expected value, required for oracle labeling")]
    MissingExpected { index: usize },
    #[error("case {index}: {error}")]
    Runtime { index: usize, error: RuntimeError },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledRun {
    /// 1-based position in the case list.
    pub index: usize,
    pub case: InputCase,
    pub result: Result<i64, RuntimeError>,
    pub trace: Trace,
    pub good: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub runs: Vec<LabeledRun>,
}

impl Corpus {
    pub fn good(&self) -> impl Iterator<Item = &LabeledRun> {
        self.runs.iter().filter(|r| r.good)
    }

    pub fn bad(&self) -> impl Iterator<Item = &LabeledRun> {
        self.runs.iter().filter(|r| !r.good)
    }

    /// `(good traces, bad traces)` in case order.
    pub fn into_partition(self) -> (Vec<Trace>, Vec<Trace>) {
        let (good, bad): (Vec<_>, Vec<_>) = self.runs.into_iter().partition(|r| r.good);
        (
            good.into_iter().map(|r| r.trace).collect(),
            bad.into_iter().map(|r| r.trace).collect(),
        )
    }
}

/// Runs every case (run ids `run_<index>`) and labels it. A halting run is
/// bad; any other runtime failure aborts the corpus.
pub fn run_corpus(
    program: &Program,
    cases: &[InputCase],
    rule: LabelRule,
    options: RunOptions,
) -> Result<Corpus, CorpusError> {
    if rule == LabelRule::Oracle {
        if let Some(i) = cases.iter().position(|c| c.expected.is_none()) {
            return Err(CorpusError::MissingExpected { index: i + 1 });
        }
    }
    let mut runs = Vec::with_capacity(cases.len());
    for (i, case) in cases.iter().enumerate() {
        let index = i + 1;
        let traced = run_traced(program, case, &format!("run_{index}"), options);
        let good = match (&traced.result, rule) {
            (Ok(v), LabelRule::Oracle) => Some(*v) == case.expected,
            (Ok(_), LabelRule::HaltOnly) => true,
            (Err(RuntimeError::Halt { .. }), _) => false,
            (Err(e), _) => {
                return Err(CorpusError::Runtime {
                    index,
                    error: e.clone(),
                })
            }
        };
        runs.push(LabeledRun {
            index,
            case: case.clone(),
            result: traced.result,
            trace: traced.trace,
            good,
        });
    }
    Ok(Corpus { runs })
}
