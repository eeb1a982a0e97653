//! Execution traces: program points, samples, and the line-oriented text
//! encoding shared by the interpreter (producer) and the engine (consumer).
//!
//! ```text
//! # comment
//! run <run_id>
//! ppt <name>:::<ENTER|EXIT>
//! var <name> int
//!
//! sample <name>:::<ENTER|EXIT> <v1> ... <vk>
//! ```
//!
//! Sample serials are implicit: the i-th `sample` line has serial i.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Name of the distinguished variable holding a function's return value.
pub const RETURN_VAR: &str = "return";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PointKind {
    Entry,
    Exit,
}

impl PointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PointKind::Entry => "ENTER",
            PointKind::Exit => "EXIT",
        }
    }
}

/// Identity of a program point: `(function name, entry/exit)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PptId {
    pub name: String,
    pub kind: PointKind,
}

impl PptId {
    pub fn new(name: impl Into<String>, kind: PointKind) -> Self {
        PptId {
            name: name.into(),
            kind,
        }
    }

    pub fn entry(name: impl Into<String>) -> Self {
        Self::new(name, PointKind::Entry)
    }

    pub fn exit(name: impl Into<String>) -> Self {
        Self::new(name, PointKind::Exit)
    }
}

impl fmt::Display for PptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:::{}", self.name, self.kind.as_str())
    }
}

impl FromStr for PptId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, kind) = s
            .split_once(":::")
            .ok_or_else(|| format!("expected `<name>:::<ENTER|EXIT>`, found `{s}`"))?;
        let kind = match kind {
            "ENTER" => PointKind::Entry,
            "EXIT" => PointKind::Exit,
            other => return Err(format!("unknown point kind `{other}`")),
        };
        if !is_point_name(name) {
            return Err(format!("invalid program point name `{name}`"));
        }
        Ok(PptId::new(name, kind))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueType {
    Int,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarDecl {
    pub name: String,
    pub vtype: ValueType,
}

impl VarDecl {
    pub fn int(name: impl Into<String>) -> Self {
        VarDecl {
            name: name.into(),
            vtype: ValueType::Int,
        }
    }
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c == '_' || c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c == '_' || c.is_ascii_alphanumeric())
}

fn is_point_name(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c == ':')
}

/// Structural violations of the trace data model.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("run id must be a nonempty token without whitespace")]
    BadRunId,
    #[error("invalid program point name `{0}`")]
    BadPointName(String),
    #[error("invalid variable name `{name}` at {ppt}")]
    BadVarName { ppt: PptId, name: String },
    #[error("variable `{name}` declared twice at {ppt}")]
    DuplicateVar { ppt: PptId, name: String },
    #[error("{0} must declare `return` as its last variable")]
    MissingReturn(PptId),
    #[error("{0} is an entry point and may not declare `return`")]
    ReturnAtEntry(PptId),
    #[error("program point {0} declared twice")]
    DuplicatePoint(PptId),
    #[error("sample references undeclared program point {0}")]
    UndeclaredPoint(PptId),
    #[error("sample at {ppt} has {found} values, expected {expected}")]
    Arity {
        ppt: PptId,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProgramPoint {
    id: PptId,
    decls: Vec<VarDecl>,
}

impl ProgramPoint {
    pub fn new(id: PptId, decls: Vec<VarDecl>) -> Result<Self, TraceError> {
        if !is_point_name(&id.name) {
            return Err(TraceError::BadPointName(id.name));
        }
        let mut seen = HashSet::new();
        for d in &decls {
            if !is_identifier(&d.name) {
                return Err(TraceError::BadVarName {
                    ppt: id,
                    name: d.name.clone(),
                });
            }
            if !seen.insert(d.name.as_str()) {
                return Err(TraceError::DuplicateVar {
                    ppt: id,
                    name: d.name.clone(),
                });
            }
        }
        let return_pos = decls.iter().position(|d| d.name == RETURN_VAR);
        match id.kind {
            PointKind::Entry if return_pos.is_some() => return Err(TraceError::ReturnAtEntry(id)),
            PointKind::Exit if return_pos != Some(decls.len().wrapping_sub(1)) => {
                return Err(TraceError::MissingReturn(id))
            }
            _ => {}
        }
        Ok(ProgramPoint { id, decls })
    }

    /// Shorthand for an all-int point built from variable names.
    pub fn with_vars<S: AsRef<str>>(id: PptId, vars: &[S]) -> Result<Self, TraceError> {
        Self::new(id, vars.iter().map(|v| VarDecl::int(v.as_ref())).collect())
    }

    pub fn id(&self) -> &PptId {
        &self.id
    }

    pub fn decls(&self) -> &[VarDecl] {
        &self.decls
    }

    pub fn var_names(&self) -> impl Iterator<Item = &str> {
        self.decls.iter().map(|d| d.name.as_str())
    }

    pub fn index_of(&self, var: &str) -> Option<usize> {
        self.decls.iter().position(|d| d.name == var)
    }

    pub fn arity(&self) -> usize {
        self.decls.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sample {
    pub ppt: PptId,
    pub values: Vec<i64>,
    pub serial: u64,
}

/// One run's observations. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    run_id: String,
    points: BTreeMap<PptId, ProgramPoint>,
    samples: Vec<Sample>,
}

impl Trace {
    /// Builds a validated trace. Samples receive serials in list order.
    pub fn new(
        run_id: impl Into<String>,
        points: impl IntoIterator<Item = ProgramPoint>,
        samples: impl IntoIterator<Item = (PptId, Vec<i64>)>,
    ) -> Result<Self, TraceError> {
        let run_id = run_id.into();
        if run_id.is_empty() || run_id.chars().any(char::is_whitespace) {
            return Err(TraceError::BadRunId);
        }
        let mut table = BTreeMap::new();
        for p in points {
            if table.contains_key(p.id()) {
                return Err(TraceError::DuplicatePoint(p.id().clone()));
            }
            table.insert(p.id().clone(), p);
        }
        let mut out = Vec::new();
        for (serial, (ppt, values)) in samples.into_iter().enumerate() {
            check_sample(&table, &ppt, values.len())?;
            out.push(Sample {
                ppt,
                values,
                serial: serial as u64,
            });
        }
        Ok(Trace {
            run_id,
            points: table,
            samples: out,
        })
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn points(&self) -> &BTreeMap<PptId, ProgramPoint> {
        &self.points
    }

    pub fn point(&self, id: &PptId) -> Option<&ProgramPoint> {
        self.points.get(id)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Same trace under a different run id.
    pub fn renamed(mut self, run_id: impl Into<String>) -> Result<Self, TraceError> {
        let run_id = run_id.into();
        if run_id.is_empty() || run_id.chars().any(char::is_whitespace) {
            return Err(TraceError::BadRunId);
        }
        self.run_id = run_id;
        Ok(self)
    }
}

fn check_sample(
    table: &BTreeMap<PptId, ProgramPoint>,
    ppt: &PptId,
    found: usize,
) -> Result<(), TraceError> {
    let point = table
        .get(ppt)
        .ok_or_else(|| TraceError::UndeclaredPoint(ppt.clone()))?;
    if point.arity() != found {
        return Err(TraceError::Arity {
            ppt: ppt.clone(),
            expected: point.arity(),
            found,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("`{0}` is not a 64-bit integer")]
    NotAnInteger(String),
    #[error(transparent)]
    Invalid(#[from] TraceError),
}

/// Splits a line into `(1-based column, token)` pairs.
pub(crate) fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out.into_iter().map(|(s, t)| (s + 1, t)).collect()
}

pub(crate) fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .enumerate()
        .map(|(i, l)| (i + 1, l))
}

struct PendingPoint {
    id: PptId,
    line: usize,
    decls: Vec<VarDecl>,
}

pub fn parse_trace(text: &str) -> Result<Trace, ParseError> {
    let err = |line, column, kind: ParseErrorKind| ParseError { line, column, kind };
    let syntax = |line, column, msg: String| err(line, column, ParseErrorKind::Syntax(msg));

    let mut run_id: Option<String> = None;
    let mut points: BTreeMap<PptId, ProgramPoint> = BTreeMap::new();
    let mut open: Option<PendingPoint> = None;
    let mut samples: Vec<Sample> = Vec::new();
    let mut last_line = 0;

    let close = |open: &mut Option<PendingPoint>,
                 points: &mut BTreeMap<PptId, ProgramPoint>|
     -> Result<(), ParseError> {
        if let Some(p) = open.take() {
            if points.contains_key(&p.id) {
                return Err(err(p.line, 5, TraceError::DuplicatePoint(p.id).into()));
            }
            let point = ProgramPoint::new(p.id, p.decls).map_err(|e| err(p.line, 1, e.into()))?;
            points.insert(point.id().clone(), point);
        }
        Ok(())
    };

    for (lineno, line) in lines(text) {
        last_line = lineno;
        let toks = tokens(line);
        let Some(&(col, head)) = toks.first() else {
            close(&mut open, &mut points)?;
            continue;
        };
        if head.starts_with('#') {
            continue;
        }
        if run_id.is_none() && head != "run" {
            return Err(syntax(
                lineno,
                col,
                "expected `run <run_id>` before any other line".into(),
            ));
        }
        match head {
            "run" => {
                if run_id.is_some() {
                    return Err(syntax(lineno, col, "duplicate `run` line".into()));
                }
                match toks.as_slice() {
                    [_, (_, id)] => run_id = Some((*id).to_owned()),
                    [_] => return Err(syntax(lineno, col, "missing run id".into())),
                    [_, _, (c, _), ..] => {
                        return Err(syntax(lineno, *c, "run id must be a single token".into()))
                    }
                    [] => unreachable!(),
                }
            }
            "ppt" => {
                close(&mut open, &mut points)?;
                if !samples.is_empty() {
                    return Err(syntax(
                        lineno,
                        col,
                        "`ppt` declaration after samples".into(),
                    ));
                }
                let (pcol, spec) = match toks.as_slice() {
                    [_, t] => *t,
                    [_] => return Err(syntax(lineno, col, "missing program point".into())),
                    [_, _, (c, _), ..] => {
                        return Err(syntax(
                            lineno,
                            *c,
                            "unexpected token after program point".into(),
                        ))
                    }
                    [] => unreachable!(),
                };
                let id: PptId = spec.parse().map_err(|m| syntax(lineno, pcol, m))?;
                open = Some(PendingPoint {
                    id,
                    line: lineno,
                    decls: Vec::new(),
                });
            }
            "var" => {
                let Some(p) = open.as_mut() else {
                    return Err(syntax(lineno, col, "`var` outside a `ppt` block".into()));
                };
                match toks.as_slice() {
                    [_, (ncol, name), (tcol, ty)] => {
                        if *ty != "int" {
                            return Err(syntax(lineno, *tcol, format!("unsupported type `{ty}`")));
                        }
                        if !is_identifier(name) {
                            let e = TraceError::BadVarName {
                                ppt: p.id.clone(),
                                name: (*name).to_owned(),
                            };
                            return Err(err(lineno, *ncol, e.into()));
                        }
                        if p.decls.iter().any(|d| d.name == *name) {
                            let e = TraceError::DuplicateVar {
                                ppt: p.id.clone(),
                                name: (*name).to_owned(),
                            };
                            return Err(err(lineno, *ncol, e.into()));
                        }
                        p.decls.push(VarDecl::int(*name));
                    }
                    _ => return Err(syntax(lineno, col, "expected `var <name> int`".into())),
                }
            }
            "sample" => {
                close(&mut open, &mut points)?;
                let Some(&(pcol, spec)) = toks.get(1) else {
                    return Err(syntax(lineno, col, "missing program point".into()));
                };
                let ppt: PptId = spec.parse().map_err(|m| syntax(lineno, pcol, m))?;
                let mut values = Vec::with_capacity(toks.len() - 2);
                for &(vcol, v) in &toks[2..] {
                    let n = parse_int(v)
                        .ok_or_else(|| err(lineno, vcol, ParseErrorKind::NotAnInteger(v.into())))?;
                    values.push(n);
                }
                check_sample(&points, &ppt, values.len())
                    .map_err(|e| err(lineno, pcol, e.into()))?;
                let serial = samples.len() as u64;
                samples.push(Sample {
                    ppt,
                    values,
                    serial,
                });
            }
            other => return Err(syntax(lineno, col, format!("unknown directive `{other}`"))),
        }
    }
    close(&mut open, &mut points)?;

    let Some(run_id) = run_id else {
        return Err(syntax(
            last_line.max(1),
            1,
            "missing `run <run_id>` line".into(),
        ));
    };
    Ok(Trace {
        run_id,
        points,
        samples,
    })
}

/// Decimal with optional leading `-`; no `+`, no whitespace.
pub(crate) fn parse_int(s: &str) -> Option<i64> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Canonical encoding: points sorted by `(name, kind)`, one blank line after
/// each block, samples in serial order, single spaces, LF endings.
pub fn write_trace(trace: &Trace) -> String {
    use std::fmt::Write as _;

    let mut out = String::new();
    let _ = writeln!(out, "run {}", trace.run_id);
    for point in trace.points.values() {
        let _ = writeln!(out, "ppt {}", point.id);
        for d in &point.decls {
            let _ = writeln!(out, "var {} int", d.name);
        }
        out.push('\n');
    }
    for s in &trace.samples {
        let _ = write!(out, "sample {}", s.ppt);
        for v in &s.values {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}
