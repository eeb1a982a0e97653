//! Per-run spectra and the good-run model.
//!
//! A spectrum is the set of invariants still live after one run, together
//! with the run's value sets and pair value sets. A model is the
//! intersection of good-run live sets and the union of their value sets.
//!
//! Two routes produce a model: [`build_model`] folds per-run spectra, and
//! [`Engine`] streams all good traces through one set of instances. They
//! agree because constants bind on first observation and a run that never
//! reaches a point kills every candidate there.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::invariant::{
    candidate_count, instantiate_all, InvariantInstance, PointSets, Schema, SchemaSet,
};
use crate::trace::{
    self, ParseError, ParseErrorKind, PointKind, PptId, ProgramPoint, Trace, VarDecl,
};

/// Which program points the engine instantiates at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PointSelection {
    #[default]
    All,
    Entry,
    Exit,
}

impl PointSelection {
    pub fn admits(self, kind: PointKind) -> bool {
        match self {
            PointSelection::All => true,
            PointSelection::Entry => kind == PointKind::Entry,
            PointSelection::Exit => kind == PointKind::Exit,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PointSelection::All => "all",
            PointSelection::Entry => "entry",
            PointSelection::Exit => "exit",
        }
    }
}

impl FromStr for PointSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(PointSelection::All),
            "entry" => Ok(PointSelection::Entry),
            "exit" => Ok(PointSelection::Exit),
            _ => Err(format!(
                "unknown point selection `{s}` (expected all, entry, exit)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EngineConfig {
    pub schemata: SchemaSet,
    pub value_sets: bool,
    pub pair_sets: bool,
    pub points: PointSelection,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            schemata: SchemaSet::ALL,
            value_sets: true,
            pair_sets: true,
            points: PointSelection::All,
        }
    }
}

impl EngineConfig {
    pub fn with_schemata(schemata: SchemaSet) -> Self {
        EngineConfig {
            schemata,
            ..Self::default()
        }
    }
}

/// A variable at a program point.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarRef {
    pub ppt: PptId,
    pub var: String,
}

/// An unordered variable pair at a program point, stored with
/// `first < second`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairRef {
    pub ppt: PptId,
    pub first: String,
    pub second: String,
}

pub type ValueSets = BTreeMap<VarRef, BTreeSet<i64>>;
pub type PairSets = BTreeMap<PairRef, BTreeSet<(i64, i64)>>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("no spectra to combine")]
    Empty,
    #[error("{ppt} is declared with different variables ({left} vs {right})")]
    IncompatiblePoint {
        ppt: PptId,
        left: String,
        right: String,
    },
    #[error("spectra were computed with different settings ({left} vs {right})")]
    IncompatibleConfig { left: String, right: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spectrum {
    pub run_id: String,
    pub config: EngineConfig,
    pub points: BTreeMap<PptId, ProgramPoint>,
    /// Points with at least one sample in the run.
    pub observed: BTreeSet<PptId>,
    pub live: BTreeSet<InvariantInstance>,
    pub vsets: ValueSets,
    pub psets: PairSets,
}

impl Spectrum {
    /// Candidates instantiated at the observed points, i.e. the live set
    /// before the run falsified anything.
    pub fn candidate_count(&self) -> usize {
        self.observed
            .iter()
            .filter_map(|id| self.points.get(id))
            .map(|p| candidate_count(p.arity(), self.config.schemata))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub config: EngineConfig,
    pub points: BTreeMap<PptId, ProgramPoint>,
    /// Points observed by at least one contributing run.
    pub observed: BTreeSet<PptId>,
    pub live: BTreeSet<InvariantInstance>,
    pub vsets: ValueSets,
    pub psets: PairSets,
    pub runs_absorbed: usize,
}

impl Model {
    pub fn from_spectrum(s: &Spectrum) -> Self {
        Model {
            config: s.config,
            points: s.points.clone(),
            observed: s.observed.clone(),
            live: s.live.clone(),
            vsets: s.vsets.clone(),
            psets: s.psets.clone(),
            runs_absorbed: 1,
        }
    }

    /// Folds one more spectrum in: intersect live sets, union value sets.
    pub fn absorb(&mut self, s: &Spectrum) -> Result<(), ModelError> {
        check_config(&self.config, &s.config)?;
        merge_points(&mut self.points, &s.points)?;
        self.live.retain(|inv| s.live.contains(inv));
        self.observed.extend(s.observed.iter().cloned());
        union_sets(&mut self.vsets, &s.vsets);
        union_sets(&mut self.psets, &s.psets);
        self.runs_absorbed += 1;
        Ok(())
    }
}

fn check_config(a: &EngineConfig, b: &EngineConfig) -> Result<(), ModelError> {
    if a != b {
        return Err(ModelError::IncompatibleConfig {
            left: describe_config(a),
            right: describe_config(b),
        });
    }
    Ok(())
}

fn describe_config(c: &EngineConfig) -> String {
    format!(
        "schemata={} vsets={} psets={} points={}",
        c.schemata,
        on_off(c.value_sets),
        on_off(c.pair_sets),
        c.points.as_str()
    )
}

fn decl_list(p: &ProgramPoint) -> String {
    p.var_names().collect::<Vec<_>>().join(",")
}

pub(crate) fn check_point(
    table: &BTreeMap<PptId, ProgramPoint>,
    point: &ProgramPoint,
) -> Result<(), ModelError> {
    match table.get(point.id()) {
        Some(existing) if existing.decls() != point.decls() => Err(ModelError::IncompatiblePoint {
            ppt: point.id().clone(),
            left: decl_list(existing),
            right: decl_list(point),
        }),
        _ => Ok(()),
    }
}

fn merge_points(
    into: &mut BTreeMap<PptId, ProgramPoint>,
    from: &BTreeMap<PptId, ProgramPoint>,
) -> Result<(), ModelError> {
    for p in from.values() {
        check_point(into, p)?;
    }
    for (id, p) in from {
        into.entry(id.clone()).or_insert_with(|| p.clone());
    }
    Ok(())
}

fn union_sets<K: Ord + Clone, V: Ord + Clone>(
    into: &mut BTreeMap<K, BTreeSet<V>>,
    from: &BTreeMap<K, BTreeSet<V>>,
) {
    for (k, vs) in from {
        into.entry(k.clone())
            .or_default()
            .extend(vs.iter().cloned());
    }
}

pub fn compute_spectrum(trace: &Trace, config: EngineConfig) -> Result<Spectrum, ModelError> {
    let mut engine = Engine::new(config);
    engine.absorb_trace(trace)?;
    Ok(engine.spectrum(trace.run_id()))
}

/// Intersection of the live sets and union of the value sets.
pub fn build_model(spectra: &[Spectrum]) -> Result<Model, ModelError> {
    let (first, rest) = spectra.split_first().ok_or(ModelError::Empty)?;
    let mut model = Model::from_spectrum(first);
    for s in rest {
        model.absorb(s)?;
    }
    Ok(model)
}

pub fn absorb(model: &Model, spectrum: &Spectrum) -> Result<Model, ModelError> {
    let mut next = model.clone();
    next.absorb(spectrum)?;
    Ok(next)
}

struct PointState {
    point: ProgramPoint,
    instances: Vec<(InvariantInstance, [usize; 2])>,
    sets: PointSets,
}

/// Streaming engine: feeds every sample of every absorbed trace through a
/// single set of invariant instances.
pub struct Engine {
    config: EngineConfig,
    states: BTreeMap<PptId, PointState>,
    observed: BTreeSet<PptId>,
    runs: usize,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Self {
        Engine {
            config,
            states: BTreeMap::new(),
            observed: BTreeSet::new(),
            runs: 0,
        }
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    /// Absorbs one run. Points the run never reaches lose all their
    /// candidates, matching intersection with that run's spectrum.
    pub fn absorb_trace(&mut self, trace: &Trace) -> Result<(), ModelError> {
        let selected: Vec<&ProgramPoint> = trace
            .points()
            .values()
            .filter(|p| self.config.points.admits(p.id().kind))
            .collect();
        for p in &selected {
            if let Some(st) = self.states.get(p.id()) {
                let table = BTreeMap::from([(st.point.id().clone(), st.point.clone())]);
                check_point(&table, p)?;
            }
        }
        for p in selected {
            if !self.states.contains_key(p.id()) {
                let mut st = self.fresh_state(p);
                if self.runs > 0 {
                    // earlier runs never reached this point
                    st.instances.iter_mut().for_each(|(inv, _)| inv.falsify());
                }
                self.states.insert(p.id().clone(), st);
            }
        }

        let mut seen = BTreeSet::new();
        let (with_values, with_pairs) = (self.config.value_sets, self.config.pair_sets);
        for s in trace.samples() {
            let Some(st) = self.states.get_mut(&s.ppt) else {
                continue;
            };
            for (inv, [a, b]) in &mut st.instances {
                inv.apply(s.values[*a], s.values[*b]);
            }
            st.sets.observe(&s.values, with_values, with_pairs);
            seen.insert(&s.ppt);
        }
        for (id, st) in &mut self.states {
            if !seen.contains(id) {
                st.instances.iter_mut().for_each(|(inv, _)| inv.falsify());
            }
        }
        self.observed.extend(seen.into_iter().cloned());
        self.runs += 1;
        Ok(())
    }

    fn fresh_state(&self, point: &ProgramPoint) -> PointState {
        let instances = instantiate_all(point, self.config.schemata)
            .into_iter()
            .map(|inv| {
                let idx = inv
                    .slot_indices(point)
                    .expect("instantiated from the point's own variables");
                (inv, idx)
            })
            .collect();
        PointState {
            point: point.clone(),
            instances,
            sets: PointSets::new(point),
        }
    }

    fn live(&self) -> BTreeSet<InvariantInstance> {
        self.states
            .values()
            .flat_map(|st| st.instances.iter().map(|(inv, _)| inv))
            .filter(|inv| inv.is_live())
            .cloned()
            .collect()
    }

    fn sets(&self) -> (ValueSets, PairSets) {
        let mut vsets = ValueSets::new();
        let mut psets = PairSets::new();
        for (id, st) in &self.states {
            if !self.observed.contains(id) {
                continue;
            }
            if self.config.value_sets {
                for vs in &st.sets.values {
                    let key = VarRef {
                        ppt: id.clone(),
                        var: vs.var.clone(),
                    };
                    vsets.insert(key, vs.values.clone());
                }
            }
            if self.config.pair_sets {
                for ps in &st.sets.pairs {
                    let key = PairRef {
                        ppt: id.clone(),
                        first: ps.vars.0.clone(),
                        second: ps.vars.1.clone(),
                    };
                    psets.insert(key, ps.pairs.clone());
                }
            }
        }
        (vsets, psets)
    }

    fn points(&self) -> BTreeMap<PptId, ProgramPoint> {
        self.states
            .iter()
            .map(|(id, st)| (id.clone(), st.point.clone()))
            .collect()
    }

    pub fn spectrum(&self, run_id: &str) -> Spectrum {
        let (vsets, psets) = self.sets();
        Spectrum {
            run_id: run_id.to_owned(),
            config: self.config,
            points: self.points(),
            observed: self.observed.clone(),
            live: self.live(),
            vsets,
            psets,
        }
    }

    pub fn model(&self) -> Model {
        let (vsets, psets) = self.sets();
        Model {
            config: self.config,
            points: self.points(),
            observed: self.observed.clone(),
            live: self.live(),
            vsets,
            psets,
            runs_absorbed: self.runs,
        }
    }
}

// ---- text encoding ----

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

struct Body<'a> {
    config: &'a EngineConfig,
    points: &'a BTreeMap<PptId, ProgramPoint>,
    observed: &'a BTreeSet<PptId>,
    live: &'a BTreeSet<InvariantInstance>,
    vsets: &'a ValueSets,
    psets: &'a PairSets,
}

impl fmt::Display for Body<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "schemata {}", self.config.schemata)?;
        writeln!(f, "vsets {}", on_off(self.config.value_sets))?;
        writeln!(f, "psets {}", on_off(self.config.pair_sets))?;
        writeln!(f, "points {}", self.config.points.as_str())?;
        for p in self.points.values() {
            write!(f, "ppt {}", p.id())?;
            for v in p.var_names() {
                write!(f, " {v}")?;
            }
            writeln!(f)?;
        }
        for id in self.observed {
            writeln!(f, "seen {id}")?;
        }
        for inv in self.live {
            write!(f, "inv {} {}", inv.ppt(), inv.kind().name())?;
            for s in inv.slots() {
                write!(f, " {s}")?;
            }
            if let Some(c) = inv.learned_const() {
                write!(f, " {c}")?;
            }
            writeln!(f)?;
        }
        for (k, vs) in self.vsets {
            write!(f, "vset {} {}", k.ppt, k.var)?;
            for v in vs {
                write!(f, " {v}")?;
            }
            writeln!(f)?;
        }
        for (k, ps) in self.psets {
            write!(f, "pset {} {} {}", k.ppt, k.first, k.second)?;
            for (a, b) in ps {
                write!(f, " ({a},{b})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Canonical, sorted, line-oriented encoding of a spectrum.
pub fn write_spectrum(s: &Spectrum) -> String {
    let mut out = format!("spectrum {}\n", s.run_id);
    let body = Body {
        config: &s.config,
        points: &s.points,
        observed: &s.observed,
        live: &s.live,
        vsets: &s.vsets,
        psets: &s.psets,
    };
    let _ = write!(out, "{body}");
    out
}

pub fn write_model(m: &Model) -> String {
    let mut out = format!("model {}\n", m.runs_absorbed);
    let body = Body {
        config: &m.config,
        points: &m.points,
        observed: &m.observed,
        live: &m.live,
        vsets: &m.vsets,
        psets: &m.psets,
    };
    let _ = write!(out, "{body}");
    out
}

/// Contents of a spectrum or model file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stored {
    Spectrum(Spectrum),
    Model(Model),
}

pub fn parse_spectrum(text: &str) -> Result<Spectrum, ParseError> {
    match parse_stored(text)? {
        Stored::Spectrum(s) => Ok(s),
        Stored::Model(_) => Err(perr(1, 1, "expected a spectrum file, found a model".into())),
    }
}

pub fn parse_model(text: &str) -> Result<Model, ParseError> {
    match parse_stored(text)? {
        Stored::Model(m) => Ok(m),
        Stored::Spectrum(s) => {
            // a single spectrum is a one-run model
            Ok(Model::from_spectrum(&s))
        }
    }
}

fn perr(line: usize, column: usize, msg: String) -> ParseError {
    ParseError {
        line,
        column,
        kind: ParseErrorKind::Syntax(msg),
    }
}

fn int_at(line: usize, (col, tok): (usize, &str)) -> Result<i64, ParseError> {
    trace::parse_int(tok).ok_or(ParseError {
        line,
        column: col,
        kind: ParseErrorKind::NotAnInteger(tok.to_owned()),
    })
}

fn pair_at(line: usize, (col, tok): (usize, &str)) -> Result<(i64, i64), ParseError> {
    let bad = || perr(line, col, format!("expected `(v,w)`, found `{tok}`"));
    let inner = tok
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(bad)?;
    let (a, b) = inner.split_once(',').ok_or_else(bad)?;
    match (trace::parse_int(a), trace::parse_int(b)) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(bad()),
    }
}

fn flag_at(line: usize, (col, tok): (usize, &str)) -> Result<bool, ParseError> {
    match tok {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => Err(perr(
            line,
            col,
            format!("expected `on` or `off`, found `{tok}`"),
        )),
    }
}

pub fn parse_stored(text: &str) -> Result<Stored, ParseError> {
    enum Header {
        Spectrum(String),
        Model(usize),
    }
    let mut header = None;
    let mut config = EngineConfig::default();
    let mut points = BTreeMap::new();
    let mut observed = BTreeSet::new();
    let mut live = BTreeSet::new();
    let mut vsets = ValueSets::new();
    let mut psets = PairSets::new();

    let lookup_point = |points: &BTreeMap<PptId, ProgramPoint>, line, (col, tok): (usize, &str)| {
        let id: PptId = tok.parse().map_err(|m| perr(line, col, m))?;
        points
            .get(&id)
            .cloned()
            .ok_or_else(|| perr(line, col, format!("program point {id} is not declared")))
    };
    let check_var = |p: &ProgramPoint, line, (col, v): (usize, &str)| {
        if p.index_of(v).is_none() {
            return Err(perr(
                line,
                col,
                format!("`{v}` is not a variable of {}", p.id()),
            ));
        }
        Ok(v.to_owned())
    };

    for (lineno, raw) in trace::lines(text) {
        let toks = trace::tokens(raw);
        let Some(&(col, head)) = toks.first() else {
            continue;
        };
        if head.starts_with('#') {
            continue;
        }
        let args = &toks[1..];
        let need = |n: usize| {
            if args.len() < n {
                Err(perr(
                    lineno,
                    col,
                    format!("`{head}` needs at least {n} argument(s)"),
                ))
            } else {
                Ok(())
            }
        };
        if header.is_none() {
            header = Some(match (head, args) {
                ("spectrum", [(_, id)]) => Header::Spectrum((*id).to_owned()),
                ("model", [n]) => Header::Model(
                    int_at(lineno, *n)?
                        .try_into()
                        .map_err(|_| perr(lineno, n.0, "run count must be nonnegative".into()))?,
                ),
                _ => {
                    return Err(perr(
                        lineno,
                        col,
                        "expected `spectrum <run_id>` or `model <runs>`".into(),
                    ))
                }
            });
            continue;
        }
        match head {
            "schemata" => {
                need(1)?;
                config.schemata = args[0].1.parse().map_err(|m| perr(lineno, args[0].0, m))?;
            }
            "vsets" => {
                need(1)?;
                config.value_sets = flag_at(lineno, args[0])?;
            }
            "psets" => {
                need(1)?;
                config.pair_sets = flag_at(lineno, args[0])?;
            }
            "points" => {
                need(1)?;
                config.points = args[0].1.parse().map_err(|m| perr(lineno, args[0].0, m))?;
            }
            "ppt" => {
                need(1)?;
                let id: PptId = args[0].1.parse().map_err(|m| perr(lineno, args[0].0, m))?;
                let decls = args[1..].iter().map(|(_, v)| VarDecl::int(*v)).collect();
                let point = ProgramPoint::new(id, decls).map_err(|e| ParseError {
                    line: lineno,
                    column: col,
                    kind: e.into(),
                })?;
                if points.insert(point.id().clone(), point).is_some() {
                    return Err(perr(lineno, args[0].0, "duplicate program point".into()));
                }
            }
            "seen" => {
                need(1)?;
                let p = lookup_point(&points, lineno, args[0])?;
                observed.insert(p.id().clone());
            }
            "inv" => {
                need(2)?;
                let p = lookup_point(&points, lineno, args[0])?;
                let (kcol, kname) = args[1];
                let kind = Schema::from_name(kname)
                    .ok_or_else(|| perr(lineno, kcol, format!("unknown schema `{kname}`")))?;
                let want = 2 + kind.arity() + usize::from(kind.has_constant());
                if args.len() != want {
                    return Err(perr(
                        lineno,
                        col,
                        format!("`{}` invariant needs {} fields", kind.name(), want),
                    ));
                }
                let slots = args[2..2 + kind.arity()]
                    .iter()
                    .map(|t| check_var(&p, lineno, *t))
                    .collect::<Result<Vec<_>, _>>()?;
                let constant = if kind.has_constant() {
                    Some(int_at(lineno, args[want - 1])?)
                } else {
                    None
                };
                let slot_refs: Vec<&str> = slots.iter().map(String::as_str).collect();
                let inv = InvariantInstance::bound(p.id().clone(), kind, &slot_refs, constant)
                    .map_err(|e| perr(lineno, kcol, e.to_string()))?;
                live.insert(inv);
            }
            "vset" => {
                need(2)?;
                let p = lookup_point(&points, lineno, args[0])?;
                let var = check_var(&p, lineno, args[1])?;
                let values = args[2..]
                    .iter()
                    .map(|t| int_at(lineno, *t))
                    .collect::<Result<BTreeSet<_>, _>>()?;
                vsets
                    .entry(VarRef {
                        ppt: p.id().clone(),
                        var,
                    })
                    .or_default()
                    .extend(values);
            }
            "pset" => {
                need(3)?;
                let p = lookup_point(&points, lineno, args[0])?;
                let first = check_var(&p, lineno, args[1])?;
                let second = check_var(&p, lineno, args[2])?;
                if first >= second {
                    return Err(perr(
                        lineno,
                        args[1].0,
                        "pair variables must be in ascending order".into(),
                    ));
                }
                let pairs = args[3..]
                    .iter()
                    .map(|t| pair_at(lineno, *t))
                    .collect::<Result<BTreeSet<_>, _>>()?;
                let key = PairRef {
                    ppt: p.id().clone(),
                    first,
                    second,
                };
                psets.entry(key).or_default().extend(pairs);
            }
            other => return Err(perr(lineno, col, format!("unknown directive `{other}`"))),
        }
    }

    Ok(match header {
        None => return Err(perr(1, 1, "empty spectrum/model file".into())),
        Some(Header::Spectrum(run_id)) => Stored::Spectrum(Spectrum {
            run_id,
            config,
            points,
            observed,
            live,
            vsets,
            psets,
        }),
        Some(Header::Model(runs_absorbed)) => Stored::Model(Model {
            config,
            points,
            observed,
            live,
            vsets,
            psets,
            runs_absorbed,
        }),
    })
}
