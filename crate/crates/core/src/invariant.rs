//! Potential invariants over the variables of a single program point, plus
//! value sets and pair value sets.
//!
//! Four relational schemata are supported: `a == b`, `a + b == c`, `a < b`
//! (strict) and `a == c`. Constants are learned from the first observation,
//! and an instance's identity includes its constant.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::trace::{PptId, ProgramPoint, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Schema {
    Equality,
    Sum,
    LessThan,
    ConstantEquality,
}

impl Schema {
    pub const ALL: [Schema; 4] = [
        Schema::Equality,
        Schema::Sum,
        Schema::LessThan,
        Schema::ConstantEquality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Schema::Equality => "Equality",
            Schema::Sum => "Sum",
            Schema::LessThan => "LessThan",
            Schema::ConstantEquality => "ConstantEquality",
        }
    }

    /// Short name used on the command line.
    pub fn flag(self) -> &'static str {
        match self {
            Schema::Equality => "eq",
            Schema::Sum => "sum",
            Schema::LessThan => "lessthan",
            Schema::ConstantEquality => "const",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Schema::ConstantEquality => 1,
            _ => 2,
        }
    }

    pub fn has_constant(self) -> bool {
        matches!(self, Schema::Sum | Schema::ConstantEquality)
    }

    pub fn from_name(s: &str) -> Option<Schema> {
        Schema::ALL.into_iter().find(|k| k.name() == s)
    }

    fn bit(self) -> u8 {
        1 << self as u8
    }
}

/// A subset of the four schemata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SchemaSet(u8);

impl SchemaSet {
    pub const ALL: SchemaSet = SchemaSet(0b1111);
    pub const EMPTY: SchemaSet = SchemaSet(0);

    pub fn only(kind: Schema) -> Self {
        SchemaSet(kind.bit())
    }

    pub fn with(self, kind: Schema) -> Self {
        SchemaSet(self.0 | kind.bit())
    }

    pub fn contains(self, kind: Schema) -> bool {
        self.0 & kind.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Schema> {
        Schema::ALL.into_iter().filter(move |k| self.contains(*k))
    }
}

impl Default for SchemaSet {
    fn default() -> Self {
        SchemaSet::ALL
    }
}

impl FromIterator<Schema> for SchemaSet {
    fn from_iter<I: IntoIterator<Item = Schema>>(iter: I) -> Self {
        iter.into_iter().fold(SchemaSet::EMPTY, SchemaSet::with)
    }
}

impl fmt::Display for SchemaSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("none");
        }
        let flags: Vec<_> = self.iter().map(Schema::flag).collect();
        f.write_str(&flags.join(","))
    }
}

impl FromStr for SchemaSet {
    type Err = String;

    /// Parses `eq,sum,lessthan,const` (any subset), or `none`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim() == "none" {
            return Ok(SchemaSet::EMPTY);
        }
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                Schema::ALL
                    .into_iter()
                    .find(|k| k.flag().eq_ignore_ascii_case(t) || k.name() == t)
                    .ok_or_else(|| {
                        format!("unknown schema `{t}` (expected eq, sum, lessthan, const)")
                    })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Status {
    Unbound,
    Live,
    Falsified,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("variable `{var}` is not declared at {ppt}")]
    UnknownVariable { ppt: PptId, var: String },
    #[error("sample for {sample} applied to an invariant at {inv}")]
    PointMismatch { inv: PptId, sample: PptId },
    #[error("{kind} takes {expected} variable(s), got {found}")]
    SlotCount {
        kind: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("LessThan needs two distinct variables, got `{0}` twice")]
    SelfComparison(String),
}

/// A schema applied to concrete variables at one program point.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InvariantInstance {
    ppt: PptId,
    kind: Schema,
    slots: Vec<String>,
    learned_const: Option<i64>,
    status: Status,
}

impl InvariantInstance {
    /// Builds a fresh (never updated) instance, canonicalizing symmetric slots.
    pub fn new(ppt: PptId, kind: Schema, slots: &[&str]) -> Result<Self, EngineError> {
        if slots.len() != kind.arity() {
            return Err(EngineError::SlotCount {
                kind: kind.name(),
                expected: kind.arity(),
                found: slots.len(),
            });
        }
        let mut slots: Vec<String> = slots.iter().map(|s| (*s).to_owned()).collect();
        match kind {
            Schema::Equality | Schema::Sum => slots.sort(),
            Schema::LessThan if slots[0] == slots[1] => {
                return Err(EngineError::SelfComparison(slots.swap_remove(0)))
            }
            _ => {}
        }
        let status = if kind.has_constant() {
            Status::Unbound
        } else {
            Status::Live
        };
        Ok(InvariantInstance {
            ppt,
            kind,
            slots,
            learned_const: None,
            status,
        })
    }

    /// A live instance with an already-learned constant (as stored in spectra).
    pub fn bound(
        ppt: PptId,
        kind: Schema,
        slots: &[&str],
        constant: Option<i64>,
    ) -> Result<Self, EngineError> {
        let mut inv = Self::new(ppt, kind, slots)?;
        if kind.has_constant() {
            inv.learned_const = constant;
            inv.status = if constant.is_some() {
                Status::Live
            } else {
                Status::Unbound
            };
        }
        Ok(inv)
    }

    pub fn ppt(&self) -> &PptId {
        &self.ppt
    }

    pub fn kind(&self) -> Schema {
        self.kind
    }

    pub fn slots(&self) -> &[String] {
        &self.slots
    }

    pub fn learned_const(&self) -> Option<i64> {
        self.learned_const
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn is_live(&self) -> bool {
        self.status == Status::Live
    }

    /// Feeds one observation of the slot values.
    pub(crate) fn apply(&mut self, a: i64, b: i64) {
        let holds = match (self.kind, self.status) {
            (_, Status::Falsified) => return,
            (Schema::Equality, _) => a == b,
            (Schema::LessThan, _) => a < b,
            (Schema::Sum, Status::Unbound) => {
                self.learned_const = Some(a.wrapping_add(b));
                true
            }
            (Schema::Sum, _) => Some(a.wrapping_add(b)) == self.learned_const,
            (Schema::ConstantEquality, Status::Unbound) => {
                self.learned_const = Some(a);
                true
            }
            (Schema::ConstantEquality, _) => Some(a) == self.learned_const,
        };
        self.status = if holds {
            Status::Live
        } else {
            Status::Falsified
        };
    }

    pub(crate) fn falsify(&mut self) {
        self.status = Status::Falsified;
    }

    /// Positions of the slot variables in the point's declaration list.
    pub(crate) fn slot_indices(&self, point: &ProgramPoint) -> Result<[usize; 2], EngineError> {
        let find = |v: &String| {
            point
                .index_of(v)
                .ok_or_else(|| EngineError::UnknownVariable {
                    ppt: self.ppt.clone(),
                    var: v.clone(),
                })
        };
        let a = find(&self.slots[0])?;
        let b = match self.slots.get(1) {
            Some(v) => find(v)?,
            None => a,
        };
        Ok([a, b])
    }
}

impl fmt::Display for InvariantInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.learned_const {
            Some(c) => c.to_string(),
            None => "?".to_owned(),
        };
        match self.kind {
            Schema::Equality => write!(f, "{} == {}", self.slots[0], self.slots[1]),
            Schema::LessThan => write!(f, "{} < {}", self.slots[0], self.slots[1]),
            Schema::Sum => write!(f, "{} + {} == {c}", self.slots[0], self.slots[1]),
            Schema::ConstantEquality => write!(f, "{} == {c}", self.slots[0]),
        }
    }
}

/// Every candidate the enabled schemata yield at `point`.
///
/// For `n` variables: `n(n-1)` LessThan, `n(n-1)/2` Equality and Sum, `n`
/// ConstantEquality.
pub fn instantiate_all(point: &ProgramPoint, enabled: SchemaSet) -> Vec<InvariantInstance> {
    let names: Vec<&str> = point.var_names().collect();
    let ppt = point.id();
    let mut out = Vec::new();
    let fresh = |kind, slots: &[&str]| {
        InvariantInstance::new(ppt.clone(), kind, slots).expect("distinct declared variables")
    };
    for kind in enabled.iter() {
        for (i, a) in names.iter().enumerate() {
            match kind {
                Schema::ConstantEquality => out.push(fresh(kind, &[a])),
                Schema::LessThan => {
                    for (j, b) in names.iter().enumerate() {
                        if i != j {
                            out.push(fresh(kind, &[a, b]));
                        }
                    }
                }
                Schema::Equality | Schema::Sum => {
                    for b in &names[i + 1..] {
                        out.push(fresh(kind, &[a, b]));
                    }
                }
            }
        }
    }
    out
}

/// Number of candidates `instantiate_all` yields for `n` variables.
pub fn candidate_count(n: usize, enabled: SchemaSet) -> usize {
    let pairs = n * n.saturating_sub(1) / 2;
    enabled
        .iter()
        .map(|k| match k {
            Schema::Equality | Schema::Sum => pairs,
            Schema::LessThan => 2 * pairs,
            Schema::ConstantEquality => n,
        })
        .sum()
}

/// Applies one sample to `inv`. Falsified instances come back unchanged.
pub fn update_invariant(
    inv: &InvariantInstance,
    point: &ProgramPoint,
    sample: &Sample,
) -> Result<InvariantInstance, EngineError> {
    if sample.ppt != inv.ppt || point.id() != &inv.ppt {
        return Err(EngineError::PointMismatch {
            inv: inv.ppt.clone(),
            sample: sample.ppt.clone(),
        });
    }
    let [a, b] = inv.slot_indices(point)?;
    let mut next = inv.clone();
    next.apply(sample.values[a], sample.values[b]);
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueSet {
    pub var: String,
    pub values: BTreeSet<i64>,
}

/// Values of two variables observed together. `vars` is in ascending name
/// order and each pair follows that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairValueSet {
    pub vars: (String, String),
    pub pairs: BTreeSet<(i64, i64)>,
}

/// Value sets and pair value sets for one program point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSets {
    pub ppt: PptId,
    pub values: Vec<ValueSet>,
    pub pairs: Vec<PairValueSet>,
    pair_index: Vec<(usize, usize)>,
}

impl PointSets {
    /// Empty sets for every variable and every unordered variable pair.
    pub fn new(point: &ProgramPoint) -> Self {
        let names: Vec<&str> = point.var_names().collect();
        let values = names
            .iter()
            .map(|v| ValueSet {
                var: (*v).to_owned(),
                values: BTreeSet::new(),
            })
            .collect();
        let mut pair_index = Vec::new();
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                pair_index.push(if names[i] < names[j] { (i, j) } else { (j, i) });
            }
        }
        pair_index.sort_by_key(|&(i, j)| (names[i], names[j]));
        let pairs = pair_index
            .iter()
            .map(|&(i, j)| PairValueSet {
                vars: (names[i].to_owned(), names[j].to_owned()),
                pairs: BTreeSet::new(),
            })
            .collect();
        PointSets {
            ppt: point.id().clone(),
            values,
            pairs,
            pair_index,
        }
    }

    /// Inserts one sample's values; returns `(value insertions, pair insertions)`.
    pub fn observe(
        &mut self,
        values: &[i64],
        with_values: bool,
        with_pairs: bool,
    ) -> (usize, usize) {
        let mut vi = 0;
        let mut pi = 0;
        if with_values {
            for (set, v) in self.values.iter_mut().zip(values) {
                vi += usize::from(set.values.insert(*v));
            }
        }
        if with_pairs {
            for (set, &(i, j)) in self.pairs.iter_mut().zip(&self.pair_index) {
                pi += usize::from(set.pairs.insert((values[i], values[j])));
            }
        }
        (vi, pi)
    }
}

/// Value-set update as a pure function of the previous state.
pub fn update_value_sets(state: &PointSets, sample: &Sample) -> PointSets {
    let mut next = state.clone();
    next.observe(&sample.values, true, true);
    next
}
