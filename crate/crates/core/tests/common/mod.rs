//! Seeded generators and a brute-force reference checker shared by the
//! integration tests. Nothing here calls into the engine.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use carrot::{PointKind, PptId, ProgramPoint, Trace};

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const FUNCS: [&str; 3] = ["f", "g", "h"];
const VARS: [&str; 6] = ["a", "b", "c", "d", "e", "q"];

/// Up to three points with up to five variables each. Declaration order is
/// shuffled so canonicalization is exercised.
pub fn random_shape(r: &mut ChaCha8Rng) -> Vec<ProgramPoint> {
    let mut ids: Vec<PptId> = FUNCS
        .iter()
        .flat_map(|f| [PptId::entry(*f), PptId::exit(*f)])
        .collect();
    ids.shuffle(r);
    ids.truncate(r.gen_range(1..=3));
    ids.into_iter()
        .map(|id| {
            let mut names: Vec<&str> = VARS.to_vec();
            names.shuffle(r);
            let vars: Vec<&str> = match id.kind {
                PointKind::Entry => names[..r.gen_range(1..=5)].to_vec(),
                PointKind::Exit => {
                    let mut v = names[..r.gen_range(0..=4)].to_vec();
                    v.push("return");
                    v
                }
            };
            ProgramPoint::with_vars(id, &vars).unwrap()
        })
        .collect()
}

/// Mostly tiny values so relations survive; occasionally extremes.
pub fn random_value(r: &mut ChaCha8Rng, spread: i64) -> i64 {
    match r.gen_range(0..40) {
        0 => i64::MAX,
        1 => i64::MIN,
        2 => r.gen(),
        _ => r.gen_range(-spread..=spread),
    }
}

/// Trace over `shape` with `0..=max_samples` samples at random points.
pub fn random_trace_on(
    r: &mut ChaCha8Rng,
    run_id: &str,
    shape: &[ProgramPoint],
    max_samples: usize,
    spread: i64,
) -> Trace {
    let n = r.gen_range(0..=max_samples);
    let samples: Vec<(PptId, Vec<i64>)> = (0..n)
        .map(|_| {
            let p = &shape[r.gen_range(0..shape.len())];
            let values = (0..p.arity()).map(|_| random_value(r, spread)).collect();
            (p.id().clone(), values)
        })
        .collect();
    Trace::new(run_id, shape.iter().cloned(), samples).unwrap()
}

pub fn random_trace(r: &mut ChaCha8Rng, run_id: &str) -> Trace {
    let shape = random_shape(r);
    random_trace_on(r, run_id, &shape, 30, 3)
}

/// Like [`random_trace_on`] but every point is visited and every sample is
/// strictly increasing in declaration order, so ordering relations survive
/// many runs.
pub fn ordered_trace_on(
    r: &mut ChaCha8Rng,
    run_id: &str,
    shape: &[ProgramPoint],
    max_samples: usize,
) -> Trace {
    let n = r.gen_range(shape.len()..=max_samples.max(shape.len()));
    let samples: Vec<(PptId, Vec<i64>)> = (0..n)
        .map(|k| {
            let p = match shape.get(k) {
                Some(p) => p,
                None => &shape[r.gen_range(0..shape.len())],
            };
            let mut v = r.gen_range(-3..=3);
            let values = (0..p.arity())
                .map(|_| {
                    v += r.gen_range(1..=2);
                    v
                })
                .collect();
            (p.id().clone(), values)
        })
        .collect();
    Trace::new(run_id, shape.iter().cloned(), samples).unwrap()
}

/// A corpus of runs over one shared shape. Half the corpora use ordered
/// samples.
pub fn random_corpus(r: &mut ChaCha8Rng, runs: usize) -> Vec<Trace> {
    let shape = random_shape(r);
    let spread = r.gen_range(1..=4);
    let ordered = r.gen_bool(0.5);
    (0..runs)
        .map(|i| {
            let id = format!("run_{}", i + 1);
            if ordered {
                ordered_trace_on(r, &id, &shape, 8)
            } else {
                random_trace_on(r, &id, &shape, 8, spread)
            }
        })
        .collect()
}

/// `(ppt, schema name, slots, constant)`
pub type Fact = (String, &'static str, Vec<String>, Option<i64>);

pub fn fact_of(inv: &carrot::InvariantInstance) -> Fact {
    (
        inv.ppt().to_string(),
        inv.kind().name(),
        inv.slots().to_vec(),
        inv.learned_const(),
    )
}

/// Invariants that hold on every sample of `trace`, enumerated directly from
/// their definitions. A point without samples contributes nothing.
pub fn brute_force_live(trace: &Trace) -> BTreeSet<Fact> {
    let mut out = BTreeSet::new();
    for (id, point) in trace.points() {
        let rows: Vec<&[i64]> = trace
            .samples()
            .iter()
            .filter(|s| &s.ppt == id)
            .map(|s| s.values.as_slice())
            .collect();
        if rows.is_empty() {
            continue;
        }
        let names: Vec<String> = point.var_names().map(str::to_owned).collect();
        let ppt = id.to_string();
        for i in 0..names.len() {
            let first = rows[0][i];
            if rows.iter().all(|r| r[i] == first) {
                out.insert((
                    ppt.clone(),
                    "ConstantEquality",
                    vec![names[i].clone()],
                    Some(first),
                ));
            }
            for j in 0..names.len() {
                if i == j {
                    continue;
                }
                if rows.iter().all(|r| r[i] < r[j]) {
                    out.insert((
                        ppt.clone(),
                        "LessThan",
                        vec![names[i].clone(), names[j].clone()],
                        None,
                    ));
                }
                if names[i] < names[j] {
                    let slots = vec![names[i].clone(), names[j].clone()];
                    if rows.iter().all(|r| r[i] == r[j]) {
                        out.insert((ppt.clone(), "Equality", slots.clone(), None));
                    }
                    let sum = rows[0][i].wrapping_add(rows[0][j]);
                    if rows.iter().all(|r| r[i].wrapping_add(r[j]) == sum) {
                        out.insert((ppt.clone(), "Sum", slots, Some(sum)));
                    }
                }
            }
        }
    }
    out
}

/// Per-variable value sets keyed by `(ppt, var)`.
pub fn brute_force_vsets(trace: &Trace) -> BTreeMap<(String, String), BTreeSet<i64>> {
    let mut out: BTreeMap<(String, String), BTreeSet<i64>> = BTreeMap::new();
    for s in trace.samples() {
        let point = &trace.points()[&s.ppt];
        for (name, v) in point.var_names().zip(&s.values) {
            out.entry((s.ppt.to_string(), name.to_owned()))
                .or_default()
                .insert(*v);
        }
    }
    out
}

/// Pair value sets keyed by `(ppt, lo, hi)` with names in ascending order.
pub fn brute_force_psets(
    trace: &Trace,
) -> BTreeMap<(String, String, String), BTreeSet<(i64, i64)>> {
    let mut out: BTreeMap<_, BTreeSet<(i64, i64)>> = BTreeMap::new();
    for s in trace.samples() {
        let names: Vec<&str> = trace.points()[&s.ppt].var_names().collect();
        for i in 0..names.len() {
            for j in 0..names.len() {
                if names[i] < names[j] {
                    out.entry((s.ppt.to_string(), names[i].to_owned(), names[j].to_owned()))
                        .or_default()
                        .insert((s.values[i], s.values[j]));
                }
            }
        }
    }
    out
}
