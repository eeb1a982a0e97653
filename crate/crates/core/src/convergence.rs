//! How the model changes as good runs accumulate.
//!
//! The steady state is operationalized as a window of consecutive runs that
//! falsify no relational invariant. Value-set growth is recorded but does not
//! count against convergence.

use std::fmt::Write as _;
use std::num::NonZeroUsize;

use crate::spectrum::{Model, ModelError, Spectrum};

pub const DEFAULT_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurveRecord {
    /// 1-based position of the run in absorption order.
    pub run: usize,
    /// Live relational invariants after absorbing this run.
    pub live: usize,
    pub falsified: usize,
    pub vset_insertions: usize,
    pub pset_insertions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConvergenceCurve {
    pub records: Vec<CurveRecord>,
}

impl ConvergenceCurve {
    pub fn falsifications(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.falsified).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("run,live,falsified,vset_ins,pset_ins\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.run, r.live, r.falsified, r.vset_insertions, r.pset_insertions
            );
        }
        out
    }
}

fn vset_size(m: &Model) -> usize {
    m.vsets.values().map(|s| s.len()).sum()
}

fn pset_size(m: &Model) -> usize {
    m.psets.values().map(|s| s.len()).sum()
}

/// Record `k` describes the model built from the first `k` spectra. The
/// first run's falsifications are counted against its freshly instantiated
/// candidates.
pub fn convergence_curve(spectra: &[Spectrum]) -> Result<ConvergenceCurve, ModelError> {
    let (first, rest) = spectra.split_first().ok_or(ModelError::Empty)?;
    let mut model = Model::from_spectrum(first);
    let mut records = vec![CurveRecord {
        run: 1,
        live: model.live.len(),
        falsified: first.candidate_count() - first.live.len(),
        vset_insertions: vset_size(&model),
        pset_insertions: pset_size(&model),
    }];
    for (i, s) in rest.iter().enumerate() {
        let (live, vs, ps) = (model.live.len(), vset_size(&model), pset_size(&model));
        model.absorb(s)?;
        records.push(CurveRecord {
            run: i + 2,
            live: model.live.len(),
            falsified: live - model.live.len(),
            vset_insertions: vset_size(&model) - vs,
            pset_insertions: pset_size(&model) - ps,
        });
    }
    Ok(ConvergenceCurve { records })
}

/// Smallest `i` such that runs `i+1 ..= i+window` falsify nothing.
pub fn steady_state(curve: &ConvergenceCurve, window: NonZeroUsize) -> Option<usize> {
    steady_state_of(&curve.falsifications(), window)
}

pub fn steady_state_of(falsified: &[usize], window: NonZeroUsize) -> Option<usize> {
    falsified
        .windows(window.get())
        .position(|w| w.iter().all(|&f| f == 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariant::{Schema, SchemaSet};
    use crate::spectrum::{compute_spectrum, EngineConfig};
    use crate::trace::{PptId, ProgramPoint, Trace};

    fn w(n: usize) -> NonZeroUsize {
        NonZeroUsize::new(n).unwrap()
    }

    fn iso(run: &str, a: [i64; 3]) -> Spectrum {
        let p = ProgramPoint::with_vars(PptId::entry("isIsosceles"), &["x", "y", "z"]).unwrap();
        let t = Trace::new(run, [p.clone()], [(p.id().clone(), a.to_vec())]).unwrap();
        compute_spectrum(
            &t,
            EngineConfig::with_schemata(SchemaSet::only(Schema::LessThan)),
        )
        .unwrap()
    }

    #[test]
    fn isosceles_live_counts() {
        let curve = convergence_curve(&[
            iso("a", [1, 2, 3]),
            iso("b", [2, 5, 5]),
            iso("c", [2, 2, 3]),
        ])
        .unwrap();
        let live: Vec<_> = curve.records.iter().map(|r| r.live).collect();
        assert_eq!(live, [3, 2, 1]);
        assert_eq!(curve.falsifications(), [3, 1, 1]);
        assert_eq!(
            curve.to_csv().lines().next(),
            Some("run,live,falsified,vset_ins,pset_ins")
        );
        assert_eq!(curve.to_csv().lines().nth(1), Some("1,3,3,3,3"));
    }

    #[test]
    fn repeated_run_falsifies_once() {
        let s = iso("a", [1, 2, 3]);
        let curve = convergence_curve(&vec![s; 5]).unwrap();
        let f = curve.falsifications();
        assert!(f[0] > 0);
        assert_eq!(&f[1..], [0, 0, 0, 0]);
        assert_eq!(steady_state(&curve, w(3)), Some(1));
        assert!(curve.records[1..]
            .iter()
            .all(|r| r.vset_insertions == 0 && r.pset_insertions == 0));
    }

    #[test]
    fn window_examples() {
        assert_eq!(steady_state_of(&[5, 2, 0, 0, 0], w(2)), Some(2));
        assert_eq!(steady_state_of(&[1, 1, 1], w(1)), None);
        assert_eq!(steady_state_of(&[0, 0], w(3)), None);
        assert_eq!(steady_state_of(&[0], w(1)), Some(0));
    }

    #[test]
    fn empty_input_is_error() {
        assert_eq!(convergence_curve(&[]), Err(ModelError::Empty));
    }
}
