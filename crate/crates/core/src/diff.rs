//! Contrasting a good-run model with a failing run's spectrum.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use crate::invariant::InvariantInstance;
use crate::spectrum::{absorb, Model, ModelError, Spectrum};
use crate::trace::PptId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueExtension {
    pub ppt: PptId,
    pub var: String,
    pub values: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairExtension {
    pub ppt: PptId,
    pub vars: (String, String),
    pub pairs: Vec<(i64, i64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DiffReport {
    pub bad_run_id: String,
    /// Live in the model, gone once the bad run is absorbed.
    pub invalidated: Vec<InvariantInstance>,
    pub value_extensions: Vec<ValueExtension>,
    pub pair_extensions: Vec<PairExtension>,
    /// Points the bad run reached that no good run did.
    pub unmodeled: Vec<PptId>,
}

impl DiffReport {
    pub fn is_empty(&self) -> bool {
        self.invalidated.is_empty()
            && self.value_extensions.is_empty()
            && self.pair_extensions.is_empty()
            && self.unmodeled.is_empty()
    }

    pub fn finding_count(&self) -> usize {
        self.invalidated.len()
            + self.value_extensions.len()
            + self.pair_extensions.len()
            + self.unmodeled.len()
    }
}

pub fn diff(model: &Model, bad: &Spectrum) -> Result<DiffReport, ModelError> {
    let after = absorb(model, bad)?;
    let invalidated = model.live.difference(&after.live).cloned().collect();
    let unmodeled: BTreeSet<&PptId> = bad.observed.difference(&model.observed).collect();

    let value_extensions = bad
        .vsets
        .iter()
        .filter(|(k, _)| !unmodeled.contains(&k.ppt))
        .filter_map(|(k, vs)| {
            let known = model.vsets.get(k);
            let values: Vec<i64> = vs
                .iter()
                .copied()
                .filter(|v| known.is_none_or(|s| !s.contains(v)))
                .collect();
            (!values.is_empty()).then(|| ValueExtension {
                ppt: k.ppt.clone(),
                var: k.var.clone(),
                values,
            })
        })
        .collect();
    let pair_extensions = bad
        .psets
        .iter()
        .filter(|(k, _)| !unmodeled.contains(&k.ppt))
        .filter_map(|(k, ps)| {
            let known = model.psets.get(k);
            let pairs: Vec<(i64, i64)> = ps
                .iter()
                .copied()
                .filter(|p| known.is_none_or(|s| !s.contains(p)))
                .collect();
            (!pairs.is_empty()).then(|| PairExtension {
                ppt: k.ppt.clone(),
                vars: (k.first.clone(), k.second.clone()),
                pairs,
            })
        })
        .collect();

    Ok(DiffReport {
        bad_run_id: bad.run_id.clone(),
        invalidated,
        value_extensions,
        pair_extensions,
        unmodeled: unmodeled.into_iter().cloned().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Structured,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "structured" | "json" => Ok(ReportFormat::Structured),
            _ => Err(format!(
                "unknown format `{s}` (expected text or structured)"
            )),
        }
    }
}

/// One line of structured output.
#[derive(Debug, Serialize)]
pub struct Finding {
    pub category: &'static str,
    pub ppt: String,
    pub kind: String,
    pub vars: Vec<String>,
    pub detail: Value,
}

pub fn findings(report: &DiffReport) -> Vec<Finding> {
    let mut out = Vec::with_capacity(report.finding_count());
    for inv in &report.invalidated {
        out.push(Finding {
            category: "invalidated",
            ppt: inv.ppt().to_string(),
            kind: inv.kind().name().to_owned(),
            vars: inv.slots().to_vec(),
            detail: json!({ "predicate": inv.to_string(), "constant": inv.learned_const() }),
        });
    }
    for ext in &report.value_extensions {
        out.push(Finding {
            category: "value_ext",
            ppt: ext.ppt.to_string(),
            kind: "ValueSet".to_owned(),
            vars: vec![ext.var.clone()],
            detail: json!({ "new_values": ext.values }),
        });
    }
    for ext in &report.pair_extensions {
        out.push(Finding {
            category: "pair_ext",
            ppt: ext.ppt.to_string(),
            kind: "PairValueSet".to_owned(),
            vars: vec![ext.vars.0.clone(), ext.vars.1.clone()],
            detail: json!({ "new_pairs": ext.pairs }),
        });
    }
    for ppt in &report.unmodeled {
        out.push(Finding {
            category: "unmodeled",
            ppt: ppt.to_string(),
            kind: "Point".to_owned(),
            vars: Vec::new(),
            detail: json!({ "reason": "not reached by any good run" }),
        });
    }
    out
}

pub fn render_report(report: &DiffReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => render_text(report),
        ReportFormat::Structured => {
            let mut out = String::new();
            for f in findings(report) {
                out.push_str(&serde_json::to_string(&f).expect("findings serialize"));
                out.push('\n');
            }
            out
        }
    }
}

fn join<T, F: Fn(&T) -> String>(items: &[T], f: F) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(", ")
}

fn render_text(report: &DiffReport) -> String {
    let extensions = !report.value_extensions.is_empty() || !report.pair_extensions.is_empty();
    if report.invalidated.is_empty() && !extensions && report.unmodeled.is_empty() {
        return "no invariants invalidated; no value-set extensions\n".to_owned();
    }
    let mut out = String::new();
    if report.invalidated.is_empty() {
        out.push_str("no invariants invalidated\n");
    }
    for inv in &report.invalidated {
        let _ = writeln!(out, "{}  violated: {inv}", inv.ppt());
    }
    if !report.unmodeled.is_empty() {
        out.push_str("\nunmodeled points (not reached by any good run):\n");
        for ppt in &report.unmodeled {
            let _ = writeln!(out, "  {ppt}");
        }
    }
    if extensions {
        out.push_str("\nvalue-set extensions:\n");
        for ext in &report.value_extensions {
            let _ = writeln!(
                out,
                "  {}  {} += {{{}}}",
                ext.ppt,
                ext.var,
                join(&ext.values, i64::to_string)
            );
        }
        for ext in &report.pair_extensions {
            let pairs = join(&ext.pairs, |(a, b)| format!("({a}, {b})"));
            let _ = writeln!(
                out,
                "  {}  ({}, {}) += {{{pairs}}}",
                ext.ppt, ext.vars.0, ext.vars.1
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariant::{Schema, SchemaSet};
    use crate::spectrum::{build_model, compute_spectrum, EngineConfig};
    use crate::trace::{ProgramPoint, Trace};

    fn lt_only() -> EngineConfig {
        EngineConfig::with_schemata(SchemaSet::only(Schema::LessThan))
    }

    fn iso(run: &str, a: [i64; 3], cfg: EngineConfig) -> Spectrum {
        let p = ProgramPoint::with_vars(PptId::entry("isIsosceles"), &["x", "y", "z"]).unwrap();
        let t = Trace::new(run, [p.clone()], [(p.id().clone(), a.to_vec())]).unwrap();
        compute_spectrum(&t, cfg).unwrap()
    }

    fn lt_no_sets() -> EngineConfig {
        EngineConfig {
            value_sets: false,
            pair_sets: false,
            ..lt_only()
        }
    }

    fn good(cfg: EngineConfig) -> Vec<Spectrum> {
        vec![
            iso("g1", [1, 2, 3], cfg),
            iso("g2", [2, 5, 5], cfg),
            iso("g3", [2, 2, 3], cfg),
        ]
    }

    #[test]
    fn isosceles_localizes_x_lt_z() {
        let goods = good(lt_no_sets());
        let model = build_model(&goods).unwrap();
        let bad = iso("bad", [2, 3, 2], lt_no_sets());
        let report = diff(&model, &bad).unwrap();
        let got: Vec<String> = report.invalidated.iter().map(|i| i.to_string()).collect();
        assert_eq!(got, ["x < z"]);
        assert_eq!(
            render_report(&report, ReportFormat::Text),
            "isIsosceles:::ENTER  violated: x < z\n"
        );

        // with value sets on, the bad run's y = 3 and z = 2 are new
        let model = build_model(&good(lt_only())).unwrap();
        let report = diff(&model, &iso("bad", [2, 3, 2], lt_only())).unwrap();
        assert_eq!(report.invalidated.len(), 1);
        let exts: Vec<_> = report
            .value_extensions
            .iter()
            .map(|e| (e.var.as_str(), e.values.clone()))
            .collect();
        assert_eq!(exts, [("y", vec![3]), ("z", vec![2])]);
    }

    #[test]
    fn contributor_yields_empty_report() {
        let goods = good(EngineConfig::default());
        let model = build_model(&goods).unwrap();
        let report = diff(&model, &goods[1]).unwrap();
        assert!(report.is_empty());
        assert_eq!(
            render_report(&report, ReportFormat::Text),
            "no invariants invalidated; no value-set extensions\n"
        );
        assert_eq!(render_report(&report, ReportFormat::Structured), "");
    }

    #[test]
    fn structured_counts_findings() {
        let cfg = EngineConfig {
            pair_sets: false,
            ..lt_only()
        };
        let p = ProgramPoint::with_vars(PptId::entry("f"), &["a", "b", "c"]).unwrap();
        let run = |id: &str, rows: &[[i64; 3]]| {
            let t = Trace::new(
                id,
                [p.clone()],
                rows.iter().map(|r| (p.id().clone(), r.to_vec())),
            )
            .unwrap();
            compute_spectrum(&t, cfg).unwrap()
        };
        let model = build_model(&[run("g1", &[[1, 2, 3]]), run("g2", &[[1, 3, 2]])]).unwrap();
        // live: a < b, a < c. The bad run breaks both and adds a = 5.
        let bad = run("bad", &[[1, 3, 2], [5, 3, 3]]);
        let report = diff(&model, &bad).unwrap();
        assert_eq!(report.invalidated.len(), 2);
        let text = render_report(&report, ReportFormat::Structured);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3, "{text}");
        let first: Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(first["category"], "invalidated");
        assert_eq!(first["kind"], "LessThan");
        assert_eq!(first["vars"], json!(["a", "b"]));
        let ext: Value = serde_json::from_str(lines[2]).unwrap();
        assert_eq!(ext["category"], "value_ext");
        assert_eq!(ext["detail"]["new_values"], json!([5]));
    }

    #[test]
    fn unmodeled_points_are_separate() {
        let f = ProgramPoint::with_vars(PptId::entry("f"), &["a"]).unwrap();
        let g = ProgramPoint::with_vars(PptId::entry("g"), &["a"]).unwrap();
        let cfg = EngineConfig::default();
        let goodt = Trace::new("g", [f.clone(), g.clone()], [(f.id().clone(), vec![1])]).unwrap();
        let badt = Trace::new(
            "b",
            [f.clone(), g.clone()],
            [(f.id().clone(), vec![1]), (g.id().clone(), vec![9])],
        )
        .unwrap();
        let model = build_model(&[compute_spectrum(&goodt, cfg).unwrap()]).unwrap();
        let report = diff(&model, &compute_spectrum(&badt, cfg).unwrap()).unwrap();
        assert_eq!(report.unmodeled, vec![g.id().clone()]);
        assert!(report.value_extensions.is_empty());
        assert!(report.invalidated.is_empty());
        let text = render_report(&report, ReportFormat::Text);
        assert!(text.starts_with("no invariants invalidated\n"), "{text}");
        assert!(text.contains("  g:::ENTER\n"));
    }
}
