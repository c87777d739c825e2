//! Machine-readable reports. Every command produces one [`ReportDocument`];
//! the human view is rendered from the same JSON value.

use crate::continuity::{ContinuityReport, ModulusCheck, Verdict};
use crate::metric::PseudometricTable;
use crate::multiplicity::{GenSet, ProbMultiplicity, ProcessDistance, Weighting};
use crate::oracle::{OracleSummary, Sample};
use crate::rational::{fmt_rational, ExtRational, Rational};
use crate::semantics::{ReachableFragment, Transitions};
use crate::term::{Name, StateTerm};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReportFlags {
    pub widened: bool,
    pub over_approximated: bool,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub spec_digest: String,
    pub command: String,
    pub inputs: Value,
    /// One-line answer shown first in the human view.
    pub headline: String,
    pub results: Value,
    pub flags: ReportFlags,
}

impl ReportDocument {
    pub fn new(spec_text: &str, command: &str, inputs: Value) -> Self {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            spec_digest: spec_digest(spec_text),
            command: command.to_string(),
            inputs,
            headline: String::new(),
            results: Value::Null,
            flags: ReportFlags::default(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only strings, numbers and maps")
    }

    pub fn to_human(&self) -> String {
        let mut out = String::new();
        if !self.headline.is_empty() {
            out.push_str(&self.headline);
            out.push('\n');
        }
        render(&self.results, 0, &mut out);
        let flags: Vec<&str> = [
            (self.flags.widened, "widened"),
            (self.flags.over_approximated, "over-approximated"),
            (self.flags.truncated, "truncated"),
        ]
        .into_iter()
        .filter_map(|(on, n)| on.then_some(n))
        .collect();
        if !flags.is_empty() {
            writeln!(out, "flags: {}", flags.join(", ")).unwrap();
        }
        out
    }
}

fn render(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                match v {
                    Value::Object(m) if !m.is_empty() => {
                        writeln!(out, "{pad}{k}:").unwrap();
                        render(v, indent + 1, out);
                    }
                    Value::Array(a) if !a.is_empty() => {
                        writeln!(out, "{pad}{k}:").unwrap();
                        render(v, indent + 1, out);
                    }
                    _ => writeln!(out, "{pad}{k}: {}", scalar(v)).unwrap(),
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                match item {
                    Value::Object(_) | Value::Array(_) => {
                        writeln!(out, "{pad}-").unwrap();
                        render(item, indent + 1, out);
                    }
                    _ => writeln!(out, "{pad}- {}", scalar(item)).unwrap(),
                }
            }
        }
        Value::Null => {}
        other => writeln!(out, "{pad}{}", scalar(other)).unwrap(),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Object(_) => "{}".into(),
        Value::Array(_) => "[]".into(),
        other => other.to_string(),
    }
}

pub fn spec_digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn rational(q: &Rational) -> Value {
    Value::String(fmt_rational(q))
}

pub fn ext_rational(q: &ExtRational) -> Value {
    Value::String(q.to_string())
}

pub fn prob_multiplicity(p: &ProbMultiplicity) -> Value {
    let points: Vec<Value> = p
        .iter()
        .map(|(m, q)| {
            let counts: Map<String, Value> =
                m.iter().map(|(x, c)| (x.to_string(), Value::String(c.to_string()))).collect();
            json!({ "mass": rational(q), "multiplicity": counts })
        })
        .collect();
    Value::Array(points)
}

pub fn genset(g: &GenSet) -> Value {
    json!({
        "text": g.to_string(),
        "generators": g.generators().iter().map(prob_multiplicity).collect::<Vec<_>>(),
    })
}

pub fn weighting(w: &Weighting) -> Value {
    Value::Object(w.iter().map(|(x, q)| (x.to_string(), ext_rational(q))).collect())
}

pub fn process_distance(e: &ProcessDistance) -> Value {
    Value::Object(e.iter().map(|(x, q)| (x.to_string(), rational(q))).collect())
}

pub fn transitions(tr: &Transitions) -> Value {
    Value::Object(
        tr.iter()
            .map(|(a, ds)| (a.to_string(), Value::Array(ds.iter().map(|d| Value::String(d.to_string())).collect())))
            .collect(),
    )
}

pub fn fragment(frag: &ReachableFragment) -> Value {
    let states: Vec<Value> = (0..frag.len())
        .map(|i| {
            json!({
                "index": i,
                "term": frag.state(i).to_string(),
                "depth": frag.depth_of(i),
                "transitions": frag.transitions(i).map(transitions).unwrap_or(Value::Null),
            })
        })
        .collect();
    json!({
        "states": states,
        "complete": frag.is_complete(),
        "cyclic": frag.is_cyclic(),
        "transition_count": frag.transition_count(),
    })
}

pub fn table(t: &PseudometricTable) -> Value {
    let pairs: Vec<Value> = t
        .pairs()
        .iter()
        .map(|(i, j, d)| json!({ "left": t.states()[*i].to_string(), "right": t.states()[*j].to_string(), "distance": rational(d) }))
        .collect();
    Value::Array(pairs)
}

pub fn continuity(r: &ContinuityReport) -> Value {
    let mut v = json!({
        "operator": r.operator,
        "verdict": r.verdict.to_string(),
        "modulus": r.modulus.to_string(),
        "coefficients": r.modulus.coefficients.iter().map(ext_rational).collect::<Vec<_>>(),
        "over_approximated": r.over_approximated,
        "widened": r.widened,
    });
    match &r.verdict {
        Verdict::UniformlyContinuous { n } => v["n"] = Value::String(n.to_string()),
        Verdict::NotShown { variable } => v["failing_variable"] = Value::String(variable.clone()),
    }
    if let Some(note) = &r.note {
        v["note"] = Value::String(note.clone());
    }
    v
}

pub fn modulus_check(c: &ModulusCheck) -> Value {
    json!({
        "satisfied": c.satisfied,
        "violations": c.violations.iter().map(|(i, have, allowed)| json!({
            "argument": i,
            "weighted_copies": ext_rational(have),
            "coefficient": ext_rational(allowed),
        })).collect::<Vec<_>>(),
    })
}

fn substitution(m: &BTreeMap<Name, StateTerm>) -> Value {
    Value::Object(m.iter().map(|(x, t)| (x.to_string(), Value::String(t.to_string()))).collect())
}

pub fn sample(s: &Sample) -> Value {
    json!({
        "term": s.term.to_string(),
        "sigma1": substitution(&s.sigma1),
        "sigma2": substitution(&s.sigma2),
        "e": process_distance(&s.e),
        "distance": rational(&s.distance),
        "bound": rational(&s.bound),
        "gap": rational(&s.gap()),
        "holds": s.holds(),
    })
}

/// Samples are sorted by their serialized form so the output does not
/// depend on evaluation order.
pub fn oracle(summary: &OracleSummary) -> Value {
    let mut samples: Vec<Value> = summary.checked.iter().map(sample).collect();
    samples.sort_by_key(|v| v.to_string());
    let skipped: Map<String, Value> =
        summary.skipped.iter().map(|(r, n)| (format!("{r:?}"), Value::from(*n))).collect();
    json!({
        "checked": summary.checked.len(),
        "skipped": skipped,
        "violations": summary.violations().len(),
        "tight": summary.tight(),
        "max_gap": rational(&summary.max_gap()),
        "samples": samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplicity::{Count, Multiplicity};
    use crate::rational::ratio;

    #[test]
    fn rationals_are_strings() {
        assert_eq!(rational(&ratio(19, 100)), json!("19/100"));
        assert_eq!(rational(&ratio(1, 1)), json!("1/1"));
        let g = GenSet::singleton(ProbMultiplicity::dirac(Multiplicity::of(&[("x", Count::Inf)])));
        assert_eq!(genset(&g)["generators"][0][0]["multiplicity"]["x"], json!("inf"));
        assert_eq!(genset(&g)["generators"][0][0]["mass"], json!("1/1"));
    }

    #[test]
    fn document_views() {
        let mut doc = ReportDocument::new("actions a;", "distance", json!({"left": "zero"}));
        doc.headline = "19/100".into();
        doc.results = json!({"distance": "19/100", "pairs": [{"a": "1"}]});
        doc.flags.widened = true;
        let j: Value = serde_json::from_str(&doc.to_json()).unwrap();
        assert_eq!(j["schema_version"], json!(SCHEMA_VERSION));
        assert_eq!(j["spec_digest"].as_str().unwrap().len(), 64);
        let h = doc.to_human();
        assert!(h.starts_with("19/100\n"));
        assert!(h.contains("distance: 19/100") && h.contains("flags: widened"));
        assert_eq!(doc.to_json(), doc.clone().to_json());
    }
}
