//! Canonical printer. Parsing the output yields an equal [`SpecDocument`].

use super::{Rule, SpecDocument};
use crate::term::Name;
use std::collections::BTreeSet;
use std::fmt::Write;

pub fn print_spec(doc: &SpecDocument) -> String {
    let mut out = String::new();
    let actions: Vec<&str> = doc.signature.actions.iter().map(|a| &**a).collect();
    writeln!(out, "actions {};", actions.join(", ")).unwrap();
    for (n, set) in &doc.sets {
        writeln!(out, "set {n} = {};", print_set(set)).unwrap();
    }
    for (op, arity) in &doc.signature.operators {
        writeln!(out, "op {op} : {arity};").unwrap();
    }
    for rule in &doc.rules {
        out.push('\n');
        out.push_str(&print_rule(rule));
    }
    if !doc.terms.is_empty() {
        out.push('\n');
    }
    for (n, t) in &doc.terms {
        writeln!(out, "term {n} = {t};").unwrap();
    }
    out
}

fn print_set(set: &BTreeSet<Name>) -> String {
    let items: Vec<&str> = set.iter().map(|a| &**a).collect();
    format!("{{{}}}", items.join(", "))
}

pub fn print_rule(r: &Rule) -> String {
    let mut out = format!("rule {} {{\n", r.name);
    for p in &r.positive {
        writeln!(out, "    {} --{}--> {}", r.sources[p.arg], p.action, p.derivative).unwrap();
    }
    for n in &r.negative {
        writeln!(out, "    {} -/{}->", r.sources[n.arg], n.action).unwrap();
    }
    out.push_str("    ---\n");
    writeln!(out, "    {} --{}--> {}", r.source_term(), r.action, r.target).unwrap();
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::parse_spec;

    #[test]
    fn round_trip() {
        let text = "actions a, b; set B = {a}; op zero : 0; op f : 2;
            rule r forall c in ACT \\ B { x -/a-> y --c--> nu --- f(x, y) --c--> 1/3*delta(f(x, zero)) + 2/3*nu }";
        let doc = parse_spec(text).unwrap();
        let printed = print_spec(&doc);
        assert!(printed.contains("rule r[b] {"));
        assert_eq!(parse_spec(&printed).unwrap(), doc);
    }
}
