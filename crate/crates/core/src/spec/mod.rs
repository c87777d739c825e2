//! PGSOS specifications: signatures, rules, validation and template expansion.
//!
//! The textual format is handled by [`parser`] and [`printer`]; this module
//! holds the document model and the checks every rule must pass.

mod lexer;
pub mod parser;
pub mod printer;

use crate::term::{DistTerm, Name, StateTerm, Var, VarKind};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

pub use parser::{parse_spec, parse_spec_with_warnings};

/// Line/column of a token, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: undeclared {what} `{name}`")]
    UndeclaredSymbol { pos: Pos, what: &'static str, name: String },
    #[error("{pos}: `{op}` expects {expected} argument(s), found {found}")]
    ArityMismatch { pos: Pos, op: String, expected: usize, found: usize },
    #[error("{pos}: duplicate declaration of `{name}`")]
    Duplicate { pos: Pos, name: String },
    #[error("{pos}: rule `{rule}` is not a PGSOS rule: {}", join_violations(violations))]
    InvalidRule { pos: Pos, rule: String, violations: Vec<RuleViolation> },
    #[error("{pos}: {msg}")]
    Term { pos: Pos, msg: String },
}

fn join_violations(v: &[RuleViolation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleViolation {
    #[error("derivative `{0}` is bound by more than one premise")]
    DuplicateDerivative(Name),
    #[error("source variable `{0}` occurs more than once")]
    DuplicateSource(Name),
    #[error("target mentions `{0}`, which is neither a source nor a derivative")]
    ForeignTargetVariable(Name),
    #[error("premise tests `{0}`, which is not a source variable")]
    PremiseOnNonSource(Name),
    #[error("`{0}` is used both as a source and as a derivative")]
    VariableKindClash(Name),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Warning {
    EmptyExpansion { pos: Pos, rule: String },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::EmptyExpansion { pos, rule } => {
                write!(f, "{pos}: rule template `{rule}` expands to no rules")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    pub operators: BTreeMap<Name, usize>,
    pub actions: BTreeSet<Name>,
}

impl Signature {
    pub fn arity(&self, op: &str) -> Option<usize> {
        self.operators.get(op).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PositivePremise {
    /// 0-based argument position of the tested source variable.
    pub arg: usize,
    pub action: Name,
    pub derivative: Name,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NegativePremise {
    pub arg: usize,
    pub action: Name,
}

/// A validated PGSOS rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub name: Name,
    pub op: Name,
    pub sources: Vec<Name>,
    pub positive: Vec<PositivePremise>,
    pub negative: Vec<NegativePremise>,
    pub action: Name,
    pub target: DistTerm,
}

impl Rule {
    pub fn arity(&self) -> usize {
        self.sources.len()
    }

    /// Argument positions tested by some positive or negative premise.
    pub fn tested_args(&self) -> BTreeSet<usize> {
        self.positive.iter().map(|p| p.arg).chain(self.negative.iter().map(|n| n.arg)).collect()
    }

    pub fn source_term(&self) -> StateTerm {
        StateTerm::App(self.op.clone(), self.sources.iter().map(|x| StateTerm::Var(x.clone())).collect())
    }

    /// Renames sources to `x1..xn` and derivatives to `mu{i}` (or `mu{i}_{k}`
    /// when argument `i` has several), so rules of one operator agree on
    /// the variable standing for each argument.
    pub fn canonical(&self) -> Rule {
        let mut state_map = BTreeMap::new();
        for (i, x) in self.sources.iter().enumerate() {
            state_map.insert(x.clone(), StateTerm::Var(canonical_source(i)));
        }
        let mut per_arg: BTreeMap<usize, usize> = BTreeMap::new();
        for p in &self.positive {
            *per_arg.entry(p.arg).or_default() += 1;
        }
        let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
        let mut dist_map = BTreeMap::new();
        let positive = self
            .positive
            .iter()
            .map(|p| {
                let k = seen.entry(p.arg).or_default();
                *k += 1;
                let fresh: Name = if per_arg[&p.arg] == 1 {
                    format!("mu{}", p.arg + 1).into()
                } else {
                    format!("mu{}_{}", p.arg + 1, k).into()
                };
                dist_map.insert(p.derivative.clone(), DistTerm::Var(fresh.clone()));
                PositivePremise { arg: p.arg, action: p.action.clone(), derivative: fresh }
            })
            .collect();
        let sigma = crate::term::Substitution { state: state_map, dist: dist_map };
        Rule {
            name: self.name.clone(),
            op: self.op.clone(),
            sources: (0..self.sources.len()).map(canonical_source).collect(),
            positive,
            negative: self.negative.clone(),
            action: self.action.clone(),
            target: self.target.substitute(&sigma),
        }
    }
}

/// Name of the `i`-th (0-based) canonical source variable: `x1`, `x2`, ...
pub fn canonical_source(i: usize) -> Name {
    format!("x{}", i + 1).into()
}

/// A rule as written, before the PGSOS constraints are checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleCandidate {
    pub name: Name,
    pub op: Name,
    pub sources: Vec<Name>,
    /// (tested variable, action, derivative)
    pub positive: Vec<(Name, Name, Name)>,
    /// (tested variable, action)
    pub negative: Vec<(Name, Name)>,
    pub action: Name,
    pub target: DistTerm,
}

/// Checks the three PGSOS constraints plus well-formedness of premises.
/// An empty result means the rule is valid.
pub fn validate_rule(r: &RuleCandidate) -> Vec<RuleViolation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (_, _, mu) in &r.positive {
        if !seen.insert(mu.clone()) {
            out.push(RuleViolation::DuplicateDerivative(mu.clone()));
        }
    }
    let mut sources = BTreeSet::new();
    for x in &r.sources {
        if !sources.insert(x.clone()) {
            out.push(RuleViolation::DuplicateSource(x.clone()));
        }
    }
    for x in sources.intersection(&seen) {
        out.push(RuleViolation::VariableKindClash(x.clone()));
    }
    let tested = r.positive.iter().map(|(x, _, _)| x).chain(r.negative.iter().map(|(x, _)| x));
    let mut reported = BTreeSet::new();
    for x in tested {
        if !sources.contains(x) && reported.insert(x.clone()) {
            out.push(RuleViolation::PremiseOnNonSource(x.clone()));
        }
    }
    for Var { name, kind } in r.target.free_vars() {
        let allowed = match kind {
            VarKind::State => sources.contains(&name),
            VarKind::Dist => seen.contains(&name),
        };
        if !allowed {
            out.push(RuleViolation::ForeignTargetVariable(name));
        }
    }
    out
}

impl RuleCandidate {
    /// Resolves premise variables to argument positions. Call only after
    /// [`validate_rule`] returned no violations.
    pub fn into_rule(self) -> Rule {
        let index = |x: &Name| self.sources.iter().position(|s| s == x).expect("validated premise");
        let positive = self
            .positive
            .iter()
            .map(|(x, a, mu)| PositivePremise { arg: index(x), action: a.clone(), derivative: mu.clone() })
            .collect();
        let negative =
            self.negative.iter().map(|(x, b)| NegativePremise { arg: index(x), action: b.clone() }).collect();
        Rule {
            name: self.name.clone(),
            op: self.op.clone(),
            sources: self.sources.clone(),
            positive,
            negative,
            action: self.action.clone(),
            target: self.target.clone(),
        }
    }
}

/// Action-set expressions used by rule templates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SetExpr {
    /// `ACT`, the declared alphabet.
    All,
    Named(Name, Pos),
    Literal(Vec<(Name, Pos)>),
    Difference(Box<SetExpr>, Box<SetExpr>),
    Union(Box<SetExpr>, Box<SetExpr>),
}

impl SetExpr {
    pub fn eval(
        &self,
        actions: &BTreeSet<Name>,
        sets: &BTreeMap<Name, BTreeSet<Name>>,
    ) -> Result<BTreeSet<Name>, SpecError> {
        match self {
            SetExpr::All => Ok(actions.clone()),
            SetExpr::Named(n, pos) => sets.get(n).cloned().ok_or_else(|| SpecError::UndeclaredSymbol {
                pos: *pos,
                what: "action set",
                name: n.to_string(),
            }),
            SetExpr::Literal(items) => items
                .iter()
                .map(|(a, pos)| {
                    if actions.contains(a) {
                        Ok(a.clone())
                    } else {
                        Err(SpecError::UndeclaredSymbol { pos: *pos, what: "action", name: a.to_string() })
                    }
                })
                .collect(),
            SetExpr::Difference(l, r) => {
                let l = l.eval(actions, sets)?;
                let r = r.eval(actions, sets)?;
                Ok(l.difference(&r).cloned().collect())
            }
            SetExpr::Union(l, r) => {
                let mut l = l.eval(actions, sets)?;
                l.extend(r.eval(actions, sets)?);
                Ok(l)
            }
        }
    }
}

/// A rule quantified over action variables (`forall a in S`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleTemplate {
    pub pos: Pos,
    pub binders: Vec<(Name, SetExpr)>,
    pub rule: RuleCandidate,
    /// Positions of action occurrences, in order: premises then conclusion.
    pub action_positions: Vec<Pos>,
}

/// A parsed document whose rules may still be templates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TemplateDocument {
    pub signature: Signature,
    pub sets: BTreeMap<Name, BTreeSet<Name>>,
    pub templates: Vec<RuleTemplate>,
    pub terms: BTreeMap<Name, StateTerm>,
}

/// Expands every template into concrete rules, one per assignment of its
/// action variables, and validates each result.
pub fn expand_templates(doc: TemplateDocument) -> Result<(SpecDocument, Vec<Warning>), SpecError> {
    let mut rules = Vec::new();
    let mut warnings = Vec::new();
    for tpl in &doc.templates {
        let mut domains = Vec::new();
        for (var, set) in &tpl.binders {
            domains.push((var.clone(), set.eval(&doc.signature.actions, &doc.sets)?));
        }
        let mut assignments: Vec<Vec<(Name, Name)>> = vec![Vec::new()];
        for (var, values) in &domains {
            assignments = assignments
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut next = prefix.clone();
                        next.push((var.clone(), v.clone()));
                        next
                    })
                })
                .collect();
        }
        if assignments.is_empty() {
            warnings.push(Warning::EmptyExpansion { pos: tpl.pos, rule: tpl.rule.name.to_string() });
            continue;
        }
        for assignment in assignments {
            let rule = instantiate_template(tpl, &assignment, &doc.signature)?;
            let violations = validate_rule(&rule);
            if !violations.is_empty() {
                return Err(SpecError::InvalidRule { pos: tpl.pos, rule: rule.name.to_string(), violations });
            }
            rules.push(rule.into_rule());
        }
    }
    let mut names = BTreeSet::new();
    for r in &rules {
        if !names.insert(r.name.clone()) {
            return Err(SpecError::Duplicate { pos: Pos::default(), name: r.name.to_string() });
        }
    }
    Ok((SpecDocument::new(doc.signature, doc.sets, rules, doc.terms), warnings))
}

fn instantiate_template(
    tpl: &RuleTemplate,
    assignment: &[(Name, Name)],
    sig: &Signature,
) -> Result<RuleCandidate, SpecError> {
    let mut positions = tpl.action_positions.iter().copied();
    let mut resolve = |a: &Name| -> Result<Name, SpecError> {
        let pos = positions.next().unwrap_or_default();
        if let Some((_, v)) = assignment.iter().find(|(var, _)| var == a) {
            return Ok(v.clone());
        }
        if sig.actions.contains(a) {
            Ok(a.clone())
        } else {
            Err(SpecError::UndeclaredSymbol { pos, what: "action", name: a.to_string() })
        }
    };
    let mut rule = tpl.rule.clone();
    for p in rule.positive.iter_mut() {
        p.1 = resolve(&p.1)?;
    }
    for n in rule.negative.iter_mut() {
        n.1 = resolve(&n.1)?;
    }
    rule.action = resolve(&rule.action)?;
    if !assignment.is_empty() {
        let suffix: Vec<&str> = assignment.iter().map(|(_, v)| &**v).collect();
        rule.name = format!("{}[{}]", rule.name, suffix.join(",")).into();
    }
    Ok(rule)
}

/// A probabilistic transition system specification with concrete rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecDocument {
    pub signature: Signature,
    pub sets: BTreeMap<Name, BTreeSet<Name>>,
    pub rules: Vec<Rule>,
    pub terms: BTreeMap<Name, StateTerm>,
    by_op: BTreeMap<Name, Vec<usize>>,
}

impl SpecDocument {
    pub fn new(
        signature: Signature,
        sets: BTreeMap<Name, BTreeSet<Name>>,
        rules: Vec<Rule>,
        terms: BTreeMap<Name, StateTerm>,
    ) -> Self {
        let mut by_op: BTreeMap<Name, Vec<usize>> = BTreeMap::new();
        for (i, r) in rules.iter().enumerate() {
            by_op.entry(r.op.clone()).or_default().push(i);
        }
        SpecDocument { signature, sets, rules, terms, by_op }
    }

    pub fn arity(&self, op: &str) -> Option<usize> {
        self.signature.arity(op)
    }

    /// Indices into `rules` of the rules with source operator `op`.
    pub fn rule_indices(&self, op: &str) -> &[usize] {
        self.by_op.get(op).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn rules_for<'a>(&'a self, op: &str) -> impl Iterator<Item = &'a Rule> + 'a {
        self.rule_indices(op).iter().map(move |&i| &self.rules[i])
    }

    pub fn operators(&self) -> impl Iterator<Item = (&Name, usize)> {
        self.signature.operators.iter().map(|(f, n)| (f, *n))
    }

    pub fn actions(&self) -> &BTreeSet<Name> {
        &self.signature.actions
    }

    /// Parses a state term in the concrete syntax, resolving operators and
    /// `term` abbreviations declared in this document.
    pub fn parse_term(&self, text: &str) -> Result<StateTerm, SpecError> {
        parser::parse_state_term(self, text)
    }

    /// Like [`Self::parse_term`] but rejects terms with variables.
    pub fn parse_closed_term(&self, text: &str) -> Result<StateTerm, SpecError> {
        let t = self.parse_term(text)?;
        if let Some(v) = t.free_vars().into_iter().next() {
            return Err(SpecError::Term {
                pos: Pos { line: 1, col: 1 },
                msg: format!("expected a closed term, found variable `{v}`"),
            });
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::name;

    fn candidate(
        sources: &[&str],
        positive: &[(&str, &str, &str)],
        negative: &[(&str, &str)],
        target: DistTerm,
    ) -> RuleCandidate {
        RuleCandidate {
            name: name("r"),
            op: name("f"),
            sources: sources.iter().map(|s| name(s)).collect(),
            positive: positive.iter().map(|(x, a, m)| (name(x), name(a), name(m))).collect(),
            negative: negative.iter().map(|(x, b)| (name(x), name(b))).collect(),
            action: name("a"),
            target,
        }
    }

    #[test]
    fn alternative_composition_rule_is_valid() {
        let r = candidate(&["x1", "x2"], &[("x1", "a", "mu1")], &[], DistTerm::var("mu1"));
        assert!(validate_rule(&r).is_empty());
    }

    #[test]
    fn duplicate_derivative_detected() {
        let r = candidate(&["x1"], &[("x1", "a", "mu"), ("x1", "b", "mu")], &[], DistTerm::var("mu"));
        assert_eq!(validate_rule(&r), vec![RuleViolation::DuplicateDerivative(name("mu"))]);
    }

    #[test]
    fn duplicate_source_detected() {
        let r = candidate(&["x", "x"], &[], &[], DistTerm::dirac(StateTerm::var("x")));
        assert_eq!(validate_rule(&r), vec![RuleViolation::DuplicateSource(name("x"))]);
    }

    #[test]
    fn foreign_target_variable_detected() {
        let r = candidate(&["x1"], &[], &[], DistTerm::dirac(StateTerm::var("y")));
        assert_eq!(validate_rule(&r), vec![RuleViolation::ForeignTargetVariable(name("y"))]);
        let r = candidate(&["x1"], &[], &[], DistTerm::var("nu"));
        assert_eq!(validate_rule(&r), vec![RuleViolation::ForeignTargetVariable(name("nu"))]);
    }

    #[test]
    fn premise_must_test_a_source() {
        let r = candidate(&["x1"], &[], &[("z", "b")], DistTerm::dirac(StateTerm::var("x1")));
        assert_eq!(validate_rule(&r), vec![RuleViolation::PremiseOnNonSource(name("z"))]);
    }

    #[test]
    fn canonical_renaming() {
        let r = candidate(&["y"], &[("y", "a", "nu")], &[], DistTerm::app("g", vec![DistTerm::var("nu")]))
            .into_rule()
            .canonical();
        assert_eq!(r.sources, vec![name("x1")]);
        assert_eq!(r.positive[0].derivative, name("mu1"));
        assert_eq!(r.target, DistTerm::app("g", vec![DistTerm::var("mu1")]));
    }
}
