//! Copy-count denotations of terms and rules, computed as a least fixed
//! point by Jacobi iteration from bottom with widening on recursive entries.

use crate::multiplicity::{
    da, genset_leq, genset_normalize, genset_union, p_compose, p_convex, sup_of, weighting, Count, GenSet,
    Multiplicity, MultiplicityError, ProbMultiplicity, ProcessDistance,
};
use crate::rational::{ExtRational, Rational};
use crate::spec::{canonical_source, Rule, SpecDocument};
use crate::term::{DistTerm, Name, StateTerm, Term};
use petgraph::graph::DiGraph;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DenotationError {
    #[error("operator `{0}` is not declared")]
    UndeclaredOperator(String),
    #[error("operator `{op}` expects {expected} arguments, found {found}")]
    ArityMismatch { op: String, expected: usize, found: usize },
    #[error("no fixed point after {iterations} iterations (still growing: {unstable})")]
    IterationLimitExceeded { iterations: usize, unstable: String },
    #[error("invalid fixpoint configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Domain(#[from] MultiplicityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixpointConfig {
    pub max_iterations: usize,
    /// Number of strict increases of an entry's weighted sup at one variable
    /// after which that variable is widened to infinity.
    pub widening_window: usize,
    /// Add the tested source variables when an operator is applied to
    /// distribution terms. Turning this off is unsound; it exists to show why.
    pub xr_correction: bool,
}

impl Default for FixpointConfig {
    fn default() -> Self {
        FixpointConfig { max_iterations: 64, widening_window: 8, xr_correction: true }
    }
}

impl FixpointConfig {
    fn validate(&self) -> Result<(), DenotationError> {
        if self.max_iterations == 0 || self.widening_window == 0 {
            return Err(DenotationError::InvalidConfig("limits must be positive".into()));
        }
        if self.widening_window >= self.max_iterations {
            return Err(DenotationError::InvalidConfig("widening window must be below the iteration limit".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FixpointStatus {
    Exact,
    Widened,
}

impl fmt::Display for FixpointStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FixpointStatus::Exact => "exact",
            FixpointStatus::Widened => "widened",
        })
    }
}

#[derive(Debug, Clone)]
enum Node {
    SVar(Name),
    SApp(Name, Vec<usize>),
    DVar(Name),
    Dirac(usize),
    Convex(Vec<(Rational, usize)>),
    DApp(Name, Vec<usize>),
    Rule(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    S(StateTerm),
    D(DistTerm),
    R(usize),
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Key::S(t) => t.fmt(f),
            Key::D(t) => t.fmt(f),
            Key::R(i) => write!(f, "rule#{i}"),
        }
    }
}

/// Values of all tracked entries at one point of the iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenotationState {
    values: Vec<GenSet>,
    pub iteration: usize,
}

/// The finite system of equations behind the denotations of a spec: every
/// rule, every sub-term of a rule target, and `f(x1, .., xn)` per operator.
pub struct Engine<'a> {
    doc: &'a SpecDocument,
    cfg: FixpointConfig,
    rules: Vec<Rule>,
    nodes: Vec<Node>,
    keys: Vec<Key>,
    index: HashMap<Key, usize>,
    rule_nodes: Vec<usize>,
    op_nodes: BTreeMap<Name, usize>,
    recursive: Vec<bool>,
}

fn unit(x: &Name) -> GenSet {
    GenSet::singleton(ProbMultiplicity::dirac(Multiplicity::unit(x)))
}

fn combinations<'g>(lists: &[&'g [ProbMultiplicity]]) -> Vec<Vec<&'g ProbMultiplicity>> {
    let mut out: Vec<Vec<&ProbMultiplicity>> = vec![Vec::new()];
    for list in lists {
        out = out.into_iter().flat_map(|prefix| list.iter().map(move |p| [prefix.clone(), vec![p]].concat())).collect();
    }
    out
}

/// `sum_i (rho .x_i args[i])`, drawing one generator of `rho` for all
/// arguments together and one generator per argument.
fn compose(rho: &[ProbMultiplicity], args: &[&GenSet]) -> Result<GenSet, MultiplicityError> {
    let lists: Vec<&[ProbMultiplicity]> = args.iter().map(|g| g.generators()).collect();
    let combos = combinations(&lists);
    let mut out = Vec::with_capacity(rho.len() * combos.len());
    for p in rho {
        for combo in &combos {
            let parts: Vec<(Name, ProbMultiplicity)> =
                combo.iter().enumerate().map(|(i, g)| (canonical_source(i), (*g).clone())).collect();
            out.push(p_compose(p, &parts));
        }
    }
    genset_normalize(out)
}

/// Adds `m(mu) * 1_x` for every premise `x --a--> mu`.
fn fold_premises(rule: &Rule, g: &GenSet) -> Result<GenSet, MultiplicityError> {
    let folds: Vec<(Name, Name)> =
        rule.positive.iter().map(|p| (p.derivative.clone(), rule.sources[p.arg].clone())).collect();
    genset_normalize(g.generators().iter().map(|p| {
        p.map(|m| {
            let mut out = m.clone();
            for (mu, x) in &folds {
                let add = m.get(mu);
                let cur = out.get(x);
                out.set(x, cur + add);
            }
            out
        })
    }))
}

/// Sets `x` to infinity in every multiplicity of every generator.
fn widen(g: &GenSet, x: &Name) -> Result<GenSet, MultiplicityError> {
    genset_normalize(g.generators().iter().map(|p| {
        p.map(|m| {
            let mut out = m.clone();
            out.set(x, Count::Inf);
            out
        })
    }))
}

/// Operator environment derived from the rule denotations.
struct Rho {
    state: BTreeMap<Name, GenSet>,
    dist: BTreeMap<Name, ProbMultiplicity>,
    approximated: BTreeSet<Name>,
}

impl<'a> Engine<'a> {
    pub fn new(doc: &'a SpecDocument, cfg: FixpointConfig) -> Result<Self, DenotationError> {
        cfg.validate()?;
        let rules: Vec<Rule> = doc.rules.iter().map(Rule::canonical).collect();
        let mut e = Engine {
            doc,
            cfg,
            rules: Vec::new(),
            nodes: Vec::new(),
            keys: Vec::new(),
            index: HashMap::new(),
            rule_nodes: Vec::new(),
            op_nodes: BTreeMap::new(),
            recursive: Vec::new(),
        };
        for (i, r) in rules.iter().enumerate() {
            let target = e.add_dist(&r.target)?;
            let id = e.push(Key::R(i), Node::Rule(target));
            e.rule_nodes.push(id);
        }
        e.rules = rules;
        let ops: Vec<(Name, usize)> = doc.operators().map(|(f, n)| (f.clone(), n)).collect();
        for (f, n) in ops {
            let t = StateTerm::App(f.clone(), (0..n).map(|i| StateTerm::Var(canonical_source(i))).collect());
            let id = e.add_state(&t)?;
            e.op_nodes.insert(f, id);
        }
        e.recursive = e.recursive_nodes();
        Ok(e)
    }

    fn push(&mut self, key: Key, node: Node) -> usize {
        let id = self.nodes.len();
        self.index.insert(key.clone(), id);
        self.keys.push(key);
        self.nodes.push(node);
        id
    }

    fn check_arity(&self, op: &Name, found: usize) -> Result<(), DenotationError> {
        match self.doc.arity(op) {
            None => Err(DenotationError::UndeclaredOperator(op.to_string())),
            Some(expected) if expected != found => {
                Err(DenotationError::ArityMismatch { op: op.to_string(), expected, found })
            }
            Some(_) => Ok(()),
        }
    }

    fn add_state(&mut self, t: &StateTerm) -> Result<usize, DenotationError> {
        if let Some(&id) = self.index.get(&Key::S(t.clone())) {
            return Ok(id);
        }
        let node = match t {
            StateTerm::Var(x) => Node::SVar(x.clone()),
            StateTerm::App(f, args) => {
                self.check_arity(f, args.len())?;
                let ids = args.iter().map(|a| self.add_state(a)).collect::<Result<_, _>>()?;
                Node::SApp(f.clone(), ids)
            }
        };
        Ok(self.push(Key::S(t.clone()), node))
    }

    fn add_dist(&mut self, t: &DistTerm) -> Result<usize, DenotationError> {
        if let Some(&id) = self.index.get(&Key::D(t.clone())) {
            return Ok(id);
        }
        let node = match t {
            DistTerm::Var(mu) => Node::DVar(mu.clone()),
            DistTerm::Dirac(s) => Node::Dirac(self.add_state(s)?),
            DistTerm::Convex(items) => Node::Convex(
                items
                    .iter()
                    .map(|(q, d)| Ok((q.clone(), self.add_dist(d)?)))
                    .collect::<Result<_, DenotationError>>()?,
            ),
            DistTerm::App(f, args) => {
                self.check_arity(f, args.len())?;
                let ids = args.iter().map(|a| self.add_dist(a)).collect::<Result<_, _>>()?;
                Node::DApp(f.clone(), ids)
            }
        };
        Ok(self.push(Key::D(t.clone()), node))
    }

    fn rules_of(&self, op: &str) -> impl Iterator<Item = usize> + '_ {
        self.doc.rule_indices(op).iter().copied()
    }

    fn deps(&self, i: usize) -> Vec<usize> {
        match &self.nodes[i] {
            Node::SVar(_) | Node::DVar(_) => vec![],
            Node::SApp(f, args) | Node::DApp(f, args) => {
                args.iter().copied().chain(self.rules_of(f).map(|r| self.rule_nodes[r])).collect()
            }
            Node::Dirac(s) => vec![*s],
            Node::Convex(items) => items.iter().map(|(_, d)| *d).collect(),
            Node::Rule(t) => vec![*t],
        }
    }

    /// Whether some entry reachable from `start` was widened.
    fn reaches(&self, start: usize, widened: &BTreeSet<usize>) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut seen[i], true) {
                continue;
            }
            if widened.contains(&i) {
                return true;
            }
            stack.extend(self.deps(i));
        }
        false
    }

    /// Entries lying on a dependency cycle; only these may be widened.
    fn recursive_nodes(&self) -> Vec<bool> {
        let mut g = DiGraph::<(), ()>::with_capacity(self.nodes.len(), 0);
        let ids: Vec<_> = (0..self.nodes.len()).map(|_| g.add_node(())).collect();
        for i in 0..self.nodes.len() {
            for d in self.deps(i) {
                g.add_edge(ids[i], ids[d], ());
            }
        }
        let mut out = vec![false; self.nodes.len()];
        for scc in petgraph::algo::tarjan_scc(&g) {
            let cyclic = scc.len() > 1 || g.contains_edge(scc[0], scc[0]);
            if cyclic {
                for n in scc {
                    out[n.index()] = true;
                }
            }
        }
        out
    }

    pub fn bottom(&self) -> DenotationState {
        DenotationState { values: vec![GenSet::bottom(); self.nodes.len()], iteration: 0 }
    }

    fn rho(&self, values: &[GenSet]) -> Result<Rho, MultiplicityError> {
        let mut rho = Rho { state: BTreeMap::new(), dist: BTreeMap::new(), approximated: BTreeSet::new() };
        for (f, _) in self.doc.operators() {
            let rule_vals: Vec<&GenSet> = self.rules_of(f).map(|r| &values[self.rule_nodes[r]]).collect();
            let state = if rule_vals.is_empty() { GenSet::bottom() } else { genset_union(&rule_vals)? };
            let mut per_rule = Vec::new();
            let mut approx = false;
            for r in self.rules_of(f) {
                let (s, a) = sup_of(values[self.rule_nodes[r]].generators())?;
                approx |= a;
                let tested = self.rules[r].tested_args();
                let s = if self.cfg.xr_correction && !tested.is_empty() {
                    let xr = Multiplicity::of(
                        &tested.iter().map(|&i| (&*self.rules[r].sources[i], Count::Fin(1))).collect::<Vec<_>>(),
                    );
                    let (s, a) = sup_of(&[s, ProbMultiplicity::dirac(xr)])?;
                    approx |= a;
                    s
                } else {
                    s
                };
                per_rule.push(s);
            }
            let dist = if per_rule.is_empty() {
                ProbMultiplicity::zero()
            } else {
                let (s, a) = sup_of(&per_rule)?;
                approx |= a;
                s
            };
            if approx {
                rho.approximated.insert(f.clone());
            }
            rho.state.insert(f.clone(), state);
            rho.dist.insert(f.clone(), dist);
        }
        Ok(rho)
    }

    fn eval(&self, id: usize, values: &[GenSet], rho: &Rho) -> Result<GenSet, MultiplicityError> {
        Ok(match &self.nodes[id] {
            Node::SVar(x) | Node::DVar(x) => unit(x),
            Node::SApp(f, args) => {
                let args: Vec<&GenSet> = args.iter().map(|&a| &values[a]).collect();
                compose(rho.state[f].generators(), &args)?
            }
            Node::DApp(f, args) => {
                let args: Vec<&GenSet> = args.iter().map(|&a| &values[a]).collect();
                compose(std::slice::from_ref(&rho.dist[f]), &args)?
            }
            Node::Dirac(s) => values[*s].clone(),
            Node::Convex(items) => {
                let lists: Vec<&[ProbMultiplicity]> = items.iter().map(|(_, d)| values[*d].generators()).collect();
                genset_normalize(combinations(&lists).into_iter().map(|combo| {
                    let parts: Vec<(Rational, ProbMultiplicity)> =
                        items.iter().zip(combo).map(|((q, _), p)| (q.clone(), p.clone())).collect();
                    p_convex(&parts)
                }))?
            }
            Node::Rule(t) => {
                let Key::R(r) = self.keys[id] else { unreachable!("rule nodes carry rule keys") };
                fold_premises(&self.rules[r], &values[*t])?
            }
        })
    }

    /// One application of the functional to every entry.
    pub fn step(&self, s: &DenotationState) -> Result<DenotationState, DenotationError> {
        let rho = self.rho(&s.values)?;
        let values = (0..self.nodes.len()).map(|id| self.eval(id, &s.values, &rho)).collect::<Result<_, _>>()?;
        Ok(DenotationState { values, iteration: s.iteration + 1 })
    }

    /// Every entry of `a` and `b` denotes the same downward-closed set.
    pub fn same(&self, a: &DenotationState, b: &DenotationState) -> bool {
        a.values.iter().zip(&b.values).all(|(x, y)| x == y || (genset_leq(x, y) && genset_leq(y, x)))
    }

    /// Every entry of `a` lies below the matching entry of `b`.
    pub fn below(&self, a: &DenotationState, b: &DenotationState) -> bool {
        a.values.iter().zip(&b.values).all(|(x, y)| genset_leq(x, y))
    }

    fn weighted_sup(g: &GenSet) -> Result<BTreeMap<Name, ExtRational>, MultiplicityError> {
        let (s, _) = sup_of(g.generators())?;
        Ok(weighting(&s).iter().map(|(x, w)| (x.clone(), w.clone())).collect())
    }

    pub fn solve(&self) -> Result<Denotations, DenotationError> {
        let mut s = self.bottom();
        let mut increases: HashMap<(usize, Name), usize> = HashMap::new();
        let mut widened: BTreeSet<(usize, Name)> = BTreeSet::new();
        for _ in 0..self.cfg.max_iterations {
            let mut next = self.step(&s)?;
            for (id, x) in &widened {
                next.values[*id] = widen(&next.values[*id], x)?;
            }
            if self.same(&s, &next) {
                return self.finish(next, widened);
            }
            for id in (0..self.nodes.len()).filter(|&i| self.recursive[i]) {
                if s.values[id] == next.values[id] {
                    continue;
                }
                let (old, new) = (Self::weighted_sup(&s.values[id])?, Self::weighted_sup(&next.values[id])?);
                for (x, w) in &new {
                    let before = old.get(x).cloned().unwrap_or_else(ExtRational::zero);
                    if *w <= before || widened.contains(&(id, x.clone())) {
                        continue;
                    }
                    let n = increases.entry((id, x.clone())).or_default();
                    *n += 1;
                    if *n >= self.cfg.widening_window {
                        widened.insert((id, x.clone()));
                        next.values[id] = widen(&next.values[id], x)?;
                    }
                }
            }
            s = next;
        }
        let next = self.step(&s)?;
        let unstable: Vec<String> = (0..self.nodes.len())
            .filter(|&i| !(genset_leq(&next.values[i], &s.values[i])))
            .map(|i| self.keys[i].to_string())
            .take(5)
            .collect();
        Err(DenotationError::IterationLimitExceeded {
            iterations: self.cfg.max_iterations,
            unstable: unstable.join(", "),
        })
    }

    fn finish(&self, s: DenotationState, widened: BTreeSet<(usize, Name)>) -> Result<Denotations, DenotationError> {
        let rho = self.rho(&s.values)?;
        let operators = self.op_nodes.iter().map(|(f, &id)| (f.clone(), s.values[id].clone())).collect();
        let rules =
            self.rules.iter().zip(&self.rule_nodes).map(|(r, &id)| (r.name.clone(), s.values[id].clone())).collect();
        let status = if widened.is_empty() { FixpointStatus::Exact } else { FixpointStatus::Widened };
        let widened_ids: BTreeSet<usize> = widened.iter().map(|(id, _)| *id).collect();
        let widened_operators =
            self.op_nodes.iter().filter(|(_, &id)| self.reaches(id, &widened_ids)).map(|(f, _)| f.clone()).collect();
        let widened = widened.into_iter().map(|(id, x)| (self.keys[id].to_string(), x)).collect();
        Ok(Denotations {
            arity: self.doc.operators().map(|(f, n)| (f.clone(), n)).collect(),
            rho_state: rho.state,
            rho_dist: rho.dist,
            approximated: rho.approximated,
            operators,
            rules,
            iterations: s.iteration,
            status,
            widened,
            widened_operators,
            xr_correction: self.cfg.xr_correction,
        })
    }
}

/// The least fixed point for a spec, from which the denotation of any term
/// over its operators follows by structural recursion.
#[derive(Debug, Clone)]
pub struct Denotations {
    arity: BTreeMap<Name, usize>,
    rho_state: BTreeMap<Name, GenSet>,
    rho_dist: BTreeMap<Name, ProbMultiplicity>,
    approximated: BTreeSet<Name>,
    operators: BTreeMap<Name, GenSet>,
    rules: BTreeMap<Name, GenSet>,
    widened_operators: BTreeSet<Name>,
    pub iterations: usize,
    pub status: FixpointStatus,
    /// `(entry, variable)` pairs that were widened to infinity.
    pub widened: Vec<(String, Name)>,
    pub xr_correction: bool,
}

impl Denotations {
    pub fn compute(doc: &SpecDocument, cfg: FixpointConfig) -> Result<Self, DenotationError> {
        Engine::new(doc, cfg)?.solve()
    }

    /// `[[f(x1, .., xn)]]`.
    pub fn operator(&self, op: &str) -> Option<&GenSet> {
        self.operators.get(op)
    }

    pub fn arity(&self, op: &str) -> Option<usize> {
        self.arity.get(op).copied()
    }

    pub fn operators(&self) -> impl Iterator<Item = (&Name, &GenSet)> {
        self.operators.iter()
    }

    pub fn rule(&self, name: &str) -> Option<&GenSet> {
        self.rules.get(name)
    }

    /// What `op` contributes when applied to distribution terms.
    pub fn dist_operator(&self, op: &str) -> Option<&ProbMultiplicity> {
        self.rho_dist.get(op)
    }

    /// Operators whose distribution-level sup had to be over-approximated.
    pub fn approximated(&self) -> &BTreeSet<Name> {
        &self.approximated
    }

    pub fn is_widened(&self) -> bool {
        self.status == FixpointStatus::Widened
    }

    /// Operators whose denotation depends on a widened entry.
    pub fn widened_operators(&self) -> &BTreeSet<Name> {
        &self.widened_operators
    }

    /// Whether the denotation of `t` may be coarser than the least fixed point.
    pub fn is_widened_at(&self, t: &StateTerm) -> bool {
        match t {
            StateTerm::Var(_) => false,
            StateTerm::App(f, args) => self.widened_operators.contains(f) || args.iter().any(|a| self.is_widened_at(a)),
        }
    }

    fn check(&self, f: &Name, found: usize) -> Result<(), DenotationError> {
        match self.arity.get(f) {
            None => Err(DenotationError::UndeclaredOperator(f.to_string())),
            Some(&expected) if expected != found => {
                Err(DenotationError::ArityMismatch { op: f.to_string(), expected, found })
            }
            Some(_) => Ok(()),
        }
    }

    pub fn denote(&self, t: &StateTerm) -> Result<GenSet, DenotationError> {
        match t {
            StateTerm::Var(x) => Ok(unit(x)),
            StateTerm::App(f, args) => {
                self.check(f, args.len())?;
                let vals = args.iter().map(|a| self.denote(a)).collect::<Result<Vec<_>, _>>()?;
                Ok(compose(self.rho_state[f].generators(), &vals.iter().collect::<Vec<_>>())?)
            }
        }
    }

    pub fn denote_dist(&self, t: &DistTerm) -> Result<GenSet, DenotationError> {
        match t {
            DistTerm::Var(mu) => Ok(unit(mu)),
            DistTerm::Dirac(s) => self.denote(s),
            DistTerm::Convex(items) => {
                let vals = items.iter().map(|(_, d)| self.denote_dist(d)).collect::<Result<Vec<_>, _>>()?;
                let lists: Vec<&[ProbMultiplicity]> = vals.iter().map(GenSet::generators).collect();
                Ok(genset_normalize(combinations(&lists).into_iter().map(|combo| {
                    let parts: Vec<(Rational, ProbMultiplicity)> =
                        items.iter().zip(combo).map(|((q, _), p)| (q.clone(), p.clone())).collect();
                    p_convex(&parts)
                }))?)
            }
            DistTerm::App(f, args) => {
                self.check(f, args.len())?;
                let vals = args.iter().map(|a| self.denote_dist(a)).collect::<Result<Vec<_>, _>>()?;
                Ok(compose(std::slice::from_ref(&self.rho_dist[f]), &vals.iter().collect::<Vec<_>>())?)
            }
        }
    }

    pub fn denote_term(&self, t: &Term) -> Result<GenSet, DenotationError> {
        match t {
            Term::State(s) => self.denote(s),
            Term::Dist(d) => self.denote_dist(d),
        }
    }

    /// Upper bound on the distance between any two closed instances of `t`
    /// whose per-variable distances are bounded by `e`.
    pub fn bound_distance(&self, t: &StateTerm, e: &ProcessDistance) -> Result<Rational, DenotationError> {
        Ok(da(&self.denote(t)?, e))
    }
}

#[derive(Debug, Clone)]
pub struct DenotationReport {
    pub denotations: Denotations,
    pub terms: Vec<(Term, GenSet)>,
}

pub fn lfp_denotations(
    doc: &SpecDocument,
    queries: &[Term],
    cfg: FixpointConfig,
) -> Result<DenotationReport, DenotationError> {
    let denotations = Denotations::compute(doc, cfg)?;
    let terms =
        queries.iter().map(|q| Ok((q.clone(), denotations.denote_term(q)?))).collect::<Result<_, DenotationError>>()?;
    Ok(DenotationReport { denotations, terms })
}

pub fn bound_distance(
    doc: &SpecDocument,
    t: &StateTerm,
    e: &ProcessDistance,
    cfg: FixpointConfig,
) -> Result<Rational, DenotationError> {
    Denotations::compute(doc, cfg)?.bound_distance(t, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;
    use crate::rational::ratio;

    fn dirac(entries: &[(&str, Count)]) -> GenSet {
        GenSet::singleton(ProbMultiplicity::dirac(Multiplicity::of(entries)))
    }

    fn one(vars: &[&str]) -> GenSet {
        dirac(&vars.iter().map(|v| (*v, Count::Fin(1))).collect::<Vec<_>>())
    }

    #[test]
    fn process_algebra_is_canonical() {
        let doc = data::pa();
        let d = Denotations::compute(&doc, FixpointConfig::default()).unwrap();
        assert_eq!(d.status, FixpointStatus::Exact);
        assert_eq!(d.operator("zero").unwrap(), &GenSet::bottom());
        assert_eq!(d.operator("par").unwrap(), &one(&["x1", "x2"]));
        assert_eq!(d.operator("par_B").unwrap(), &one(&["x1", "x2"]));
        assert_eq!(d.operator("inter").unwrap(), &one(&["x1", "x2"]));
        let choice = d.operator("choice").unwrap();
        assert_eq!(choice.generators(), genset_union(&[&one(&["x1"]), &one(&["x2"])]).unwrap().generators());
        let pref = d.operator("pref_a_5_5").unwrap().as_single().unwrap().clone();
        assert_eq!(weighting(&pref).get("x1"), ExtRational::Finite(ratio(1, 2)));
        let x = doc.parse_term("par(x, x)").unwrap();
        assert_eq!(d.denote(&x).unwrap(), dirac(&[("x", Count::Fin(2))]));
        let e = ProcessDistance::of(&[("x", ratio(1, 10))]).unwrap();
        assert_eq!(d.bound_distance(&x, &e).unwrap(), ratio(19, 100));
    }

    #[test]
    fn examples_spec() {
        let doc = data::examples();
        let d = Denotations::compute(&doc, FixpointConfig::default()).unwrap();
        assert_eq!(d.operator("dup_choice").unwrap(), &dirac(&[("x1", Count::Fin(2))]));
        assert_eq!(d.operator("dup_par").unwrap(), &dirac(&[("x1", Count::Fin(2))]));
        assert_eq!(d.operator("mimic_test").unwrap(), &one(&["x1"]));
        assert_eq!(d.dist_operator("test_a").unwrap(), &ProbMultiplicity::dirac(Multiplicity::unit("x1")));
        assert_eq!(d.operator("repl").unwrap(), &dirac(&[("x1", Count::Inf)]));
        assert!(d.is_widened());
        assert_eq!(d.widened_operators().iter().map(|f| f.as_ref()).collect::<Vec<&str>>(), ["repl"]);
        assert!(d.is_widened_at(&doc.parse_term("dup_par(repl(x))").unwrap()));
        assert!(!d.is_widened_at(&doc.parse_term("dup_choice(x)").unwrap()));
        let half = d.operator("half_copy").unwrap().as_single().unwrap().clone();
        assert_eq!(weighting(&half).get("x1"), ExtRational::Finite(ratio(1, 1)));
    }

    #[test]
    fn without_testing_correction() {
        let doc = data::examples();
        let cfg = FixpointConfig { xr_correction: false, ..FixpointConfig::default() };
        let d = Denotations::compute(&doc, cfg).unwrap();
        assert_eq!(d.operator("mimic_test").unwrap(), &GenSet::bottom());
    }

    #[test]
    fn kleene_chain_increases() {
        let doc = data::pa();
        let engine = Engine::new(&doc, FixpointConfig::default()).unwrap();
        let mut s = engine.bottom();
        for _ in 0..6 {
            let next = engine.step(&s).unwrap();
            assert!(engine.below(&s, &next));
            s = next;
        }
    }

    #[test]
    fn bad_queries_and_configs() {
        let doc = data::pa();
        let d = Denotations::compute(&doc, FixpointConfig::default()).unwrap();
        let t = StateTerm::app("par", vec![StateTerm::var("x")]);
        assert!(matches!(d.denote(&t), Err(DenotationError::ArityMismatch { .. })));
        let cfg = FixpointConfig { max_iterations: 4, widening_window: 8, xr_correction: true };
        assert!(matches!(Denotations::compute(&doc, cfg), Err(DenotationError::InvalidConfig(_))));
        let doc = data::examples();
        let cfg = FixpointConfig { max_iterations: 10, widening_window: 9, xr_correction: true };
        assert!(matches!(Denotations::compute(&doc, cfg), Err(DenotationError::IterationLimitExceeded { .. })));
    }
}
