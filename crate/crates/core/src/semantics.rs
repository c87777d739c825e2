//! The supported model of a specification: transitions of closed terms and
//! finite reachable fragments.

use crate::spec::SpecDocument;
use crate::term::{ClosedEnv, FiniteDistribution, Name, StateTerm, TermError};
use petgraph::graph::DiGraph;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};
use thiserror::Error;

/// `der(t, a)` for every action `a` with at least one transition.
pub type Transitions = BTreeMap<Name, BTreeSet<FiniteDistribution>>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("term `{0}` is not closed")]
    OpenTerm(String),
    #[error("operator `{0}` is not declared")]
    UndeclaredOperator(String),
    #[error("`{op}` applied to {found} argument(s), expects {expected}")]
    ArityMismatch { op: String, expected: usize, found: usize },
    #[error("rule `{rule}` cannot be instantiated: {source}")]
    Instantiation { rule: String, source: TermError },
}

/// Memoizing evaluator for transitions. Results depend only on the term,
/// so the cache can be shared between threads.
pub struct Semantics<'a> {
    doc: &'a SpecDocument,
    memo: Mutex<HashMap<StateTerm, Arc<Transitions>>>,
}

impl<'a> Semantics<'a> {
    pub fn new(doc: &'a SpecDocument) -> Self {
        Semantics { doc, memo: Mutex::new(HashMap::new()) }
    }

    pub fn doc(&self) -> &'a SpecDocument {
        self.doc
    }

    pub fn transitions(&self, t: &StateTerm) -> Result<Arc<Transitions>, SemanticsError> {
        if let Some(hit) = self.memo.lock().expect("memo lock").get(t) {
            return Ok(hit.clone());
        }
        let (op, args) = match t {
            StateTerm::Var(_) => return Err(SemanticsError::OpenTerm(t.to_string())),
            StateTerm::App(op, args) => (op, args),
        };
        let arity = self.doc.arity(op).ok_or_else(|| SemanticsError::UndeclaredOperator(op.to_string()))?;
        if arity != args.len() {
            return Err(SemanticsError::ArityMismatch { op: op.to_string(), expected: arity, found: args.len() });
        }
        let arg_tr = args.iter().map(|a| self.transitions(a)).collect::<Result<Vec<_>, _>>()?;
        let mut out = Transitions::new();
        for rule in self.doc.rules_for(op) {
            if rule.negative.iter().any(|n| arg_tr[n.arg].contains_key(&n.action)) {
                continue;
            }
            let mut choices = Vec::with_capacity(rule.positive.len());
            for p in &rule.positive {
                match arg_tr[p.arg].get(&p.action) {
                    Some(set) => choices.push(set.iter().collect::<Vec<_>>()),
                    None => break,
                }
            }
            if choices.len() < rule.positive.len() {
                continue;
            }
            let mut env = ClosedEnv::default();
            for (x, arg) in rule.sources.iter().zip(args.iter()) {
                env.state.insert(x.clone(), arg.clone());
            }
            let mut pick = vec![0usize; choices.len()];
            loop {
                for (k, p) in rule.positive.iter().enumerate() {
                    env.dist.insert(p.derivative.clone(), choices[k][pick[k]].clone());
                }
                let pi = rule
                    .target
                    .eval(&env)
                    .map_err(|source| SemanticsError::Instantiation { rule: rule.name.to_string(), source })?;
                out.entry(rule.action.clone()).or_default().insert(pi);
                if !next_index(&mut pick, &choices) {
                    break;
                }
            }
        }
        let out = Arc::new(out);
        self.memo.lock().expect("memo lock").insert(t.clone(), out.clone());
        Ok(out)
    }

    pub fn explore(&self, roots: &[StateTerm], limits: Limits) -> Result<ReachableFragment, ExploreError> {
        let mut frag = ReachableFragment::default();
        let mut level: Vec<StateTerm> = Vec::new();
        for r in roots {
            if !r.is_closed() {
                return Err(SemanticsError::OpenTerm(r.to_string()).into());
            }
            if !frag.index.contains_key(r) {
                frag.push(r.clone(), 0);
                level.push(r.clone());
            }
        }
        if frag.len() > limits.max_states {
            return Err(ExploreError::StateLimitExceeded { limit: limits.max_states, fragment: Box::new(frag) });
        }
        let mut depth = 0;
        while !level.is_empty() {
            let mut next = BTreeSet::new();
            for t in &level {
                let tr = self.transitions(t)?;
                for pi in tr.values().flatten() {
                    for s in pi.support() {
                        if !frag.index.contains_key(s) {
                            next.insert(s.clone());
                        }
                    }
                }
                let i = frag.index[t];
                frag.transitions[i] = Some(tr);
            }
            if next.is_empty() {
                break;
            }
            if depth + 1 > limits.max_depth {
                return Err(ExploreError::DepthLimitExceeded { limit: limits.max_depth, fragment: Box::new(frag) });
            }
            depth += 1;
            if frag.len() + next.len() > limits.max_states {
                for s in next.into_iter().take(limits.max_states.saturating_sub(frag.len())) {
                    frag.push(s, depth);
                }
                return Err(ExploreError::StateLimitExceeded { limit: limits.max_states, fragment: Box::new(frag) });
            }
            level = next.into_iter().collect();
            for s in &level {
                frag.push(s.clone(), depth);
            }
        }
        frag.complete = true;
        Ok(frag)
    }
}

fn next_index(pick: &mut [usize], choices: &[Vec<&FiniteDistribution>]) -> bool {
    for k in (0..pick.len()).rev() {
        pick[k] += 1;
        if pick[k] < choices[k].len() {
            return true;
        }
        pick[k] = 0;
    }
    false
}

/// Transitions of a closed term under the supported model of `doc`.
pub fn derive_transitions(doc: &SpecDocument, t: &StateTerm) -> Result<Transitions, SemanticsError> {
    Semantics::new(doc).transitions(t).map(|tr| (*tr).clone())
}

/// Breadth-first closure of `roots` under transition supports.
pub fn explore_fragment(
    doc: &SpecDocument,
    roots: &[StateTerm],
    limits: Limits,
) -> Result<ReachableFragment, ExploreError> {
    Semantics::new(doc).explore(roots, limits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 2000, max_depth: 256 }
    }
}

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("state limit {limit} exceeded after {} states", fragment.len())]
    StateLimitExceeded { limit: usize, fragment: Box<ReachableFragment> },
    #[error("depth limit {limit} exceeded")]
    DepthLimitExceeded { limit: usize, fragment: Box<ReachableFragment> },
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

impl ExploreError {
    pub fn partial_fragment(&self) -> Option<&ReachableFragment> {
        match self {
            ExploreError::StateLimitExceeded { fragment, .. } | ExploreError::DepthLimitExceeded { fragment, .. } => {
                Some(fragment)
            }
            ExploreError::Semantics(_) => None,
        }
    }
}

/// States are numbered in exploration order: roots first, then level by
/// level, each level sorted by the term order.
#[derive(Debug, Clone, Default)]
pub struct ReachableFragment {
    states: Vec<StateTerm>,
    index: HashMap<StateTerm, usize>,
    depth: Vec<usize>,
    transitions: Vec<Option<Arc<Transitions>>>,
    complete: bool,
}

impl ReachableFragment {
    fn push(&mut self, t: StateTerm, depth: usize) {
        self.index.insert(t.clone(), self.states.len());
        self.states.push(t);
        self.depth.push(depth);
        self.transitions.push(None);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[StateTerm] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &StateTerm {
        &self.states[i]
    }

    pub fn index_of(&self, t: &StateTerm) -> Option<usize> {
        self.index.get(t).copied()
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// Largest BFS depth of a listed state.
    pub fn depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    pub fn depth_of(&self, i: usize) -> usize {
        self.depth[i]
    }

    /// `None` for states that were discovered but not expanded.
    pub fn transitions(&self, i: usize) -> Option<&Transitions> {
        self.transitions[i].as_deref()
    }

    pub fn der(&self, i: usize, a: &str) -> Option<&BTreeSet<FiniteDistribution>> {
        self.transitions(i).and_then(|tr| tr.get(a))
    }

    pub fn enabled_actions(&self, i: usize) -> BTreeSet<Name> {
        self.transitions(i).map(|tr| tr.keys().cloned().collect()).unwrap_or_default()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.iter().flatten().map(|tr| tr.values().map(BTreeSet::len).sum::<usize>()).sum()
    }

    /// Whether some state can reach itself.
    pub fn is_cyclic(&self) -> bool {
        let mut g = DiGraph::<(), ()>::with_capacity(self.len(), 0);
        let nodes: Vec<_> = (0..self.len()).map(|_| g.add_node(())).collect();
        for (i, tr) in self.transitions.iter().enumerate() {
            for pi in tr.iter().flat_map(|tr| tr.values()).flatten() {
                for s in pi.support() {
                    if let Some(&j) = self.index.get(s) {
                        g.add_edge(nodes[i], nodes[j], ());
                    }
                }
            }
        }
        petgraph::algo::is_cyclic_directed(&g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;
    use crate::rational::ratio;

    fn pa() -> SpecDocument {
        data::pa()
    }

    #[test]
    fn deterministic_prefix() {
        let doc = pa();
        let t = doc.parse_term("pref_a(pref_a(zero))").unwrap();
        let tr = derive_transitions(&doc, &t).unwrap();
        assert_eq!(tr.len(), 1);
        let expected = FiniteDistribution::dirac(doc.parse_term("pref_a(zero)").unwrap());
        assert_eq!(tr["a"], [expected].into_iter().collect());
    }

    #[test]
    fn probabilistic_prefix() {
        let doc = pa();
        let t = doc.parse_term("pref_a_9_1(pref_a(zero), zero)").unwrap();
        let tr = derive_transitions(&doc, &t).unwrap();
        let pi = tr["a"].iter().next().unwrap();
        assert_eq!(pi.mass(&doc.parse_term("pref_a(zero)").unwrap()), ratio(9, 10));
        assert_eq!(pi.mass(&doc.parse_term("zero").unwrap()), ratio(1, 10));
    }

    #[test]
    fn choice_offers_both() {
        let doc = pa();
        let t = doc.parse_term("choice(pref_a(zero), pref_b(zero))").unwrap();
        let tr = derive_transitions(&doc, &t).unwrap();
        let zero = FiniteDistribution::dirac(StateTerm::constant("zero"));
        assert_eq!(tr.keys().map(|a| &**a).collect::<Vec<_>>(), vec!["a", "b"]);
        assert!(tr.values().all(|s| s.len() == 1 && s.contains(&zero)));
    }

    #[test]
    fn negative_premise_blocks() {
        let doc = crate::spec::parse_spec(
            "actions a, b; op zero : 0; op pref_b : 1; op pref_a : 1; op unless_b : 1;
             rule pref_a { --- pref_a(x) --a--> delta(x) }
             rule pref_b { --- pref_b(x) --b--> delta(x) }
             rule u { x -/b-> --- unless_b(x) --a--> delta(zero) }",
        )
        .unwrap();
        let yes = doc.parse_term("unless_b(pref_a(zero))").unwrap();
        let no = doc.parse_term("unless_b(pref_b(zero))").unwrap();
        assert!(derive_transitions(&doc, &yes).unwrap().contains_key("a"));
        assert!(derive_transitions(&doc, &no).unwrap().is_empty());
    }

    #[test]
    fn linear_chain_fragment() {
        let doc = pa();
        let t = doc.parse_term("pref_a(pref_a(zero))").unwrap();
        let frag = explore_fragment(&doc, &[t], Limits::default()).unwrap();
        let names: Vec<String> = frag.states().iter().map(ToString::to_string).collect();
        assert_eq!(names, vec!["pref_a(pref_a(zero))", "pref_a(zero)", "zero"]);
        assert!(frag.is_complete());
        assert!(!frag.is_cyclic());
        assert_eq!(frag.depth(), 2);
    }

    #[test]
    fn copying_fragment_has_six_states() {
        let doc = pa();
        let s1 = doc.parse_term("par(pref_a(pref_a(zero)), pref_a(pref_a(zero)))").unwrap();
        let s2 = doc.parse_term("par(pref_a_9_1(pref_a(zero), zero), pref_a_9_1(pref_a(zero), zero))").unwrap();
        let frag = explore_fragment(&doc, &[s1, s2], Limits::default()).unwrap();
        assert_eq!(frag.len(), 6);
    }

    #[test]
    fn replication_exceeds_state_limit() {
        let doc = data::examples();
        let t = doc.parse_term("repl(pref_a(zero))").unwrap();
        let err = explore_fragment(&doc, &[t], Limits { max_states: 10, max_depth: 1000 }).unwrap_err();
        match err {
            ExploreError::StateLimitExceeded { fragment, .. } => {
                assert_eq!(fragment.len(), 10);
                assert!(!fragment.is_complete());
            }
            other => panic!("{other}"),
        }
        let t = doc.parse_term("repl(pref_a(zero))").unwrap();
        let err = explore_fragment(&doc, &[t], Limits { max_states: 1000, max_depth: 3 }).unwrap_err();
        assert!(matches!(err, ExploreError::DepthLimitExceeded { .. }));
    }

    #[test]
    fn open_terms_rejected() {
        let doc = pa();
        let t = doc.parse_term("pref_a(x)").unwrap();
        assert!(matches!(derive_transitions(&doc, &t), Err(SemanticsError::OpenTerm(_))));
    }
}
