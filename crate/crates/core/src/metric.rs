//! Kantorovich and Hausdorff liftings and the bisimilarity metric as the
//! least fixed point of the one-step functional on a reachable fragment.

use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::rational::{fmt_rational, one, Rational};
use crate::semantics::ReachableFragment;
use crate::term::{FiniteDistribution, Name, StateTerm};
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("state `{0}` is not indexed in the distance table")]
    UnindexedState(String),
    #[error("the fragment is truncated; distances on it would be unsound")]
    TruncatedFragment,
    #[error("no fixed point after {iterations} iterations; use iterate mode")]
    NoConvergence { iterations: usize, last: Box<PseudometricTable> },
    #[error(transparent)]
    Axiom(#[from] AxiomViolation),
}

/// Distances on the states of a fragment. Only the pairs that were computed
/// are stored; `get` returns `None` for the others.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PseudometricTable {
    states: Vec<StateTerm>,
    index: HashMap<StateTerm, usize>,
    entries: HashMap<(usize, usize), Rational>,
}

fn key(i: usize, j: usize) -> (usize, usize) {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

impl PseudometricTable {
    /// The all-zero table over every pair of `states`.
    pub fn zero(states: Vec<StateTerm>) -> Self {
        let pairs: Vec<(usize, usize)> =
            (0..states.len()).flat_map(|i| (i + 1..states.len()).map(move |j| (i, j))).collect();
        Self::zero_on(states, pairs)
    }

    fn zero_on(states: Vec<StateTerm>, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let index = states.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        let entries = pairs.into_iter().map(|(i, j)| (key(i, j), Rational::zero())).collect();
        PseudometricTable { states, index, entries }
    }

    pub fn states(&self) -> &[StateTerm] {
        &self.states
    }

    pub fn index_of(&self, t: &StateTerm) -> Option<usize> {
        self.index.get(t).copied()
    }

    pub fn get_index(&self, i: usize, j: usize) -> Option<Rational> {
        if i == j {
            return Some(Rational::zero());
        }
        self.entries.get(&key(i, j)).cloned()
    }

    pub fn get(&self, s: &StateTerm, t: &StateTerm) -> Option<Rational> {
        if s == t {
            return Some(Rational::zero());
        }
        self.get_index(self.index_of(s)?, self.index_of(t)?)
    }

    fn set(&mut self, i: usize, j: usize, v: Rational) {
        if i != j {
            self.entries.insert(key(i, j), v);
        }
    }

    /// Number of stored off-diagonal pairs.
    pub fn pair_count(&self) -> usize {
        self.entries.len()
    }

    /// Stored pairs `(i, j, d)` with `i < j`, sorted.
    pub fn pairs(&self) -> Vec<(usize, usize, Rational)> {
        let mut v: Vec<_> = self.entries.iter().map(|(&(i, j), d)| (i, j, d.clone())).collect();
        v.sort();
        v
    }

    /// Pointwise `self <= other` on the pairs stored in `self`.
    pub fn leq(&self, other: &PseudometricTable) -> bool {
        self.entries.iter().all(|(&(i, j), d)| other.get(&self.states[i], &self.states[j]).is_some_and(|e| *d <= e))
    }
}

/// An optimal coupling: mass moved from a left support point to a right one.
pub type TransportPlan = BTreeMap<(StateTerm, StateTerm), Rational>;

/// Whether `plan` is a coupling of `left` and `right`.
pub fn plan_is_coupling(plan: &TransportPlan, left: &FiniteDistribution, right: &FiniteDistribution) -> bool {
    let mut rows: BTreeMap<&StateTerm, Rational> = BTreeMap::new();
    let mut cols: BTreeMap<&StateTerm, Rational> = BTreeMap::new();
    for ((s, t), q) in plan {
        if q.is_negative() {
            return false;
        }
        *rows.entry(s).or_default() += q;
        *cols.entry(t).or_default() += q;
    }
    let matches = |m: &BTreeMap<&StateTerm, Rational>, d: &FiniteDistribution| {
        m.iter().filter(|(_, q)| !q.is_zero()).count() == d.len() && d.iter().all(|(t, q)| m.get(t) == Some(q))
    };
    matches(&rows, left) && matches(&cols, right)
}

/// Minimal expected distance over all couplings, with an optimal plan.
pub fn kantorovich(
    d: &PseudometricTable,
    left: &FiniteDistribution,
    right: &FiniteDistribution,
) -> Result<(Rational, TransportPlan), MetricError> {
    kantorovich_by(|s, t| d.get(s, t).ok_or_else(|| MetricError::UnindexedState(missing(d, s, t))), left, right)
}

fn missing(d: &PseudometricTable, s: &StateTerm, t: &StateTerm) -> String {
    if d.index_of(s).is_none() {
        s.to_string()
    } else {
        t.to_string()
    }
}

/// [`kantorovich`] over an arbitrary ground distance.
pub fn kantorovich_by<E>(
    mut dist: impl FnMut(&StateTerm, &StateTerm) -> Result<Rational, E>,
    left: &FiniteDistribution,
    right: &FiniteDistribution,
) -> Result<(Rational, TransportPlan), E> {
    if left == right {
        let plan = left.iter().map(|(t, q)| ((t.clone(), t.clone()), q.clone())).collect();
        return Ok((Rational::zero(), plan));
    }
    // A Dirac side admits exactly one coupling.
    if left.as_dirac().is_some() || right.as_dirac().is_some() {
        let mut value = Rational::zero();
        let mut plan = TransportPlan::new();
        for (s, p) in left.iter() {
            for (t, q) in right.iter() {
                let mass = p * q;
                value += dist(s, t)? * &mass;
                plan.insert((s.clone(), t.clone()), mass);
            }
        }
        return Ok((value, plan));
    }
    let rows: Vec<(&StateTerm, &Rational)> = left.iter().collect();
    let cols: Vec<(&StateTerm, &Rational)> = right.iter().collect();
    let n = cols.len();
    let mut lp = LinearProgram::new(rows.len() * n);
    for (i, (s, _)) in rows.iter().enumerate() {
        for (j, (t, _)) in cols.iter().enumerate() {
            lp.objective[i * n + j] = dist(s, t)?;
        }
    }
    for (i, (_, p)) in rows.iter().enumerate() {
        lp.add((0..n).map(|j| (i * n + j, one())).collect(), Relation::Eq, (*p).clone());
    }
    // The last column constraint is implied by the others.
    for (j, (_, q)) in cols.iter().enumerate().take(n - 1) {
        lp.add((0..rows.len()).map(|i| (i * n + j, one())).collect(), Relation::Eq, (*q).clone());
    }
    let LpOutcome::Optimal { x, value } = lp.minimize() else {
        unreachable!("a transportation problem between distributions is feasible and bounded")
    };
    let mut plan = TransportPlan::new();
    for (k, q) in x.into_iter().enumerate() {
        if !q.is_zero() {
            plan.insert((rows[k / n].0.clone(), cols[k % n].0.clone()), q);
        }
    }
    Ok((value, plan))
}

/// Hausdorff lifting with `inf {} = 1` and `sup {} = 0`.
pub fn hausdorff<T, E>(
    mut value: impl FnMut(&T, &T) -> Result<Rational, E>,
    left: &[T],
    right: &[T],
) -> Result<Rational, E> {
    let mut cache: HashMap<(usize, usize), Rational> = HashMap::new();
    let mut get = |i: usize, j: usize| -> Result<Rational, E> {
        if let Some(v) = cache.get(&(i, j)) {
            return Ok(v.clone());
        }
        let v = value(&left[i], &right[j])?;
        cache.insert((i, j), v.clone());
        Ok(v)
    };
    let mut best = Rational::zero();
    for i in 0..left.len() {
        let mut inf = one();
        for j in 0..right.len() {
            inf = inf.min(get(i, j)?);
        }
        best = best.max(inf);
    }
    for j in 0..right.len() {
        let mut inf = one();
        for i in 0..left.len() {
            inf = inf.min(get(i, j)?);
        }
        best = best.max(inf);
    }
    Ok(best)
}

fn check_complete(frag: &ReachableFragment) -> Result<(), MetricError> {
    if frag.is_complete() {
        Ok(())
    } else {
        Err(MetricError::TruncatedFragment)
    }
}

fn der_list(frag: &ReachableFragment, i: usize, a: &Name) -> Vec<FiniteDistribution> {
    frag.der(i, a).map(|s| s.iter().cloned().collect()).unwrap_or_default()
}

/// One application of the functional at the pair `(i, j)`.
fn step_pair(frag: &ReachableFragment, d: &PseudometricTable, i: usize, j: usize) -> Result<Rational, MetricError> {
    if i == j {
        return Ok(Rational::zero());
    }
    let actions: BTreeSet<Name> = frag.enabled_actions(i).union(&frag.enabled_actions(j)).cloned().collect();
    let mut best = Rational::zero();
    for a in &actions {
        let (l, r) = (der_list(frag, i, a), der_list(frag, j, a));
        let h = hausdorff(|p, q| kantorovich(d, p, q).map(|(v, _)| v), &l, &r)?;
        best = best.max(h);
        if best.is_one() {
            break;
        }
    }
    Ok(best)
}

/// Applies the functional pointwise on the pairs stored in `d`.
pub fn bisim_step(frag: &ReachableFragment, d: &PseudometricTable) -> Result<PseudometricTable, MetricError> {
    check_complete(frag)?;
    let mut next = d.clone();
    for (i, j, _) in d.pairs() {
        let (si, sj) = (frag.index_of(&d.states[i]), frag.index_of(&d.states[j]));
        let (Some(fi), Some(fj)) = (si, sj) else {
            return Err(MetricError::UnindexedState(d.states[i].to_string()));
        };
        next.set(i, j, step_pair(frag, d, fi, fj)?);
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LfpMode {
    /// Iterate until two consecutive tables coincide.
    Exact { max_iter: usize },
    /// Stop after this many steps; the result is a lower bound.
    Iterate(usize),
}

impl Default for LfpMode {
    fn default() -> Self {
        LfpMode::Exact { max_iter: 1000 }
    }
}

#[derive(Debug, Clone)]
pub struct MetricResult {
    pub table: PseudometricTable,
    pub iterations: usize,
    /// The chain stabilised, so `table` is the least fixed point.
    pub converged: bool,
    pub cyclic: bool,
}

/// Least fixed point on every pair of fragment states.
pub fn bisim_metric_lfp(frag: &ReachableFragment, mode: LfpMode) -> Result<MetricResult, MetricError> {
    check_complete(frag)?;
    let d0 = PseudometricTable::zero(frag.states().to_vec());
    iterate(frag, d0, mode)
}

/// Least fixed point restricted to the pairs the distance of `(s, t)`
/// depends on.
pub fn distance(
    frag: &ReachableFragment,
    s: &StateTerm,
    t: &StateTerm,
    mode: LfpMode,
) -> Result<(Rational, MetricResult), MetricError> {
    check_complete(frag)?;
    let i = frag.index_of(s).ok_or_else(|| MetricError::UnindexedState(s.to_string()))?;
    let j = frag.index_of(t).ok_or_else(|| MetricError::UnindexedState(t.to_string()))?;
    let d0 = PseudometricTable::zero_on(frag.states().to_vec(), pair_closure(frag, &[(i, j)]));
    let res = iterate(frag, d0, mode)?;
    let v = res.table.get_index(i, j).unwrap_or_default();
    Ok((v, res))
}

/// Off-diagonal pairs reachable from `roots` by matching transitions on a
/// common action.
pub fn pair_closure(frag: &ReachableFragment, roots: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut stack: Vec<(usize, usize)> = roots.iter().filter(|(i, j)| i != j).map(|&(i, j)| key(i, j)).collect();
    while let Some((i, j)) = stack.pop() {
        if !seen.insert((i, j)) {
            continue;
        }
        let common: Vec<Name> = frag.enabled_actions(i).intersection(&frag.enabled_actions(j)).cloned().collect();
        for a in &common {
            let (l, r) = (der_list(frag, i, a), der_list(frag, j, a));
            let ls: BTreeSet<usize> = l.iter().flat_map(|p| p.support()).filter_map(|u| frag.index_of(u)).collect();
            let rs: BTreeSet<usize> = r.iter().flat_map(|p| p.support()).filter_map(|u| frag.index_of(u)).collect();
            for &u in &ls {
                for &v in &rs {
                    if u != v && !seen.contains(&key(u, v)) {
                        stack.push(key(u, v));
                    }
                }
            }
        }
    }
    let mut v: Vec<_> = seen.into_iter().collect();
    v.sort();
    v
}

fn iterate(frag: &ReachableFragment, mut d: PseudometricTable, mode: LfpMode) -> Result<MetricResult, MetricError> {
    let cyclic = frag.is_cyclic();
    let limit = match mode {
        LfpMode::Exact { max_iter } | LfpMode::Iterate(max_iter) => max_iter,
    };
    for n in 1..=limit {
        let next = bisim_step(frag, &d)?;
        if next == d {
            return Ok(MetricResult { table: next, iterations: n, converged: true, cyclic });
        }
        d = next;
    }
    match mode {
        LfpMode::Exact { .. } => Err(MetricError::NoConvergence { iterations: limit, last: Box::new(d) }),
        LfpMode::Iterate(_) => Ok(MetricResult { table: d, iterations: limit, converged: false, cyclic }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AxiomViolation {
    #[error("d({0},{1}) = {2} lies outside [0,1]")]
    OutOfRange(String, String, String),
    #[error("triangle inequality fails at {0}, {1}, {2}")]
    Triangle(String, String, String),
    #[error("`{0}` and `{1}` do not totally disagree but enable different actions")]
    ActionMismatch(String, String),
    #[error("transition of `{0}` is not matched by `{1}` within their distance")]
    Unmatched(String, String),
}

/// Range and triangle checks over the stored pairs (zero diagonal and
/// symmetry hold by construction).
pub fn check_pseudometric(d: &PseudometricTable) -> Result<(), AxiomViolation> {
    let pairs = d.pairs();
    for (i, j, v) in &pairs {
        if v.is_negative() || *v > one() {
            return Err(AxiomViolation::OutOfRange(
                d.states[*i].to_string(),
                d.states[*j].to_string(),
                fmt_rational(v),
            ));
        }
    }
    let nodes: BTreeSet<usize> = pairs.iter().flat_map(|(i, j, _)| [*i, *j]).collect();
    for &i in &nodes {
        for &k in &nodes {
            let Some(ik) = d.get_index(i, k) else { continue };
            for &j in &nodes {
                let (Some(ij), Some(jk)) = (d.get_index(i, j), d.get_index(j, k)) else { continue };
                if ik > ij + jk {
                    let s = |x: usize| d.states[x].to_string();
                    return Err(AxiomViolation::Triangle(s(i), s(j), s(k)));
                }
            }
        }
    }
    Ok(())
}

/// Checks the transfer condition on every stored pair closer than 1, and that
/// such pairs agree on their enabled actions.
pub fn check_bisimulation_metric(frag: &ReachableFragment, d: &PseudometricTable) -> Result<(), MetricError> {
    for (i, j, v) in d.pairs() {
        if v >= one() {
            continue;
        }
        let (Some(fi), Some(fj)) = (frag.index_of(&d.states[i]), frag.index_of(&d.states[j])) else {
            return Err(MetricError::UnindexedState(d.states[i].to_string()));
        };
        if frag.enabled_actions(fi) != frag.enabled_actions(fj) {
            return Err(AxiomViolation::ActionMismatch(d.states[i].to_string(), d.states[j].to_string()).into());
        }
        for (a, b) in [(fi, fj), (fj, fi)] {
            for act in frag.enabled_actions(a) {
                for p in der_list(frag, a, &act) {
                    let mut ok = false;
                    for q in der_list(frag, b, &act) {
                        if kantorovich(d, &p, &q)?.0 <= v {
                            ok = true;
                            break;
                        }
                    }
                    if !ok {
                        return Err(
                            AxiomViolation::Unmatched(frag.state(a).to_string(), frag.state(b).to_string()).into()
                        );
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;
    use crate::rational::ratio;
    use crate::semantics::{explore_fragment, Limits};
    use crate::spec::SpecDocument;

    fn term(doc: &SpecDocument, s: &str) -> StateTerm {
        doc.parse_closed_term(s).unwrap()
    }

    fn dist(items: &[(&StateTerm, Rational)]) -> FiniteDistribution {
        FiniteDistribution::from_masses(items.iter().map(|(t, q)| ((*t).clone(), q.clone()))).unwrap()
    }

    #[test]
    fn kantorovich_basics() {
        let doc = data::pa();
        let a0 = term(&doc, "pref_a(zero)");
        let z = term(&doc, "zero");
        let b0 = term(&doc, "pref_b(zero)");
        let mut d = PseudometricTable::zero(vec![a0.clone(), z.clone(), b0.clone()]);
        d.set(0, 1, one());
        d.set(0, 2, one());
        d.set(1, 2, one());
        let p = FiniteDistribution::dirac(a0.clone());
        let q = dist(&[(&a0, ratio(9, 10)), (&z, ratio(1, 10))]);
        let (v, plan) = kantorovich(&d, &p, &q).unwrap();
        assert_eq!(v, ratio(1, 10));
        assert!(plan_is_coupling(&plan, &p, &q));
        let p2 = dist(&[(&a0, ratio(1, 2)), (&b0, ratio(1, 2))]);
        let q2 = dist(&[(&b0, ratio(1, 2)), (&z, ratio(1, 2))]);
        let (v, plan) = kantorovich(&d, &p2, &q2).unwrap();
        assert_eq!(v, ratio(1, 2));
        assert!(plan_is_coupling(&plan, &p2, &q2));
        let stray = FiniteDistribution::dirac(term(&doc, "pref_a(pref_a(zero))"));
        assert!(matches!(kantorovich(&d, &stray, &p), Err(MetricError::UnindexedState(_))));
    }

    #[test]
    fn hausdorff_conventions() {
        let f = |a: &u8, b: &u8| Ok::<_, ()>(ratio((*a as i64 - *b as i64).abs(), 10));
        assert_eq!(hausdorff(f, &[], &[]), Ok(ratio(0, 1)));
        assert_eq!(hausdorff(f, &[1], &[]), Ok(ratio(1, 1)));
        assert_eq!(hausdorff(f, &[1], &[3]), Ok(ratio(2, 10)));
        assert_eq!(hausdorff(f, &[1, 6], &[3]), Ok(ratio(3, 10)));
    }

    #[test]
    fn one_step_separates_actions() {
        let doc = data::pa();
        let roots = [term(&doc, "pref_a(zero)"), term(&doc, "pref_b(zero)")];
        let frag = explore_fragment(&doc, &roots, Limits::default()).unwrap();
        let d = bisim_step(&frag, &PseudometricTable::zero(frag.states().to_vec())).unwrap();
        assert_eq!(d.get(&roots[0], &roots[1]), Some(ratio(1, 1)));
    }

    #[test]
    fn copying_distance() {
        let doc = data::pa();
        let s1 = term(&doc, "par(pref_a_9_1(pref_a(zero), zero), pref_a_9_1(pref_a(zero), zero))");
        let s2 = term(&doc, "par(pref_a(pref_a(zero)), pref_a(pref_a(zero)))");
        let frag = explore_fragment(&doc, &[s1.clone(), s2.clone()], Limits::default()).unwrap();
        let res = bisim_metric_lfp(&frag, LfpMode::default()).unwrap();
        assert!(res.converged && !res.cyclic);
        assert!(res.iterations <= frag.depth() + 2);
        assert_eq!(res.table.get(&s1, &s2), Some(ratio(19, 100)));
        check_pseudometric(&res.table).unwrap();
        check_bisimulation_metric(&frag, &res.table).unwrap();
        let (v, local) = distance(&frag, &s1, &s2, LfpMode::default()).unwrap();
        assert_eq!(v, ratio(19, 100));
        assert!(local.table.pair_count() <= res.table.pair_count());
        let inner = (term(&doc, "pref_a_9_1(pref_a(zero), zero)"), term(&doc, "pref_a(pref_a(zero))"));
        let frag = explore_fragment(&doc, &[inner.0.clone(), inner.1.clone()], Limits::default()).unwrap();
        let b2 =
            bisim_step(&frag, &bisim_step(&frag, &PseudometricTable::zero(frag.states().to_vec())).unwrap()).unwrap();
        assert_eq!(b2.get(&inner.0, &inner.1), Some(ratio(1, 10)));
    }

    #[test]
    fn iterate_mode_is_a_lower_bound() {
        let doc = data::pa();
        let s1 = term(&doc, "par(pref_a_9_1(pref_a(zero), zero), pref_a_9_1(pref_a(zero), zero))");
        let s2 = term(&doc, "par(pref_a(pref_a(zero)), pref_a(pref_a(zero)))");
        let frag = explore_fragment(&doc, &[s1.clone(), s2.clone()], Limits::default()).unwrap();
        let low = bisim_metric_lfp(&frag, LfpMode::Iterate(1)).unwrap();
        let full = bisim_metric_lfp(&frag, LfpMode::default()).unwrap();
        assert!(!low.converged);
        assert!(low.table.leq(&full.table));
        assert!(matches!(
            bisim_metric_lfp(&frag, LfpMode::Exact { max_iter: 1 }),
            Err(MetricError::NoConvergence { .. })
        ));
    }

    #[test]
    fn truncated_fragment_is_refused() {
        let doc = data::examples();
        let t = term(&doc, "repl(pref_a(zero))");
        let err = explore_fragment(&doc, &[t], Limits { max_states: 10, max_depth: 256 }).unwrap_err();
        let frag = err.partial_fragment().unwrap();
        assert_eq!(bisim_metric_lfp(frag, LfpMode::default()).unwrap_err(), MetricError::TruncatedFragment);
    }
}
