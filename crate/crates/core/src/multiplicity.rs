//! Copy-count domain: multiplicities, distributions over them, and
//! downward-closed sets represented by generator antichains.

use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::rational::{fmt_rational, one, parse_rational, ExtRational, Rational};
use crate::term::{name, Name};
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MultiplicityError {
    #[error("a generator set needs at least one generator")]
    EmptyGenSet,
    #[error("masses must be positive and sum to 1 (got total {0})")]
    NotADistribution(String),
    #[error("distance for `{var}` must lie in [0,1), got {value}")]
    DistanceOutOfRange { var: String, value: String },
    #[error("cannot read distance assignment `{0}`; expected x=1/10,y=0.2")]
    BadDistance(String),
}

/// A copy count: a natural number or infinity. Overflow saturates to
/// infinity and `0 * inf = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Count {
    Fin(u64),
    Inf,
}

impl std::ops::Add for Count {
    type Output = Count;

    fn add(self, other: Count) -> Count {
        match (self, other) {
            (Count::Fin(a), Count::Fin(b)) => a.checked_add(b).map_or(Count::Inf, Count::Fin),
            _ => Count::Inf,
        }
    }
}

impl std::ops::Mul for Count {
    type Output = Count;

    fn mul(self, other: Count) -> Count {
        match (self, other) {
            (Count::Fin(0), _) | (_, Count::Fin(0)) => Count::Fin(0),
            (Count::Fin(a), Count::Fin(b)) => a.checked_mul(b).map_or(Count::Inf, Count::Fin),
            _ => Count::Inf,
        }
    }
}

impl Count {
    pub fn is_zero(self) -> bool {
        self == Count::Fin(0)
    }

    pub fn to_ext(self) -> ExtRational {
        match self {
            Count::Fin(n) => ExtRational::Finite(Rational::from_integer(n.into())),
            Count::Inf => ExtRational::Infinite,
        }
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Count::Fin(n) => write!(f, "{n}"),
            Count::Inf => f.write_str("inf"),
        }
    }
}

/// Finitely supported map from variables to counts; absent means zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiplicity(BTreeMap<Name, Count>);

impl Multiplicity {
    pub fn zero() -> Self {
        Multiplicity::default()
    }

    pub fn unit(x: &str) -> Self {
        Multiplicity::of(&[(x, Count::Fin(1))])
    }

    /// `n` copies of every variable in `vars`.
    pub fn uniform(vars: &[&str], n: Count) -> Self {
        Multiplicity::of(&vars.iter().map(|v| (*v, n)).collect::<Vec<_>>())
    }

    pub fn of(entries: &[(&str, Count)]) -> Self {
        let mut m = Multiplicity::zero();
        for (x, c) in entries {
            let cur = m.get(x);
            m.set(&name(x), cur + *c);
        }
        m
    }

    pub fn get(&self, x: &str) -> Count {
        self.0.get(x).copied().unwrap_or(Count::Fin(0))
    }

    pub fn set(&mut self, x: &Name, c: Count) {
        if c.is_zero() {
            self.0.remove(x);
        } else {
            self.0.insert(x.clone(), c);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, Count)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    pub fn vars(&self) -> impl Iterator<Item = &Name> {
        self.0.keys()
    }

    pub fn leq(&self, other: &Multiplicity) -> bool {
        self.iter().all(|(x, c)| c <= other.get(x))
    }

    pub fn join(&self, other: &Multiplicity) -> Multiplicity {
        let mut out = self.clone();
        for (x, c) in other.iter() {
            let cur = out.get(x);
            out.set(x, cur.max(c));
        }
        out
    }

    /// Keeps only the variables accepted by `keep`.
    pub fn restrict(&self, keep: impl Fn(&str) -> bool) -> Multiplicity {
        Multiplicity(self.0.iter().filter(|(k, _)| keep(k)).map(|(k, v)| (k.clone(), *v)).collect())
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (x, c)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}:{c}")?;
        }
        f.write_str("}")
    }
}

pub fn m_sum(m1: &Multiplicity, m2: &Multiplicity) -> Multiplicity {
    let mut out = m1.clone();
    for (x, c) in m2.iter() {
        let cur = out.get(x);
        out.set(x, cur + c);
    }
    out
}

/// `(m1 .y m2)(x) = m1(y) * m2(x)`.
pub fn m_dot(m1: &Multiplicity, y: &str, m2: &Multiplicity) -> Multiplicity {
    let k = m1.get(y);
    let mut out = Multiplicity::zero();
    for (x, c) in m2.iter() {
        out.set(x, k * c);
    }
    out
}

/// A probability distribution over multiplicities with exact masses.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProbMultiplicity(BTreeMap<Multiplicity, Rational>);

impl ProbMultiplicity {
    pub fn dirac(m: Multiplicity) -> Self {
        ProbMultiplicity(BTreeMap::from([(m, one())]))
    }

    pub fn zero() -> Self {
        Self::dirac(Multiplicity::zero())
    }

    /// Merges repeated points; rejects non-positive masses and totals other than 1.
    pub fn from_masses(items: impl IntoIterator<Item = (Multiplicity, Rational)>) -> Result<Self, MultiplicityError> {
        let mut map: BTreeMap<Multiplicity, Rational> = BTreeMap::new();
        let mut total = Rational::zero();
        for (m, q) in items {
            if !q.is_positive() {
                return Err(MultiplicityError::NotADistribution(fmt_rational(&q)));
            }
            total += &q;
            *map.entry(m).or_default() += q;
        }
        if !total.is_one() {
            return Err(MultiplicityError::NotADistribution(fmt_rational(&total)));
        }
        Ok(ProbMultiplicity(map))
    }

    /// Builds from pieces known to be a distribution, dropping zero masses.
    fn collect(items: impl IntoIterator<Item = (Multiplicity, Rational)>) -> Self {
        let mut map: BTreeMap<Multiplicity, Rational> = BTreeMap::new();
        for (m, q) in items {
            if !q.is_zero() {
                *map.entry(m).or_default() += q;
            }
        }
        debug_assert!(map.values().sum::<Rational>().is_one());
        ProbMultiplicity(map)
    }

    pub fn mass(&self, m: &Multiplicity) -> Rational {
        self.0.get(m).cloned().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Multiplicity, &Rational)> {
        self.0.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &Multiplicity> {
        self.0.keys()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_dirac(&self) -> Option<&Multiplicity> {
        match self.0.len() {
            1 => self.0.keys().next(),
            _ => None,
        }
    }

    pub fn map(&self, f: impl Fn(&Multiplicity) -> Multiplicity) -> ProbMultiplicity {
        Self::collect(self.iter().map(|(m, q)| (f(m), q.clone())))
    }

    pub fn vars(&self) -> BTreeSet<Name> {
        self.support().flat_map(|m| m.vars().cloned()).collect()
    }
}

impl fmt::Display for ProbMultiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (m, q)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}@{m}", fmt_rational(q))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MOp<'a> {
    Sum,
    Dot(&'a str),
}

/// Image of the product measure under a pointwise operation.
pub fn p_lift_op(op: MOp<'_>, p1: &ProbMultiplicity, p2: &ProbMultiplicity) -> ProbMultiplicity {
    let mut out = Vec::with_capacity(p1.len() * p2.len());
    for (m1, q1) in p1.iter() {
        for (m2, q2) in p2.iter() {
            let m = match op {
                MOp::Sum => m_sum(m1, m2),
                MOp::Dot(y) => m_dot(m1, y, m2),
            };
            out.push((m, q1 * q2));
        }
    }
    ProbMultiplicity::collect(out)
}

/// Distribution of `sum_i m(x_i) . m_i` where `m ~ p` and each `m_i ~ parts[i]`
/// independently. Variables of `m` not named in `parts` are dropped.
pub fn p_compose(p: &ProbMultiplicity, parts: &[(Name, ProbMultiplicity)]) -> ProbMultiplicity {
    // The product over (m, m_1, ..., m_n) is folded into pairs (m, partial sum).
    let mut joint: BTreeMap<(Multiplicity, Multiplicity), Rational> =
        p.iter().map(|(m, q)| ((m.clone(), Multiplicity::zero()), q.clone())).collect();
    for (x, pi) in parts {
        let mut next: BTreeMap<(Multiplicity, Multiplicity), Rational> = BTreeMap::new();
        for ((m, partial), q) in &joint {
            if m.get(x).is_zero() {
                *next.entry((m.clone(), partial.clone())).or_default() += q;
                continue;
            }
            for (mi, qi) in pi.iter() {
                let s = m_sum(partial, &m_dot(m, x, mi));
                *next.entry((m.clone(), s)).or_default() += q * qi;
            }
        }
        joint = next;
    }
    ProbMultiplicity::collect(joint.into_iter().map(|((_, s), q)| (s, q)))
}

pub fn p_convex(parts: &[(Rational, ProbMultiplicity)]) -> ProbMultiplicity {
    ProbMultiplicity::collect(parts.iter().flat_map(|(w, p)| p.iter().map(move |(m, q)| (m.clone(), w * q))))
}

/// Per-variable expected counts, possibly infinite.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Weighting(BTreeMap<Name, ExtRational>);

impl Weighting {
    pub fn get(&self, x: &str) -> ExtRational {
        self.0.get(x).cloned().unwrap_or_else(ExtRational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &ExtRational)> {
        self.0.iter()
    }

    pub fn leq(&self, other: &Weighting) -> bool {
        self.0.iter().all(|(x, w)| *w <= other.get(x))
    }

    pub fn leq_multiplicity(&self, m: &Multiplicity) -> bool {
        self.0.iter().all(|(x, w)| *w <= m.get(x).to_ext())
    }

    /// Largest entry over all variables, zero when empty.
    pub fn max(&self) -> ExtRational {
        self.0.values().max().cloned().unwrap_or_else(ExtRational::zero)
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (x, w)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}:{w}")?;
        }
        f.write_str("}")
    }
}

/// Weighting of a subdistribution given as `(multiplicity, mass)` pairs.
pub fn weighting_of<'a>(items: impl IntoIterator<Item = (&'a Multiplicity, &'a Rational)>) -> Weighting {
    let mut total = Rational::zero();
    let mut sums: BTreeMap<Name, ExtRational> = BTreeMap::new();
    for (m, q) in items {
        if q.is_zero() {
            continue;
        }
        total += q;
        for (x, c) in m.iter() {
            let e = sums.entry(x.clone()).or_insert_with(ExtRational::zero);
            *e = match (&*e, c) {
                (ExtRational::Finite(s), Count::Fin(n)) => {
                    ExtRational::Finite(s + q * Rational::from_integer(n.into()))
                }
                _ => ExtRational::Infinite,
            };
        }
    }
    if total.is_zero() {
        return Weighting::default();
    }
    let map = sums
        .into_iter()
        .map(|(x, w)| match w {
            ExtRational::Finite(s) => (x, ExtRational::Finite(s / &total)),
            inf => (x, inf),
        })
        .collect();
    Weighting(map)
}

pub fn weighting(p: &ProbMultiplicity) -> Weighting {
    weighting_of(p.iter())
}

/// A matching `omega(m', m)` certifying `p1 <= p2`.
pub type Witness = Vec<(Multiplicity, Multiplicity, Rational)>;

pub fn p_leq(p1: &ProbMultiplicity, p2: &ProbMultiplicity) -> bool {
    if p1 == p2 {
        return true;
    }
    if let Some(m) = p2.as_dirac() {
        return weighting(p1).leq_multiplicity(m);
    }
    if !weighting(p1).leq(&weighting(p2)) {
        return false;
    }
    p_leq_witness(p1, p2).is_some()
}

/// Decides `p1 <= p2` by linear feasibility and returns an optimal matching.
pub fn p_leq_witness(p1: &ProbMultiplicity, p2: &ProbMultiplicity) -> Option<Witness> {
    let rows: Vec<(&Multiplicity, &Rational)> = p1.iter().collect();
    let cols: Vec<(&Multiplicity, &Rational)> = p2.iter().collect();
    let vars = p1.vars();
    let mut index = BTreeMap::new();
    for (i, (mi, _)) in rows.iter().enumerate() {
        for (j, (mj, _)) in cols.iter().enumerate() {
            let blocked = mi.iter().any(|(x, c)| c == Count::Inf && mj.get(x) != Count::Inf);
            if !blocked {
                let k = index.len();
                index.insert((i, j), k);
            }
        }
    }
    let mut lp = LinearProgram::new(index.len());
    for (i, (_, q)) in rows.iter().enumerate() {
        let coeffs = (0..cols.len()).filter_map(|j| index.get(&(i, j)).map(|&k| (k, one()))).collect();
        lp.add(coeffs, Relation::Eq, (*q).clone());
    }
    for (j, (mj, q)) in cols.iter().enumerate() {
        let coeffs = (0..rows.len()).filter_map(|i| index.get(&(i, j)).map(|&k| (k, one()))).collect();
        lp.add(coeffs, Relation::Eq, (*q).clone());
        for x in &vars {
            let Count::Fin(cap) = mj.get(x) else { continue };
            let cap = Rational::from_integer(cap.into());
            let mut coeffs = Vec::new();
            for (i, (mi, _)) in rows.iter().enumerate() {
                let Some(&k) = index.get(&(i, j)) else { continue };
                // Rows with an infinite entry here were blocked above.
                let Count::Fin(n) = mi.get(x) else { continue };
                let c = Rational::from_integer(n.into()) - &cap;
                if !c.is_zero() {
                    coeffs.push((k, c));
                }
            }
            if coeffs.iter().any(|(_, c)| c.is_positive()) {
                lp.add(coeffs, Relation::Le, Rational::zero());
            }
        }
    }
    match lp.minimize() {
        LpOutcome::Optimal { x, .. } => Some(
            index
                .iter()
                .filter(|(_, &k)| !x[k].is_zero())
                .map(|(&(i, j), &k)| (rows[i].0.clone(), cols[j].0.clone(), x[k].clone()))
                .collect(),
        ),
        _ => None,
    }
}

/// Checks that `w` is a matching between `p1` and `p2` satisfying the order
/// condition column by column.
pub fn check_witness(p1: &ProbMultiplicity, p2: &ProbMultiplicity, w: &Witness) -> bool {
    if w.iter().any(|(_, _, q)| q.is_negative()) {
        return false;
    }
    let mut row: BTreeMap<&Multiplicity, Rational> = BTreeMap::new();
    let mut col: BTreeMap<&Multiplicity, Vec<(&Multiplicity, &Rational)>> = BTreeMap::new();
    for (a, b, q) in w {
        *row.entry(a).or_default() += q;
        col.entry(b).or_default().push((a, q));
    }
    let rows_ok = p1.iter().all(|(m, q)| row.get(m) == Some(q)) && row.len() == p1.len();
    let cols_ok =
        p2.iter().all(|(m, q)| col.get(m).map(|v| v.iter().map(|(_, q)| *q).sum::<Rational>()) == Some(q.clone()))
            && col.len() == p2.len();
    rows_ok && cols_ok && col.iter().all(|(m, v)| weighting_of(v.iter().copied()).leq_multiplicity(m))
}

/// A finite antichain of generators standing for its downward closure.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GenSet(Vec<ProbMultiplicity>);

impl GenSet {
    pub fn singleton(p: ProbMultiplicity) -> Self {
        GenSet(vec![p])
    }

    pub fn bottom() -> Self {
        Self::singleton(ProbMultiplicity::zero())
    }

    pub fn generators(&self) -> &[ProbMultiplicity] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_single(&self) -> Option<&ProbMultiplicity> {
        match self.0.as_slice() {
            [p] => Some(p),
            _ => None,
        }
    }

    /// Applies `f` to every generator, keeping the generators as they are.
    pub fn map_generators(&self, f: impl Fn(&ProbMultiplicity) -> ProbMultiplicity) -> GenSet {
        let mut v: Vec<_> = self.0.iter().map(f).collect();
        v.sort();
        v.dedup();
        GenSet(v)
    }
}

impl fmt::Display for GenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// Drops every generator lying below another one. Among generators that are
/// equivalent in both directions the first in canonical order survives.
pub fn genset_normalize(ps: impl IntoIterator<Item = ProbMultiplicity>) -> Result<GenSet, MultiplicityError> {
    let mut v: Vec<ProbMultiplicity> = ps.into_iter().collect();
    v.sort();
    v.dedup();
    if v.is_empty() {
        return Err(MultiplicityError::EmptyGenSet);
    }
    let n = v.len();
    let mut leq = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            leq[i][j] = i == j || p_leq(&v[i], &v[j]);
        }
    }
    let keep: Vec<ProbMultiplicity> = (0..n)
        .filter(|&i| !(0..n).any(|j| j != i && leq[i][j] && (!leq[j][i] || j < i)))
        .map(|i| v[i].clone())
        .collect();
    Ok(GenSet(keep))
}

pub fn genset_leq(g1: &GenSet, g2: &GenSet) -> bool {
    g1.0.iter().all(|p| g2.0.iter().any(|q| p_leq(p, q)))
}

/// Generator-set union.
pub fn genset_union(sets: &[&GenSet]) -> Result<GenSet, MultiplicityError> {
    genset_normalize(sets.iter().flat_map(|g| g.0.iter().cloned()))
}

/// An upper bound of every input: the Dirac at the pointwise maximum over all
/// supports. The flag is set when some input was not a Dirac, in which case
/// the bound need not be least.
pub fn sup_approx(ps: &[ProbMultiplicity]) -> (ProbMultiplicity, bool) {
    let mut top = Multiplicity::zero();
    let mut approx = false;
    for p in ps {
        approx |= p.as_dirac().is_none();
        for m in p.support() {
            top = top.join(m);
        }
    }
    (ProbMultiplicity::dirac(top), approx)
}

/// Supremum of a set: exact when the set has a greatest element, otherwise
/// [`sup_approx`].
pub fn sup_of(ps: &[ProbMultiplicity]) -> Result<(ProbMultiplicity, bool), MultiplicityError> {
    let g = genset_normalize(ps.iter().cloned())?;
    match g.as_single() {
        Some(p) => Ok((p.clone(), false)),
        None => Ok(sup_approx(&g.0)),
    }
}

/// Per-variable distances in `[0,1)`; absent variables are at distance 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProcessDistance(BTreeMap<Name, Rational>);

impl ProcessDistance {
    pub fn new(entries: impl IntoIterator<Item = (Name, Rational)>) -> Result<Self, MultiplicityError> {
        let mut map = BTreeMap::new();
        for (x, q) in entries {
            if q.is_negative() || q >= one() {
                return Err(MultiplicityError::DistanceOutOfRange { var: x.to_string(), value: fmt_rational(&q) });
            }
            if !q.is_zero() {
                map.insert(x, q);
            }
        }
        Ok(ProcessDistance(map))
    }

    pub fn of(entries: &[(&str, Rational)]) -> Result<Self, MultiplicityError> {
        Self::new(entries.iter().map(|(x, q)| (name(x), q.clone())))
    }

    /// Reads `x=1/10,y=0.2`; the empty string is the zero distance.
    pub fn parse(text: &str) -> Result<Self, MultiplicityError> {
        let mut entries = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let bad = || MultiplicityError::BadDistance(part.to_string());
            let (x, q) = part.split_once('=').ok_or_else(bad)?;
            let x = x.trim();
            if x.is_empty() || !x.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(bad());
            }
            entries.push((name(x), parse_rational(q).map_err(|_| bad())?));
        }
        Self::new(entries)
    }

    pub fn get(&self, x: &str) -> Rational {
        self.0.get(x).cloned().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Rational)> {
        self.0.iter()
    }
}

impl fmt::Display for ProcessDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(x, q)| format!("{x}={}", fmt_rational(q))).collect();
        f.write_str(&parts.join(","))
    }
}

/// `1 - prod_x (1 - e(x))^m(x)` with `(1-e)^inf` = 1 if `e = 0`, else 0.
pub fn dda(m: &Multiplicity, e: &ProcessDistance) -> Rational {
    let mut prod = one();
    for (x, c) in m.iter() {
        let ex = e.get(x);
        if ex.is_zero() {
            continue;
        }
        match c {
            Count::Fin(n) => prod *= num_traits::pow(one() - ex, n as usize),
            Count::Inf => return one(),
        }
    }
    one() - prod
}

pub fn pda(p: &ProbMultiplicity, e: &ProcessDistance) -> Rational {
    p.iter().map(|(m, q)| q * dda(m, e)).sum()
}

pub fn da(g: &GenSet, e: &ProcessDistance) -> Rational {
    g.0.iter().map(|p| pda(p, e)).max().unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn m(entries: &[(&str, u64)]) -> Multiplicity {
        Multiplicity::of(&entries.iter().map(|(x, n)| (*x, Count::Fin(*n))).collect::<Vec<_>>())
    }

    fn half_two_x() -> ProbMultiplicity {
        ProbMultiplicity::from_masses([(m(&[("x", 2)]), ratio(1, 2)), (Multiplicity::zero(), ratio(1, 2))]).unwrap()
    }

    fn dirac(entries: &[(&str, u64)]) -> ProbMultiplicity {
        ProbMultiplicity::dirac(m(entries))
    }

    #[test]
    fn count_arithmetic() {
        assert_eq!(Count::Inf + Count::Fin(1), Count::Inf);
        assert_eq!(Count::Fin(0) * Count::Inf, Count::Fin(0));
        assert_eq!(Count::Fin(3) * Count::Inf, Count::Inf);
        assert_eq!(Count::Fin(u64::MAX) + Count::Fin(1), Count::Inf);
    }

    #[test]
    fn sums_and_dots() {
        assert_eq!(m_sum(&m(&[("x", 1)]), &m(&[("y", 1)])), m(&[("x", 1), ("y", 1)]));
        let inf_x = Multiplicity::of(&[("x", Count::Inf)]);
        assert_eq!(m_sum(&inf_x, &m(&[("x", 1)])), inf_x);
        assert_eq!(m_dot(&m(&[("mu", 2)]), "mu", &m(&[("x", 1)])), m(&[("x", 2)]));
        assert_eq!(m_dot(&m(&[("x1", 1), ("x2", 1)]), "x1", &m(&[("x", 1)])), m(&[("x", 1)]));
        assert!(m_dot(&m(&[("z", 1)]), "y", &inf_x).is_zero());
    }

    #[test]
    fn lifting() {
        assert_eq!(p_lift_op(MOp::Sum, &dirac(&[("x", 1)]), &dirac(&[("x", 1)])), dirac(&[("x", 2)]));
        let got = p_lift_op(MOp::Sum, &half_two_x(), &dirac(&[("y", 1)]));
        let want =
            ProbMultiplicity::from_masses([(m(&[("x", 2), ("y", 1)]), ratio(1, 2)), (m(&[("y", 1)]), ratio(1, 2))])
                .unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn compose_drops_unlisted_variables() {
        let p = dirac(&[("x1", 2), ("mu", 1)]);
        let got = p_compose(&p, &[(name("x1"), dirac(&[("x", 1)]))]);
        assert_eq!(got, dirac(&[("x", 2)]));
        assert_eq!(p_compose(&ProbMultiplicity::zero(), &[]), ProbMultiplicity::zero());
    }

    #[test]
    fn weightings() {
        assert_eq!(weighting(&dirac(&[("x", 2)])).get("x"), ExtRational::Finite(ratio(2, 1)));
        assert_eq!(weighting(&half_two_x()).get("x"), ExtRational::Finite(ratio(1, 1)));
        assert_eq!(weighting_of(std::iter::empty()), Weighting::default());
        let p = ProbMultiplicity::from_masses([
            (Multiplicity::of(&[("x", Count::Inf)]), ratio(1, 3)),
            (Multiplicity::zero(), ratio(2, 3)),
        ])
        .unwrap();
        assert_eq!(weighting(&p).get("x"), ExtRational::Infinite);
    }

    #[test]
    fn order() {
        let p = half_two_x();
        assert!(p_leq(&p, &p));
        assert!(p_leq(&p, &dirac(&[("x", 1)])));
        assert!(!p_leq(&dirac(&[("x", 1)]), &p));
        let w = p_leq_witness(&p, &dirac(&[("x", 1)])).unwrap();
        assert!(check_witness(&p, &dirac(&[("x", 1)]), &w));
        assert!(p_leq_witness(&dirac(&[("x", 1)]), &p).is_none());
    }

    #[test]
    fn order_needs_the_lp() {
        // Same weighting, different spread: 1/2@{x:2}+1/2@{} is below itself
        // shifted up, but {x:1} is not below 1/2@{x:2}+1/2@{}.
        let lo = half_two_x();
        let hi = ProbMultiplicity::from_masses([(m(&[("x", 2)]), ratio(1, 2)), (m(&[("x", 1)]), ratio(1, 2))]).unwrap();
        assert!(p_leq(&lo, &hi));
        assert!(!p_leq(&hi, &lo));
        let wide = ProbMultiplicity::from_masses([(m(&[("x", 3)]), ratio(1, 2)), (Multiplicity::zero(), ratio(1, 2))])
            .unwrap();
        assert!(!p_leq(&dirac(&[("x", 1)]), &wide));
    }

    #[test]
    fn normalize() {
        let g = genset_normalize([dirac(&[("x", 1)]), dirac(&[("x", 2)])]).unwrap();
        assert_eq!(g.generators(), &[dirac(&[("x", 2)])]);
        let g = genset_normalize([half_two_x(), dirac(&[("y", 1)])]).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(genset_normalize(Vec::new()), Err(MultiplicityError::EmptyGenSet));
        assert!(genset_leq(&g, &GenSet::singleton(dirac(&[("x", 1), ("y", 1)]))));
    }

    #[test]
    fn sups() {
        let (s, approx) = sup_approx(&[dirac(&[("x1", 1), ("mu1", 1)]), dirac(&[("x2", 1), ("mu2", 1)])]);
        assert_eq!(s, dirac(&[("x1", 1), ("x2", 1), ("mu1", 1), ("mu2", 1)]));
        assert!(!approx);
        let (s, approx) = sup_approx(&[half_two_x()]);
        assert_eq!(s, dirac(&[("x", 2)]));
        assert!(approx && p_leq(&half_two_x(), &s));
        let (s, approx) = sup_of(&[half_two_x()]).unwrap();
        assert_eq!(s, half_two_x());
        assert!(!approx);
    }

    #[test]
    fn distance_assignments() {
        let e = ProcessDistance::parse("x=1/10, y=0.2").unwrap();
        assert_eq!(e.get("y"), ratio(1, 5));
        assert_eq!(e.to_string(), "x=1/10,y=1/5");
        assert!(ProcessDistance::parse("").unwrap().iter().next().is_none());
        assert!(matches!(ProcessDistance::parse("x"), Err(MultiplicityError::BadDistance(_))));
        assert!(matches!(ProcessDistance::parse("x=1"), Err(MultiplicityError::DistanceOutOfRange { .. })));
    }

    #[test]
    fn approximations() {
        let e = ProcessDistance::of(&[("x", ratio(1, 10))]).unwrap();
        assert_eq!(dda(&m(&[("x", 2)]), &e), ratio(19, 100));
        assert_eq!(dda(&Multiplicity::zero(), &e), ratio(0, 1));
        assert_eq!(dda(&m(&[("x", 2), ("mu", 2)]), &e), ratio(19, 100));
        assert_eq!(dda(&Multiplicity::of(&[("x", Count::Inf)]), &e), ratio(1, 1));
        assert_eq!(dda(&Multiplicity::of(&[("y", Count::Inf)]), &e), ratio(0, 1));
        assert_eq!(pda(&half_two_x(), &e), ratio(19, 200));
        let g = genset_normalize([half_two_x(), dirac(&[("y", 1)])]).unwrap();
        let e = ProcessDistance::of(&[("x", ratio(1, 10)), ("y", ratio(1, 5))]).unwrap();
        assert_eq!(da(&g, &e), ratio(1, 5));
        assert!(ProcessDistance::of(&[("x", ratio(1, 1))]).is_err());
    }

    #[test]
    fn printing() {
        let p = ProbMultiplicity::from_masses([
            (Multiplicity::of(&[("x", Count::Fin(2)), ("y", Count::Inf)]), ratio(1, 2)),
            (Multiplicity::zero(), ratio(1, 2)),
        ])
        .unwrap();
        assert_eq!(p.to_string(), "1/2@{} + 1/2@{x:2, y:inf}");
        let g = genset_normalize([half_two_x(), dirac(&[("y", 1)])]).unwrap();
        assert_eq!(g.to_string(), "1/2@{} + 1/2@{x:2} | 1/1@{y:1}");
    }
}
