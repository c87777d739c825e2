//! State terms, distribution terms, substitutions and finite distributions.

use crate::rational::{self, Fraction, Rational};
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Interned-ish identifier shared by operators, actions and variables.
pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("variable `{0}` is bound to a term of the wrong kind")]
    KindMismatch(Name),
    #[error("variable `{0}` has no closed binding")]
    Unbound(Name),
    #[error("convex weight {0} is outside (0,1]")]
    WeightOutOfRange(String),
    #[error("convex weights sum to {0}, expected 1")]
    WeightsDoNotSumToOne(String),
    #[error("empty convex combination")]
    EmptyConvexSum,
    #[error("distribution masses sum to {0}, expected 1")]
    NotNormalized(String),
    #[error("distribution contains open term `{0}`")]
    OpenSupport(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    State,
    Dist,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: Name,
    pub kind: VarKind,
}

impl Var {
    pub fn state(n: &str) -> Self {
        Var { name: name(n), kind: VarKind::State }
    }

    pub fn dist(n: &str) -> Self {
        Var { name: name(n), kind: VarKind::Dist }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A term over the process signature. Closed iff it contains no `Var`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateTerm {
    Var(Name),
    App(Name, Arc<[StateTerm]>),
}

impl StateTerm {
    pub fn var(n: &str) -> Self {
        StateTerm::Var(name(n))
    }

    pub fn app(op: &str, args: Vec<StateTerm>) -> Self {
        StateTerm::App(name(op), args.into())
    }

    pub fn constant(op: &str) -> Self {
        StateTerm::App(name(op), Arc::from(Vec::new()))
    }

    pub fn head(&self) -> Option<&Name> {
        match self {
            StateTerm::App(f, _) => Some(f),
            StateTerm::Var(_) => None,
        }
    }

    pub fn args(&self) -> &[StateTerm] {
        match self {
            StateTerm::App(_, args) => args,
            StateTerm::Var(_) => &[],
        }
    }

    pub fn is_closed(&self) -> bool {
        match self {
            StateTerm::Var(_) => false,
            StateTerm::App(_, args) => args.iter().all(StateTerm::is_closed),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            StateTerm::Var(_) => 0,
            StateTerm::App(_, args) => 1 + args.iter().map(StateTerm::depth).max().unwrap_or(0),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            StateTerm::Var(x) => {
                out.insert(Var { name: x.clone(), kind: VarKind::State });
            }
            StateTerm::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Every subterm, including `self`, children before parents.
    pub fn subterms(&self) -> Vec<StateTerm> {
        let mut out = Vec::new();
        self.collect_subterms(&mut out);
        out
    }

    fn collect_subterms(&self, out: &mut Vec<StateTerm>) {
        for a in self.args() {
            a.collect_subterms(out);
        }
        out.push(self.clone());
    }

    pub fn substitute(&self, sigma: &Substitution) -> StateTerm {
        match self {
            StateTerm::Var(x) => sigma.state.get(x).cloned().unwrap_or_else(|| self.clone()),
            StateTerm::App(f, args) => StateTerm::App(f.clone(), args.iter().map(|a| a.substitute(sigma)).collect()),
        }
    }

    pub fn instantiate(&self, env: &ClosedEnv) -> Result<StateTerm, TermError> {
        match self {
            StateTerm::Var(x) => env.state.get(x).cloned().ok_or_else(|| TermError::Unbound(x.clone())),
            StateTerm::App(f, args) => {
                Ok(StateTerm::App(f.clone(), args.iter().map(|a| a.instantiate(env)).collect::<Result<_, _>>()?))
            }
        }
    }
}

impl fmt::Display for StateTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateTerm::Var(x) => f.write_str(x),
            StateTerm::App(op, args) if args.is_empty() => f.write_str(op),
            StateTerm::App(op, args) => {
                write!(f, "{op}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// An expression denoting a probability distribution over state terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DistTerm {
    Var(Name),
    Dirac(StateTerm),
    /// Built through [`DistTerm::convex`]: weights in (0,1] summing to 1,
    /// no nested sums, no repeated summands, at least two summands.
    Convex(Vec<(Rational, DistTerm)>),
    App(Name, Vec<DistTerm>),
}

impl DistTerm {
    pub fn var(n: &str) -> Self {
        DistTerm::Var(name(n))
    }

    pub fn dirac(t: StateTerm) -> Self {
        DistTerm::Dirac(t)
    }

    pub fn app(op: &str, args: Vec<DistTerm>) -> Self {
        DistTerm::App(name(op), args)
    }

    /// Validates and normalizes a convex combination: nested sums are
    /// flattened, equal summands merged, summands sorted, and a single
    /// summand collapses to itself.
    pub fn convex(items: Vec<(Rational, DistTerm)>) -> Result<DistTerm, TermError> {
        if items.is_empty() {
            return Err(TermError::EmptyConvexSum);
        }
        let mut total = Rational::zero();
        for (q, _) in &items {
            if q <= &Rational::zero() || q > &Rational::one() {
                return Err(TermError::WeightOutOfRange(rational::fmt_rational(q)));
            }
            total += q;
        }
        if !total.is_one() {
            return Err(TermError::WeightsDoNotSumToOne(rational::fmt_rational(&total)));
        }
        let mut merged: BTreeMap<DistTerm, Rational> = BTreeMap::new();
        for (q, theta) in items {
            match theta {
                DistTerm::Convex(inner) => {
                    for (r, t) in inner {
                        *merged.entry(t).or_insert_with(Rational::zero) += &q * r;
                    }
                }
                other => *merged.entry(other).or_insert_with(Rational::zero) += q,
            }
        }
        if merged.len() == 1 {
            return Ok(merged.into_keys().next().expect("one summand"));
        }
        Ok(DistTerm::Convex(merged.into_iter().map(|(t, q)| (q, t)).collect()))
    }

    pub fn is_closed(&self) -> bool {
        match self {
            DistTerm::Var(_) => false,
            DistTerm::Dirac(t) => t.is_closed(),
            DistTerm::Convex(items) => items.iter().all(|(_, t)| t.is_closed()),
            DistTerm::App(_, args) => args.iter().all(DistTerm::is_closed),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            DistTerm::Var(mu) => {
                out.insert(Var { name: mu.clone(), kind: VarKind::Dist });
            }
            DistTerm::Dirac(t) => t.collect_vars(out),
            DistTerm::Convex(items) => items.iter().for_each(|(_, t)| t.collect_vars(out)),
            DistTerm::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Immediate sub-expressions (state terms under `delta` are not included).
    pub fn children(&self) -> Vec<&DistTerm> {
        match self {
            DistTerm::Var(_) | DistTerm::Dirac(_) => Vec::new(),
            DistTerm::Convex(items) => items.iter().map(|(_, t)| t).collect(),
            DistTerm::App(_, args) => args.iter().collect(),
        }
    }

    pub fn substitute(&self, sigma: &Substitution) -> DistTerm {
        match self {
            DistTerm::Var(mu) => sigma.dist.get(mu).cloned().unwrap_or_else(|| self.clone()),
            DistTerm::Dirac(t) => DistTerm::Dirac(t.substitute(sigma)),
            DistTerm::Convex(items) => {
                DistTerm::convex(items.iter().map(|(q, t)| (q.clone(), t.substitute(sigma))).collect())
                    .expect("substitution preserves convex weights")
            }
            DistTerm::App(f, args) => DistTerm::App(f.clone(), args.iter().map(|a| a.substitute(sigma)).collect()),
        }
    }

    pub fn eval(&self, env: &ClosedEnv) -> Result<FiniteDistribution, TermError> {
        match self {
            DistTerm::Var(mu) => env.dist.get(mu).cloned().ok_or_else(|| TermError::Unbound(mu.clone())),
            DistTerm::Dirac(t) => Ok(FiniteDistribution::dirac(t.instantiate(env)?)),
            DistTerm::Convex(items) => {
                let parts =
                    items.iter().map(|(q, t)| Ok((q.clone(), t.eval(env)?))).collect::<Result<Vec<_>, TermError>>()?;
                Ok(FiniteDistribution::convex(&parts))
            }
            DistTerm::App(f, args) => {
                let parts = args.iter().map(|a| a.eval(env)).collect::<Result<Vec<_>, _>>()?;
                Ok(FiniteDistribution::lift(f, &parts))
            }
        }
    }
}

impl fmt::Display for DistTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistTerm::Var(mu) => f.write_str(mu),
            DistTerm::Dirac(t) => write!(f, "delta({t})"),
            DistTerm::Convex(items) => {
                for (i, (q, t)) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    match t {
                        DistTerm::Convex(_) => write!(f, "{}*({t})", Fraction(q))?,
                        _ => write!(f, "{}*{t}", Fraction(q))?,
                    }
                }
                Ok(())
            }
            DistTerm::App(op, args) if args.is_empty() => f.write_str(op),
            DistTerm::App(op, args) => {
                write!(f, "{op}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Either kind of term, for operations that accept both.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    State(StateTerm),
    Dist(DistTerm),
}

impl Term {
    pub fn free_vars(&self) -> BTreeSet<Var> {
        match self {
            Term::State(t) => t.free_vars(),
            Term::Dist(t) => t.free_vars(),
        }
    }

    pub fn substitute(&self, sigma: &Substitution) -> Term {
        match self {
            Term::State(t) => Term::State(t.substitute(sigma)),
            Term::Dist(t) => Term::Dist(t.substitute(sigma)),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::State(t) => t.fmt(f),
            Term::Dist(t) => t.fmt(f),
        }
    }
}

/// Kind-preserving map from variables to terms. Unmapped variables are fixed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    pub state: BTreeMap<Name, StateTerm>,
    pub dist: BTreeMap<Name, DistTerm>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, var: &Var, term: Term) -> Result<(), TermError> {
        match (var.kind, term) {
            (VarKind::State, Term::State(t)) => {
                self.state.insert(var.name.clone(), t);
                Ok(())
            }
            (VarKind::Dist, Term::Dist(t)) => {
                self.dist.insert(var.name.clone(), t);
                Ok(())
            }
            _ => Err(TermError::KindMismatch(var.name.clone())),
        }
    }

    pub fn with_state(mut self, x: &str, t: StateTerm) -> Self {
        self.state.insert(name(x), t);
        self
    }

    pub fn is_closed(&self) -> bool {
        self.state.values().all(StateTerm::is_closed) && self.dist.values().all(DistTerm::is_closed)
    }
}

/// Bindings used while instantiating rule targets: state variables map to
/// closed terms and distribution variables to concrete distributions.
#[derive(Debug, Clone, Default)]
pub struct ClosedEnv {
    pub state: BTreeMap<Name, StateTerm>,
    pub dist: BTreeMap<Name, FiniteDistribution>,
}

/// Finite-support probability distribution over closed state terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteDistribution {
    masses: BTreeMap<StateTerm, Rational>,
}

impl FiniteDistribution {
    pub fn dirac(t: StateTerm) -> Self {
        let mut masses = BTreeMap::new();
        masses.insert(t, Rational::one());
        FiniteDistribution { masses }
    }

    /// Builds a distribution, dropping zero masses and merging duplicates.
    pub fn from_masses(items: impl IntoIterator<Item = (StateTerm, Rational)>) -> Result<Self, TermError> {
        let mut masses: BTreeMap<StateTerm, Rational> = BTreeMap::new();
        for (t, q) in items {
            if !t.is_closed() {
                return Err(TermError::OpenSupport(t.to_string()));
            }
            if q < Rational::zero() || q > Rational::one() {
                return Err(TermError::WeightOutOfRange(rational::fmt_rational(&q)));
            }
            *masses.entry(t).or_insert_with(Rational::zero) += q;
        }
        masses.retain(|_, q| !q.is_zero());
        let total: Rational = masses.values().sum();
        if !total.is_one() {
            return Err(TermError::NotNormalized(rational::fmt_rational(&total)));
        }
        Ok(FiniteDistribution { masses })
    }

    pub fn mass(&self, t: &StateTerm) -> Rational {
        self.masses.get(t).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = &StateTerm> {
        self.masses.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StateTerm, &Rational)> {
        self.masses.iter()
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn as_dirac(&self) -> Option<&StateTerm> {
        if self.masses.len() == 1 {
            self.masses.keys().next()
        } else {
            None
        }
    }

    pub fn total(&self) -> Rational {
        self.masses.values().sum()
    }

    pub fn convex(parts: &[(Rational, FiniteDistribution)]) -> Self {
        let mut masses: BTreeMap<StateTerm, Rational> = BTreeMap::new();
        for (q, pi) in parts {
            for (t, p) in &pi.masses {
                *masses.entry(t.clone()).or_insert_with(Rational::zero) += q * p;
            }
        }
        masses.retain(|_, q| !q.is_zero());
        FiniteDistribution { masses }
    }

    /// `f(pi_1, ..., pi_n)`: mass `prod pi_i(t_i)` on `f(t_1, ..., t_n)`.
    pub fn lift(op: &Name, parts: &[FiniteDistribution]) -> Self {
        let mut acc: Vec<(Vec<StateTerm>, Rational)> = vec![(Vec::new(), Rational::one())];
        for pi in parts {
            let mut next = Vec::with_capacity(acc.len() * pi.len());
            for (prefix, q) in &acc {
                for (t, p) in &pi.masses {
                    let mut args = prefix.clone();
                    args.push(t.clone());
                    next.push((args, q * p));
                }
            }
            acc = next;
        }
        let masses = acc.into_iter().map(|(args, q)| (StateTerm::App(op.clone(), args.into()), q)).collect();
        FiniteDistribution { masses }
    }
}

impl fmt::Display for FiniteDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (t, q)) in self.masses.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t} -> {}", Fraction(q))?;
        }
        f.write_str("}")
    }
}

/// Evaluates a variable-free distribution term.
pub fn eval_closed_dist(theta: &DistTerm) -> Result<FiniteDistribution, TermError> {
    theta.eval(&ClosedEnv::default())
}
