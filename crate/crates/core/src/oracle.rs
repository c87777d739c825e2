//! Randomised cross-check of exact distances against denotational bounds.
//!
//! Each sample draws an open term `t` and two closed substitutions that are
//! usually close to each other (the second is a perturbation of the first),
//! then checks `d(s1(t), s2(t)) <= da([[t]], e)` where `e(x) = d(s1(x), s2(x))`.

use crate::denotation::{DenotationError, Denotations, FixpointConfig};
use crate::metric::{distance, LfpMode, MetricError};
use crate::multiplicity::{da, ProcessDistance};
use crate::rational::{one, Rational};
use crate::semantics::{explore_fragment, ExploreError, Limits};
use crate::spec::SpecDocument;
use crate::term::{name, Name, StateTerm, Substitution};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("all {0} samples were skipped")]
    AllSamplesSkipped(usize),
    #[error("the specification declares no operators")]
    NoOperators,
    #[error(transparent)]
    Denotation(#[from] DenotationError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
}

#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub seed: u64,
    pub samples: usize,
    /// Depth budget for the open term.
    pub max_depth: usize,
    /// Depth budget for substituted closed terms.
    pub sigma_depth: usize,
    pub vars: Vec<Name>,
    pub limits: Limits,
    pub lfp: LfpMode,
    pub fixpoint: FixpointConfig,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            seed: 0,
            samples: 200,
            max_depth: 3,
            sigma_depth: 2,
            vars: vec![name("x"), name("y")],
            limits: Limits { max_states: 400, max_depth: 64 },
            lfp: LfpMode::Exact { max_iter: 200 },
            fixpoint: FixpointConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SkipReason {
    /// Some variable of the term has instances at distance 1.
    TotalDisagreement,
    Truncated,
    NoConvergence,
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub term: StateTerm,
    pub sigma1: BTreeMap<Name, StateTerm>,
    pub sigma2: BTreeMap<Name, StateTerm>,
    pub e: ProcessDistance,
    pub distance: Rational,
    pub bound: Rational,
}

impl Sample {
    pub fn holds(&self) -> bool {
        self.distance <= self.bound
    }

    pub fn gap(&self) -> Rational {
        &self.bound - &self.distance
    }
}

#[derive(Debug, Clone, Default)]
pub struct OracleSummary {
    pub checked: Vec<Sample>,
    pub skipped: BTreeMap<SkipReason, usize>,
}

impl OracleSummary {
    pub fn violations(&self) -> Vec<&Sample> {
        self.checked.iter().filter(|s| !s.holds()).collect()
    }

    pub fn skipped_total(&self) -> usize {
        self.skipped.values().sum()
    }

    pub fn tight(&self) -> usize {
        self.checked.iter().filter(|s| s.gap().is_zero()).count()
    }

    pub fn max_gap(&self) -> Rational {
        self.checked.iter().map(Sample::gap).max().unwrap_or_default()
    }
}

struct Generator<'a> {
    ops: Vec<(Name, usize)>,
    rng: ChaCha8Rng,
    cfg: &'a OracleConfig,
}

impl Generator<'_> {
    fn pick_op(&mut self, filter: impl Fn(usize) -> bool) -> Option<(Name, usize)> {
        let candidates: Vec<&(Name, usize)> = self.ops.iter().filter(|(_, n)| filter(*n)).collect();
        if candidates.is_empty() {
            return None;
        }
        Some(candidates[self.rng.random_range(0..candidates.len())].clone())
    }

    fn leaf(&mut self, open: bool) -> StateTerm {
        if open && !self.cfg.vars.is_empty() && self.rng.random_bool(0.8) {
            let x = self.cfg.vars[self.rng.random_range(0..self.cfg.vars.len())].clone();
            return StateTerm::Var(x);
        }
        match self.pick_op(|n| n == 0) {
            Some((c, _)) => StateTerm::App(c, Vec::new().into()),
            None => StateTerm::Var(self.cfg.vars[0].clone()),
        }
    }

    fn term(&mut self, depth: usize, open: bool) -> StateTerm {
        if depth == 0 || self.rng.random_bool(0.2) {
            return self.leaf(open);
        }
        match self.pick_op(|n| n > 0) {
            Some((f, n)) => StateTerm::App(f, (0..n).map(|_| self.term(depth - 1, open)).collect()),
            None => self.leaf(open),
        }
    }

    /// Replaces one strict subterm of `t` by a fresh closed term.
    fn perturb(&mut self, t: &StateTerm, depth: usize) -> StateTerm {
        match t {
            StateTerm::App(f, args) if !args.is_empty() => {
                let i = self.rng.random_range(0..args.len());
                let mut args = args.to_vec();
                args[i] = if self.rng.random_bool(0.5) {
                    self.perturb(&args[i], depth.saturating_sub(1))
                } else {
                    self.term(depth.saturating_sub(1), false)
                };
                StateTerm::App(f.clone(), args.into())
            }
            _ => self.term(depth, false),
        }
    }
}

/// Draws `cfg.samples` samples; with `fixed_term` every sample uses that
/// term, otherwise a fresh term is drawn each time.
pub fn oracle_compare(
    doc: &SpecDocument,
    fixed_term: Option<&StateTerm>,
    cfg: &OracleConfig,
) -> Result<OracleSummary, OracleError> {
    let ops: Vec<(Name, usize)> = doc.operators().map(|(f, n)| (f.clone(), n)).collect();
    if ops.is_empty() {
        return Err(OracleError::NoOperators);
    }
    let den = Denotations::compute(doc, cfg.fixpoint)?;
    let mut gen = Generator { ops, rng: ChaCha8Rng::seed_from_u64(cfg.seed), cfg };
    let mut summary = OracleSummary::default();
    for _ in 0..cfg.samples {
        let term = match fixed_term {
            Some(t) => t.clone(),
            None => gen.term(cfg.max_depth, true),
        };
        let mut sigma1 = BTreeMap::new();
        let mut sigma2 = BTreeMap::new();
        for x in term.free_vars() {
            let s1 = gen.term(cfg.sigma_depth, false);
            let s2 = gen.perturb(&s1, cfg.sigma_depth);
            sigma1.insert(x.name.clone(), s1);
            sigma2.insert(x.name.clone(), s2);
        }
        match check_sample(doc, &den, &term, sigma1, sigma2, cfg)? {
            Ok(sample) => summary.checked.push(sample),
            Err(reason) => *summary.skipped.entry(reason).or_default() += 1,
        }
    }
    if summary.checked.is_empty() {
        return Err(OracleError::AllSamplesSkipped(cfg.samples));
    }
    Ok(summary)
}

fn exact_distance(
    doc: &SpecDocument,
    s: &StateTerm,
    t: &StateTerm,
    cfg: &OracleConfig,
) -> Result<Result<Rational, SkipReason>, OracleError> {
    let frag = match explore_fragment(doc, &[s.clone(), t.clone()], cfg.limits) {
        Ok(f) => f,
        Err(ExploreError::StateLimitExceeded { .. } | ExploreError::DepthLimitExceeded { .. }) => {
            return Ok(Err(SkipReason::Truncated))
        }
        Err(e) => return Err(e.into()),
    };
    match distance(&frag, s, t, cfg.lfp) {
        Ok((d, _)) => Ok(Ok(d)),
        Err(MetricError::NoConvergence { .. }) => Ok(Err(SkipReason::NoConvergence)),
        Err(e) => Err(e.into()),
    }
}

/// Checks one `(t, sigma1, sigma2)` triple. The inner `Err` says why the
/// sample was skipped.
pub fn check_sample(
    doc: &SpecDocument,
    den: &Denotations,
    term: &StateTerm,
    sigma1: BTreeMap<Name, StateTerm>,
    sigma2: BTreeMap<Name, StateTerm>,
    cfg: &OracleConfig,
) -> Result<Result<Sample, SkipReason>, OracleError> {
    let mut e = Vec::new();
    for (x, s1) in &sigma1 {
        let s2 = &sigma2[x];
        match exact_distance(doc, s1, s2, cfg)? {
            Ok(d) if d >= one() => return Ok(Err(SkipReason::TotalDisagreement)),
            Ok(d) => e.push((x.clone(), d)),
            Err(r) => return Ok(Err(r)),
        }
    }
    let e = ProcessDistance::new(e).expect("distances below 1 were filtered");
    let subst = |m: &BTreeMap<Name, StateTerm>| Substitution { state: m.clone(), dist: BTreeMap::new() };
    let (t1, t2) = (term.substitute(&subst(&sigma1)), term.substitute(&subst(&sigma2)));
    let d = match exact_distance(doc, &t1, &t2, cfg)? {
        Ok(d) => d,
        Err(r) => return Ok(Err(r)),
    };
    let bound = da(&den.denote(term)?, &e);
    Ok(Ok(Sample { term: term.clone(), sigma1, sigma2, e, distance: d, bound }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;
    use crate::rational::ratio;

    #[test]
    fn copying_bound_is_tight() {
        let doc = data::pa();
        let cfg = OracleConfig::default();
        let den = Denotations::compute(&doc, cfg.fixpoint).unwrap();
        let t = doc.parse_term("par(x, x)").unwrap();
        let s1 = BTreeMap::from([(name("x"), doc.parse_closed_term("pref_a(pref_a(zero))").unwrap())]);
        let s2 = BTreeMap::from([(name("x"), doc.parse_closed_term("pref_a_9_1(pref_a(zero), zero)").unwrap())]);
        let s = check_sample(&doc, &den, &t, s1, s2, &cfg).unwrap().unwrap();
        assert_eq!(s.distance, ratio(19, 100));
        assert_eq!(s.gap(), ratio(0, 1));
    }

    #[test]
    fn seeded_runs_are_reproducible_and_sound() {
        let doc = data::pa();
        let cfg = OracleConfig { samples: 25, seed: 7, ..OracleConfig::default() };
        let a = oracle_compare(&doc, None, &cfg).unwrap();
        let b = oracle_compare(&doc, None, &cfg).unwrap();
        assert!(a.violations().is_empty());
        assert_eq!(a.checked.len(), b.checked.len());
        assert!(a.checked.iter().zip(&b.checked).all(|(x, y)| x.term == y.term && x.distance == y.distance));
    }

    #[test]
    fn everything_skipped_is_an_error() {
        let doc = data::pa();
        let cfg =
            OracleConfig { samples: 3, limits: Limits { max_states: 1, max_depth: 1 }, ..OracleConfig::default() };
        let t = doc.parse_term("pref_a(x)").unwrap();
        assert!(matches!(oracle_compare(&doc, Some(&t), &cfg), Err(OracleError::AllSamplesSkipped(3))));
    }
}
