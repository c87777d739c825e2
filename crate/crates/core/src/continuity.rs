//! Per-operator compositionality: derived moduli of continuity, uniform
//! continuity verdicts and checks of user-supplied linear moduli.

use crate::denotation::Denotations;
use crate::multiplicity::{sup_of, weighting, MultiplicityError};
use crate::rational::{ceil, fmt_rational, one, parse_rational, ExtRational, Rational};
use crate::spec::canonical_source;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContinuityError {
    #[error("operator `{0}` is not declared")]
    UnknownOperator(String),
    #[error("unsupported modulus `{0}`: expected a sum of `c*e<i>` terms, optionally as `min(..., 1)`")]
    UnsupportedModulusShape(String),
    #[error("modulus mentions e{index} but the operator has arity {arity}")]
    VariableOutOfRange { index: usize, arity: usize },
    #[error(transparent)]
    Domain(#[from] MultiplicityError),
}

/// `z(e1, .., en) = min(c1*e1 + .. + cn*en, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModulusSpec {
    pub coefficients: Vec<ExtRational>,
}

impl ModulusSpec {
    pub fn arity(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_finite(&self) -> bool {
        self.coefficients.iter().all(ExtRational::is_finite)
    }

    pub fn eval(&self, eps: &[Rational]) -> Rational {
        let mut sum = Rational::zero();
        for (c, e) in self.coefficients.iter().zip(eps) {
            if e.is_zero() {
                continue;
            }
            match c {
                ExtRational::Finite(c) => sum += c * e,
                ExtRational::Infinite => return one(),
            }
        }
        sum.min(one())
    }
}

impl fmt::Display for ModulusSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match c {
                ExtRational::Finite(q) if q.is_one() => format!("e{}", i + 1),
                ExtRational::Finite(q) => format!("{}*e{}", fmt_rational(q), i + 1),
                ExtRational::Infinite => format!("inf*e{}", i + 1),
            })
            .collect();
        if terms.is_empty() {
            f.write_str("0")
        } else {
            write!(f, "min({}, 1)", terms.join(" + "))
        }
    }
}

/// Parses `1/2*e1 + e2`, `min(e1 + e2, 1)`, `inf*e1` or `0`.
pub fn parse_modulus(text: &str, arity: usize) -> Result<ModulusSpec, ContinuityError> {
    let unsupported = || ContinuityError::UnsupportedModulusShape(text.to_string());
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let body = match compact.strip_prefix("min(").and_then(|s| s.strip_suffix(')')) {
        Some(inner) => inner.strip_suffix(",1").ok_or_else(unsupported)?.to_string(),
        None => compact,
    };
    if body.is_empty() {
        return Err(unsupported());
    }
    let mut coefficients = vec![ExtRational::zero(); arity];
    for term in body.split('+') {
        if term == "0" {
            continue;
        }
        let (coef, var) = match term.rsplit_once('*') {
            Some((c, v)) => (c, v),
            None => ("1", term),
        };
        let index: usize = var.strip_prefix('e').and_then(|n| n.parse().ok()).ok_or_else(unsupported)?;
        if index == 0 || index > arity {
            return Err(ContinuityError::VariableOutOfRange { index, arity });
        }
        let c = if coef == "inf" {
            ExtRational::Infinite
        } else {
            let q = parse_rational(coef).map_err(|_| unsupported())?;
            if q < Rational::zero() {
                return Err(unsupported());
            }
            ExtRational::Finite(q)
        };
        let slot = &mut coefficients[index - 1];
        *slot = match (&*slot, c) {
            (ExtRational::Finite(a), ExtRational::Finite(b)) => ExtRational::Finite(a + b),
            _ => ExtRational::Infinite,
        };
    }
    Ok(ModulusSpec { coefficients })
}

fn arity_of(d: &Denotations, op: &str) -> Result<usize, ContinuityError> {
    d.arity(op).ok_or_else(|| ContinuityError::UnknownOperator(op.to_string()))
}

/// Expected copy counts of each argument under the sup of `[[f(x1, .., xn)]]`.
/// The flag reports whether that sup was over-approximated.
pub fn weighted_sup(d: &Denotations, op: &str) -> Result<(Vec<ExtRational>, bool), ContinuityError> {
    let g = d.operator(op).ok_or_else(|| ContinuityError::UnknownOperator(op.to_string()))?;
    let (s, approx) = sup_of(g.generators())?;
    let w = weighting(&s);
    let n = arity_of(d, op)?;
    Ok(((0..n).map(|i| w.get(&canonical_source(i))).collect(), approx))
}

pub fn derive_modulus(d: &Denotations, op: &str) -> Result<ModulusSpec, ContinuityError> {
    Ok(ModulusSpec { coefficients: weighted_sup(d, op)?.0 })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// `[[f(x1, .., xn)]]` lies below `n` copies of every argument.
    UniformlyContinuous { n: BigInt },
    /// The sufficient condition fails at `variable`.
    NotShown { variable: String },
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::UniformlyContinuous { .. } => f.write_str("uniformly-continuous"),
            Verdict::NotShown { .. } => f.write_str("not-shown"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuityReport {
    pub operator: String,
    pub verdict: Verdict,
    pub modulus: ModulusSpec,
    /// Some distribution-level sup feeding the denotations was over-approximated.
    pub over_approximated: bool,
    pub widened: bool,
    pub note: Option<String>,
}

pub fn is_uniformly_continuous(d: &Denotations, op: &str) -> Result<ContinuityReport, ContinuityError> {
    let g = d.operator(op).ok_or_else(|| ContinuityError::UnknownOperator(op.to_string()))?;
    let (coefficients, approx) = weighted_sup(d, op)?;
    let mut bound = Rational::zero();
    let mut failing = None;
    for p in g.generators() {
        for (x, w) in weighting(p).iter() {
            match w {
                ExtRational::Finite(q) => bound = bound.max(q.clone()),
                ExtRational::Infinite => {
                    failing.get_or_insert_with(|| x.to_string());
                }
            }
        }
    }
    let note = failing.as_ref().map(|x| {
        format!("{x} is copied unboundedly often; distances of the copies accumulate, so small argument distances need not give small composed distances")
    });
    let verdict = match failing {
        Some(variable) => Verdict::NotShown { variable },
        None => Verdict::UniformlyContinuous { n: ceil(&bound) },
    };
    Ok(ContinuityReport {
        operator: op.to_string(),
        verdict,
        modulus: ModulusSpec { coefficients },
        over_approximated: approx || !d.approximated().is_empty(),
        widened: d.widened_operators().contains(op),
        note,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModulusCheck {
    pub satisfied: bool,
    /// Arguments whose weighted copy count exceeds the given coefficient:
    /// `(argument index from 1, weighted count, coefficient)`.
    pub violations: Vec<(usize, ExtRational, ExtRational)>,
}

pub fn check_modulus(d: &Denotations, op: &str, z: &ModulusSpec) -> Result<ModulusCheck, ContinuityError> {
    let (w, _) = weighted_sup(d, op)?;
    if z.arity() != w.len() {
        return Err(ContinuityError::VariableOutOfRange { index: z.arity(), arity: w.len() });
    }
    let violations: Vec<_> = w
        .into_iter()
        .zip(&z.coefficients)
        .enumerate()
        .filter(|(_, (have, allowed))| have > *allowed)
        .map(|(i, (have, allowed))| (i + 1, have, allowed.clone()))
        .collect();
    Ok(ModulusCheck { satisfied: violations.is_empty(), violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;
    use crate::denotation::FixpointConfig;
    use crate::rational::ratio;

    fn fin(n: i64, d: i64) -> ExtRational {
        ExtRational::Finite(ratio(n, d))
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_modulus("1/2*e1 + e2", 2).unwrap().coefficients, vec![fin(1, 2), fin(1, 1)]);
        assert_eq!(parse_modulus("min(e1+e2, 1)", 2).unwrap().coefficients, vec![fin(1, 1), fin(1, 1)]);
        assert_eq!(parse_modulus("inf*e1", 1).unwrap().coefficients, vec![ExtRational::Infinite]);
        assert_eq!(parse_modulus("0", 0).unwrap().coefficients, vec![]);
        assert_eq!(parse_modulus("0.5*e1 + e1", 1).unwrap().coefficients, vec![fin(3, 2)]);
        assert!(matches!(parse_modulus("e1*e2", 2), Err(ContinuityError::UnsupportedModulusShape(_))));
        assert!(matches!(parse_modulus("sqrt(e1)", 1), Err(ContinuityError::UnsupportedModulusShape(_))));
        assert!(matches!(parse_modulus("min(e1, 2)", 1), Err(ContinuityError::UnsupportedModulusShape(_))));
        assert!(matches!(parse_modulus("e3", 2), Err(ContinuityError::VariableOutOfRange { index: 3, arity: 2 })));
    }

    #[test]
    fn modulus_display_and_eval() {
        let z = parse_modulus("e1 + e2", 2).unwrap();
        assert_eq!(z.to_string(), "min(e1 + e2, 1)");
        assert_eq!(z.eval(&[ratio(1, 10), ratio(1, 10)]), ratio(1, 5));
        assert_eq!(z.eval(&[ratio(9, 10), ratio(9, 10)]), ratio(1, 1));
        assert_eq!(ModulusSpec { coefficients: vec![] }.to_string(), "0");
        let inf = ModulusSpec { coefficients: vec![ExtRational::Infinite] };
        assert_eq!(inf.eval(&[ratio(0, 1)]), ratio(0, 1));
        assert_eq!(inf.eval(&[ratio(1, 100)]), ratio(1, 1));
    }

    #[test]
    fn process_algebra_verdicts() {
        let doc = data::pa();
        let d = Denotations::compute(&doc, FixpointConfig::default()).unwrap();
        let r = is_uniformly_continuous(&d, "par").unwrap();
        assert_eq!(r.verdict, Verdict::UniformlyContinuous { n: 1.into() });
        assert_eq!(r.modulus.to_string(), "min(e1 + e2, 1)");
        assert_eq!(is_uniformly_continuous(&d, "zero").unwrap().verdict, Verdict::UniformlyContinuous { n: 0.into() });
        assert_eq!(weighted_sup(&d, "pref_a_5_5").unwrap().0, vec![fin(1, 2), fin(1, 2)]);
        assert!(check_modulus(&d, "par", &parse_modulus("min(e1 + e2, 1)", 2).unwrap()).unwrap().satisfied);
        let half = check_modulus(&d, "par", &parse_modulus("1/2*e1 + e2", 2).unwrap()).unwrap();
        assert_eq!(half.violations, vec![(1, fin(1, 1), fin(1, 2))]);
        assert!(matches!(is_uniformly_continuous(&d, "nope"), Err(ContinuityError::UnknownOperator(_))));
    }

    #[test]
    fn replication_is_not_shown() {
        let doc = data::examples();
        let d = Denotations::compute(&doc, FixpointConfig::default()).unwrap();
        let r = is_uniformly_continuous(&d, "repl").unwrap();
        assert_eq!(r.verdict, Verdict::NotShown { variable: "x1".into() });
        assert!(r.widened && r.note.is_some());
        assert_eq!(r.modulus.coefficients, vec![ExtRational::Infinite]);
        assert!(!check_modulus(&d, "repl", &parse_modulus("1000*e1", 1).unwrap()).unwrap().satisfied);
        assert_eq!(derive_modulus(&d, "half_copy").unwrap().coefficients, vec![fin(1, 1)]);
    }
}
