//! Shared inputs for the benchmarks.

use pgsos_core::data;
use pgsos_core::rational::ratio;
use pgsos_core::semantics::{explore_fragment, Limits, ReachableFragment};
use pgsos_core::term::{FiniteDistribution, StateTerm};

/// The two instances of `par(x, x)` whose distance is 19/100.
pub fn copying_pair() -> (ReachableFragment, StateTerm, StateTerm) {
    let doc = data::pa();
    let s = doc.parse_closed_term("par(pref_a(pref_a(zero)), pref_a(pref_a(zero)))").unwrap();
    let t = doc.parse_closed_term("par(pref_a_9_1(pref_a(zero), zero), pref_a_9_1(pref_a(zero), zero))").unwrap();
    let frag = explore_fragment(&doc, &[s.clone(), t.clone()], Limits::default()).unwrap();
    (frag, s, t)
}

/// Two distributions over `n` constants with staggered weights.
pub fn spread(n: usize) -> (Vec<StateTerm>, FiniteDistribution, FiniteDistribution) {
    let states: Vec<StateTerm> = (0..n).map(|i| StateTerm::constant(&format!("s{i}"))).collect();
    let total = (n * (n + 1) / 2) as i64;
    let left = FiniteDistribution::from_masses(
        states.iter().cloned().enumerate().map(|(i, s)| (s, ratio(i as i64 + 1, total))),
    );
    let right = FiniteDistribution::from_masses(
        states.iter().cloned().enumerate().map(|(i, s)| (s, ratio((n - i) as i64, total))),
    );
    (states, left.unwrap(), right.unwrap())
}
