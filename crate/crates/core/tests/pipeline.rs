use pgsos_core::continuity::{check_modulus, derive_modulus, is_uniformly_continuous, Verdict};
use pgsos_core::data;
use pgsos_core::denotation::{Denotations, FixpointConfig};
use pgsos_core::metric::{distance, LfpMode};
use pgsos_core::oracle::{check_sample, OracleConfig};
use pgsos_core::rational::ratio;
use pgsos_core::report::{self, ReportDocument};
use pgsos_core::semantics::{explore_fragment, ExploreError, Limits};
use pgsos_core::term::name;
use std::collections::BTreeMap;

#[test]
fn every_pa_operator_is_uniformly_continuous() {
    let doc = data::pa();
    let den = Denotations::compute(&doc, FixpointConfig::default()).unwrap();
    for (op, _) in doc.operators() {
        let r = is_uniformly_continuous(&den, op).unwrap();
        assert!(matches!(r.verdict, Verdict::UniformlyContinuous { .. }), "{op}: {}", r.verdict);
        let z = derive_modulus(&den, op).unwrap();
        assert!(check_modulus(&den, op, &z).unwrap().satisfied);
    }
}

#[test]
fn examples_spec_verdicts() {
    let doc = data::examples();
    let den = Denotations::compute(&doc, FixpointConfig::default()).unwrap();
    let verdict = |op: &str| is_uniformly_continuous(&den, op).unwrap();
    assert!(matches!(verdict("dup_par").verdict, Verdict::UniformlyContinuous { ref n } if *n == 2.into()));
    assert!(!verdict("dup_par").widened);
    assert!(matches!(verdict("repl").verdict, Verdict::NotShown { .. }));
}

#[test]
fn iterate_mode_stays_below_the_fixed_point() {
    let doc = data::pa();
    let s = doc.parse_closed_term("par(pref_a(pref_a(zero)), pref_a(pref_a(zero)))").unwrap();
    let t = doc.parse_closed_term("par(pref_a_9_1(pref_a(zero), zero), pref_a_9_1(pref_a(zero), zero))").unwrap();
    let frag = explore_fragment(&doc, &[s.clone(), t.clone()], Limits::default()).unwrap();
    let (exact, res) = distance(&frag, &s, &t, LfpMode::default()).unwrap();
    assert!(res.converged && !res.cyclic);
    let mut last = ratio(0, 1);
    for k in 0..=res.iterations {
        let (d, r) = distance(&frag, &s, &t, LfpMode::Iterate(k)).unwrap();
        assert!(last <= d && d <= exact);
        assert!(r.iterations <= k);
        last = d;
    }
    assert_eq!(last, exact);
}

#[test]
fn replication_is_unbounded() {
    let doc = data::examples();
    let t = doc.parse_closed_term("repl(pref_a(zero))").unwrap();
    let err = explore_fragment(&doc, &[t], Limits { max_states: 50, max_depth: 64 }).unwrap_err();
    assert!(matches!(err, ExploreError::StateLimitExceeded { .. } | ExploreError::DepthLimitExceeded { .. }));
    assert!(!err.partial_fragment().unwrap().is_complete());
}

#[test]
fn non_synchronising_difference_leaves_a_gap() {
    let doc = data::pa();
    let cfg = OracleConfig::default();
    let den = Denotations::compute(&doc, cfg.fixpoint).unwrap();
    let t = doc.parse_term("par(x, pref_a(pref_a(zero)))").unwrap();
    let s1 = BTreeMap::from([(name("x"), doc.parse_closed_term("pref_a(pref_b(zero))").unwrap())]);
    let s2 = BTreeMap::from([(name("x"), doc.parse_closed_term("pref_a_9_1(pref_b(zero), zero)").unwrap())]);
    let sample = check_sample(&doc, &den, &t, s1, s2, &cfg).unwrap().unwrap();
    assert_eq!(sample.distance, ratio(0, 1));
    assert_eq!(sample.gap(), ratio(1, 10));
    let json = report::sample(&sample);
    assert_eq!(json["gap"], "1/10");
    assert_eq!(json["holds"], true);
}

#[test]
fn reports_are_deterministic() {
    let doc = data::pa();
    let den = Denotations::compute(&doc, FixpointConfig::default()).unwrap();
    let build = || {
        let mut r = ReportDocument::new(data::PA_SPEC, "continuity", serde_json::json!({}));
        r.results = serde_json::Value::Array(
            doc.operators().map(|(op, _)| report::continuity(&is_uniformly_continuous(&den, op).unwrap())).collect(),
        );
        r.to_json()
    };
    assert_eq!(build(), build());
    assert!(build().contains("\"min(e1 + e2, 1)\""));
}
