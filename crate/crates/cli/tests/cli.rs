use serde_json::Value;
use std::process::{Command, Output};

const PA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/specs/pa.pgsos");
const EXAMPLES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/specs/examples.pgsos");

const S1: &str = "pref_a(pref_a(zero))";
const S2: &str = "pref_a_9_1(pref_a(zero), zero)";

fn pgsos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pgsos")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.push("--json");
    let o = pgsos(&all);
    assert_eq!(o.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(&o)).unwrap()
}

#[test]
fn distance_of_the_copying_example() {
    let (l, r) = (format!("par({S1}, {S1})"), format!("par({S2}, {S2})"));
    let o = pgsos(&["distance", PA, &l, &r]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("19/100"));
    let v = json(&["distance", PA, &l, &r]);
    assert_eq!(v["results"]["distance"], "19/100");
    assert_eq!(v["results"]["converged"], true);
    assert_eq!(v["schema_version"], 1);
    assert!(v["results"]["table"].as_array().unwrap().len() > 1);
}

#[test]
fn iterate_mode_reports_a_lower_bound() {
    let (l, r) = (format!("par({S1}, {S1})"), format!("par({S2}, {S2})"));
    let v = json(&["distance", PA, &l, &r, "--iterate", "1"]);
    assert_eq!(v["results"]["lower_bound"], true);
    assert_eq!(v["results"]["distance"], "0/1");
}

#[test]
fn bound_and_denotation() {
    let v = json(&["bound", PA, "par(x, x)", "--dist", "x=1/10"]);
    assert_eq!(v["results"]["bound"], "19/100");
    assert_eq!(v["flags"]["widened"], false);
    let v = json(&["denote", EXAMPLES, "dup_choice(x)"]);
    assert_eq!(v["results"]["weighting"]["x"], "2/1");
    assert_eq!(v["flags"]["widened"], false);
    let v = json(&["denote", EXAMPLES, "repl(x)"]);
    assert_eq!(v["results"]["weighting"]["x"], "inf");
    assert_eq!(v["flags"]["widened"], true);
}

#[test]
fn continuity_verdicts() {
    let o = pgsos(&["continuity", PA, "par"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("par: uniformly-continuous, z = min(e1 + e2, 1)"));
    let v = json(&["continuity", EXAMPLES, "repl"]);
    let r = &v["results"]["reports"][0];
    assert_eq!(r["verdict"], "not-shown");
    assert_eq!(r["widened"], true);
    let all = json(&["continuity", PA]);
    assert_eq!(all["results"]["reports"].as_array().unwrap().len(), 25);
}

#[test]
fn modulus_checks() {
    let v = json(&["check-modulus", PA, "par", "--z", "min(e1 + e2, 1)"]);
    assert_eq!(v["results"]["satisfied"], true);
    let v = json(&["check-modulus", PA, "par", "--z", "1/2*e1 + e2"]);
    assert_eq!(v["results"]["satisfied"], false);
    assert_eq!(v["results"]["violations"][0]["argument"], 1);
}

#[test]
fn transitions_explore_and_check() {
    let v = json(&["transitions", PA, S2]);
    assert_eq!(v["results"]["transitions"]["a"].as_array().unwrap().len(), 1);
    let v = json(&["explore", PA, S1]);
    assert_eq!(v["results"]["states"].as_array().unwrap().len(), 3);
    assert_eq!(v["results"]["complete"], true);
    let v = json(&["check", EXAMPLES]);
    assert_eq!(v["results"]["operators"]["repl"]["arity"], 1);
}

#[test]
fn oracle_is_sound_and_deterministic() {
    let a = pgsos(&["oracle", PA, "--samples", "20", "--seed", "3", "--json"]);
    let b = pgsos(&["oracle", PA, "--samples", "20", "--seed", "3", "--json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["results"]["violations"], 0);
}

#[test]
fn exit_codes() {
    assert_eq!(pgsos(&["distance", PA, "zero"]).status.code(), Some(2));
    assert_eq!(pgsos(&["distance", PA, "zero", "nope"]).status.code(), Some(2));
    assert_eq!(pgsos(&["distance", PA, "x", "zero"]).status.code(), Some(2));
    assert_eq!(pgsos(&["check", "/nonexistent.pgsos"]).status.code(), Some(2));
    assert_eq!(pgsos(&["bound", PA, "par(x, x)", "--dist", "x=1"]).status.code(), Some(2));
    assert_eq!(pgsos(&["continuity", PA, "nope"]).status.code(), Some(2));

    let o = pgsos(&["explore", EXAMPLES, "repl(pref_a(zero))", "--max-states", "5", "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["flags"]["truncated"], true);
    let o = pgsos(&["denote", EXAMPLES, "x", "--max-iter", "10"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn spec_digest_tracks_the_file() {
    let a = json(&["check", PA]);
    let b = json(&["check", EXAMPLES]);
    assert_ne!(a["spec_digest"], b["spec_digest"]);
    assert_eq!(a["spec_digest"].as_str().unwrap().len(), 64);
}
