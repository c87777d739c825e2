use clap::{Parser, Subcommand};
use pgsos_core::continuity::{check_modulus, is_uniformly_continuous, parse_modulus, ContinuityError, Verdict};
use pgsos_core::denotation::{DenotationError, Denotations, FixpointConfig};
use pgsos_core::metric::{distance, LfpMode, MetricError};
use pgsos_core::multiplicity::{sup_of, weighting, MultiplicityError, ProcessDistance};
use pgsos_core::oracle::{oracle_compare, OracleConfig, OracleError};
use pgsos_core::rational::fmt_rational;
use pgsos_core::report::{self, ReportDocument};
use pgsos_core::semantics::{derive_transitions, explore_fragment, ExploreError, Limits, SemanticsError};
use pgsos_core::spec::parser::parse_spec_with_warnings;
use pgsos_core::{SpecDocument, SpecError, StateTerm};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "pgsos",
    version,
    about = "Bisimulation distances and compositionality for probabilistic GSOS specifications"
)]
struct Cli {
    /// Emit the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// State budget when exploring reachable fragments.
    #[arg(long, global = true, value_name = "N")]
    max_states: Option<usize>,
    /// Iteration budget for distance and denotation fixed points.
    #[arg(long, global = true, value_name = "N")]
    max_iter: Option<usize>,
    /// Seed for the random oracle.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a specification.
    Check { spec: PathBuf },
    /// One-step transitions of a closed term.
    Transitions { spec: PathBuf, term: String },
    /// Reachable fragment of a closed term.
    Explore { spec: PathBuf, term: String },
    /// Bisimulation distance between two closed terms.
    Distance {
        spec: PathBuf,
        left: String,
        right: String,
        /// Stop after K steps and report a lower bound.
        #[arg(long, value_name = "K")]
        iterate: Option<usize>,
    },
    /// Copy-count denotation of an open term.
    Denote { spec: PathBuf, term: String },
    /// Distance bound for instances of a term at the given variable distances.
    Bound {
        spec: PathBuf,
        term: String,
        #[arg(long, value_name = "x=1/10,y=1/5", default_value = "")]
        dist: String,
    },
    /// Uniform continuity verdicts and moduli.
    Continuity { spec: PathBuf, op: Option<String> },
    /// Check a candidate modulus for an operator.
    CheckModulus {
        spec: PathBuf,
        op: String,
        #[arg(long, value_name = "MODULUS")]
        z: String,
    },
    /// Compare exact distances against denotational bounds on random samples.
    Oracle {
        spec: PathBuf,
        /// Fix the open term instead of drawing one per sample.
        term: Option<String>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
}

enum Failure {
    /// Bad input: exit code 2.
    Usage(String),
    /// The analysis declined to answer: exit code 1, with a partial report when there is one.
    Refused(String, Option<Box<ReportDocument>>),
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<MultiplicityError> for Failure {
    fn from(e: MultiplicityError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<SemanticsError> for Failure {
    fn from(e: SemanticsError) -> Self {
        match e {
            SemanticsError::Instantiation { .. } => Failure::Refused(e.to_string(), None),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<ExploreError> for Failure {
    fn from(e: ExploreError) -> Self {
        match e {
            ExploreError::Semantics(s) => s.into(),
            other => Failure::Refused(other.to_string(), None),
        }
    }
}

impl From<MetricError> for Failure {
    fn from(e: MetricError) -> Self {
        Failure::Refused(e.to_string(), None)
    }
}

impl From<DenotationError> for Failure {
    fn from(e: DenotationError) -> Self {
        match e {
            DenotationError::IterationLimitExceeded { .. } => Failure::Refused(e.to_string(), None),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<ContinuityError> for Failure {
    fn from(e: ContinuityError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Denotation(d) => d.into(),
            OracleError::Metric(m) => m.into(),
            OracleError::Explore(x) => x.into(),
            OracleError::NoOperators => Failure::Usage(e.to_string()),
            OracleError::AllSamplesSkipped(_) => Failure::Refused(e.to_string(), None),
        }
    }
}

struct Context {
    text: String,
    doc: SpecDocument,
    limits: Limits,
    fixpoint: FixpointConfig,
    lfp: LfpMode,
}

impl Context {
    fn load(cli: &Cli, path: &PathBuf) -> Result<(Self, Vec<String>), Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        let (doc, warnings) = parse_spec_with_warnings(&text)?;
        let mut limits = Limits::default();
        if let Some(n) = cli.max_states {
            limits.max_states = n;
        }
        let mut fixpoint = FixpointConfig::default();
        let mut lfp = LfpMode::default();
        if let Some(n) = cli.max_iter {
            fixpoint.max_iterations = n;
            fixpoint.widening_window = fixpoint.widening_window.min(n.saturating_sub(1));
            lfp = LfpMode::Exact { max_iter: n };
        }
        let warnings = warnings.iter().map(ToString::to_string).collect();
        Ok((Context { text, doc, limits, fixpoint, lfp }, warnings))
    }

    fn report(&self, command: &str, inputs: Value) -> ReportDocument {
        ReportDocument::new(&self.text, command, inputs)
    }

    fn closed(&self, text: &str) -> Result<StateTerm, Failure> {
        Ok(self.doc.parse_closed_term(text)?)
    }

    fn denotations(&self) -> Result<Denotations, Failure> {
        Ok(Denotations::compute(&self.doc, self.fixpoint)?)
    }
}

fn spec_path(cmd: &Command) -> &PathBuf {
    match cmd {
        Command::Check { spec }
        | Command::Transitions { spec, .. }
        | Command::Explore { spec, .. }
        | Command::Distance { spec, .. }
        | Command::Denote { spec, .. }
        | Command::Bound { spec, .. }
        | Command::Continuity { spec, .. }
        | Command::CheckModulus { spec, .. }
        | Command::Oracle { spec, .. } => spec,
    }
}

fn run(cli: &Cli) -> Result<ReportDocument, Failure> {
    let (ctx, warnings) = Context::load(cli, spec_path(&cli.command))?;
    match &cli.command {
        Command::Check { .. } => {
            let mut r = ctx.report("check", json!({}));
            let ops: serde_json::Map<String, Value> = ctx
                .doc
                .operators()
                .map(|(f, n)| (f.to_string(), json!({ "arity": n, "rules": ctx.doc.rule_indices(f).len() })))
                .collect();
            r.headline = format!(
                "ok: {} operators, {} rules, {} actions",
                ops.len(),
                ctx.doc.rules.len(),
                ctx.doc.actions().len()
            );
            r.results = json!({
                "actions": ctx.doc.actions().iter().map(ToString::to_string).collect::<Vec<_>>(),
                "operators": ops,
                "rules": ctx.doc.rules.len(),
                "warnings": warnings,
            });
            Ok(r)
        }
        Command::Transitions { term, .. } => {
            let t = ctx.closed(term)?;
            let tr = derive_transitions(&ctx.doc, &t)?;
            let mut r = ctx.report("transitions", json!({ "term": term }));
            let count: usize = tr.values().map(|s| s.len()).sum();
            r.headline = format!("{t}: {count} transition(s)");
            r.results = json!({ "term": t.to_string(), "transitions": report::transitions(&tr) });
            Ok(r)
        }
        Command::Explore { term, .. } => {
            let t = ctx.closed(term)?;
            let mut r = ctx.report("explore", json!({ "term": term, "max_states": ctx.limits.max_states }));
            match explore_fragment(&ctx.doc, &[t], ctx.limits) {
                Ok(frag) => {
                    r.headline = format!("{} states, {} transitions", frag.len(), frag.transition_count());
                    r.results = report::fragment(&frag);
                    Ok(r)
                }
                Err(e) => match e.partial_fragment() {
                    Some(frag) => {
                        r.headline = format!("truncated after {} states", frag.len());
                        r.results = report::fragment(frag);
                        r.flags.truncated = true;
                        Err(Failure::Refused(e.to_string(), Some(Box::new(r))))
                    }
                    None => Err(e.into()),
                },
            }
        }
        Command::Distance { left, right, iterate, .. } => {
            let (s, t) = (ctx.closed(left)?, ctx.closed(right)?);
            let frag = explore_fragment(&ctx.doc, &[s.clone(), t.clone()], ctx.limits)?;
            let mode = iterate.map(LfpMode::Iterate).unwrap_or(ctx.lfp);
            let (d, res) = distance(&frag, &s, &t, mode)?;
            let mut r = ctx.report("distance", json!({ "left": left, "right": right, "iterate": iterate }));
            r.headline = if res.converged {
                fmt_rational(&d)
            } else {
                format!("{} (lower bound after {} steps)", fmt_rational(&d), res.iterations)
            };
            r.results = json!({
                "distance": report::rational(&d),
                "iterations": res.iterations,
                "converged": res.converged,
                "lower_bound": !res.converged,
                "cyclic": res.cyclic,
                "states": frag.len(),
                "table": report::table(&res.table),
            });
            Ok(r)
        }
        Command::Denote { term, .. } => {
            let t = ctx.doc.parse_term(term)?;
            let den = ctx.denotations()?;
            let g = den.denote(&t)?;
            let (sup, approx) = sup_of(g.generators())?;
            let mut r = ctx.report("denote", json!({ "term": term }));
            r.headline = g.to_string();
            r.results = json!({
                "term": t.to_string(),
                "denotation": report::genset(&g),
                "weighting": report::weighting(&weighting(&sup)),
                "fixpoint_iterations": den.iterations,
                "fixpoint_status": den.status.to_string(),
            });
            r.flags.widened = den.is_widened_at(&t);
            r.flags.over_approximated = approx || !den.approximated().is_empty();
            Ok(r)
        }
        Command::Bound { term, dist, .. } => {
            let t = ctx.doc.parse_term(term)?;
            let e = ProcessDistance::parse(dist)?;
            let den = ctx.denotations()?;
            let g = den.denote(&t)?;
            let b = den.bound_distance(&t, &e)?;
            let mut r = ctx.report("bound", json!({ "term": term, "dist": report::process_distance(&e) }));
            r.headline = fmt_rational(&b);
            r.results = json!({ "bound": report::rational(&b), "denotation": report::genset(&g) });
            r.flags.widened = den.is_widened_at(&t);
            r.flags.over_approximated = !den.approximated().is_empty();
            Ok(r)
        }
        Command::Continuity { op, .. } => {
            let den = ctx.denotations()?;
            let ops: Vec<String> = match op {
                Some(f) => vec![f.clone()],
                None => den.operators().map(|(f, _)| f.to_string()).collect(),
            };
            let reports = ops.iter().map(|f| is_uniformly_continuous(&den, f)).collect::<Result<Vec<_>, _>>()?;
            let mut r = ctx.report("continuity", json!({ "operator": op }));
            r.headline = match reports.as_slice() {
                [one] => format!("{}: {}, z = {}", one.operator, one.verdict, one.modulus),
                many => {
                    let shown =
                        many.iter().filter(|c| matches!(c.verdict, Verdict::UniformlyContinuous { .. })).count();
                    format!("{shown} of {} operators uniformly continuous", many.len())
                }
            };
            r.flags.widened = reports.iter().any(|c| c.widened);
            r.flags.over_approximated = reports.iter().any(|c| c.over_approximated);
            r.results = json!({ "reports": reports.iter().map(report::continuity).collect::<Vec<_>>() });
            Ok(r)
        }
        Command::CheckModulus { op, z, .. } => {
            let den = ctx.denotations()?;
            let arity = den.arity(op).ok_or_else(|| ContinuityError::UnknownOperator(op.clone()))?;
            let modulus = parse_modulus(z, arity)?;
            let check = check_modulus(&den, op, &modulus)?;
            let mut r = ctx.report("check-modulus", json!({ "operator": op, "z": z }));
            r.headline = format!("{op}: {} {}", modulus, if check.satisfied { "holds" } else { "is not implied" });
            r.results = report::modulus_check(&check);
            r.flags.widened = den.widened_operators().contains(op.as_str());
            r.flags.over_approximated = !den.approximated().is_empty();
            Ok(r)
        }
        Command::Oracle { term, samples, .. } => {
            let fixed = term.as_deref().map(|t| ctx.doc.parse_term(t)).transpose()?;
            let mut cfg = OracleConfig {
                seed: cli.seed,
                samples: *samples,
                lfp: ctx.lfp,
                fixpoint: ctx.fixpoint,
                ..OracleConfig::default()
            };
            if let Some(n) = cli.max_states {
                cfg.limits.max_states = n;
            }
            let summary = oracle_compare(&ctx.doc, fixed.as_ref(), &cfg)?;
            let mut r = ctx.report("oracle", json!({ "term": term, "samples": samples, "seed": cli.seed }));
            let violations = summary.violations().len();
            r.headline = format!(
                "{} checked, {} skipped, {violations} violation(s), {} tight",
                summary.checked.len(),
                summary.skipped_total(),
                summary.tight()
            );
            r.results = report::oracle(&summary);
            if violations > 0 {
                return Err(Failure::Refused(format!("{violations} sample(s) exceed their bound"), Some(Box::new(r))));
            }
            Ok(r)
        }
    }
}

fn emit(r: &ReportDocument, json: bool) {
    if json {
        println!("{}", r.to_json());
    } else {
        print!("{}", r.to_human());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(r) => {
            emit(&r, cli.json);
            ExitCode::SUCCESS
        }
        Err(Failure::Refused(msg, partial)) => {
            if let Some(r) = partial {
                emit(&r, cli.json);
            }
            eprintln!("pgsos: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("pgsos: {msg}");
            ExitCode::from(2)
        }
    }
}
