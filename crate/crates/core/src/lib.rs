//! Bisimulation distances, copy-count denotations and continuity analysis
//! for probabilistic GSOS specifications.

pub mod continuity;
pub mod data;
pub mod denotation;
pub mod lp;
pub mod metric;
pub mod multiplicity;
pub mod oracle;
pub mod rational;
pub mod report;
pub mod semantics;
pub mod spec;
pub mod term;

pub use rational::{ExtRational, Rational};
pub use spec::{parse_spec, Rule, SpecDocument, SpecError};
pub use term::{DistTerm, FiniteDistribution, Name, StateTerm};
