//! Specifications shipped with the crate.

use crate::spec::{parse_spec, SpecDocument};

/// The core probabilistic process algebra.
pub const PA_SPEC: &str = include_str!("../specs/pa.pgsos");

/// Copying, reactive testing and replication operators.
pub const EXAMPLES_SPEC: &str = include_str!("../specs/examples.pgsos");

pub fn pa() -> SpecDocument {
    parse_spec(PA_SPEC).expect("shipped specification parses")
}

pub fn examples() -> SpecDocument {
    parse_spec(EXAMPLES_SPEC).expect("shipped specification parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::printer::print_spec;

    #[test]
    fn shipped_specs_round_trip() {
        for doc in [pa(), examples()] {
            assert_eq!(parse_spec(&print_spec(&doc)).unwrap(), doc);
        }
    }

    #[test]
    fn pa_rule_families() {
        let doc = pa();
        let count = |prefix: &str| doc.rules.iter().filter(|r| r.name.starts_with(prefix)).count();
        assert_eq!(count("choice_left["), 2);
        assert_eq!(count("par["), 2);
        assert_eq!(count("par_B_sync["), 1);
        assert_eq!(count("par_B_left["), 1);
        assert_eq!(doc.rules.iter().find(|r| &*r.name == "par_B_left[b]").unwrap().action.as_ref(), "b");
    }
}
