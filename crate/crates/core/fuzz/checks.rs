//! Properties shared by the fuzz targets and by the corpus replay test in
//! `tests/fuzz_corpus.rs`. Each function panics when the property fails.

#![allow(dead_code)]

use agentree_core::code_analysis::python::{parse_module, unparse_module};
use agentree_core::code_analysis::{extract_packages, normalize};
use agentree_core::formats::{parse_matrix, write_matrix};
use agentree_core::journal::{parse_journal, to_journal_bytes};

/// Anything accepted must survive a write/parse cycle unchanged.
pub fn journal(data: &[u8]) {
    if let Ok(run) = parse_journal(data) {
        let again = parse_journal(&to_journal_bytes(&run)).expect("written journal must parse");
        assert_eq!(run, again);
    }
}

/// Printed source re-parses, and printing is a fixpoint after one pass.
pub fn python(data: &[u8]) {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(module) = parse_module(src) {
        let printed = unparse_module(&module);
        let reparsed = parse_module(&printed).unwrap_or_else(|e| panic!("printed source fails: {e}\n{printed}"));
        assert_eq!(unparse_module(&reparsed), printed);
    }
}

/// Canonicalizing canonical source changes nothing.
pub fn normalized(data: &[u8]) {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(form) = normalize(src) {
        let again = normalize(&form.source).expect("canonical source must parse");
        assert_eq!(again, form);
    }
}

pub fn packages(data: &[u8]) {
    if let Ok(src) = std::str::from_utf8(data) {
        let _ = extract_packages(src);
    }
}

pub fn matrix(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok((n, values)) = parse_matrix(text) {
        let (m, again) = parse_matrix(&write_matrix(n, &values)).expect("written matrix must parse");
        assert_eq!(m, n);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&again), bits(&values));
    }
}
