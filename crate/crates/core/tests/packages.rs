mod common;
mod oracles;

use agentree_core::code_analysis::{extract_packages, package_table, PackageCell};
use agentree_core::journal::group_runsets;
use common::{check_tally, corpus_runs, json_fixture, Snippet, Tally};

#[test]
fn corpus_table_matches_tally() {
    let corpus: Vec<Snippet> = json_fixture("packages_corpus.json");
    let expected: Tally = json_fixture("packages_expected.json");
    assert_eq!(corpus.len(), 30);
    assert_eq!(expected.rows.len(), 8);
    let table = package_table(&group_runsets(corpus_runs(&corpus)));
    assert_eq!(table.unparsable_nodes, 0);
    check_tally(&table, &expected).unwrap();
}

#[test]
fn always_failing_package_has_ratio_one() {
    let corpus: Vec<Snippet> = json_fixture("packages_corpus.json");
    let table = package_table(&group_runsets(corpus_runs(&corpus)));
    let row = table.rows.iter().find(|r| r.package == "lightgbm").unwrap();
    assert!(row.total().use_count > 0);
    assert_eq!(row.total().buggy_ratio(), Some(1.0));
    for c in &row.cells {
        assert!(c.use_count == 0 || c.buggy_ratio() == Some(1.0));
    }
    assert_eq!(PackageCell::default().buggy_ratio(), None);
}

#[test]
fn nested_and_aliased_imports_are_found() {
    let names = extract_packages("import numpy as np\nif True:\n    from sklearn.linear_model import Ridge\n").names;
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    assert_eq!(names, ["numpy", "sklearn.linear_model.Ridge"]);
    assert!(extract_packages("x = 1\n").names.is_empty());
}
