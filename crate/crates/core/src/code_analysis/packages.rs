use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::python::ast::Stmt;
use super::python::parse_module;
use crate::journal::RunSet;

/// Import names found in one snippet.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct PackageSet {
    pub names: BTreeSet<String>,
    /// The snippet did not parse; `names` is empty.
    pub parse_failed: bool,
}

fn collect_imports(body: &[Stmt], out: &mut BTreeSet<String>) {
    for s in body {
        match s {
            Stmt::Import(names) => {
                out.extend(names.iter().map(|a| a.name.clone()));
            }
            Stmt::ImportFrom {
                module,
                names,
                level,
            } => {
                let base = format!("{}{}", ".".repeat(*level), module.as_deref().unwrap_or(""));
                for a in names {
                    if a.name == "*" {
                        out.insert(base.clone());
                    } else if base.ends_with('.') {
                        out.insert(format!("{base}{}", a.name));
                    } else {
                        out.insert(format!("{base}.{}", a.name));
                    }
                }
            }
            Stmt::If { body, orelse, .. }
            | Stmt::While { body, orelse, .. }
            | Stmt::For { body, orelse, .. } => {
                collect_imports(body, out);
                collect_imports(orelse, out);
            }
            Stmt::With { body, .. } => collect_imports(body, out),
            Stmt::Try {
                body,
                handlers,
                orelse,
                finalbody,
                ..
            } => {
                collect_imports(body, out);
                for h in handlers {
                    collect_imports(&h.body, out);
                }
                collect_imports(orelse, out);
                collect_imports(finalbody, out);
            }
            Stmt::FunctionDef(f) => collect_imports(&f.body, out),
            Stmt::ClassDef(c) => collect_imports(&c.body, out),
            _ => {}
        }
    }
}

/// `import X` / `import X as Y` contribute `X`; `from X import Z`
/// contributes `X.Z` (`X` for a star import). Imports nested in blocks
/// count too.
pub fn extract_packages(code: &str) -> PackageSet {
    match parse_module(code) {
        Ok(m) => {
            let mut names = BTreeSet::new();
            collect_imports(&m.body, &mut names);
            PackageSet {
                names,
                parse_failed: false,
            }
        }
        Err(e) => {
            tracing::warn!("package extraction skipped unparsable code: {e}");
            PackageSet {
                names: BTreeSet::new(),
                parse_failed: true,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct PackageCell {
    pub use_count: usize,
    pub buggy_count: usize,
}

impl PackageCell {
    /// Share of importing nodes that were buggy; `None` when unused.
    pub fn buggy_ratio(&self) -> Option<f64> {
        (self.use_count > 0).then(|| self.buggy_count as f64 / self.use_count as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PackageRow {
    pub package: String,
    /// Aligned with [`PackageUsageTable::llms`].
    pub cells: Vec<PackageCell>,
}

impl PackageRow {
    pub fn total(&self) -> PackageCell {
        self.cells.iter().fold(PackageCell::default(), |acc, c| PackageCell {
            use_count: acc.use_count + c.use_count,
            buggy_count: acc.buggy_count + c.buggy_count,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct PackageUsageTable {
    pub llms: Vec<String>,
    /// Sorted by package name.
    pub rows: Vec<PackageRow>,
    /// Nodes whose code failed to parse and contributed nothing.
    pub unparsable_nodes: usize,
}

impl PackageUsageTable {
    pub fn cell(&self, package: &str, llm: &str) -> Option<PackageCell> {
        let col = self.llms.iter().position(|l| l == llm)?;
        let row = self.rows.iter().find(|r| r.package == package)?;
        Some(row.cells[col])
    }

    /// Rows in decreasing use count for one LLM column, ties by name.
    pub fn sorted_by_llm(&self, llm: &str) -> Option<Vec<&PackageRow>> {
        let col = self.llms.iter().position(|l| l == llm)?;
        let mut rows: Vec<&PackageRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| {
            b.cells[col]
                .use_count
                .cmp(&a.cells[col].use_count)
                .then_with(|| a.package.cmp(&b.package))
        });
        Some(rows)
    }
}

/// Counts, per package and LLM, the nodes importing it and how many of
/// those were buggy.
pub fn package_table(runsets: &[RunSet]) -> PackageUsageTable {
    let mut llms: Vec<String> = runsets.iter().map(|r| r.llm_id().to_string()).collect();
    llms.sort();
    llms.dedup();
    let mut counts: BTreeMap<String, Vec<PackageCell>> = BTreeMap::new();
    let mut unparsable_nodes = 0;
    for rs in runsets {
        let col = llms.binary_search_by(|l| l.as_str().cmp(rs.llm_id())).expect("collected");
        for run in rs.runs() {
            for node in run.nodes() {
                let pkgs = extract_packages(&node.code);
                if pkgs.parse_failed {
                    unparsable_nodes += 1;
                }
                for name in pkgs.names {
                    let cells = counts
                        .entry(name)
                        .or_insert_with(|| vec![PackageCell::default(); llms.len()]);
                    cells[col].use_count += 1;
                    if node.is_buggy() {
                        cells[col].buggy_count += 1;
                    }
                }
            }
        }
    }
    PackageUsageTable {
        llms,
        rows: counts
            .into_iter()
            .map(|(package, cells)| PackageRow { package, cells })
            .collect(),
        unparsable_nodes,
    }
}
