//! Command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};

use agentree_core::code_analysis::{line_diff, package_table, similarity_matrix, DiffTag, PackageUsageTable};
use agentree_core::formats::write_matrix;
use agentree_core::journal::{group_runsets, parse_journal, to_journal_bytes, MetricDirection, SolutionRun};
use agentree_core::simulator::{simulate_run, CodeGenerator, FixtureGenerator, GrammarGenerator, ImproveRule, PolicyConfig};
use agentree_core::tree_analytics::{distance_matrix, flat_clusters, hierarchical_cluster, run_distance};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis;
use crate::workspace::Workspace;

#[derive(Parser, Debug)]
#[command(name = "agentree", version, about = "Analyze tree-based coding-agent journals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorKind {
    Fixture,
    Grammar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum What {
    Sim,
    Dist,
    Packages,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Csv,
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    LowerBetter,
    HigherBetter,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Copy journals into a workspace.
    Ingest {
        #[arg(long, default_value = "workspace")]
        workspace: PathBuf,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Simulate one run of the coding policy and write its journal.
    Simulate {
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        m: usize,
        #[arg(long, default_value_t = 0.5)]
        p_debug: f64,
        #[arg(long, default_value_t = 3)]
        debug_depth: usize,
        #[arg(long, default_value = "greedy")]
        improve_rule: String,
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = GeneratorKind::Grammar)]
        generator: GeneratorKind,
        #[arg(long, default_value = "sim")]
        llm: String,
        #[arg(long, value_enum, default_value_t = Direction::LowerBetter)]
        direction: Direction,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print an analysis of an ingested run as JSON.
    Analyze {
        #[arg(long, default_value = "workspace")]
        workspace: PathBuf,
        #[arg(long)]
        run: String,
        #[arg(long, value_enum)]
        what: What,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        #[arg(long, default_value = "workspace")]
        workspace: PathBuf,
    },
    /// Export a similarity matrix (`--run`), distance matrix (`--llm`) or the
    /// package table.
    Export {
        #[arg(long, default_value = "workspace")]
        workspace: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        #[arg(long, value_enum)]
        what: What,
        #[arg(long)]
        run: Option<String>,
        #[arg(long)]
        llm: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Line diff between two nodes of a journal.
    Diff {
        journal: PathBuf,
        #[arg(long)]
        a: usize,
        #[arg(long)]
        b: usize,
    },
    /// Write a run's function-similarity matrix.
    Simmatrix {
        journal: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the package-usage table of some journals as JSON.
    Packages {
        #[arg(required = true)]
        journals: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tree edit distance between two journals' merged trees.
    Treedist { a: PathBuf, b: PathBuf },
    /// Cluster one llm's runs from a directory of journals.
    Cluster {
        dir: PathBuf,
        #[arg(long)]
        llm: String,
        #[arg(long)]
        clusters: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_journal(path: &Path) -> Result<SolutionRun> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_journal(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn json_pretty<T: serde::Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

pub fn package_csv(table: &PackageUsageTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["package", "llm_id", "use_count", "buggy_count"])?;
    for row in &table.rows {
        for (llm, cell) in table.llms.iter().zip(&row.cells) {
            w.write_record([
                row.package.as_str(),
                llm.as_str(),
                &cell.use_count.to_string(),
                &cell.buggy_count.to_string(),
            ])?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Long-form CSV (`i,j,value`) of a square matrix.
pub fn matrix_csv(n: usize, values: &[f64]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["i", "j", "value"])?;
    for i in 0..n {
        for j in 0..n {
            w.write_record([i.to_string(), j.to_string(), format!("{:?}", values[i * n + j])])?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[allow(clippy::too_many_arguments)]
pub fn policy_from_args(
    n: usize,
    m: usize,
    p_debug: f64,
    debug_depth: usize,
    improve_rule: &str,
    temperature: f64,
    seed: u64,
    llm: &str,
    direction: Direction,
) -> Result<PolicyConfig> {
    let improve_rule: ImproveRule = improve_rule.parse().map_err(anyhow::Error::msg)?;
    Ok(PolicyConfig {
        n_steps: n,
        n_drafts: m,
        p_debug,
        debug_max_depth: debug_depth,
        improve_rule,
        softmax_temperature: temperature,
        seed,
        metric_direction: match direction {
            Direction::LowerBetter => MetricDirection::LowerBetter,
            Direction::HigherBetter => MetricDirection::HigherBetter,
        },
        llm_id: llm.to_string(),
    })
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { workspace, files } => {
            let ws = Workspace::open(&workspace)?;
            let mut failed = 0;
            for f in &files {
                match ws.ingest_path(f) {
                    Ok(o) => println!("{}\t{}", o.run_id, serde_json::to_value(&o.status)?.as_str().unwrap_or("")),
                    Err(e) => {
                        eprintln!("{}: {e}", f.display());
                        failed += 1;
                    }
                }
            }
            if failed > 0 {
                bail!("{failed} of {} journals failed to ingest", files.len());
            }
        }
        Command::Simulate {
            n,
            m,
            p_debug,
            debug_depth,
            improve_rule,
            temperature,
            seed,
            generator,
            llm,
            direction,
            out,
        } => {
            let cfg = policy_from_args(n, m, p_debug, debug_depth, &improve_rule, temperature, seed, &llm, direction)?;
            let gen: Box<dyn CodeGenerator> = match generator {
                GeneratorKind::Fixture => Box::new(FixtureGenerator::default()),
                GeneratorKind::Grammar => Box::new(GrammarGenerator::default()),
            };
            let run = simulate_run(&cfg, gen)?;
            std::fs::write(&out, to_journal_bytes(&run)).with_context(|| format!("writing {}", out.display()))?;
            println!("{}", run.run_id());
        }
        Command::Analyze { workspace, run, what } => {
            let snap = Workspace::open(&workspace)?.snapshot();
            let text = match what {
                What::Sim => json_pretty(&analysis::similarity(&snap, &run)?)?,
                What::Dist => {
                    let llm = snap
                        .run(&run)
                        .map(|e| e.run.llm_id().to_string())
                        .ok_or_else(|| analysis::AnalysisError::UnknownRun(run.clone()))?;
                    json_pretty(&analysis::distance(&snap, &llm)?)?
                }
                What::Packages => json_pretty(&analysis::packages(&snap))?,
            };
            write_out(None, &text)?;
        }
        Command::Serve { bind, workspace } => {
            let ws = Workspace::open(&workspace)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::serve(ws, &bind))?;
        }
        Command::Export {
            workspace,
            format,
            what,
            run,
            llm,
            out,
        } => {
            let snap = Workspace::open(&workspace)?.snapshot();
            let (n, values) = match what {
                What::Sim => {
                    let Some(run) = run else { bail!("--what sim needs --run") };
                    let m = analysis::similarity(&snap, &run)?.matrix;
                    (m.n, m.values)
                }
                What::Dist => {
                    let Some(llm) = llm else { bail!("--what dist needs --llm") };
                    let m = analysis::distance(&snap, &llm)?.matrix;
                    (m.k, m.values)
                }
                What::Packages => {
                    let table = analysis::packages(&snap);
                    let text = match format {
                        ExportFormat::Csv => package_csv(&table)?,
                        ExportFormat::Matrix => bail!("the package table has no matrix form; use --format csv"),
                    };
                    return write_out(out.as_deref(), &text);
                }
            };
            let text = match format {
                ExportFormat::Csv => matrix_csv(n, &values)?,
                ExportFormat::Matrix => write_matrix(n, &values),
            };
            write_out(out.as_deref(), &text)?;
        }
        Command::Diff { journal, a, b } => {
            let run = read_journal(&journal)?;
            let code = |id: usize| {
                run.node(id)
                    .map(|n| n.code.as_str())
                    .with_context(|| format!("no node {id}"))
            };
            let diff = line_diff(code(a)?, code(b)?);
            let mut text = String::new();
            for l in &diff.lines {
                let mark = match l.tag {
                    DiffTag::Shared => ' ',
                    DiffTag::Removed => '-',
                    DiffTag::Added => '+',
                };
                text.push(mark);
                text.push_str(&l.line);
                text.push('\n');
            }
            write_out(None, &text)?;
        }
        Command::Simmatrix { journal, out } => {
            let m = similarity_matrix(&read_journal(&journal)?);
            write_out(Some(&out), &write_matrix(m.n, &m.values))?;
        }
        Command::Packages { journals, out } => {
            let runs = journals.iter().map(|p| read_journal(p)).collect::<Result<Vec<_>>>()?;
            let table = package_table(&group_runsets(runs));
            write_out(Some(&out), &json_pretty(&table)?)?;
        }
        Command::Treedist { a, b } => {
            println!("{}", run_distance(&read_journal(&a)?, &read_journal(&b)?));
        }
        Command::Cluster {
            dir,
            llm,
            clusters,
            out,
        } => {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
                .with_context(|| format!("reading {}", dir.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            let runs = paths.iter().map(|p| read_journal(p)).collect::<Result<Vec<_>>>()?;
            let rs = group_runsets(runs)
                .into_iter()
                .find(|rs| rs.llm_id() == llm)
                .with_context(|| format!("no runs for llm {llm:?} in {}", dir.display()))?;
            let dend = hierarchical_cluster(&distance_matrix(&rs));
            let labels = flat_clusters(&dend, clusters)?;
            let resp = analysis::DendrogramResponse {
                llm_id: llm,
                run_ids: rs.runs().iter().map(|r| r.run_id().to_string()).collect(),
                dendrogram: dend,
                clusters: Some(labels),
            };
            write_out(Some(&out), &json_pretty(&resp)?)?;
        }
    }
    Ok(())
}
