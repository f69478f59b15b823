//! Command-line entry point: `simulate` writes trajectories, sample sets,
//! or tree dumps (CSV or JSON, stdout or file) and prints the resolved
//! regime classification to stderr; `verify` runs named acceptance checks
//! and writes their MCReport records as a JSON array.
//!
//! Option precedence: command-line flags > JSON config file (`--config`)
//! > defaults. The seed falls back to the REINFORCE_WALK_SEED environment
//! variable before its default. Exit codes: 0 success (and all checks
//! passed), 1 I/O failure or failed checks, 2 bad arguments.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{default_threads, par_map_replicas, replica_rng};
use crate::srs::{self, SrsConfig, SrsMethod};
use crate::theory::{self, Model};
use crate::verify::{self, CheckCtx};
use crate::walk::{self, StepSource, UpdateRule, WalkConfig};
use crate::patree;

pub const SEED_ENV_VAR: &str = "REINFORCE_WALK_SEED";

#[derive(Parser, Debug)]
#[command(name = "reinforce-walk", version, about = "Simulate and verify memory-reinforced random walks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run simulations and export trajectories, samples, or trees.
    Simulate {
        #[command(subcommand)]
        target: SimulateTarget,
    },
    /// Run a named verification check (or "all") and write MCReport JSON.
    Verify {
        /// Check name; `all` runs every registered check.
        check: String,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Subcommand, Debug)]
enum SimulateTarget {
    /// Reinforced elephant random walk trajectories.
    Erw {
        /// Which reinforcement rule: `reinforced` or `strong`.
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        replicas: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Strongly reinforced shark random swim endpoint samples.
    Srs {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        /// Simulation route: `direct` or `clusters`.
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        replicas: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// One percolated preferential attachment tree.
    Tree {
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        /// Write per-node rows (node, parent, cut, cluster) instead of the
        /// per-cluster summary.
        #[arg(long)]
        dump: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// RNG seed; falls back to REINFORCE_WALK_SEED, then 7.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: `csv` or `json`.
    #[arg(long)]
    format: Option<String>,
    /// Replica-level worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// JSON config schema mirroring the run configuration. Unknown keys are
/// rejected. `n_grid`/`t_grid` are accepted and validated for forward
/// compatibility with grid-style runs; `simulate` itself consumes `n`.
#[derive(Deserialize, Debug, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<String>,
    pub method: Option<String>,
    pub b: Option<f64>,
    pub p: Option<f64>,
    pub alpha: Option<f64>,
    pub dim: Option<usize>,
    pub n: Option<usize>,
    pub n_grid: Option<Vec<usize>>,
    pub t_grid: Option<Vec<f64>>,
    pub replicas: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub threads: Option<usize>,
    pub dump: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum OutputFormat {
    Csv,
    Json,
}

/// Runs the CLI and returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Io(_) => 1,
                _ => 2,
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate { target } => cmd_simulate(target),
        Command::Verify { check, common } => cmd_verify(&check, &common),
    }
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::usage(format!("bad config file {}: {e}", p.display())))
        }
    }
}

fn validate_grids(config: &FileConfig) -> Result<()> {
    if let Some(grid) = &config.n_grid {
        if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] == 0 {
            return Err(Error::parameter("n_grid must be strictly increasing and positive"));
        }
    }
    if let Some(grid) = &config.t_grid {
        if grid.is_empty() || grid[0] <= 0.0 || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::parameter("t_grid must be strictly increasing and positive"));
        }
    }
    Ok(())
}

fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag.or(file) {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(text) => text
            .parse()
            .map_err(|_| Error::usage(format!("{SEED_ENV_VAR} must be an integer, got `{text}`"))),
        Err(_) => Ok(verify::DEFAULT_SEED),
    }
}

fn resolve_format(flag: Option<&str>, file: Option<&str>) -> Result<OutputFormat> {
    match flag.or(file).unwrap_or("csv") {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => Err(Error::usage(format!("unknown format `{other}` (expected csv or json)"))),
    }
}

struct Resolved {
    seed: u64,
    threads: usize,
    format: OutputFormat,
    out: Option<PathBuf>,
}

fn resolve_common(common: &CommonArgs) -> Result<(Resolved, FileConfig)> {
    let file = load_config(common.config.as_deref())?;
    validate_grids(&file)?;
    let resolved = Resolved {
        seed: resolve_seed(common.seed, file.seed)?,
        threads: common.threads.or(file.threads).unwrap_or_else(default_threads),
        format: resolve_format(common.format.as_deref(), file.format.as_deref())?,
        out: common.out.clone().or_else(|| file.out.clone()),
    };
    Ok((resolved, file))
}

fn writer_for(out: Option<&Path>) -> Result<Box<dyn Write>> {
    match out {
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
        Some(path) => Ok(Box::new(BufWriter::new(fs::File::create(path)?))),
    }
}

fn print_regime(report: &theory::RegimeReport) {
    eprintln!(
        "regime: {}",
        serde_json::to_string(report).expect("regime report serializes")
    );
}

// ---- simulate ----------------------------------------------------------

#[derive(Serialize)]
struct TrajectoryRecord {
    replica: usize,
    positions: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct SampleRecord {
    replica: usize,
    s: Vec<f64>,
}

#[derive(Serialize)]
struct NodeRecord {
    node: usize,
    parent: usize,
    cut: bool,
    cluster: usize,
}

#[derive(Serialize)]
struct ClusterRecord {
    cluster: usize,
    root: usize,
    size: u32,
    half_edges: u32,
}

fn cmd_simulate(target: SimulateTarget) -> Result<i32> {
    match target {
        SimulateTarget::Erw { model, b, p, n, replicas, common } => {
            let (resolved, file) = resolve_common(&common)?;
            let model_name = model.or(file.model).unwrap_or_else(|| "strong".into());
            let (theory_model, rule) = match model_name.as_str() {
                "reinforced" => (Model::Erw1, UpdateRule::OnMemoryOnly),
                "strong" => (Model::Erw2, UpdateRule::Always),
                other => {
                    return Err(Error::usage(format!(
                        "unknown model `{other}` (expected reinforced or strong)"
                    )))
                }
            };
            let b = b.or(file.b).unwrap_or(0.0);
            let p = p.or(file.p).unwrap_or(0.5);
            let n = n.or(file.n).ok_or_else(|| Error::usage("--n is required"))?;
            let replicas = replicas.or(file.replicas).unwrap_or(1).max(1);
            let config = WalkConfig::new(p, b, rule, StepSource::Rademacher)?;
            print_regime(&theory::regime(theory_model, b, p, None)?);

            let trajectories = par_map_replicas(replicas, resolved.threads, |r| {
                walk::run(&config, n, &mut replica_rng(resolved.seed, r as u64))
            });
            let mut w = writer_for(resolved.out.as_deref())?;
            match resolved.format {
                OutputFormat::Csv => {
                    writeln!(w, "replica,k,s1")?;
                    for (r, t) in trajectories.iter().enumerate() {
                        for k in 0..=t.n() {
                            writeln!(w, "{r},{k},{}", t.position(k)[0])?;
                        }
                    }
                }
                OutputFormat::Json => {
                    let records: Vec<TrajectoryRecord> = trajectories
                        .iter()
                        .enumerate()
                        .map(|(r, t)| TrajectoryRecord {
                            replica: r,
                            positions: (0..=t.n()).map(|k| t.position(k).to_vec()).collect(),
                        })
                        .collect();
                    serde_json::to_writer(&mut w, &records)
                        .map_err(|e| Error::Io(io::Error::other(e)))?;
                    writeln!(w)?;
                }
            }
            w.flush()?;
            Ok(0)
        }
        SimulateTarget::Srs { alpha, dim, b, p, n, method, replicas, common } => {
            let (resolved, file) = resolve_common(&common)?;
            let alpha = alpha.or(file.alpha).unwrap_or(2.0);
            let dim = dim.or(file.dim).unwrap_or(1);
            let b = b.or(file.b).unwrap_or(0.0);
            let p = p.or(file.p).unwrap_or(0.5);
            let n = n.or(file.n).ok_or_else(|| Error::usage("--n is required"))?;
            let replicas = replicas.or(file.replicas).unwrap_or(1).max(1);
            let method = match method.or(file.method).unwrap_or_else(|| "direct".into()).as_str() {
                "direct" => SrsMethod::Direct,
                "clusters" => SrsMethod::Clusters,
                other => {
                    return Err(Error::usage(format!(
                        "unknown method `{other}` (expected direct or clusters)"
                    )))
                }
            };
            let config = SrsConfig::new(alpha, dim, b, p, n, replicas, resolved.seed)?;
            print_regime(&config.regime_report()?);

            let samples = par_map_replicas(replicas, resolved.threads, |r| {
                let mut rng = replica_rng(resolved.seed, r as u64);
                srs::simulate_srs(&config, &mut rng, method).expect("validated config")
            });
            let mut w = writer_for(resolved.out.as_deref())?;
            match resolved.format {
                OutputFormat::Csv => {
                    let header: Vec<String> = (1..=dim).map(|d| format!("s{d}")).collect();
                    writeln!(w, "replica,{}", header.join(","))?;
                    for (r, s) in samples.iter().enumerate() {
                        let row: Vec<String> = s.iter().map(f64::to_string).collect();
                        writeln!(w, "{r},{}", row.join(","))?;
                    }
                }
                OutputFormat::Json => {
                    let records: Vec<SampleRecord> = samples
                        .into_iter()
                        .enumerate()
                        .map(|(replica, s)| SampleRecord { replica, s })
                        .collect();
                    serde_json::to_writer(&mut w, &records)
                        .map_err(|e| Error::Io(io::Error::other(e)))?;
                    writeln!(w)?;
                }
            }
            w.flush()?;
            Ok(0)
        }
        SimulateTarget::Tree { b, p, n, dump, common } => {
            let (resolved, file) = resolve_common(&common)?;
            let b = b.or(file.b).unwrap_or(0.0);
            let p = p.or(file.p).unwrap_or(0.5);
            let n = n.or(file.n).ok_or_else(|| Error::usage("--n is required"))?;
            let dump = dump || file.dump.unwrap_or(false);
            theory::validate_bp(b, p)?;
            let mut rng = replica_rng(resolved.seed, 0);
            let tree = patree::grow_discrete(n, b, &mut rng)?;
            let forest = patree::percolate(tree, p, &mut rng)?;
            eprintln!(
                "tree: {{\"kappa\":{},\"clusters\":{},\"expected_clusters\":{}}}",
                theory::kappa(Model::Srs, b, p),
                forest.cluster_count(),
                1.0 + (n as f64 - 1.0) * (1.0 - p)
            );
            let mut w = writer_for(resolved.out.as_deref())?;
            match (resolved.format, dump) {
                (OutputFormat::Csv, true) => {
                    writeln!(w, "node,parent,cut,cluster")?;
                    for (node, parent, cut, cluster) in forest.dump_rows() {
                        writeln!(w, "{node},{parent},{},{cluster}", u8::from(cut))?;
                    }
                }
                (OutputFormat::Csv, false) => {
                    writeln!(w, "cluster,root,size,half_edges")?;
                    for (idx, c) in forest.clusters().iter().enumerate() {
                        writeln!(w, "{idx},{},{},{}", c.root, c.size, c.half_edges)?;
                    }
                }
                (OutputFormat::Json, true) => {
                    let records: Vec<NodeRecord> = forest
                        .dump_rows()
                        .map(|(node, parent, cut, cluster)| NodeRecord {
                            node,
                            parent,
                            cut,
                            cluster,
                        })
                        .collect();
                    serde_json::to_writer(&mut w, &records)
                        .map_err(|e| Error::Io(io::Error::other(e)))?;
                    writeln!(w)?;
                }
                (OutputFormat::Json, false) => {
                    let records: Vec<ClusterRecord> = forest
                        .clusters()
                        .iter()
                        .enumerate()
                        .map(|(idx, c)| ClusterRecord {
                            cluster: idx,
                            root: c.root as usize,
                            size: c.size,
                            half_edges: c.half_edges,
                        })
                        .collect();
                    serde_json::to_writer(&mut w, &records)
                        .map_err(|e| Error::Io(io::Error::other(e)))?;
                    writeln!(w)?;
                }
            }
            w.flush()?;
            Ok(0)
        }
    }
}

// ---- verify ------------------------------------------------------------

fn cmd_verify(check: &str, common: &CommonArgs) -> Result<i32> {
    let (resolved, _) = resolve_common(common)?;
    let ctx = CheckCtx { seed: resolved.seed, threads: resolved.threads };
    let reports = if check == "all" {
        verify::run_all(&ctx)?
    } else {
        verify::run_check(check, &ctx)?
    };
    for report in &reports {
        eprintln!("{}", verify::format_report_line(report));
    }
    let mut w = writer_for(resolved.out.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &reports).map_err(|e| Error::Io(io::Error::other(e)))?;
    writeln!(w)?;
    w.flush()?;
    Ok(if reports.iter().all(|r| r.pass) { 0 } else { 1 })
}
