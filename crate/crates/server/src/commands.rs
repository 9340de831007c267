//! Command-line entry points.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use hintwalk::bench::{self, Agent, BenchSummary};
use hintwalk::extraction::{extract, ExplorationBudget, StaticDescriptor, TargetConflict};
use hintwalk::format;
use hintwalk::merging::{merge_states_with, MergeConfig, MergeReport};
use hintwalk::planner::{plan_auto, PlanFile, PlannerConfig, DEFAULT_EXACT_LIMIT};
use hintwalk::sim::AppModel;
use serde::Serialize;

use crate::config::ServerConfig;
use crate::state::{spawn_sweeper, AppState};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Extraction(#[from] hintwalk::extraction::ExtractionError),
    #[error(transparent)]
    Format(#[from] hintwalk::format::FormatError),
    #[error(transparent)]
    Model(#[from] hintwalk::sim::AppModelError),
    #[error(transparent)]
    Graph(#[from] hintwalk::stg::GraphError),
    #[error(transparent)]
    Plan(#[from] hintwalk::planner::PlanError),
    #[error(transparent)]
    Merge(#[from] hintwalk::merging::MergeError),
    #[error(transparent)]
    Bench(#[from] hintwalk::bench::BenchError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid seed list `{0}`; expected `a..b`, `a..=b`, `n` or `a,b,c`")]
    Seeds(String),
}

#[derive(Debug, Parser)]
#[command(name = "hintwalk", version, about = "Plan and guide minimum-step GUI exploration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Explore a simulated app and write its merged state graph.
    Extract(ExtractArgs),
    /// Merge near-duplicate states of a graph file.
    Merge(MergeArgs),
    /// Plan a covering walk over a graph file.
    Plan(PlanArgs),
    /// Compare guided exploration against the baseline agents.
    Bench(BenchArgs),
    /// Run the session service.
    Serve(ServerConfig),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub app: PathBuf,
    /// Declared-transition descriptor folded into the explored graph.
    #[arg(long = "static")]
    pub static_descriptor: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub budget: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = hintwalk::merging::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    #[arg(long)]
    pub stg: PathBuf,
    #[arg(long, default_value_t = hintwalk::merging::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub stg: PathBuf,
    /// Start state; the graph's entry when omitted.
    #[arg(long)]
    pub start: Option<String>,
    /// Add restart edges of this cost from every state.
    #[arg(long)]
    pub relaunch_cost: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_EXACT_LIMIT)]
    pub exact_limit: usize,
    /// Fail rather than fall back to the greedy planner.
    #[arg(long)]
    pub exact_only: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub apps: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "guided,dfs,bfs,random")]
    pub agents: Vec<Agent>,
    #[arg(long, default_value_t = 500)]
    pub budget: u64,
    #[arg(long, default_value = "1..10")]
    pub seeds: String,
    #[arg(long, default_value = "results.csv")]
    pub out: PathBuf,
}

/// Parses `a..b` (inclusive, as written on the command line), `a..=b`, a
/// single seed or a comma list.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, CommandError> {
    let bad = || CommandError::Seeds(text.to_string());
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?);
        (a..=b).collect()
    } else {
        text.split(',').map(num).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

/// `out.json` gets its report at `out.merge-report.json`.
pub fn report_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "stg".into());
    out.with_file_name(format!("{stem}.merge-report.json"))
}

#[derive(Debug, Serialize)]
struct ReportFile<'a> {
    states_before: usize,
    states_after: usize,
    #[serde(flatten)]
    merge: &'a MergeReport,
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    conflicts: &'a [TargetConflict],
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CommandError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text + "\n").map_err(|source| CommandError::Io { path: path.to_path_buf(), source })
}

pub fn run_extract(args: &ExtractArgs) -> Result<MergeReport, CommandError> {
    let app = AppModel::read_file(&args.app)?;
    let descriptor = args.static_descriptor.as_ref().map(StaticDescriptor::read_file).transpose()?;
    let budget = ExplorationBudget::new(args.budget, args.seed);
    let combined = extract(&app, descriptor.as_ref(), budget, &MergeConfig::uniform(args.threshold))?;
    format::write_file(&combined.graph, &args.out)?;
    let report = ReportFile {
        states_before: combined.merge.canonical_of.len(),
        states_after: combined.graph.len(),
        merge: &combined.merge,
        conflicts: &combined.conflicts,
    };
    write_json(&report_path(&args.out), &report)?;
    log::info!("{} states ({} before merging) written to {}", report.states_after, report.states_before, args.out.display());
    Ok(combined.merge)
}

pub fn run_merge(args: &MergeArgs) -> Result<MergeReport, CommandError> {
    let g = format::read_file(&args.stg)?;
    let (merged, merge) = merge_states_with(&g, &MergeConfig::uniform(args.threshold))?;
    format::write_file(&merged, &args.out)?;
    let report = ReportFile { states_before: g.len(), states_after: merged.len(), merge: &merge, conflicts: &[] };
    write_json(&report_path(&args.out), &report)?;
    Ok(merge)
}

pub fn run_plan(args: &PlanArgs) -> Result<PlanFile, CommandError> {
    let g = format::read_file(&args.stg)?;
    let start = args.start.clone().unwrap_or_else(|| g.entry().to_string());
    let cfg = PlannerConfig {
        exact_limit: args.exact_limit,
        relaunch_cost: args.relaunch_cost,
        heuristic_fallback: !args.exact_only,
    };
    let plan = plan_auto(&g, &start, &BTreeSet::new(), &cfg)?;
    let file = plan.to_file();
    write_json(&args.out, &file)?;
    Ok(file)
}

pub fn run_bench(args: &BenchArgs) -> Result<BenchSummary, CommandError> {
    let seeds = parse_seeds(&args.seeds)?;
    let (rows, summary) = bench::run_benchmark(&args.apps, &args.agents, args.budget, &seeds)?;
    let curves = bench::write_outputs(&rows, &args.out)?;
    log::info!("{} rows written to {} (curves in {})", rows.len(), args.out.display(), curves.display());
    Ok(summary)
}

fn print_summary(summary: &BenchSummary) {
    println!("{:<8} {:>6} {:>10} {:>12} {:>10}", "agent", "runs", "completed", "mean steps", "coverage");
    for a in &summary.agents {
        println!("{:<8} {:>6} {:>10} {:>12.2} {:>10.3}", a.agent, a.runs, a.completed, a.mean_steps, a.mean_coverage);
    }
    for (agent, saving) in &summary.saving_vs {
        println!("guided saves {:.1}% of steps vs {agent}", saving * 100.0);
    }
    if !summary.exact_violations.is_empty() {
        println!("{} runs beat an exact guided plan", summary.exact_violations.len());
    }
}

pub async fn serve(config: ServerConfig) -> Result<(), CommandError> {
    let listen = config.listen;
    let tick = config.tick();
    let state = Arc::new(AppState::load(config)?);
    let sweeper = spawn_sweeper(Arc::clone(&state), tick);
    let listener =
        tokio::net::TcpListener::bind(listen).await.map_err(|source| CommandError::Io { path: listen.to_string().into(), source })?;
    log::info!("listening on {listen}");
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
        log::info!("shutting down");
    };
    let result = axum::serve(listener, crate::api::router(state))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|source| CommandError::Io { path: listen.to_string().into(), source });
    sweeper.abort();
    result
}

pub fn run(cli: Cli) -> Result<(), CommandError> {
    match cli.command {
        Command::Extract(a) => {
            let r = run_extract(&a)?;
            println!("merged {} + {} states into {}", r.pass1_merges, r.pass2_merges, a.out.display());
        }
        Command::Merge(a) => {
            let r = run_merge(&a)?;
            println!("merged {} + {} states into {}", r.pass1_merges, r.pass2_merges, a.out.display());
        }
        Command::Plan(a) => {
            let p = run_plan(&a)?;
            println!("{} steps ({:?}) written to {}", p.total_steps, p.strategy, a.out.display());
        }
        Command::Bench(a) => print_summary(&run_bench(&a)?),
        Command::Serve(config) => {
            let rt = tokio::runtime::Runtime::new().map_err(|source| CommandError::Io { path: "runtime".into(), source })?;
            rt.block_on(serve(config))?;
        }
    }
    Ok(())
}
