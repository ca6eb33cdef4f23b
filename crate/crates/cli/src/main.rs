use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use opinionlab::fj::OpinionVector;
use opinionlab::graph::{write_edge_list, Graph};
use opinionlab::harness::{
    load_prepared_graph, read_opinion_rows_u64, reconstruct, run_pipeline, sweep, write_sweep, ExperimentConfig,
    PreparedGraph, ReconstructionConfig, RepetitionSeeds, SweepConfig,
};
use opinionlab::objectives::ObjectiveKind;
use opinionlab::optimizer::{optimize, OptimizerConfig, UndirectedMode};
use opinionlab::reconstruction::{QuerySet, ReconstructionMethod};
use opinionlab::selection::{budget_from_fraction, select, SelectionStrategy};
use opinionlab::synth::{generate_graph, synthesize_opinions, GraphModel, OpinionDistribution, OpinionGenSpec};

#[derive(Parser)]
#[command(name = "opinionlab", version, about = "Budgeted opinion optimization under Friedkin-Johnsen dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pick the nodes to query; prints their ids as JSON.
    Select(SelectArgs),
    /// Estimate every innate opinion from a queried subset.
    Reconstruct(ReconstructArgs),
    /// Optimize edge weights for an objective given innate opinions.
    Optimize(OptimizeArgs),
    /// Generate a synthetic graph with innate and expressed opinions.
    Synth(SynthArgs),
    /// Run a full experiment from a JSON config.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Record destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Cartesian product of a sweep config, one JSON per cell plus a CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct GraphArgs {
    /// Whitespace edge list `u v [w]`.
    #[arg(long)]
    graph: PathBuf,
    /// Treat the edge list as undirected.
    #[arg(long)]
    undirected: bool,
}

impl GraphArgs {
    fn load(&self) -> Result<PreparedGraph> {
        load_prepared_graph(&self.graph, !self.undirected)
            .with_context(|| format!("loading graph {}", self.graph.display()))
    }
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value = "degree")]
    strategy: SelectionStrategy,
    #[arg(long, default_value_t = 0.2)]
    budget_frac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ReconstructArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// `node,opinion` CSV of queried values.
    #[arg(long, conflicts_with = "truth")]
    queries: Option<PathBuf>,
    /// `node,opinion` CSV of all true innate opinions; queries are drawn with
    /// `--strategy` and `--budget-frac`, and the error is reported.
    #[arg(long, required_unless_present = "queries")]
    truth: Option<PathBuf>,
    #[arg(long, default_value = "degree")]
    strategy: SelectionStrategy,
    #[arg(long, default_value_t = 0.2)]
    budget_frac: f64,
    #[arg(long, default_value = "lp")]
    method: ReconstructionMethod,
    #[arg(long, default_value_t = 0.15)]
    freq_frac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Estimated opinions as `node,opinion` CSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fast,
    Converge,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    objective: ObjectiveKind,
    /// `node,opinion` CSV of innate opinions.
    #[arg(long)]
    opinions: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    lr: f64,
    #[arg(long, default_value_t = 0.2)]
    early_stop: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Undirected solver; the default depends on the objective.
    #[arg(long)]
    mode: Option<ModeArg>,
    /// Disable halving the step on a tenfold objective increase.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out_graph: PathBuf,
    /// `iteration,objective` CSV.
    #[arg(long)]
    trajectory: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Er,
    Ba,
}

#[derive(Clone, Copy, ValueEnum)]
enum OpinionsArg {
    Uniform,
    Gaussian,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long)]
    n: usize,
    /// Edge probability (er).
    #[arg(long, required_if_eq("model", "er"))]
    p: Option<f64>,
    /// Edges per new node (ba).
    #[arg(long, required_if_eq("model", "ba"))]
    m: Option<usize>,
    #[arg(long)]
    directed: bool,
    #[arg(long, value_enum, default_value = "gaussian")]
    opinions: OpinionsArg,
    #[arg(long, default_value_t = 3.0)]
    polarize_p: f64,
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    #[arg(long, default_value_t = 0.1)]
    sd: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Receives graph.txt, innate.csv and expressed.csv.
    #[arg(long)]
    out: PathBuf,
}

fn write_rows(path: &Path, ids: &[u64], values: &[f64]) -> Result<()> {
    let mut out = String::from("node,opinion\n");
    for (id, x) in ids.iter().zip(values) {
        writeln!(out, "{id},{x}")?;
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Edge list in the input's node ids.
fn write_graph(path: &Path, g: &Graph<f64>, ids: &[u64]) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "% {} {} {}", if g.is_directed() { "directed" } else { "undirected" }, g.n(), g.num_edges())?;
    for (i, j, w) in g.adjacency().iter() {
        if g.is_directed() || i < j {
            writeln!(out, "{} {} {w}", ids[i], ids[j])?;
        }
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

fn write_json(path: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_aligned(prepared: &PreparedGraph, path: &Path) -> Result<OpinionVector<f64>> {
    let rows = read_opinion_rows_u64(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(OpinionVector::innate(prepared.align_opinions(&rows)?)?)
}

fn run_select(a: SelectArgs) -> Result<()> {
    let prepared = a.graph.load()?;
    let b = budget_from_fraction(prepared.graph.n(), a.budget_frac)?;
    let sel = select(&prepared.graph, a.strategy, b, a.seed)?;
    let ids: Vec<u64> = sel.selected.iter().map(|&v| prepared.original_ids[v]).collect();
    write_json(None, &json!({ "strategy": sel.strategy, "budget_b": sel.budget_b, "selected": ids }))
}

fn run_reconstruct(a: ReconstructArgs) -> Result<()> {
    let prepared = a.graph.load()?;
    let g = &prepared.graph;
    let (q, truth) = match (&a.queries, &a.truth) {
        (Some(path), _) => {
            let rows = read_opinion_rows_u64(path).with_context(|| format!("reading {}", path.display()))?;
            let pairs = rows
                .into_iter()
                .filter_map(|(id, x)| prepared.original_ids.binary_search(&id).ok().map(|k| (k, x)))
                .collect();
            (QuerySet::new(g.n(), pairs)?, None)
        }
        (None, Some(path)) => {
            let s = load_aligned(&prepared, path)?;
            let b = budget_from_fraction(g.n(), a.budget_frac)?;
            let sel = select(g, a.strategy, b, a.seed)?;
            (QuerySet::from_truth(&s, &sel.selected)?, Some(s))
        }
        (None, None) => bail!("either --queries or --truth is required"),
    };
    let cfg = ReconstructionConfig { method: a.method, freq_fraction: a.freq_frac, ..ReconstructionConfig::default() };
    let mut outcome = reconstruct(g, &q, &cfg, a.seed)?;
    if let Some(s) = &truth {
        outcome = outcome.with_truth(s)?;
    }
    write_rows(&a.out, &prepared.original_ids, outcome.s_hat.values())?;
    let queried: Vec<u64> = q.selected().iter().map(|&v| prepared.original_ids[v]).collect();
    let report = json!({
        "method": outcome.method,
        "queried": queried,
        "reconstruction_error": outcome.reconstruction_error,
        "diagnostics": outcome.diagnostics,
    });
    match &a.diagnostics {
        Some(p) => write_json(Some(p), &report),
        None => Ok(()),
    }
}

fn run_optimize(a: OptimizeArgs) -> Result<()> {
    let prepared = a.graph.load()?;
    let s = load_aligned(&prepared, &a.opinions)?;
    let cfg = OptimizerConfig {
        lr: a.lr,
        early_stop: a.early_stop,
        max_iterations: a.max_iter,
        step_rejection: !a.strict,
        undirected_mode: a.mode.map(|m| match m {
            ModeArg::Fast => UndirectedMode::Fast,
            ModeArg::Converge => UndirectedMode::Converge,
        }),
        ..OptimizerConfig::default()
    };
    cfg.validate()?;
    let result = optimize(&prepared.graph, &s, a.objective, &cfg)?;
    write_graph(&a.out_graph, &result.graph, &prepared.original_ids)?;
    if let Some(path) = &a.trajectory {
        let mut out = String::from("iteration,objective\n");
        for (t, f) in result.trajectory.iter().enumerate() {
            writeln!(out, "{t},{f}")?;
        }
        fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    }
    write_json(
        None,
        &json!({
            "objective": a.objective,
            "initial": result.trajectory[0],
            "final": result.final_objective(),
            "iterations": result.iterations,
            "stop_reason": result.stop_reason,
        }),
    )
}

fn run_synth(a: SynthArgs) -> Result<()> {
    let model = match a.model {
        ModelArg::Er => GraphModel::ErdosRenyi { n: a.n, p: a.p.context("--p is required for er")? },
        ModelArg::Ba => GraphModel::BarabasiAlbert { n: a.n, m: a.m.context("--m is required for ba")? },
    };
    let seeds = RepetitionSeeds::derive(a.seed, 0);
    let g = generate_graph(model, a.directed, seeds.graph)?;
    let spec = OpinionGenSpec {
        distribution: match a.opinions {
            OpinionsArg::Uniform => OpinionDistribution::Uniform,
            OpinionsArg::Gaussian => OpinionDistribution::CommunityGaussian,
        },
        mu: a.mu,
        sd: a.sd,
        polarization_p: a.polarize_p,
        seed: seeds.opinions,
        ..OpinionGenSpec::default()
    };
    spec.validate()?;
    let ops = synthesize_opinions(&g, &spec)?;
    fs::create_dir_all(&a.out)?;
    write_edge_list(&g, a.out.join("graph.txt"))?;
    let ids: Vec<u64> = (0..g.n() as u64).collect();
    write_rows(&a.out.join("innate.csv"), &ids, ops.innate.values())?;
    write_rows(&a.out.join("expressed.csv"), &ids, ops.expressed.values())?;
    write_json(None, &json!({ "n": g.n(), "edges": g.num_edges(), "directed": g.is_directed() }))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Select(a) => run_select(a).map(|_| true),
        Command::Reconstruct(a) => run_reconstruct(a).map(|_| true),
        Command::Optimize(a) => run_optimize(a).map(|_| true),
        Command::Synth(a) => run_synth(a).map(|_| true),
        Command::Pipeline { config, out } => {
            let cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let record = run_pipeline(&cfg)?;
            write_json(out.as_deref(), &serde_json::to_value(&record)?)?;
            let a = &record.aggregate;
            eprintln!("{} of {} repetitions succeeded", a.successes, a.successes + a.failures);
            Ok(record.all_succeeded())
        }
        Command::Sweep { config, out } => {
            let cfg = SweepConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let result = sweep(&cfg)?;
            write_sweep(&result, &out)?;
            let failed = result.cells.iter().filter(|c| !c.record.all_succeeded()).count();
            eprintln!("{} cells written to {}, {failed} with failed repetitions", result.cells.len(), out.display());
            Ok(result.all_succeeded())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
