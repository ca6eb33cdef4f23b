//! End-to-end experiments: select, reconstruct, optimize from the estimate
//! and from the truth, then compare on the true opinions.

mod sweep;

pub use sweep::{sweep, write_sweep, SweepCell, SweepConfig, SweepResult, WORKERS_ENV};

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fj::{read_opinion_rows, OpinionVector};
use crate::graph::{load_edge_list_with_ids, preprocess, row_normalize, Graph};
use crate::objectives::{evaluate, ObjectiveKind};
use crate::optimizer::{optimize, theoretical_bound, OptimizationResult, OptimizerConfig, StopReason};
use crate::reconstruction::{
    build_spectral_basis, gcn_reconstruct, gsp_reconstruct, label_propagation, Diagnostics, GcnConfig, Neighborhood,
    QuerySet, ReconstructionMethod, ReconstructionOutcome, GSP_NOISE_REG, LP_MAX_ITER,
};
use crate::selection::{budget_from_fraction, select, SelectionStrategy};
use crate::synth::{generate_graph, make_innate, synthesize_opinions, GraphModel, OpinionGenSpec};

/// How repetitions are aggregated; written into every record.
pub const AGGREGATION_CONVENTION: &str =
    "each repetition redraws every seeded stage (graph, opinions, selection, reconstruction); aggregates cover successful repetitions";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSource {
    /// Edge list; preprocessed, and row-normalized when directed.
    File { path: PathBuf, directed: bool },
    /// Sampled anew for every repetition.
    Synth { model: GraphModel, directed: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OpinionSource {
    /// `node,opinion` CSV keyed by edge-list ids. With `expressed`, the values
    /// are equilibrium opinions: they are inverted, then standardized.
    File {
        path: PathBuf,
        #[serde(default)]
        expressed: bool,
    },
    /// Generated per repetition; the generator's own seed is replaced by the
    /// repetition's opinion seed.
    Synth { spec: OpinionGenSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructionConfig {
    pub method: ReconstructionMethod,
    pub lp_max_iter: usize,
    pub lp_neighborhood: Neighborhood,
    pub gcn: GcnConfig,
    /// `|F| = max(1, round(freq_fraction · n))`.
    pub freq_fraction: f64,
    pub noise_reg: f64,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            method: ReconstructionMethod::Lp,
            lp_max_iter: LP_MAX_ITER,
            lp_neighborhood: Neighborhood::Out,
            gcn: GcnConfig::default(),
            freq_fraction: 0.15,
            noise_reg: GSP_NOISE_REG,
        }
    }
}

/// Runs the configured reconstruction on `q`.
pub fn reconstruct(g: &Graph<f64>, q: &QuerySet, cfg: &ReconstructionConfig, seed: u64) -> Result<ReconstructionOutcome> {
    match cfg.method {
        ReconstructionMethod::Lp => label_propagation(g, q, cfg.lp_max_iter, cfg.lp_neighborhood),
        ReconstructionMethod::Gcn => gcn_reconstruct(g, q, &cfg.gcn, seed),
        ReconstructionMethod::Gsp => {
            let f = budget_from_fraction(g.n(), cfg.freq_fraction)?;
            gsp_reconstruct(&build_spectral_basis(g, f)?, q, cfg.noise_reg)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub opinions: OpinionSource,
    pub objective: ObjectiveKind,
    #[serde(default = "default_strategy")]
    pub selection: SelectionStrategy,
    #[serde(default = "default_budget_fraction")]
    pub budget_fraction: f64,
    #[serde(default)]
    pub reconstruction: ReconstructionConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    /// Keep the final graphs and opinion vectors in the record.
    #[serde(default)]
    pub store_matrices: bool,
}

fn default_strategy() -> SelectionStrategy {
    SelectionStrategy::Degree
}

fn default_budget_fraction() -> f64 {
    0.2
}

fn default_repetitions() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.budget_fraction > 0.0 && self.budget_fraction <= 1.0) {
            return Err(Error::Validation("budget_fraction must lie in (0, 1]".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Validation("repetitions must be at least 1".into()));
        }
        let directed = match &self.graph {
            GraphSource::File { directed, .. } | GraphSource::Synth { directed, .. } => *directed,
        };
        if directed != self.objective.is_directed() {
            return Err(Error::DirectednessMismatch {
                kind: self.objective.name().into(),
                expected: if self.objective.is_directed() { "directed" } else { "undirected" },
            });
        }
        if let OpinionSource::Synth { spec } = &self.opinions {
            spec.validate()?;
        }
        let r = &self.reconstruction;
        r.gcn.validate()?;
        if !(r.freq_fraction > 0.0 && r.freq_fraction <= 1.0) {
            return Err(Error::Validation("freq_fraction must lie in (0, 1]".into()));
        }
        if r.lp_max_iter == 0 {
            return Err(Error::Validation("lp_max_iter must be positive".into()));
        }
        self.optimizer.validate()
    }
}

/// A graph ready for the pipeline, with the file id of every node.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    pub graph: Graph<f64>,
    pub original_ids: Vec<u64>,
}

impl PreparedGraph {
    /// Orders `(id, value)` rows onto the nodes; rows for dropped or unknown
    /// ids are ignored, and every node must be covered exactly once.
    pub fn align_opinions(&self, rows: &[(u64, f64)]) -> Result<Vec<f64>> {
        let mut values = vec![None; self.graph.n()];
        for &(id, x) in rows {
            if let Ok(k) = self.original_ids.binary_search(&id) {
                if values[k].replace(x).is_some() {
                    return Err(Error::Validation(format!("node {id} listed twice")));
                }
            }
        }
        values
            .into_iter()
            .enumerate()
            .map(|(k, v)| v.ok_or_else(|| Error::Validation(format!("no opinion for node {}", self.original_ids[k]))))
            .collect()
    }
}

/// Loads an edge list, drops nodes without out-edges (or isolated nodes when
/// undirected), and row-normalizes directed graphs.
pub fn load_prepared_graph(path: impl AsRef<Path>, directed: bool) -> Result<PreparedGraph> {
    let loaded = load_edge_list_with_ids::<f64>(path, directed)?;
    let pre = preprocess(&loaded.graph)?;
    let mut original_ids = vec![0; pre.graph.n()];
    for (old, new) in pre.old_to_new.iter().enumerate() {
        if let Some(k) = new {
            original_ids[*k] = loaded.original_ids[old];
        }
    }
    let graph = if directed { row_normalize(&pre.graph)? } else { pre.graph };
    Ok(PreparedGraph { graph, original_ids })
}

pub fn read_opinion_rows_u64(path: impl AsRef<Path>) -> Result<Vec<(u64, f64)>> {
    Ok(read_opinion_rows(path)?.into_iter().map(|(v, x)| (v as u64, x)).collect())
}

/// `f(s, L_ALG) / f(s, L*_ALG)`.
pub fn multiplicative_error(f_alg: f64, f_star_alg: f64) -> Result<f64> {
    if f_star_alg == 0.0 {
        return Err(Error::DegenerateOptimum);
    }
    Ok(f_alg / f_star_alg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepetitionSeeds {
    pub repetition: u64,
    pub graph: u64,
    pub opinions: u64,
    pub selection: u64,
    pub reconstruction: u64,
}

impl RepetitionSeeds {
    /// Stage seeds drawn from a generator seeded with `base + repetition`.
    pub fn derive(base: u64, repetition: usize) -> Self {
        let rep = base.wrapping_add(repetition as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(rep);
        Self { repetition: rep, graph: rng.random(), opinions: rng.random(), selection: rng.random(), reconstruction: rng.random() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredRun {
    pub n: usize,
    pub directed: bool,
    /// Final edges `(u, v, w)`; undirected edges once with `u < v`.
    pub edges_hat: Vec<(usize, usize, f64)>,
    pub edges_star: Vec<(usize, usize, f64)>,
    pub s_true: Vec<f64>,
    pub s_hat: Vec<f64>,
}

impl StoredRun {
    pub fn graph_hat(&self) -> Result<Graph<f64>> {
        Graph::from_edges(self.n, self.edges_hat.iter().copied(), self.directed)
    }

    pub fn graph_star(&self) -> Result<Graph<f64>> {
        Graph::from_edges(self.n, self.edges_star.iter().copied(), self.directed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// Optimizer objective with the opinions it was given.
    pub trajectory: Vec<f64>,
}

impl RunSummary {
    fn of(r: &OptimizationResult<f64>) -> Self {
        Self { iterations: r.iterations, stop_reason: r.stop_reason, trajectory: r.trajectory.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionOutcome {
    pub n: usize,
    pub budget_b: usize,
    pub selected: Vec<usize>,
    pub reconstruction_error: f64,
    pub reconstruction: Diagnostics,
    /// `f(s, L)` at the input graph.
    pub f_initial: f64,
    /// `f(s, L_ALG)`, optimized from the reconstruction.
    pub f_alg: f64,
    /// `f(s, L*_ALG)`, optimized from the true opinions.
    pub f_star_alg: f64,
    pub multiplicative_error: f64,
    pub lipschitz: f64,
    pub additive_bound: f64,
    pub ratio_bound: Option<f64>,
    pub run_hat: RunSummary,
    pub run_star: RunSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stored: Option<StoredRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RepetitionStatus {
    Ok(Box<RepetitionOutcome>),
    Failed { cause: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRecord {
    pub index: usize,
    pub seeds: RepetitionSeeds,
    #[serde(flatten)]
    pub status: RepetitionStatus,
}

impl RepetitionRecord {
    pub fn outcome(&self) -> Option<&RepetitionOutcome> {
        match &self.status {
            RepetitionStatus::Ok(o) => Some(o),
            RepetitionStatus::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub sd: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
        Some(Self { count: n, mean, sd, median, min: sorted[0], max: sorted[n - 1] })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub successes: usize,
    pub failures: usize,
    pub convention: String,
    pub multiplicative_error: Option<Summary>,
    pub reconstruction_error: Option<Summary>,
    pub f_alg: Option<Summary>,
    pub f_star_alg: Option<Summary>,
}

impl Aggregate {
    fn of(reps: &[RepetitionRecord]) -> Self {
        let ok: Vec<&RepetitionOutcome> = reps.iter().filter_map(RepetitionRecord::outcome).collect();
        let col = |f: fn(&RepetitionOutcome) -> f64| Summary::of(&ok.iter().map(|o| f(o)).collect::<Vec<_>>());
        Self {
            successes: ok.len(),
            failures: reps.len() - ok.len(),
            convention: AGGREGATION_CONVENTION.into(),
            multiplicative_error: col(|o| o.multiplicative_error),
            reconstruction_error: col(|o| o.reconstruction_error),
            f_alg: col(|o| o.f_alg),
            f_star_alg: col(|o| o.f_star_alg),
        }
    }
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub setup: f64,
    pub selection: f64,
    pub reconstruction: f64,
    pub optimize_hat: f64,
    pub optimize_star: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub config: ExperimentConfig,
    pub repetitions: Vec<RepetitionRecord>,
    pub aggregate: Aggregate,
    /// One entry per repetition; kept apart so the rest is reproducible.
    pub timings: Vec<Timings>,
}

impl ExperimentRecord {
    pub fn all_succeeded(&self) -> bool {
        self.aggregate.failures == 0
    }

    /// The record with timings cleared, for reproducibility comparisons.
    pub fn without_timings(&self) -> Self {
        Self { timings: Vec::new(), ..self.clone() }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Graph and opinions shared by all repetitions when both come from files.
enum Inputs {
    Fixed(Box<(Graph<f64>, OpinionVector<f64>)>),
    PerRepetition,
}

fn file_opinions(g: &Graph<f64>, values: Vec<f64>, expressed: bool) -> Result<OpinionVector<f64>> {
    if expressed {
        make_innate(g, &OpinionVector::expressed(values)?)
    } else {
        OpinionVector::innate(values)
    }
}

fn load_fixed(cfg: &ExperimentConfig) -> Result<Inputs> {
    match (&cfg.graph, &cfg.opinions) {
        (GraphSource::File { path, directed }, OpinionSource::File { path: op, expressed }) => {
            let g = load_prepared_graph(path, *directed)?;
            let s = file_opinions(&g.graph, g.align_opinions(&read_opinion_rows_u64(op)?)?, *expressed)?;
            Ok(Inputs::Fixed(Box::new((g.graph, s))))
        }
        _ => Ok(Inputs::PerRepetition),
    }
}

fn repetition_inputs(cfg: &ExperimentConfig, seeds: &RepetitionSeeds) -> Result<(Graph<f64>, OpinionVector<f64>)> {
    let (g, ids) = match &cfg.graph {
        GraphSource::File { path, directed } => {
            let p = load_prepared_graph(path, *directed)?;
            (p.graph.clone(), Some(p))
        }
        GraphSource::Synth { model, directed } => (generate_graph(*model, *directed, seeds.graph)?, None),
    };
    let s = match &cfg.opinions {
        OpinionSource::File { path, expressed } => {
            let rows = read_opinion_rows_u64(path)?;
            let values = match &ids {
                Some(p) => p.align_opinions(&rows)?,
                None => {
                    let identity = PreparedGraph { graph: g.clone(), original_ids: (0..g.n() as u64).collect() };
                    identity.align_opinions(&rows)?
                }
            };
            file_opinions(&g, values, *expressed)?
        }
        OpinionSource::Synth { spec } => {
            let spec = OpinionGenSpec { seed: seeds.opinions, ..*spec };
            synthesize_opinions(&g, &spec)?.innate
        }
    };
    Ok((g, s))
}

fn edges_of(g: &Graph<f64>) -> Vec<(usize, usize, f64)> {
    if g.is_directed() {
        g.adjacency().iter().collect()
    } else {
        g.undirected_edges()
    }
}

/// One repetition on a given graph and ground truth.
pub fn run_repetition(
    cfg: &ExperimentConfig,
    g: &Graph<f64>,
    s: &OpinionVector<f64>,
    seeds: &RepetitionSeeds,
    timings: &mut Timings,
) -> Result<RepetitionOutcome> {
    let kind = cfg.objective;
    let solver = &cfg.optimizer.solver;
    let n = g.n();

    let t = Instant::now();
    let b = budget_from_fraction(n, cfg.budget_fraction)?;
    let sel = select(g, cfg.selection, b, seeds.selection)?;
    timings.selection = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let q = QuerySet::from_truth(s, &sel.selected)?;
    let rec = reconstruct(g, &q, &cfg.reconstruction, seeds.reconstruction)?.with_truth(s)?;
    timings.reconstruction = t.elapsed().as_secs_f64();

    let f_initial = evaluate(kind, g, s, solver)?.value;
    let t = Instant::now();
    let run_hat = optimize(g, &rec.s_hat, kind, &cfg.optimizer)?;
    timings.optimize_hat = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let run_star = optimize(g, s, kind, &cfg.optimizer)?;
    timings.optimize_star = t.elapsed().as_secs_f64();

    let f_alg = evaluate(kind, &run_hat.graph, s, solver)?.value;
    let f_star_alg = evaluate(kind, &run_star.graph, s, solver)?.value;
    let multiplicative_error = multiplicative_error(f_alg, f_star_alg)?;
    let bound = theoretical_bound(kind, g, s, &rec.s_hat, f_star_alg)?;

    let values = [f_initial, f_alg, f_star_alg, multiplicative_error, bound.additive];
    if values.iter().any(|v| !v.is_finite()) || multiplicative_error <= 0.0 {
        return Err(Error::Validation(format!("non-finite or nonpositive evaluation {values:?}")));
    }
    let stored = cfg.store_matrices.then(|| StoredRun {
        n,
        directed: g.is_directed(),
        edges_hat: edges_of(&run_hat.graph),
        edges_star: edges_of(&run_star.graph),
        s_true: s.values().to_vec(),
        s_hat: rec.s_hat.values().to_vec(),
    });
    Ok(RepetitionOutcome {
        n,
        budget_b: b,
        selected: sel.selected,
        reconstruction_error: rec.reconstruction_error.expect("truth supplied"),
        reconstruction: rec.diagnostics,
        f_initial,
        f_alg,
        f_star_alg,
        multiplicative_error,
        lipschitz: bound.lipschitz,
        additive_bound: bound.additive,
        ratio_bound: bound.ratio,
        run_hat: RunSummary::of(&run_hat),
        run_star: RunSummary::of(&run_star),
        stored,
    })
}

/// Runs every repetition; failures are recorded and do not stop the run.
/// Only an invalid configuration is an error.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<ExperimentRecord> {
    cfg.validate()?;
    let fixed = load_fixed(cfg);
    let mut repetitions = Vec::with_capacity(cfg.repetitions);
    let mut timings = Vec::with_capacity(cfg.repetitions);
    for index in 0..cfg.repetitions {
        let seeds = RepetitionSeeds::derive(cfg.seed, index);
        let mut tm = Timings::default();
        let start = Instant::now();
        let result = match &fixed {
            Ok(Inputs::Fixed(inputs)) => {
                tm.setup = 0.0;
                run_repetition(cfg, &inputs.0, &inputs.1, &seeds, &mut tm)
            }
            Ok(Inputs::PerRepetition) => repetition_inputs(cfg, &seeds).and_then(|(g, s)| {
                tm.setup = start.elapsed().as_secs_f64();
                run_repetition(cfg, &g, &s, &seeds, &mut tm)
            }),
            Err(e) => Err(Error::Validation(format!("loading inputs: {e}"))),
        };
        tm.total = start.elapsed().as_secs_f64();
        let status = match result {
            Ok(o) => RepetitionStatus::Ok(Box::new(o)),
            Err(e) => RepetitionStatus::Failed { cause: e.to_string() },
        };
        repetitions.push(RepetitionRecord { index, seeds, status });
        timings.push(tm);
    }
    let aggregate = Aggregate::of(&repetitions);
    Ok(ExperimentRecord { config: cfg.clone(), repetitions, aggregate, timings })
}
