use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_pipeline, ExperimentConfig, ExperimentRecord, GraphSource, RepetitionStatus};
use crate::error::{Error, Result};
use crate::reconstruction::ReconstructionMethod;
use crate::selection::SelectionStrategy;
use crate::synth::GraphModel;

/// Worker-count override for the sweep pool.
pub const WORKERS_ENV: &str = "OPINIONLAB_WORKERS";

/// A base experiment and the ranges to take the Cartesian product of.
/// Absent ranges keep the base value; an empty range is an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    #[serde(default)]
    pub budget_fractions: Option<Vec<f64>>,
    #[serde(default)]
    pub methods: Option<Vec<ReconstructionMethod>>,
    #[serde(default)]
    pub strategies: Option<Vec<SelectionStrategy>>,
    /// Node counts for a synthetic graph source.
    #[serde(default)]
    pub sizes: Option<Vec<usize>>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.cells()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    fn range<T: Clone>(name: &str, range: &Option<Vec<T>>, base: T) -> Result<Vec<T>> {
        match range {
            None => Ok(vec![base]),
            Some(v) if v.is_empty() => Err(Error::Validation(format!("sweep range `{name}` is empty"))),
            Some(v) => Ok(v.clone()),
        }
    }

    /// Cell configurations in row-major order over
    /// (budget fraction, method, strategy, size).
    pub fn cells(&self) -> Result<Vec<(CellKey, ExperimentConfig)>> {
        let base = &self.base;
        let base_size = match &base.graph {
            GraphSource::Synth { model: GraphModel::ErdosRenyi { n, .. } | GraphModel::BarabasiAlbert { n, .. }, .. } => {
                Some(*n)
            }
            GraphSource::File { .. } => None,
        };
        if self.sizes.is_some() && base_size.is_none() {
            return Err(Error::Validation("sizes need a synthetic graph source".into()));
        }
        let fracs = Self::range("budget_fractions", &self.budget_fractions, base.budget_fraction)?;
        let methods = Self::range("methods", &self.methods, base.reconstruction.method)?;
        let strategies = Self::range("strategies", &self.strategies, base.selection)?;
        let sizes = Self::range("sizes", &self.sizes.clone().map(|v| v.into_iter().map(Some).collect()), base_size)?;

        let mut cells = Vec::new();
        for &budget_fraction in &fracs {
            for &method in &methods {
                for &strategy in &strategies {
                    for &size in &sizes {
                        let mut cfg = base.clone();
                        cfg.budget_fraction = budget_fraction;
                        cfg.reconstruction.method = method;
                        cfg.selection = strategy;
                        if let (Some(n), GraphSource::Synth { model, .. }) = (size, &mut cfg.graph) {
                            match model {
                                GraphModel::ErdosRenyi { n: m, .. } | GraphModel::BarabasiAlbert { n: m, .. } => *m = n,
                            }
                        }
                        cfg.validate()?;
                        let key = CellKey { index: cells.len(), budget_fraction, method, strategy, size };
                        cells.push((key, cfg));
                    }
                }
            }
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub index: usize,
    pub budget_fraction: f64,
    pub method: ReconstructionMethod,
    pub strategy: SelectionStrategy,
    pub size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub key: CellKey,
    pub record: ExperimentRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn all_succeeded(&self) -> bool {
        self.cells.iter().all(|c| c.record.all_succeeded())
    }
}

fn worker_count() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(Error::Validation(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

/// Runs every cell in a worker pool. Results are ordered by cell index.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    let cells = cfg.cells()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = worker_count()? {
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| Error::Validation(format!("worker pool: {e}")))?;
    let records: Vec<Result<ExperimentRecord>> =
        pool.install(|| cells.par_iter().map(|(_, c)| run_pipeline(c)).collect());
    let cells = cells
        .into_iter()
        .zip(records)
        .map(|((key, _), record)| Ok(SweepCell { key, record: record? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { cells })
}

#[derive(Debug, Default, Serialize)]
struct CsvRow {
    row_type: &'static str,
    cell: usize,
    budget_fraction: f64,
    method: &'static str,
    strategy: &'static str,
    size: Option<usize>,
    objective: &'static str,
    repetition: Option<usize>,
    status: &'static str,
    n: Option<usize>,
    budget_b: Option<usize>,
    reconstruction_error: Option<f64>,
    f_initial: Option<f64>,
    f_alg: Option<f64>,
    f_star_alg: Option<f64>,
    multiplicative_error: Option<f64>,
    additive_bound: Option<f64>,
    ratio_bound: Option<f64>,
    iterations_hat: Option<usize>,
    iterations_star: Option<usize>,
    successes: Option<usize>,
    failures: Option<usize>,
    multiplicative_error_sd: Option<f64>,
    multiplicative_error_median: Option<f64>,
    reconstruction_error_median: Option<f64>,
    cause: String,
}

/// One CSV row per (cell, repetition) followed by one aggregate row per cell.
/// Aggregate rows carry means in the metric columns.
pub fn sweep_csv(result: &SweepResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for cell in &result.cells {
        let k = &cell.key;
        let base = || CsvRow {
            cell: k.index,
            budget_fraction: k.budget_fraction,
            method: k.method.name(),
            strategy: k.strategy.name(),
            size: k.size,
            objective: cell.record.config.objective.name(),
            ..CsvRow::default()
        };
        for rep in &cell.record.repetitions {
            let row = match &rep.status {
                RepetitionStatus::Ok(o) => CsvRow {
                    row_type: "repetition",
                    repetition: Some(rep.index),
                    status: "ok",
                    n: Some(o.n),
                    budget_b: Some(o.budget_b),
                    reconstruction_error: Some(o.reconstruction_error),
                    f_initial: Some(o.f_initial),
                    f_alg: Some(o.f_alg),
                    f_star_alg: Some(o.f_star_alg),
                    multiplicative_error: Some(o.multiplicative_error),
                    additive_bound: Some(o.additive_bound),
                    ratio_bound: o.ratio_bound,
                    iterations_hat: Some(o.run_hat.iterations),
                    iterations_star: Some(o.run_star.iterations),
                    ..base()
                },
                RepetitionStatus::Failed { cause } => CsvRow {
                    row_type: "repetition",
                    repetition: Some(rep.index),
                    status: "failed",
                    cause: cause.clone(),
                    ..base()
                },
            };
            w.serialize(row)?;
        }
        let a = &cell.record.aggregate;
        let me = a.multiplicative_error;
        let re = a.reconstruction_error;
        w.serialize(CsvRow {
            row_type: "aggregate",
            status: if a.failures == 0 { "ok" } else { "partial" },
            reconstruction_error: re.map(|s| s.mean),
            f_alg: a.f_alg.map(|s| s.mean),
            f_star_alg: a.f_star_alg.map(|s| s.mean),
            multiplicative_error: me.map(|s| s.mean),
            successes: Some(a.successes),
            failures: Some(a.failures),
            multiplicative_error_sd: me.map(|s| s.sd),
            multiplicative_error_median: me.map(|s| s.median),
            reconstruction_error_median: re.map(|s| s.median),
            ..base()
        })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `sweep.csv` and `cell-<index>.json` into `dir`.
pub fn write_sweep(result: &SweepResult, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("sweep.csv"), sweep_csv(result)?)?;
    for cell in &result.cells {
        let json = serde_json::to_string_pretty(cell)?;
        fs::write(dir.join(format!("cell-{}.json", cell.key.index)), json)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::tests::small_config;
    use super::*;
    use crate::objectives::ObjectiveKind;

    #[test]
    fn single_point_matches_pipeline() {
        let base = ExperimentConfig { repetitions: 1, ..small_config(ObjectiveKind::PDir) };
        let cfg = SweepConfig { base: base.clone(), budget_fractions: None, methods: None, strategies: None, sizes: None };
        let res = sweep(&cfg).unwrap();
        assert_eq!(res.cells.len(), 1);
        let direct = run_pipeline(&base).unwrap();
        assert_eq!(res.cells[0].record.without_timings(), direct.without_timings());
    }

    #[test]
    fn budget_sweep_rows() {
        let base = ExperimentConfig { repetitions: 2, ..small_config(ObjectiveKind::PDir) };
        let cfg =
            SweepConfig { base, budget_fractions: Some(vec![0.1, 0.2, 0.4]), methods: None, strategies: None, sizes: None };
        let res = sweep(&cfg).unwrap();
        let csv = sweep_csv(&res).unwrap();
        let aggregates = csv.lines().filter(|l| l.starts_with("aggregate")).count();
        assert_eq!(aggregates, 3);
        assert_eq!(csv.lines().filter(|l| l.starts_with("repetition")).count(), 6);
        assert_eq!(res.cells.iter().map(|c| c.key.index).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn empty_range_rejected() {
        let cfg = SweepConfig {
            base: small_config(ObjectiveKind::PDir),
            budget_fractions: Some(vec![]),
            methods: None,
            strategies: None,
            sizes: None,
        };
        assert!(matches!(sweep(&cfg), Err(Error::Validation(_))));
    }
}
