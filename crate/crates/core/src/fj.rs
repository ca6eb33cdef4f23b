//! Friedkin–Johnsen dynamics: equilibrium, forward simulation, inversion and
//! opinion standardization.
//!
//! For a row-stochastic directed graph the equilibrium solves
//! `(2I − A) z = s`; for an undirected graph it solves `(I + L) z = s`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::scalar::Real;
use crate::solver::{self, LinearOperator, SolverConfig};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpinionKind {
    Innate,
    Expressed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpinionVector<T> {
    values: Vec<T>,
    kind: OpinionKind,
    centered: bool,
    scaled: bool,
}

impl<T: Real> OpinionVector<T> {
    pub fn new(values: Vec<T>, kind: OpinionKind) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("opinion of node {i} is not finite")));
        }
        Ok(Self { values, kind, centered: false, scaled: false })
    }

    pub fn innate(values: Vec<T>) -> Result<Self> {
        Self::new(values, OpinionKind::Innate)
    }

    pub fn expressed(values: Vec<T>) -> Result<Self> {
        Self::new(values, OpinionKind::Expressed)
    }

    pub fn zeros(n: usize, kind: OpinionKind) -> Self {
        Self { values: vec![T::zero(); n], kind, centered: true, scaled: false }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn kind(&self) -> OpinionKind {
        self.kind
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn is_scaled(&self) -> bool {
        self.scaled
    }

    pub fn norm(&self) -> T {
        crate::scalar::norm(&self.values)
    }

    /// Same kind, new values (flags reset).
    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        Self::new(values, self.kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SystemForm {
    /// `2I − A`, the row-stochastic directed system.
    Directed,
    /// `I + D − A` with `D` the weighted row sums.
    Undirected,
}

impl SystemForm {
    pub(crate) fn of<T: Real>(g: &Graph<T>) -> Self {
        if g.is_directed() {
            SystemForm::Directed
        } else {
            SystemForm::Undirected
        }
    }
}

/// The FJ system matrix applied matrix-free over a (possibly zero-padded)
/// adjacency, optionally transposed.
pub(crate) struct FjSystem<'a, T> {
    adjacency: &'a CsrMatrix<T>,
    transposed: bool,
    degree: Vec<T>,
    symmetric: bool,
}

impl<'a, T: Real> FjSystem<'a, T> {
    pub(crate) fn new(adjacency: &'a CsrMatrix<T>, form: SystemForm, transposed: bool) -> Self {
        let degree = match form {
            SystemForm::Directed => vec![T::one(); adjacency.dim()],
            SystemForm::Undirected => adjacency.row_sums(),
        };
        let symmetric = form == SystemForm::Undirected && adjacency.is_symmetric();
        Self { adjacency, transposed, degree, symmetric }
    }
}

impl<T: Real> LinearOperator<T> for FjSystem<'_, T> {
    fn dim(&self) -> usize {
        self.adjacency.dim()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        if self.transposed {
            self.adjacency.mul_vec_transpose_into(x, y);
        } else {
            self.adjacency.mul_vec_into(x, y);
        }
        for i in 0..x.len() {
            y[i] = (T::one() + self.degree[i]) * x[i] - y[i];
        }
    }

    fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    fn diagonal(&self) -> Vec<T> {
        self.degree.iter().map(|&d| T::one() + d).collect()
    }
}

pub(crate) fn solve_system<T: Real>(
    adjacency: &CsrMatrix<T>,
    form: SystemForm,
    transposed: bool,
    rhs: &[T],
    cfg: &SolverConfig,
) -> Result<Vec<T>> {
    let op = FjSystem::new(adjacency, form, transposed);
    Ok(solver::solve(&op, rhs, cfg)?.x)
}

pub(crate) fn apply_system<T: Real>(adjacency: &CsrMatrix<T>, form: SystemForm, x: &[T]) -> Vec<T> {
    let op = FjSystem::new(adjacency, form, false);
    let mut y = vec![T::zero(); x.len()];
    op.apply(x, &mut y);
    y
}

fn check_len<T>(g: &Graph<T>, v: &[T]) -> Result<()>
where
    T: Real,
{
    if v.len() != g.n() {
        return Err(Error::Validation(format!("opinion vector has length {}, graph has {} nodes", v.len(), g.n())));
    }
    Ok(())
}

/// Equilibrium expressed opinions `z*` for innate opinions `s`.
pub fn equilibrium<T: Real>(g: &Graph<T>, s: &OpinionVector<T>, cfg: &SolverConfig) -> Result<OpinionVector<T>> {
    check_len(g, s.values())?;
    if g.is_directed() && !g.is_normalized() {
        return Err(Error::NotNormalized);
    }
    let z = solve_system(g.adjacency(), SystemForm::of(g), false, s.values(), cfg)?;
    OpinionVector::expressed(z)
}

/// Applies `z ← (D_out + I)⁻¹ (A z + s)` exactly `steps` times.
pub fn simulate_updates<T: Real>(
    g: &Graph<T>,
    s: &OpinionVector<T>,
    z0: &OpinionVector<T>,
    steps: usize,
) -> Result<OpinionVector<T>> {
    check_len(g, s.values())?;
    check_len(g, z0.values())?;
    let a = g.adjacency();
    let denom: Vec<T> = a.row_sums().into_iter().map(|d| d + T::one()).collect();
    let mut z = z0.values().to_vec();
    let mut az = vec![T::zero(); z.len()];
    for _ in 0..steps {
        a.mul_vec_into(&z, &mut az);
        for i in 0..z.len() {
            z[i] = (az[i] + s.values()[i]) / denom[i];
        }
    }
    OpinionVector::expressed(z)
}

/// Recovers innate opinions from equilibrium ones by a single sparse product:
/// `s = (2I − A) z` (directed) or `s = (I + L) z` (undirected).
pub fn invert_equilibrium<T: Real>(g: &Graph<T>, z: &OpinionVector<T>) -> Result<OpinionVector<T>> {
    check_len(g, z.values())?;
    OpinionVector::innate(apply_system(g.adjacency(), SystemForm::of(g), z.values()))
}

/// Mean 0 and sample standard deviation 1 (divides by `n − 1`).
pub fn standardize<T: Real>(s: &OpinionVector<T>) -> Result<OpinionVector<T>> {
    let n = s.len();
    if n < 2 {
        return Err(Error::Validation("standardization needs at least two opinions".into()));
    }
    let nf = T::lit(n as f64);
    let mean = s.values().iter().copied().sum::<T>() / nf;
    let centered: Vec<T> = s.values().iter().map(|&v| v - mean).collect();
    let var = centered.iter().map(|&v| v * v).sum::<T>() / (nf - T::one());
    let sd = var.sqrt();
    if !(sd > T::zero()) || sd <= T::epsilon() * mean.abs().max(T::one()) {
        return Err(Error::ZeroVariance);
    }
    let mut out = OpinionVector::new(centered.into_iter().map(|v| v / sd).collect(), s.kind())?;
    out.centered = true;
    out.scaled = true;
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct OpinionRow {
    node: usize,
    opinion: f64,
}

/// Reads a `node,opinion` CSV without coverage checks (query files).
pub fn read_opinion_rows(path: impl AsRef<Path>) -> Result<Vec<(usize, f64)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "node" || &headers[1] != "opinion" {
        return Err(Error::Validation(format!("expected header `node,opinion`, got {:?}", headers)));
    }
    let mut rows = Vec::new();
    for rec in reader.deserialize() {
        let row: OpinionRow = rec?;
        if !row.opinion.is_finite() {
            return Err(Error::Validation(format!("opinion of node {} is not finite", row.node)));
        }
        rows.push((row.node, row.opinion));
    }
    Ok(rows)
}

/// Reads a full opinion vector; every node `0..n` must appear exactly once.
pub fn read_opinion_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let rows = read_opinion_rows(path)?;
    let n = rows.len();
    let mut values = vec![None; n];
    for (node, opinion) in rows {
        match values.get_mut(node) {
            Some(slot @ None) => *slot = Some(opinion),
            Some(Some(_)) => return Err(Error::Validation(format!("node {node} listed twice"))),
            None => return Err(Error::Validation(format!("node ids must cover 0..{n}, found {node}"))),
        }
    }
    Ok(values.into_iter().map(|v| v.expect("coverage checked")).collect())
}

pub fn write_opinion_csv(path: impl AsRef<Path>, values: &[f64]) -> Result<()> {
    write_opinion_rows(path, values.iter().copied().enumerate())
}

pub fn write_opinion_rows(path: impl AsRef<Path>, rows: impl IntoIterator<Item = (usize, f64)>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for (node, opinion) in rows {
        writer.serialize(OpinionRow { node, opinion })?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    fs::write(path, bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cycle() -> Graph<f64> {
        Graph::from_edges(2, [(0, 1, 1.0), (1, 0, 1.0)], true).unwrap()
    }

    fn innate(v: Vec<f64>) -> OpinionVector<f64> {
        OpinionVector::innate(v).unwrap()
    }

    #[test]
    fn two_cycle_equilibrium() {
        // (2I − A)⁻¹ = (1/3)[[2, 1], [1, 2]].
        let z = equilibrium(&two_cycle(), &innate(vec![1.0, -1.0]), &SolverConfig::default()).unwrap();
        assert!((z.values()[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((z.values()[1] + 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(z.kind(), OpinionKind::Expressed);
    }

    #[test]
    fn zero_and_empty_graph_cases() {
        let z = equilibrium(&two_cycle(), &innate(vec![0.0, 0.0]), &SolverConfig::default()).unwrap();
        assert_eq!(z.values(), &[0.0, 0.0]);

        let empty = Graph::<f64>::from_edges(3, [], false).unwrap();
        let s = vec![0.3, -1.0, 2.0];
        let z = equilibrium(&empty, &innate(s.clone()), &SolverConfig::default()).unwrap();
        assert_eq!(z.values(), s.as_slice());
    }

    #[test]
    fn unnormalized_directed_is_rejected() {
        let g = Graph::from_edges(2, [(0, 1, 2.0), (1, 0, 1.0)], true).unwrap();
        assert!(matches!(
            equilibrium(&g, &innate(vec![1.0, 0.0]), &SolverConfig::default()),
            Err(Error::NotNormalized)
        ));
    }

    #[test]
    fn simulate_examples() {
        let g = two_cycle();
        let s = innate(vec![1.0, -1.0]);
        let z0 = OpinionVector::zeros(2, OpinionKind::Expressed);
        assert_eq!(simulate_updates(&g, &s, &z0, 0).unwrap().values(), z0.values());
        let z = simulate_updates(&g, &s, &z0, 60).unwrap();
        assert!((z.values()[0] - 1.0 / 3.0).abs() < 1e-6);
        assert!((z.values()[1] + 1.0 / 3.0).abs() < 1e-6);

        let star = equilibrium(&g, &s, &SolverConfig { tolerance: 1e-14, ..Default::default() }).unwrap();
        let again = simulate_updates(&g, &s, &star, 1).unwrap();
        for (a, b) in again.values().iter().zip(star.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn inversion_examples() {
        let g = two_cycle();
        let s = invert_equilibrium(&g, &OpinionVector::expressed(vec![1.0 / 3.0, -1.0 / 3.0]).unwrap()).unwrap();
        assert!((s.values()[0] - 1.0).abs() < 1e-15);
        assert!((s.values()[1] + 1.0).abs() < 1e-15);
        let zero = invert_equilibrium(&g, &OpinionVector::zeros(2, OpinionKind::Expressed)).unwrap();
        assert_eq!(zero.values(), &[0.0, 0.0]);
    }

    #[test]
    fn standardize_examples() {
        // mean 1, sample sd sqrt(((0-1)^2 + (2-1)^2) / 1) = sqrt(2).
        let out = standardize(&innate(vec![0.0, 2.0])).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((out.values()[0] + r).abs() < 1e-15);
        assert!((out.values()[1] - r).abs() < 1e-15);
        assert!(out.is_centered() && out.is_scaled());

        let again = standardize(&out).unwrap();
        for (a, b) in again.values().iter().zip(out.values()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(matches!(standardize(&innate(vec![5.0, 5.0, 5.0])), Err(Error::ZeroVariance)));
    }

    #[test]
    fn csv_round_trip_and_coverage() {
        let dir = std::env::temp_dir().join(format!("opinionlab-fj-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("o.csv");
        write_opinion_csv(&path, &[0.5, -1.25, 3.0]).unwrap();
        assert_eq!(read_opinion_csv(&path).unwrap(), vec![0.5, -1.25, 3.0]);

        fs::write(&path, "node,opinion\n0,1.0\n2,3.0\n").unwrap();
        assert!(read_opinion_csv(&path).is_err());
        fs::write(&path, "id,value\n0,1.0\n").unwrap();
        assert!(read_opinion_csv(&path).is_err());
        fs::remove_dir_all(&dir).ok();
    }
}
