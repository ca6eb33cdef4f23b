//! Weighted sparse graphs, preprocessing, degrees and the Laplacian.
//!
//! Row `i` of the adjacency lists the accounts node `i` follows: a stored
//! entry `(i, j)` means `j` influences `i` with the given weight.

mod io;

pub use io::{load_edge_list, load_edge_list_with_ids, parse_edge_list, write_edge_list, EdgeListIds};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph<T> {
    directed: bool,
    adjacency: CsrMatrix<T>,
    normalized: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVectors<T> {
    pub out_degree: Vec<T>,
    pub in_degree: Vec<T>,
    /// Δ(G), the maximum weighted in-degree.
    pub max_in_degree: T,
}

/// Result of [`preprocess`]: the cleaned graph plus the old→new id map.
#[derive(Debug, Clone)]
pub struct Preprocessed<T> {
    pub graph: Graph<T>,
    pub old_to_new: Vec<Option<usize>>,
}

impl<T: Real> Graph<T> {
    /// Validates an adjacency matrix: strictly positive finite weights, no
    /// self-loops, and symmetry when undirected.
    pub fn from_adjacency(adjacency: CsrMatrix<T>, directed: bool) -> Result<Self> {
        for (i, j, w) in adjacency.iter() {
            if i == j {
                return Err(Error::Validation(format!("self-loop at node {i}")));
            }
            if !(w.is_finite() && w > T::zero()) {
                return Err(Error::Validation(format!("weight of edge ({i}, {j}) must be positive, got {w}")));
            }
        }
        if !directed && !adjacency.is_symmetric() {
            return Err(Error::Validation("undirected adjacency must be symmetric".into()));
        }
        let normalized = directed && rows_are_stochastic(&adjacency);
        Ok(Self { directed, adjacency, normalized })
    }

    /// Builds a graph from an edge list. Self-loops are dropped and duplicate
    /// edges are merged by summing their weights. Each undirected edge is stored
    /// in both directions.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, T)>, directed: bool) -> Result<Self> {
        let mut triplets = Vec::new();
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::Validation(format!("edge ({u}, {v}) out of range for {n} nodes")));
            }
            if !(w.is_finite() && w > T::zero()) {
                return Err(Error::Validation(format!("weight of edge ({u}, {v}) must be positive, got {w}")));
            }
            if u == v {
                continue;
            }
            triplets.push((u, v, w));
            if !directed {
                triplets.push((v, u, w));
            }
        }
        Self::from_adjacency(CsrMatrix::from_triplets(n, triplets), directed)
    }

    /// Dense constructor, mostly for small hand-written instances.
    pub fn from_dense(rows: &[Vec<T>], directed: bool) -> Result<Self> {
        Self::from_adjacency(CsrMatrix::from_dense(rows), directed)
    }

    pub fn n(&self) -> usize {
        self.adjacency.dim()
    }

    pub fn num_edges(&self) -> usize {
        if self.directed {
            self.adjacency.nnz()
        } else {
            self.adjacency.nnz() / 2
        }
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn adjacency(&self) -> &CsrMatrix<T> {
        &self.adjacency
    }

    pub fn weight(&self, i: usize, j: usize) -> T {
        self.adjacency.get(i, j)
    }

    /// Out-neighbors of `i` (the nodes `i` follows).
    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        self.adjacency.row(i).0
    }

    /// Each undirected edge once as `(u, v, w)` with `u < v`, in row-major order.
    pub fn undirected_edges(&self) -> Vec<(usize, usize, T)> {
        self.adjacency.iter().filter(|&(i, j, _)| i < j).collect()
    }

    pub fn degrees(&self) -> DegreeVectors<T> {
        let out_degree = self.adjacency.row_sums();
        let in_degree = if self.directed { self.adjacency.col_sums() } else { out_degree.clone() };
        let max_in_degree = in_degree.iter().copied().fold(T::zero(), T::max);
        DegreeVectors { out_degree, in_degree, max_in_degree }
    }

    pub fn laplacian(&self) -> LaplacianView<'_, T> {
        LaplacianView { graph: self }
    }

    /// The adjacency of `A + Aᵀ` as an undirected graph (weights of reciprocal
    /// edges add up).
    pub fn symmetrized(&self) -> Graph<T> {
        if !self.directed {
            return self.clone();
        }
        let sym = CsrMatrix::from_triplets(
            self.n(),
            self.adjacency.iter().flat_map(|(i, j, w)| [(i, j, w), (j, i, w)]),
        );
        Graph { directed: false, adjacency: sym, normalized: false }
    }
}

fn rows_are_stochastic<T: Real>(a: &CsrMatrix<T>) -> bool {
    let tol = T::lit(T::FEASIBILITY_TOL);
    a.dim() > 0 && a.row_sums().iter().all(|&s| (s - T::one()).abs() <= tol)
}

/// Iteratively removes nodes with zero out-degree (directed) or zero degree
/// (undirected) until none remain, then relabels the survivors contiguously.
pub fn preprocess<T: Real>(g: &Graph<T>) -> Result<Preprocessed<T>> {
    let n = g.n();
    let a = g.adjacency();
    let mut alive = vec![true; n];
    let mut out_deg: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    // Reverse adjacency so removing a sink can decrement its followers.
    let followers = a.transpose();
    let mut stack: Vec<usize> = (0..n).filter(|&i| out_deg[i] == 0).collect();
    while let Some(v) = stack.pop() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        for &u in followers.row(v).0 {
            if alive[u] {
                out_deg[u] -= 1;
                if out_deg[u] == 0 {
                    stack.push(u);
                }
            }
        }
    }

    let mut old_to_new = vec![None; n];
    let mut next = 0;
    for (i, slot) in old_to_new.iter_mut().enumerate() {
        if alive[i] {
            *slot = Some(next);
            next += 1;
        }
    }
    if next == 0 {
        return Err(Error::NoUsableNodes);
    }
    let triplets = a
        .iter()
        .filter_map(|(i, j, w)| Some((old_to_new[i]?, old_to_new[j]?, w)));
    let adjacency = CsrMatrix::from_triplets(next, triplets);
    let graph = Graph::from_adjacency(adjacency, g.is_directed())?;
    Ok(Preprocessed { graph, old_to_new })
}

/// Divides every row by its sum, producing a row-stochastic adjacency.
pub fn row_normalize<T: Real>(g: &Graph<T>) -> Result<Graph<T>> {
    if !g.is_directed() {
        return Err(Error::Validation("row normalization applies to directed graphs".into()));
    }
    let a = g.adjacency();
    let sums = a.row_sums();
    if let Some(row) = sums.iter().position(|&s| s <= T::zero()) {
        return Err(Error::ZeroRowSum { row });
    }
    let mut values = a.values().to_vec();
    for (i, &s) in sums.iter().enumerate() {
        for p in a.row_range(i) {
            values[p] = values[p] / s;
        }
    }
    let adjacency = a.with_values(values);
    Ok(Graph { directed: true, normalized: rows_are_stochastic(&adjacency), adjacency })
}

/// `L = D_out − A` (equal to `I − A` for a row-stochastic directed graph).
#[derive(Debug, Clone, Copy)]
pub struct LaplacianView<'a, T> {
    graph: &'a Graph<T>,
}

impl<T: Real> LaplacianView<'_, T> {
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let a = self.graph.adjacency();
        let deg = a.row_sums();
        let ax = a.mul_vec(x);
        deg.iter().zip(x).zip(ax).map(|((&d, &xi), axi)| d * xi - axi).collect()
    }

    pub fn quadratic_form(&self, x: &[T]) -> T {
        crate::scalar::dot(x, &self.apply(x))
    }

    pub fn diagonal(&self) -> Vec<T> {
        self.graph.adjacency().row_sums()
    }

    pub fn trace(&self) -> T {
        self.diagonal().into_iter().sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut m = self.graph.adjacency().to_dense();
        let deg = self.diagonal();
        for (i, row) in m.iter_mut().enumerate() {
            for v in row.iter_mut() {
                *v = -*v;
            }
            row[i] = row[i] + deg[i];
        }
        m
    }
}
