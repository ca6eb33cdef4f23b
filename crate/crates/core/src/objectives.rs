//! The six polarization / disagreement objectives, their gradients with
//! respect to the innate opinions and to the edge weights, and their Lipschitz
//! constants.
//!
//! With `z = (2I − A)⁻¹ s` on a row-stochastic directed graph:
//!
//! * `PDir  = zᵀz`
//! * `DDir  = ½ zᵀ(I + D_in − 2A) z`
//! * `PDDir = PDir + DDir`
//!
//! With `z = (I + L)⁻¹ s` on an undirected graph:
//!
//! * `PUndir  = sᵀ(I + L)⁻²s = zᵀz`
//! * `DUndir  = sᵀ(I + L)⁻¹L(I + L)⁻¹s = zᵀLz`
//! * `PDUndir = sᵀ(I + L)⁻¹s = sᵀz`
//!
//! Weight gradients use the adjoint method: one forward solve for `z`, one
//! transposed solve for the multiplier, never an explicit inverse.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fj::{solve_system, OpinionVector, SystemForm};
use crate::graph::Graph;
use crate::scalar::{dot, Real};
use crate::solver::SolverConfig;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    PDir,
    DDir,
    PdDir,
    PUndir,
    DUndir,
    PdUndir,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 6] = [
        ObjectiveKind::PDir,
        ObjectiveKind::DDir,
        ObjectiveKind::PdDir,
        ObjectiveKind::PUndir,
        ObjectiveKind::DUndir,
        ObjectiveKind::PdUndir,
    ];

    pub fn is_directed(self) -> bool {
        matches!(self, ObjectiveKind::PDir | ObjectiveKind::DDir | ObjectiveKind::PdDir)
    }

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::PDir => "p-dir",
            ObjectiveKind::DDir => "d-dir",
            ObjectiveKind::PdDir => "pd-dir",
            ObjectiveKind::PUndir => "p-undir",
            ObjectiveKind::DUndir => "d-undir",
            ObjectiveKind::PdUndir => "pd-undir",
        }
    }

    fn form(self) -> SystemForm {
        if self.is_directed() {
            SystemForm::Directed
        } else {
            SystemForm::Undirected
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ObjectiveKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown objective {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveValue<T> {
    pub value: T,
    /// Equilibrium `z*` used for the evaluation.
    pub z_star: Vec<T>,
}

/// Weight gradient laid out like the graph: on the adjacency support for
/// directed graphs, per edge (in [`Graph::undirected_edges`] order) otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightGradient<T> {
    Directed(CsrMatrix<T>),
    Undirected(Vec<T>),
}

fn check_graph<T: Real>(kind: ObjectiveKind, g: &Graph<T>, s: &[T]) -> Result<()> {
    if kind.is_directed() != g.is_directed() {
        return Err(Error::DirectednessMismatch {
            kind: kind.name().into(),
            expected: if kind.is_directed() { "directed" } else { "undirected" },
        });
    }
    if kind.is_directed() && !g.is_normalized() {
        return Err(Error::NotNormalized);
    }
    if s.len() != g.n() {
        return Err(Error::Validation(format!("opinion vector has length {}, graph has {} nodes", s.len(), g.n())));
    }
    Ok(())
}

pub fn evaluate<T: Real>(
    kind: ObjectiveKind,
    g: &Graph<T>,
    s: &OpinionVector<T>,
    cfg: &SolverConfig,
) -> Result<ObjectiveValue<T>> {
    check_graph(kind, g, s.values())?;
    evaluate_matrix(kind, g.adjacency(), s.values(), cfg)
}

/// Evaluates the formula of `kind` on a raw adjacency without checking
/// directedness, normalization or symmetry. Directed kinds use `2I − A`;
/// undirected kinds use `L = D_out − A`. On a non-symmetric matrix the
/// undirected kinds use the literal `sᵀ(I + L)⁻²s` and
/// `sᵀ(I + L)⁻¹L(I + L)⁻¹s` forms.
pub fn evaluate_matrix<T: Real>(
    kind: ObjectiveKind,
    a: &CsrMatrix<T>,
    s: &[T],
    cfg: &SolverConfig,
) -> Result<ObjectiveValue<T>> {
    let form = kind.form();
    let z = solve_system(a, form, false, s, cfg)?;
    let value = match kind {
        ObjectiveKind::PDir => dot(&z, &z),
        ObjectiveKind::DDir => directed_disagreement(a, &z),
        ObjectiveKind::PdDir => dot(&z, &z) + directed_disagreement(a, &z),
        ObjectiveKind::PUndir | ObjectiveKind::DUndir if a.is_symmetric() => {
            let p = dot(&z, &z);
            if kind == ObjectiveKind::PUndir {
                p
            } else {
                dot(&z, &laplacian_apply(a, &z))
            }
        }
        ObjectiveKind::PUndir => dot(s, &solve_system(a, form, false, &z, cfg)?),
        ObjectiveKind::DUndir => dot(s, &solve_system(a, form, false, &laplacian_apply(a, &z), cfg)?),
        ObjectiveKind::PdUndir => dot(s, &z),
    };
    Ok(ObjectiveValue { value, z_star: z })
}

/// `½ zᵀ(I + D_in − 2A) z`.
fn directed_disagreement<T: Real>(a: &CsrMatrix<T>, z: &[T]) -> T {
    let d_in = a.col_sums();
    let az = a.mul_vec(z);
    let diag: T = z.iter().zip(&d_in).map(|(&zi, &d)| (T::one() + d) * zi * zi).sum();
    T::lit(0.5) * (diag - T::lit(2.0) * dot(z, &az))
}

/// Symmetric part of the disagreement form applied to `z`:
/// `½(N + Nᵀ) z = z + D_in z − A z − Aᵀ z`.
fn directed_disagreement_grad_z<T: Real>(a: &CsrMatrix<T>, z: &[T]) -> Vec<T> {
    let d_in = a.col_sums();
    let az = a.mul_vec(z);
    let atz = a.mul_vec_transpose(z);
    (0..z.len()).map(|i| (T::one() + d_in[i]) * z[i] - az[i] - atz[i]).collect()
}

fn laplacian_apply<T: Real>(a: &CsrMatrix<T>, x: &[T]) -> Vec<T> {
    let deg = a.row_sums();
    let ax = a.mul_vec(x);
    (0..x.len()).map(|i| deg[i] * x[i] - ax[i]).collect()
}

/// `∂f/∂z` for the directed kinds.
fn directed_grad_z<T: Real>(kind: ObjectiveKind, a: &CsrMatrix<T>, z: &[T]) -> Vec<T> {
    let two = T::lit(2.0);
    match kind {
        ObjectiveKind::PDir => z.iter().map(|&v| two * v).collect(),
        ObjectiveKind::DDir => directed_disagreement_grad_z(a, z),
        ObjectiveKind::PdDir => directed_disagreement_grad_z(a, z)
            .into_iter()
            .zip(z)
            .map(|(d, &v)| d + two * v)
            .collect(),
        _ => unreachable!("directed kinds only"),
    }
}

/// Gradient with respect to the innate opinions.
pub fn grad_wrt_opinions<T: Real>(
    kind: ObjectiveKind,
    g: &Graph<T>,
    s: &OpinionVector<T>,
    cfg: &SolverConfig,
) -> Result<Vec<T>> {
    check_graph(kind, g, s.values())?;
    let a = g.adjacency();
    let form = kind.form();
    let z = solve_system(a, form, false, s.values(), cfg)?;
    let two = T::lit(2.0);
    match kind {
        ObjectiveKind::PDir | ObjectiveKind::DDir | ObjectiveKind::PdDir => {
            solve_system(a, form, true, &directed_grad_z(kind, a, &z), cfg)
        }
        ObjectiveKind::PUndir => {
            let y = solve_system(a, form, false, &z, cfg)?;
            Ok(y.into_iter().map(|v| two * v).collect())
        }
        ObjectiveKind::DUndir => {
            let y = solve_system(a, form, false, &laplacian_apply(a, &z), cfg)?;
            Ok(y.into_iter().map(|v| two * v).collect())
        }
        ObjectiveKind::PdUndir => Ok(z.into_iter().map(|v| two * v).collect()),
    }
}

pub fn grad_wrt_weights<T: Real>(
    kind: ObjectiveKind,
    g: &Graph<T>,
    s: &OpinionVector<T>,
    cfg: &SolverConfig,
) -> Result<WeightGradient<T>> {
    check_graph(kind, g, s.values())?;
    let a = g.adjacency();
    if kind.is_directed() {
        let (_, grad) = directed_value_and_weight_grad(kind, a, s.values(), cfg)?;
        Ok(WeightGradient::Directed(a.with_values(grad)))
    } else {
        let edges: Vec<(usize, usize)> = g.undirected_edges().into_iter().map(|(u, v, _)| (u, v)).collect();
        let (_, grad) = undirected_value_and_edge_grad(kind, a, &edges, s.values(), cfg)?;
        Ok(WeightGradient::Undirected(grad))
    }
}

/// Objective value and `∂f/∂A[i,j]` for every stored entry of `a`, treating
/// entries as independent (no feasibility coupling).
pub(crate) fn directed_value_and_weight_grad<T: Real>(
    kind: ObjectiveKind,
    a: &CsrMatrix<T>,
    s: &[T],
    cfg: &SolverConfig,
) -> Result<(T, Vec<T>)> {
    debug_assert!(kind.is_directed());
    let z = solve_system(a, SystemForm::Directed, false, s, cfg)?;
    let value = match kind {
        ObjectiveKind::PDir => dot(&z, &z),
        ObjectiveKind::DDir => directed_disagreement(a, &z),
        _ => dot(&z, &z) + directed_disagreement(a, &z),
    };
    let lambda = solve_system(a, SystemForm::Directed, true, &directed_grad_z(kind, a, &z), cfg)?;
    let explicit = kind != ObjectiveKind::PDir;
    let half = T::lit(0.5);
    let mut grad = vec![T::zero(); a.nnz()];
    for i in 0..a.dim() {
        for p in a.row_range(i) {
            let j = a.col_idx()[p];
            let mut gij = lambda[i] * z[j];
            if explicit {
                gij = gij + half * z[j] * z[j] - z[i] * z[j];
            }
            grad[p] = gij;
        }
    }
    Ok((value, grad))
}

/// Objective value and `∂f/∂w_e` for the listed undirected edges, where edge
/// `e = {u, v}` contributes `w_e (e_u − e_v)(e_u − e_v)ᵀ` to `L`.
pub(crate) fn undirected_value_and_edge_grad<T: Real>(
    kind: ObjectiveKind,
    a: &CsrMatrix<T>,
    edges: &[(usize, usize)],
    s: &[T],
    cfg: &SolverConfig,
) -> Result<(T, Vec<T>)> {
    debug_assert!(!kind.is_directed());
    let z = solve_system(a, SystemForm::Undirected, false, s, cfg)?;
    let pd_grad = |u: usize, v: usize| {
        let d = z[u] - z[v];
        -(d * d)
    };
    match kind {
        ObjectiveKind::PdUndir => {
            let grad = edges.iter().map(|&(u, v)| pd_grad(u, v)).collect();
            Ok((dot(s, &z), grad))
        }
        _ => {
            let y = solve_system(a, SystemForm::Undirected, false, &z, cfg)?;
            let two = T::lit(2.0);
            let p_grad = |u: usize, v: usize| -two * (y[u] - y[v]) * (z[u] - z[v]);
            let p = dot(&z, &z);
            if kind == ObjectiveKind::PUndir {
                Ok((p, edges.iter().map(|&(u, v)| p_grad(u, v)).collect()))
            } else {
                let grad = edges.iter().map(|&(u, v)| pd_grad(u, v) - p_grad(u, v)).collect();
                Ok((dot(s, &z) - p, grad))
            }
        }
    }
}

/// Lipschitz constant of `s ↦ f(s, L)` for the given graph.
pub fn lipschitz_constant<T: Real>(kind: ObjectiveKind, g: &Graph<T>) -> T {
    let delta = g.degrees().max_in_degree;
    match kind {
        ObjectiveKind::PDir | ObjectiveKind::PUndir | ObjectiveKind::PdUndir => T::lit(2.0),
        ObjectiveKind::DDir => T::one() + delta,
        ObjectiveKind::PdDir => T::one(),
        ObjectiveKind::DUndir => T::lit(2.0) * delta,
    }
}
