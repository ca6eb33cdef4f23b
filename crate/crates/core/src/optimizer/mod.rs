//! Projected-gradient re-weighting of the network over the feasible sets.
//!
//! Directed graphs keep their support and every row sum (`C(A)`); undirected
//! graphs keep their edge support and their total weight `Tr(L)/2` (`C(L)`),
//! optimizing per-edge weights so that the Laplacian stays PSD by
//! construction.

mod adam;
mod directed;
mod projection;
mod undirected;

pub use directed::{optimize_directed, FeasibleSetDirected};
pub use projection::project_simplex;
pub use undirected::{optimize_undirected, FeasibleSetUndirected};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fj::OpinionVector;
use crate::graph::Graph;
use crate::objectives::{lipschitz_constant, ObjectiveKind};
use crate::scalar::Real;
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UndirectedMode {
    /// ADAM steps with the relative-change early stop.
    Fast,
    /// Plain projected gradient with backtracking, run to `converge_tolerance`.
    Converge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Stop once `|f_t − f_{t−1}| / |f_{t−1}|` falls below this.
    pub early_stop: f64,
    pub max_iterations: usize,
    /// Halve the learning rate and retry a step that multiplies the objective
    /// by more than ten. Off in strict mode.
    pub step_rejection: bool,
    /// `None` picks `Converge` for `PdUndir` and `Fast` for the other
    /// undirected objectives.
    pub undirected_mode: Option<UndirectedMode>,
    pub converge_tolerance: f64,
    pub converge_max_iterations: usize,
    pub solver: SolverConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            lr: 0.2,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            early_stop: 0.20,
            max_iterations: 500,
            step_rejection: true,
            undirected_mode: None,
            converge_tolerance: 1e-6,
            converge_max_iterations: 20_000,
            solver: SolverConfig::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn strict() -> Self {
        Self { step_rejection: false, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lr", self.lr),
            ("eps", self.eps),
            ("early_stop", self.early_stop),
            ("converge_tolerance", self.converge_tolerance),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("optimizer {name} must be positive")));
            }
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Validation(format!("optimizer {name} must lie in [0, 1)")));
            }
        }
        if self.max_iterations == 0 || self.converge_max_iterations == 0 {
            return Err(Error::Validation("optimizer iteration caps must be positive".into()));
        }
        self.solver.validate()
    }

    pub(crate) fn mode_for(&self, kind: ObjectiveKind) -> UndirectedMode {
        self.undirected_mode.unwrap_or(if kind == ObjectiveKind::PdUndir {
            UndirectedMode::Converge
        } else {
            UndirectedMode::Fast
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    EarlyStop,
    Converged,
    ZeroGradient,
    ZeroObjective,
    MaxIterations,
    /// Backtracking could not find a decreasing step.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult<T> {
    /// Final graph; weights driven to zero are dropped from its support.
    pub graph: Graph<T>,
    /// Final weights on the input support: adjacency values in CSR order for
    /// directed graphs, per-edge weights for undirected graphs.
    pub weights: Vec<T>,
    /// Objective at the start and after every accepted step.
    pub trajectory: Vec<T>,
    /// Number of evaluated iterates, `trajectory.len()`.
    pub iterations: usize,
    pub stop_reason: StopReason,
}

impl<T: Real> OptimizationResult<T> {
    pub fn final_objective(&self) -> T {
        *self.trajectory.last().expect("trajectory holds the starting point")
    }
}

/// Dispatches on the directedness of `kind`.
pub fn optimize<T: Real>(
    g: &Graph<T>,
    s_hat: &OpinionVector<T>,
    kind: ObjectiveKind,
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult<T>> {
    if kind.is_directed() {
        optimize_directed(g, s_hat, kind, cfg)
    } else {
        optimize_undirected(g, s_hat, kind, cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalBound<T> {
    pub lipschitz: T,
    pub reconstruction_error: T,
    /// `2 K ‖s − ŝ‖`.
    pub additive: T,
    /// `1 + 2 K ‖s − ŝ‖ / f*`, absent when `f* = 0`.
    pub ratio: Option<T>,
}

/// Optimization-error bounds implied by the Lipschitz constant of `kind`.
pub fn theoretical_bound<T: Real>(
    kind: ObjectiveKind,
    g: &Graph<T>,
    s_true: &OpinionVector<T>,
    s_hat: &OpinionVector<T>,
    f_star: T,
) -> Result<TheoreticalBound<T>> {
    if s_true.len() != s_hat.len() {
        return Err(Error::Validation("opinion vectors differ in length".into()));
    }
    let err = crate::scalar::norm(
        &s_true.values().iter().zip(s_hat.values()).map(|(&a, &b)| a - b).collect::<Vec<T>>(),
    );
    Ok(bound_from_parts(lipschitz_constant(kind, g), err, f_star))
}

pub(crate) fn bound_from_parts<T: Real>(lipschitz: T, reconstruction_error: T, f_star: T) -> TheoreticalBound<T> {
    let additive = T::lit(2.0) * lipschitz * reconstruction_error;
    let ratio = (f_star != T::zero()).then(|| T::one() + additive / f_star);
    TheoreticalBound { lipschitz, reconstruction_error, additive, ratio }
}

pub(crate) fn relative_change<T: Real>(prev: T, next: T) -> T {
    (next - prev).abs() / prev.abs()
}

pub(crate) fn feasibility_slack<T: Real>() -> T {
    T::lit(T::FEASIBILITY_TOL.max(1e-8))
}
