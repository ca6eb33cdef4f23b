use super::adam::Adam;
use super::projection::project_simplex_in_place;
use super::{feasibility_slack, relative_change, OptimizationResult, OptimizerConfig, StopReason, UndirectedMode};
use crate::error::{Error, Result};
use crate::fj::OpinionVector;
use crate::graph::Graph;
use crate::objectives::{undirected_value_and_edge_grad, ObjectiveKind};
use crate::scalar::{dot, Real};
use crate::sparse::CsrMatrix;

/// `C(L)` realized on edge weights: `w ≥ 0` on the input edges with
/// `Σ w = Tr(L) / 2`.
#[derive(Debug, Clone)]
pub struct FeasibleSetUndirected<T> {
    support: CsrMatrix<T>,
    edges: Vec<(usize, usize)>,
    /// CSR positions of `(u, v)` and `(v, u)` for every edge.
    positions: Vec<(usize, usize)>,
    total_weight: T,
}

impl<T: Real> FeasibleSetUndirected<T> {
    pub fn of(g: &Graph<T>) -> Self {
        let support = g.adjacency().clone();
        let edge_list = g.undirected_edges();
        let edges: Vec<(usize, usize)> = edge_list.iter().map(|&(u, v, _)| (u, v)).collect();
        let positions = edges
            .iter()
            .map(|&(u, v)| {
                (
                    support.position(u, v).expect("edge on support"),
                    support.position(v, u).expect("undirected support is symmetric"),
                )
            })
            .collect();
        let total_weight = edge_list.iter().map(|&(_, _, w)| w).sum();
        Self { support, edges, positions, total_weight }
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn total_weight(&self) -> T {
        self.total_weight
    }

    pub fn project(&self, weights: &mut [T]) {
        project_simplex_in_place(weights, self.total_weight);
    }

    pub fn check(&self, weights: &[T]) -> std::result::Result<(), String> {
        if let Some(e) = weights.iter().position(|&w| !(w >= T::zero())) {
            return Err(format!("negative or non-finite weight on edge {:?}", self.edges[e]));
        }
        let sum: T = weights.iter().copied().sum();
        if (sum - self.total_weight).abs() > feasibility_slack::<T>() * self.total_weight.max(T::one()) {
            return Err(format!("total weight {sum}, expected {}", self.total_weight));
        }
        Ok(())
    }

    pub fn contains(&self, weights: &[T]) -> bool {
        weights.len() == self.edges.len() && self.check(weights).is_ok()
    }

    fn matrix(&self, weights: &[T]) -> CsrMatrix<T> {
        let mut values = vec![T::zero(); self.support.nnz()];
        for (&(p, q), &w) in self.positions.iter().zip(weights) {
            values[p] = w;
            values[q] = w;
        }
        self.support.with_values(values)
    }

    pub fn graph(&self, weights: &[T]) -> Result<Graph<T>> {
        let n = self.support.dim();
        let edges = self.edges.iter().zip(weights).filter(|(_, &w)| w > T::zero()).map(|(&(u, v), &w)| (u, v, w));
        Graph::from_edges(n, edges, false)
    }
}

/// Projected gradient over edge weights. `Converge` mode uses plain steps with
/// backtracking and is monotone; `Fast` mode mirrors the directed ADAM loop.
pub fn optimize_undirected<T: Real>(
    g: &Graph<T>,
    s_hat: &OpinionVector<T>,
    kind: ObjectiveKind,
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult<T>> {
    cfg.validate()?;
    if kind.is_directed() || g.is_directed() {
        return Err(Error::DirectednessMismatch { kind: kind.name().into(), expected: "undirected" });
    }
    if s_hat.len() != g.n() {
        return Err(Error::Validation("opinion vector length does not match graph".into()));
    }
    let set = FeasibleSetUndirected::of(g);
    let w0: Vec<T> = g.undirected_edges().into_iter().map(|(_, _, w)| w).collect();
    if w0.is_empty() {
        let f = crate::objectives::evaluate(kind, g, s_hat, &cfg.solver)?.value;
        return Ok(OptimizationResult {
            graph: g.clone(),
            weights: w0,
            trajectory: vec![f],
            iterations: 1,
            stop_reason: StopReason::ZeroGradient,
        });
    }
    match cfg.mode_for(kind) {
        UndirectedMode::Fast => fast(&set, w0, s_hat.values(), kind, cfg),
        UndirectedMode::Converge => converge(&set, w0, s_hat.values(), kind, cfg),
    }
}

fn at(iteration: usize) -> impl Fn(Error) -> Error {
    move |e| Error::AtIteration { iteration, source: Box::new(e) }
}

fn fast<T: Real>(
    set: &FeasibleSetUndirected<T>,
    mut w: Vec<T>,
    s: &[T],
    kind: ObjectiveKind,
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult<T>> {
    let value_grad = |w: &[T]| undirected_value_and_edge_grad(kind, &set.matrix(w), &set.edges, s, &cfg.solver);
    let (mut f_prev, mut grad) = value_grad(&w).map_err(at(0))?;
    let mut trajectory = vec![f_prev];
    let mut adam = Adam::new(w.len(), cfg.beta1, cfg.beta2, cfg.eps);
    let mut lr = T::lit(cfg.lr);
    let ten = T::lit(10.0);

    let stop_reason = loop {
        if grad.iter().all(|&v| v == T::zero()) {
            break StopReason::ZeroGradient;
        }
        if trajectory.len() > cfg.max_iterations {
            break StopReason::MaxIterations;
        }
        let iteration = trajectory.len();
        let dir = adam.direction(&grad);
        let step = |lr: T| {
            let mut cand: Vec<T> = w.iter().zip(&dir).map(|(&wi, &di)| wi - lr * di).collect();
            set.project(&mut cand);
            cand
        };
        let mut cand = step(lr);
        let (mut f_new, mut grad_new) = value_grad(&cand).map_err(at(iteration))?;
        if cfg.step_rejection && f_prev > T::zero() && f_new > ten * f_prev {
            lr = lr * T::lit(0.5);
            cand = step(lr);
            (f_new, grad_new) = value_grad(&cand).map_err(at(iteration))?;
        }
        set.check(&cand).map_err(|detail| Error::Infeasible { iteration, detail })?;
        w = cand;
        grad = grad_new;
        trajectory.push(f_new);
        if f_prev == T::zero() {
            break StopReason::ZeroObjective;
        }
        let rel = relative_change(f_prev, f_new);
        f_prev = f_new;
        if rel < T::lit(cfg.early_stop) {
            break StopReason::EarlyStop;
        }
    };
    finish(set, w, trajectory, stop_reason)
}

fn converge<T: Real>(
    set: &FeasibleSetUndirected<T>,
    mut w: Vec<T>,
    s: &[T],
    kind: ObjectiveKind,
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult<T>> {
    let value_grad = |w: &[T]| undirected_value_and_edge_grad(kind, &set.matrix(w), &set.edges, s, &cfg.solver);
    let (mut f, mut grad) = value_grad(&w).map_err(at(0))?;
    let mut trajectory = vec![f];
    let tol = T::lit(cfg.converge_tolerance);
    let half = T::lit(0.5);
    let monotone_slack = T::lit(1e-12);
    // Initial step scaled so the first move is comparable to the weights.
    let gmax = grad.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let mut alpha = if gmax > T::zero() { set.total_weight / gmax } else { T::one() };

    let stop_reason = loop {
        if grad.iter().all(|&v| v == T::zero()) {
            break StopReason::ZeroGradient;
        }
        if trajectory.len() > cfg.converge_max_iterations {
            break StopReason::MaxIterations;
        }
        let iteration = trajectory.len();
        alpha = alpha * T::lit(2.0);
        let mut accepted = None;
        for _ in 0..60 {
            let mut cand: Vec<T> = w.iter().zip(&grad).map(|(&wi, &gi)| wi - alpha * gi).collect();
            set.project(&mut cand);
            let d: Vec<T> = cand.iter().zip(&w).map(|(&c, &wi)| c - wi).collect();
            let dd = dot(&d, &d);
            if dd == T::zero() {
                break;
            }
            let (f_new, grad_new) = value_grad(&cand).map_err(at(iteration))?;
            // Sufficient decrease for the projected step.
            if f_new <= f + dot(&grad, &d) + dd / (T::lit(2.0) * alpha) && f_new <= f + monotone_slack {
                accepted = Some((cand, f_new, grad_new));
                break;
            }
            alpha = alpha * half;
        }
        let Some((cand, f_new, grad_new)) = accepted else {
            break StopReason::Stalled;
        };
        set.check(&cand).map_err(|detail| Error::Infeasible { iteration, detail })?;
        w = cand;
        grad = grad_new;
        trajectory.push(f_new);
        if f == T::zero() {
            break StopReason::ZeroObjective;
        }
        let rel = relative_change(f, f_new);
        f = f_new;
        if rel < tol {
            break StopReason::Converged;
        }
    };
    finish(set, w, trajectory, stop_reason)
}

fn finish<T: Real>(
    set: &FeasibleSetUndirected<T>,
    w: Vec<T>,
    trajectory: Vec<T>,
    stop_reason: StopReason,
) -> Result<OptimizationResult<T>> {
    Ok(OptimizationResult { graph: set.graph(&w)?, iterations: trajectory.len(), weights: w, trajectory, stop_reason })
}
