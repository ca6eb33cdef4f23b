use super::adam::Adam;
use super::projection::project_simplex_in_place;
use super::{feasibility_slack, relative_change, OptimizationResult, OptimizerConfig, StopReason};
use crate::error::{Error, Result};
use crate::fj::OpinionVector;
use crate::graph::Graph;
use crate::objectives::{directed_value_and_weight_grad, ObjectiveKind};
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

/// `C(A)`: nonnegative weights on the input support with the input row sums.
#[derive(Debug, Clone)]
pub struct FeasibleSetDirected<T> {
    support: CsrMatrix<T>,
    row_targets: Vec<T>,
}

impl<T: Real> FeasibleSetDirected<T> {
    pub fn of(g: &Graph<T>) -> Self {
        let support = g.adjacency().clone();
        let row_targets = support.row_sums();
        Self { support, row_targets }
    }

    pub fn row_targets(&self) -> &[T] {
        &self.row_targets
    }

    /// Projects every nonempty row onto its simplex, in row order.
    pub fn project(&self, values: &mut [T]) {
        for i in 0..self.support.dim() {
            let range = self.support.row_range(i);
            if !range.is_empty() {
                project_simplex_in_place(&mut values[range], self.row_targets[i]);
            }
        }
    }

    /// Checks nonnegativity and row sums; the support is fixed by layout.
    pub fn check(&self, values: &[T]) -> std::result::Result<(), String> {
        let slack = feasibility_slack::<T>();
        if let Some(p) = values.iter().position(|&v| !(v >= T::zero())) {
            return Err(format!("negative or non-finite weight at support position {p}"));
        }
        for i in 0..self.support.dim() {
            let sum: T = values[self.support.row_range(i)].iter().copied().sum();
            if (sum - self.row_targets[i]).abs() > slack {
                return Err(format!("row {i} sums to {sum}, expected {}", self.row_targets[i]));
            }
        }
        Ok(())
    }

    pub fn contains(&self, values: &[T]) -> bool {
        values.len() == self.support.nnz() && self.check(values).is_ok()
    }

    fn matrix(&self, values: &[T]) -> CsrMatrix<T> {
        self.support.with_values(values.to_vec())
    }

    /// Materializes a graph, dropping weights that reached zero.
    pub fn graph(&self, values: &[T]) -> Result<Graph<T>> {
        let triplets = self
            .support
            .iter()
            .zip(values)
            .filter(|(_, &w)| w > T::zero())
            .map(|((i, j, _), &w)| (i, j, w));
        Graph::from_adjacency(CsrMatrix::from_triplets(self.support.dim(), triplets), true)
    }
}

/// ADAM on the support entries followed by per-row simplex projection, with
/// the relative-change early stop.
pub fn optimize_directed<T: Real>(
    g: &Graph<T>,
    s_hat: &OpinionVector<T>,
    kind: ObjectiveKind,
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult<T>> {
    cfg.validate()?;
    if !kind.is_directed() || !g.is_directed() {
        return Err(Error::DirectednessMismatch { kind: kind.name().into(), expected: "directed" });
    }
    if !g.is_normalized() {
        return Err(Error::NotNormalized);
    }
    if s_hat.len() != g.n() {
        return Err(Error::Validation("opinion vector length does not match graph".into()));
    }
    let set = FeasibleSetDirected::of(g);
    let s = s_hat.values();
    let at = |iteration: usize| move |e: Error| Error::AtIteration { iteration, source: Box::new(e) };
    let value_grad = |values: &[T]| directed_value_and_weight_grad(kind, &set.matrix(values), s, &cfg.solver);

    let mut x = g.adjacency().values().to_vec();
    let (mut f_prev, mut grad) = value_grad(&x).map_err(at(0))?;
    let mut trajectory = vec![f_prev];
    let mut adam = Adam::new(x.len(), cfg.beta1, cfg.beta2, cfg.eps);
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
            let mut cand: Vec<T> = x.iter().zip(&dir).map(|(&xi, &di)| xi - lr * di).collect();
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

        x = cand;
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

    Ok(OptimizationResult {
        graph: set.graph(&x)?,
        iterations: trajectory.len(),
        weights: x,
        trajectory,
        stop_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fj::OpinionKind;
    use crate::graph::row_normalize;

    #[test]
    fn zero_opinions_return_input() {
        let g = row_normalize(&Graph::from_edges(3, [(0, 1, 1.0), (0, 2, 2.0), (1, 2, 1.0), (2, 0, 1.0)], true).unwrap())
            .unwrap();
        let s = OpinionVector::zeros(3, OpinionKind::Innate);
        let r = optimize_directed(&g, &s, ObjectiveKind::PDir, &OptimizerConfig::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.trajectory, vec![0.0]);
        assert_eq!(r.stop_reason, StopReason::ZeroGradient);
        assert_eq!(r.graph, g);
    }

    #[test]
    fn singleton_rows_are_fixed() {
        let g = Graph::from_edges(2, [(0, 1, 1.0), (1, 0, 1.0)], true).unwrap();
        let s = OpinionVector::innate(vec![1.0, -0.5]).unwrap();
        for kind in [ObjectiveKind::PDir, ObjectiveKind::DDir, ObjectiveKind::PdDir] {
            let r = optimize_directed(&g, &s, kind, &OptimizerConfig::default()).unwrap();
            assert_eq!(r.graph, g);
        }
    }

    #[test]
    fn rejects_undirected_input() {
        let g = Graph::from_edges(2, [(0, 1, 1.0)], false).unwrap();
        let s = OpinionVector::innate(vec![1.0, -1.0]).unwrap();
        assert!(optimize_directed(&g, &s, ObjectiveKind::PDir, &OptimizerConfig::default()).is_err());
    }
}
