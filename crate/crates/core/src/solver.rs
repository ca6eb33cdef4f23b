//! Krylov solvers for the sparse systems `(I + L) x = b` and `(2I − A) x = b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    /// Conjugate gradient for symmetric systems, BiCGStab otherwise.
    #[default]
    Auto,
    ConjugateGradient,
    BiCgStab,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Target relative residual `‖b − Ax‖ / ‖b‖`.
    pub tolerance: f64,
    /// Iteration cap; `None` means `10 n`.
    pub max_iterations: Option<usize>,
    pub method: SolverMethod,
    /// Diagonal (Jacobi) preconditioning.
    pub jacobi: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iterations: None, method: SolverMethod::Auto, jacobi: false }
    }
}

impl SolverConfig {
    pub fn for_scalar<T: Real>() -> Self {
        Self { tolerance: T::DEFAULT_SOLVER_TOL, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Validation("solver tolerance must be positive".into()));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::Validation("solver max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    fn cap(&self, n: usize) -> usize {
        self.max_iterations.unwrap_or((10 * n).max(10))
    }
}

/// A square linear map applied matrix-free.
pub trait LinearOperator<T> {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
    fn is_symmetric(&self) -> bool;
    fn diagonal(&self) -> Vec<T>;
}

#[derive(Debug, Clone)]
pub struct SolveOutcome<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub relative_residual: f64,
}

pub fn solve<T: Real, Op: LinearOperator<T>>(op: &Op, b: &[T], cfg: &SolverConfig) -> Result<SolveOutcome<T>> {
    cfg.validate()?;
    let n = op.dim();
    assert_eq!(b.len(), n, "right-hand side has wrong length");
    let b_norm = norm(b);
    if b_norm == T::zero() {
        return Ok(SolveOutcome { x: vec![T::zero(); n], iterations: 0, relative_residual: 0.0 });
    }
    let inv_diag = cfg.jacobi.then(|| {
        op.diagonal()
            .into_iter()
            .map(|d| if d != T::zero() { T::one() / d } else { T::one() })
            .collect::<Vec<T>>()
    });
    let symmetric = match cfg.method {
        SolverMethod::Auto => op.is_symmetric(),
        SolverMethod::ConjugateGradient => true,
        SolverMethod::BiCgStab => false,
    };
    let (x, iterations) = if symmetric {
        conjugate_gradient(op, b, b_norm, cfg, inv_diag.as_deref())
    } else {
        bicgstab(op, b, b_norm, cfg, inv_diag.as_deref())
    };

    let mut ax = vec![T::zero(); n];
    op.apply(&x, &mut ax);
    let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
    let relative_residual = (norm(&r) / b_norm).to_f64_lossy();
    if !(relative_residual <= cfg.tolerance) {
        return Err(Error::SolverDidNotConverge { iterations, residual: relative_residual });
    }
    Ok(SolveOutcome { x, iterations, relative_residual })
}

fn precondition<T: Real>(inv_diag: Option<&[T]>, r: &[T]) -> Vec<T> {
    match inv_diag {
        Some(d) => r.iter().zip(d).map(|(&a, &b)| a * b).collect(),
        None => r.to_vec(),
    }
}

fn conjugate_gradient<T: Real, Op: LinearOperator<T>>(
    op: &Op,
    b: &[T],
    b_norm: T,
    cfg: &SolverConfig,
    inv_diag: Option<&[T]>,
) -> (Vec<T>, usize) {
    let n = b.len();
    let tol = T::lit(cfg.tolerance) * b_norm;
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut z = precondition(inv_diag, &r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![T::zero(); n];
    for it in 1..=cfg.cap(n) {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= T::zero() {
            return (x, it);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        if norm(&r) <= tol * T::lit(0.5) {
            return (x, it);
        }
        z = precondition(inv_diag, &r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    (x, cfg.cap(n))
}

fn bicgstab<T: Real, Op: LinearOperator<T>>(
    op: &Op,
    b: &[T],
    b_norm: T,
    cfg: &SolverConfig,
    inv_diag: Option<&[T]>,
) -> (Vec<T>, usize) {
    let n = b.len();
    let tol = T::lit(cfg.tolerance) * b_norm * T::lit(0.5);
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (T::one(), T::one(), T::one());
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut s = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    for it in 1..=cfg.cap(n) {
        let mut rho_new = dot(&r_hat, &r);
        if rho_new.abs() <= T::epsilon() * dot(&r, &r) {
            // Shadow residual became orthogonal; restart the recurrence.
            r_hat.copy_from_slice(&r);
            rho_new = dot(&r, &r);
            p.iter_mut().for_each(|e| *e = T::zero());
            v.iter_mut().for_each(|e| *e = T::zero());
            rho = T::one();
            alpha = T::one();
            omega = T::one();
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat = precondition(inv_diag, &p);
        op.apply(&p_hat, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == T::zero() {
            return (x, it);
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= tol {
            for i in 0..n {
                x[i] = x[i] + alpha * p_hat[i];
            }
            return (x, it);
        }
        let s_hat = precondition(inv_diag, &s);
        op.apply(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > T::zero() { dot(&t, &s) / tt } else { T::zero() };
        for i in 0..n {
            x[i] = x[i] + alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm(&r) <= tol || omega == T::zero() {
            return (x, it);
        }
    }
    (x, cfg.cap(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dense(Vec<Vec<f64>>);

    impl LinearOperator<f64> for Dense {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            for (yi, row) in y.iter_mut().zip(&self.0) {
                *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
            }
        }
        fn is_symmetric(&self) -> bool {
            let n = self.0.len();
            (0..n).all(|i| (0..n).all(|j| self.0[i][j] == self.0[j][i]))
        }
        fn diagonal(&self) -> Vec<f64> {
            (0..self.0.len()).map(|i| self.0[i][i]).collect()
        }
    }

    #[test]
    fn cg_and_bicgstab_solve_small_systems() {
        let spd = Dense(vec![vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]]);
        let b = [1.0, 2.0, 3.0];
        for jacobi in [false, true] {
            let cfg = SolverConfig { jacobi, ..SolverConfig::default() };
            let out = solve(&spd, &b, &cfg).unwrap();
            assert!(out.relative_residual <= 1e-8);
        }
        let nonsym = Dense(vec![vec![2.0, -1.0, 0.0], vec![-0.5, 2.0, -0.5], vec![-1.0, 0.0, 2.0]]);
        let out = solve(&nonsym, &b, &SolverConfig::default()).unwrap();
        assert!(out.relative_residual <= 1e-8);
    }

    #[test]
    fn zero_rhs_is_zero() {
        let op = Dense(vec![vec![2.0, 0.0], vec![0.0, 2.0]]);
        let out = solve(&op, &[0.0, 0.0], &SolverConfig::default()).unwrap();
        assert_eq!(out.x, vec![0.0, 0.0]);
    }

    #[test]
    fn non_convergence_reports_residual() {
        let op = Dense(vec![vec![1.0, 0.9, 0.2], vec![0.3, 1.0, 0.7], vec![0.5, 0.1, 1.0]]);
        let cfg = SolverConfig { max_iterations: Some(1), method: SolverMethod::BiCgStab, ..SolverConfig::default() };
        match solve(&op, &[1.0, -1.0, 2.0], &cfg) {
            Err(Error::SolverDidNotConverge { iterations, residual }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 1e-8);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
