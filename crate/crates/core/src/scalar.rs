//! Scalar abstraction for the numerical kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type usable by the sparse kernels, solvers, objectives and
/// optimizer.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Default relative residual target for iterative solves at this precision.
    const DEFAULT_SOLVER_TOL: f64;
    /// Slack used when checking row-sum and weight-total invariants.
    const FEASIBILITY_TOL: f64;

    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which cannot happen for the finite constants used in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const DEFAULT_SOLVER_TOL: f64 = 1e-8;
    const FEASIBILITY_TOL: f64 = 1e-9;
}

impl Real for f32 {
    const DEFAULT_SOLVER_TOL: f64 = 1e-5;
    const FEASIBILITY_TOL: f64 = 1e-5;
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
