//! Euclidean projection onto the scaled simplex `{x ≥ 0, Σx = target}`.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sort-and-threshold projection of `v` onto `{x ≥ 0, Σx = target}`.
///
/// A point that is already feasible (up to rounding in its sum) is returned
/// unchanged, which makes the projection exactly idempotent.
pub fn project_simplex<T: Real>(v: &[T], target: T) -> Result<Vec<T>> {
    if v.is_empty() {
        return Err(Error::EmptySupport { row: 0 });
    }
    if !(target > T::zero()) {
        return Err(Error::Validation(format!("simplex target must be positive, got {target}")));
    }
    let mut out = v.to_vec();
    project_simplex_in_place(&mut out, target);
    Ok(out)
}

pub(crate) fn project_simplex_in_place<T: Real>(v: &mut [T], target: T) {
    debug_assert!(!v.is_empty());
    if is_feasible(v, target) {
        return;
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cumsum = T::zero();
    let mut theta = T::zero();
    for (k, &u) in sorted.iter().enumerate() {
        cumsum = cumsum + u;
        let t = (cumsum - target) / T::lit((k + 1) as f64);
        if u - t > T::zero() {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(T::zero());
    }
}

fn is_feasible<T: Real>(v: &[T], target: T) -> bool {
    let slack = T::lit(4.0 * v.len() as f64) * T::epsilon() * target.max(T::one());
    v.iter().all(|&x| x >= T::zero()) && (v.iter().copied().sum::<T>() - target).abs() <= slack
}
