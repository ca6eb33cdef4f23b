use serde::{Deserialize, Serialize};

use super::{Diagnostics, QuerySet, ReconstructionMethod, ReconstructionOutcome};
use crate::error::Result;
use crate::graph::Graph;

pub const LP_MAX_ITER: usize = 200;

/// Which neighbors an unqueried node averages over.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Neighborhood {
    /// `{j : (i, j) ∈ E}`.
    #[default]
    Out,
    /// `{j : (j, i) ∈ E}`.
    In,
}

/// Synchronous averaging from a zero start with queried nodes pinned.
/// Unqueried nodes without neighbors stay at 0. Stops early once an update
/// leaves every value unchanged.
pub fn label_propagation(
    g: &Graph<f64>,
    q: &QuerySet,
    max_iter: usize,
    neighborhood: Neighborhood,
) -> Result<ReconstructionOutcome> {
    let n = g.n();
    q.check_graph(n)?;
    let transposed;
    let adjacency = match neighborhood {
        Neighborhood::Out => g.adjacency(),
        Neighborhood::In => {
            transposed = g.adjacency().transpose();
            &transposed
        }
    };
    let mut pinned = vec![false; n];
    let mut x = vec![0.0; n];
    for (v, val) in q.iter() {
        pinned[v] = true;
        x[v] = val;
    }
    let mut next = x.clone();
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut changed = false;
        for i in (0..n).filter(|&i| !pinned[i]) {
            let (cols, _) = adjacency.row(i);
            if cols.is_empty() {
                continue;
            }
            let mean = cols.iter().map(|&j| x[j]).sum::<f64>() / cols.len() as f64;
            changed |= mean != x[i];
            next[i] = mean;
        }
        std::mem::swap(&mut x, &mut next);
        next.copy_from_slice(&x);
        if !changed {
            break;
        }
    }
    ReconstructionOutcome::new(x, ReconstructionMethod::Lp, q, Diagnostics { iterations, ..Diagnostics::default() })
}
