//! Estimating every innate opinion from the queried values.

mod gcn;
mod gsp;
mod lp;

pub use gcn::{gcn_reconstruct, normalized_adjacency, GcnConfig, GcnModel};
pub use gsp::{build_spectral_basis, gsp_reconstruct, SpectralBasis, GSP_NOISE_REG};
pub use lp::{label_propagation, Neighborhood, LP_MAX_ITER};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fj::OpinionVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReconstructionMethod {
    Lp,
    Gcn,
    Gsp,
}

impl ReconstructionMethod {
    pub const ALL: [ReconstructionMethod; 3] = [Self::Lp, Self::Gcn, Self::Gsp];

    pub fn name(self) -> &'static str {
        match self {
            Self::Lp => "lp",
            Self::Gcn => "gcn",
            Self::Gsp => "gsp",
        }
    }
}

impl fmt::Display for ReconstructionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReconstructionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown reconstruction method `{s}`")))
    }
}

/// Queried nodes with their exact innate opinions, sorted by node id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuerySet {
    selected: Vec<usize>,
    values: Vec<f64>,
}

impl QuerySet {
    /// Accepts pairs in any order; duplicate nodes and non-finite values are rejected.
    pub fn new(n: usize, mut pairs: Vec<(usize, f64)>) -> Result<Self> {
        pairs.sort_by_key(|&(v, _)| v);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Validation(format!("node {} queried twice", w[0].0)));
            }
        }
        if let Some(&(v, _)) = pairs.iter().find(|&&(v, _)| v >= n) {
            return Err(Error::Validation(format!("queried node {v} outside 0..{n}")));
        }
        if let Some(&(v, _)) = pairs.iter().find(|(_, x)| !x.is_finite()) {
            return Err(Error::Validation(format!("queried value of node {v} is not finite")));
        }
        let (selected, values) = pairs.into_iter().unzip();
        Ok(Self { selected, values })
    }

    /// Reads the entries of `s` at `selected`.
    pub fn from_truth(s: &OpinionVector<f64>, selected: &[usize]) -> Result<Self> {
        let n = s.len();
        let pairs = selected
            .iter()
            .map(|&v| {
                s.values()
                    .get(v)
                    .map(|&x| (v, x))
                    .ok_or_else(|| Error::Validation(format!("queried node {v} outside 0..{n}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, pairs)
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.selected.iter().copied().zip(self.values.iter().copied())
    }

    fn check_graph(&self, n: usize) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Validation("query set is empty".into()));
        }
        match self.selected.last() {
            Some(&v) if v >= n => Err(Error::Validation(format!("queried node {v} outside 0..{n}"))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    /// Final training loss (GCN).
    pub final_loss: Option<f64>,
    /// Loss before each update, one entry per epoch (GCN).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loss_trajectory: Vec<f64>,
    /// `‖D_{X^c} U_F‖₂`; perfect recovery of bandlimited signals needs `< 1` (GSP).
    pub recovery_condition: Option<f64>,
    /// Largest `|ŝ_v − s_v|` over queried nodes.
    pub max_query_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionOutcome {
    pub s_hat: OpinionVector<f64>,
    pub method: ReconstructionMethod,
    pub reconstruction_error: Option<f64>,
    pub diagnostics: Diagnostics,
}

impl ReconstructionOutcome {
    fn new(s_hat: Vec<f64>, method: ReconstructionMethod, q: &QuerySet, mut diagnostics: Diagnostics) -> Result<Self> {
        diagnostics.max_query_residual = q.iter().map(|(v, x)| (s_hat[v] - x).abs()).fold(0.0, f64::max);
        Ok(Self { s_hat: OpinionVector::innate(s_hat)?, method, reconstruction_error: None, diagnostics })
    }

    /// Fills in `‖s − ŝ‖`.
    pub fn with_truth(mut self, s_true: &OpinionVector<f64>) -> Result<Self> {
        self.reconstruction_error = Some(reconstruction_error(s_true, &self.s_hat)?);
        Ok(self)
    }
}

pub fn reconstruction_error(s_true: &OpinionVector<f64>, s_hat: &OpinionVector<f64>) -> Result<f64> {
    if s_true.len() != s_hat.len() {
        return Err(Error::Validation("opinion vectors differ in length".into()));
    }
    Ok(s_true.values().iter().zip(s_hat.values()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}
