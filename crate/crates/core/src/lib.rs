//! Budgeted opinion optimization under Friedkin–Johnsen dynamics.
//!
//! The pipeline queries a budget of nodes, reconstructs every innate opinion
//! from the queried values, re-weights the network to minimize a polarization
//! or disagreement objective, and scores the result against the optimum
//! computed from the true opinions.
//!
//! The numerical kernels ([`graph`], [`fj`], [`objectives`], [`optimizer`])
//! are generic over [`Real`]; the statistical layers work in `f64`.

pub mod error;
pub mod fj;
pub mod graph;
pub mod harness;
pub mod objectives;
pub mod optimizer;
pub mod reconstruction;
pub mod scalar;
pub mod selection;
pub mod solver;
pub mod sparse;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Real;
pub use solver::{SolverConfig, SolverMethod};

pub type Graph64 = graph::Graph<f64>;
pub type Graph32 = graph::Graph<f32>;
pub type Opinions64 = fj::OpinionVector<f64>;
pub type Opinions32 = fj::OpinionVector<f32>;
