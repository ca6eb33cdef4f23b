use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Diagnostics, QuerySet, ReconstructionMethod, ReconstructionOutcome};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GcnConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for GcnConfig {
    fn default() -> Self {
        Self { hidden: 16, epochs: 200, lr: 0.01, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl GcnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.epochs == 0 {
            return Err(Error::Validation("gcn hidden size and epochs must be positive".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite() && self.eps > 0.0) {
            return Err(Error::Validation("gcn lr and eps must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Validation("gcn betas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// `D̃^{-1/2} (P + I) D̃^{-1/2}` where `P` is the unit-weight symmetrized
/// pattern of the adjacency.
pub fn normalized_adjacency(g: &Graph<f64>) -> CsrMatrix<f64> {
    let n = g.n();
    let mut pairs: Vec<(usize, usize)> = g.adjacency().iter().flat_map(|(i, j, _)| [(i, j), (j, i)]).collect();
    pairs.extend((0..n).map(|i| (i, i)));
    pairs.sort_unstable();
    pairs.dedup();
    let mut deg = vec![0.0f64; n];
    for &(i, _) in &pairs {
        deg[i] += 1.0;
    }
    CsrMatrix::from_triplets(n, pairs.into_iter().map(|(i, j)| (i, j, 1.0 / (deg[i] * deg[j]).sqrt())))
}

/// Two-layer graph convolution with scalar input and output features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnModel {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

struct Forward {
    /// `Â x`.
    ax: Vec<f64>,
    /// Pre-activations, row-major `n × h`.
    pre: Vec<f64>,
    y: Vec<f64>,
}

impl GcnModel {
    /// Glorot-uniform weights, zero biases.
    pub fn init(hidden: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (1 + hidden) as f64).sqrt();
        let w1 = (0..hidden).map(|_| rng.random_range(-limit..limit)).collect();
        let w2 = (0..hidden).map(|_| rng.random_range(-limit..limit)).collect();
        let params = 3 * hidden + 1;
        Self { w1, b1: vec![0.0; hidden], w2, b2: 0.0, m: vec![0.0; params], v: vec![0.0; params], step: 0 }
    }

    pub fn hidden(&self) -> usize {
        self.w1.len()
    }

    fn forward(&self, a_hat: &CsrMatrix<f64>, x: &[f64]) -> Forward {
        let h = self.hidden();
        let ax = a_hat.mul_vec(x);
        let mut pre = Vec::with_capacity(ax.len() * h);
        let mut u = Vec::with_capacity(ax.len());
        for &xi in &ax {
            let mut acc = 0.0;
            for k in 0..h {
                let p = xi * self.w1[k] + self.b1[k];
                pre.push(p);
                acc += p.max(0.0) * self.w2[k];
            }
            u.push(acc);
        }
        let y = a_hat.mul_vec(&u).into_iter().map(|yi| yi + self.b2).collect();
        Forward { ax, pre, y }
    }

    pub fn predict(&self, a_hat: &CsrMatrix<f64>, x: &[f64]) -> Vec<f64> {
        self.forward(a_hat, x).y
    }

    /// Masked mean squared error and its gradient, laid out as
    /// `[w1, b1, w2, b2]`.
    fn loss_and_grad(&self, a_hat: &CsrMatrix<f64>, x: &[f64], q: &QuerySet) -> (f64, Vec<f64>) {
        let h = self.hidden();
        let fw = self.forward(a_hat, x);
        let scale = 1.0 / q.len() as f64;
        let mut gy = vec![0.0; x.len()];
        let mut loss = 0.0;
        for (v, target) in q.iter() {
            let r = fw.y[v] - target;
            loss += r * r * scale;
            gy[v] = 2.0 * r * scale;
        }
        // Â is symmetric, so Âᵀ g = Â g.
        let gu = a_hat.mul_vec(&gy);
        let mut grad = vec![0.0; 3 * h + 1];
        let (gw1, rest) = grad.split_at_mut(h);
        let (gb1, rest) = rest.split_at_mut(h);
        let (gw2, gb2) = rest.split_at_mut(h);
        gb2[0] = gy.iter().sum();
        for (i, &gui) in gu.iter().enumerate() {
            for k in 0..h {
                let p = fw.pre[i * h + k];
                if p > 0.0 {
                    gw2[k] += p * gui;
                    let gp = gui * self.w2[k];
                    gb1[k] += gp;
                    gw1[k] += fw.ax[i] * gp;
                }
            }
        }
        (loss, grad)
    }

    /// One ADAM step; returns the loss before the step.
    fn train_step(&mut self, a_hat: &CsrMatrix<f64>, x: &[f64], q: &QuerySet, cfg: &GcnConfig) -> f64 {
        let h = self.hidden();
        let (loss, grad) = self.loss_and_grad(a_hat, x, q);
        self.step += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.step);
        let bc2 = 1.0 - cfg.beta2.powi(self.step);
        for (idx, g) in grad.into_iter().enumerate() {
            self.m[idx] = cfg.beta1 * self.m[idx] + (1.0 - cfg.beta1) * g;
            self.v[idx] = cfg.beta2 * self.v[idx] + (1.0 - cfg.beta2) * g * g;
            let delta = cfg.lr * (self.m[idx] / bc1) / ((self.v[idx] / bc2).sqrt() + cfg.eps);
            let p = match idx {
                i if i < h => &mut self.w1[i],
                i if i < 2 * h => &mut self.b1[i - h],
                i if i < 3 * h => &mut self.w2[i - 2 * h],
                _ => &mut self.b2,
            };
            *p -= delta;
        }
        loss
    }
}

fn masked_mse(y: &[f64], q: &QuerySet) -> f64 {
    q.iter().map(|(v, t)| (y[v] - t).powi(2)).sum::<f64>() / q.len() as f64
}

/// Trains on the queried nodes, whose values are also the only nonzero
/// input features, then predicts every node.
pub fn gcn_reconstruct(g: &Graph<f64>, q: &QuerySet, cfg: &GcnConfig, seed: u64) -> Result<ReconstructionOutcome> {
    cfg.validate()?;
    let n = g.n();
    q.check_graph(n)?;
    let a_hat = normalized_adjacency(g);
    let mut x = vec![0.0; n];
    for (v, val) in q.iter() {
        x[v] = val;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = GcnModel::init(cfg.hidden, &mut rng);
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let loss = model.train_step(&a_hat, &x, q, cfg);
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        losses.push(loss);
    }
    let y = model.predict(&a_hat, &x);
    let final_loss = masked_mse(&y, q);
    if !final_loss.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::TrainingDiverged { epoch: cfg.epochs });
    }
    let diagnostics = Diagnostics {
        iterations: cfg.epochs,
        final_loss: Some(final_loss),
        loss_trajectory: losses,
        ..Diagnostics::default()
    };
    ReconstructionOutcome::new(y, ReconstructionMethod::Gcn, q, diagnostics)
}
