//! Synthetic graphs and opinions: Erdős–Rényi and Barabási–Albert graphs,
//! uniform or two-community Gaussian opinions, polarization, and inversion
//! of the dynamics to obtain innate opinions.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fj::{invert_equilibrium, standardize, OpinionVector};
use crate::graph::{preprocess, row_normalize, Graph};

const KL_MAX_PASSES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bisection {
    /// Two node sets, each sorted, sizes differing by at most one.
    pub parts: [Vec<usize>; 2],
    /// Cut weight on the symmetrized graph after every pass, starting with
    /// the random initial split.
    pub cut_history: Vec<f64>,
}

impl Bisection {
    pub fn cut(&self) -> f64 {
        *self.cut_history.last().expect("history holds the initial cut")
    }
}

/// Cut weight of `side` on the symmetric adjacency, each edge counted once.
fn cut_weight(sym: &Graph<f64>, side: &[bool]) -> f64 {
    sym.adjacency().iter().filter(|&(i, j, _)| i < j && side[i] != side[j]).map(|(_, _, w)| w).sum()
}

/// Kernighan–Lin passes from a seeded random balanced split, on `A + Aᵀ`
/// for directed graphs.
pub fn kernighan_lin_bisection(g: &Graph<f64>, seed: u64) -> Result<Bisection> {
    let n = g.n();
    if n < 2 {
        return Err(Error::Validation("bisection needs at least two nodes".into()));
    }
    let sym = g.symmetrized();
    let a = sym.adjacency();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut side = vec![false; n];
    for &v in &order[n / 2..] {
        side[v] = true;
    }
    let mut cut_history = vec![cut_weight(&sym, &side)];

    for _ in 0..KL_MAX_PASSES {
        // D_v = external − internal weight.
        let mut d: Vec<f64> = (0..n)
            .map(|v| {
                let (cols, vals) = a.row(v);
                cols.iter().zip(vals).map(|(&u, &w)| if side[u] != side[v] { w } else { -w }).sum()
            })
            .collect();
        let mut locked = vec![false; n];
        let mut swaps = Vec::with_capacity(n / 2);
        let mut gains = Vec::with_capacity(n / 2);
        for _ in 0..n / 2 {
            let mut left: Vec<usize> = (0..n).filter(|&v| !locked[v] && !side[v]).collect();
            let mut right: Vec<usize> = (0..n).filter(|&v| !locked[v] && side[v]).collect();
            if left.is_empty() || right.is_empty() {
                break;
            }
            let by_d = |x: &usize, y: &usize| d[*y].total_cmp(&d[*x]).then(x.cmp(y));
            left.sort_by(by_d);
            right.sort_by(by_d);
            let mut best: Option<(f64, usize, usize)> = None;
            for &x in &left {
                if best.is_some_and(|(gmax, _, _)| d[x] + d[right[0]] <= gmax) {
                    break;
                }
                for &y in &right {
                    let upper = d[x] + d[y];
                    if best.is_some_and(|(gmax, _, _)| upper <= gmax) {
                        break;
                    }
                    let gain = upper - 2.0 * a.get(x, y);
                    if best.is_none_or(|(gmax, _, _)| gain > gmax) {
                        best = Some((gain, x, y));
                    }
                }
            }
            let (gain, x, y) = best.expect("both sides nonempty");
            locked[x] = true;
            locked[y] = true;
            // Update D as if x and y had swapped sides.
            for v in [x, y] {
                let (cols, vals) = a.row(v);
                for (&u, &w) in cols.iter().zip(vals) {
                    if !locked[u] {
                        d[u] += if side[u] == side[v] { 2.0 * w } else { -2.0 * w };
                    }
                }
            }
            swaps.push((x, y));
            gains.push(gain);
        }
        let (mut best_k, mut best_total, mut total) = (0, 0.0, 0.0);
        for (k, g) in gains.iter().enumerate() {
            total += g;
            if total > best_total {
                best_total = total;
                best_k = k + 1;
            }
        }
        if best_k == 0 || best_total <= 1e-12 * cut_history[0].abs().max(1.0) {
            break;
        }
        for &(x, y) in &swaps[..best_k] {
            side[x] = !side[x];
            side[y] = !side[y];
        }
        cut_history.push(cut_weight(&sym, &side));
    }

    let parts = [(0..n).filter(|&v| !side[v]).collect(), (0..n).filter(|&v| side[v]).collect()];
    Ok(Bisection { parts, cut_history })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpinionDistribution {
    /// I.i.d. `U[−0.5, 0.5]`.
    Uniform,
    /// Kernighan–Lin communities with means `±mu` and spread `sd`.
    CommunityGaussian,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolarizeMode {
    /// `sign(x) |x|^{1/p}`.
    #[default]
    Signed,
    /// `|x|^{1/p}`.
    Literal,
}

/// Where polarization happens relative to the inversion of the dynamics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthOrder {
    /// generate → polarize → invert → standardize.
    #[default]
    PolarizeExpressed,
    /// generate → invert → polarize → standardize.
    PolarizeInnate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpinionGenSpec {
    pub distribution: OpinionDistribution,
    pub mu: f64,
    /// Zero gives exactly `±mu` per community.
    pub sd: f64,
    pub polarization_p: f64,
    pub polarize_mode: PolarizeMode,
    pub order: SynthOrder,
    pub seed: u64,
}

impl Default for OpinionGenSpec {
    fn default() -> Self {
        Self {
            distribution: OpinionDistribution::CommunityGaussian,
            mu: 0.5,
            sd: 0.1,
            polarization_p: 3.0,
            polarize_mode: PolarizeMode::Signed,
            order: SynthOrder::PolarizeExpressed,
            seed: 0,
        }
    }
}

impl OpinionGenSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.polarization_p >= 1.0 && self.polarization_p.is_finite()) {
            return Err(Error::Validation("polarization p must be at least 1".into()));
        }
        if !(self.sd >= 0.0 && self.sd.is_finite() && self.mu.is_finite()) {
            return Err(Error::Validation("community mean must be finite and sd nonnegative".into()));
        }
        Ok(())
    }
}

/// Raw expressed opinions, before polarization.
pub fn generate_opinions(g: &Graph<f64>, spec: &OpinionGenSpec) -> Result<OpinionVector<f64>> {
    spec.validate()?;
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let values = match spec.distribution {
        OpinionDistribution::Uniform => (0..n).map(|_| rng.random_range(-0.5..=0.5)).collect(),
        OpinionDistribution::CommunityGaussian => {
            let means = if n < 2 {
                vec![spec.mu; n]
            } else {
                let bis = kernighan_lin_bisection(g, rng.random())?;
                let mut means = vec![spec.mu; n];
                for &v in &bis.parts[1] {
                    means[v] = -spec.mu;
                }
                means
            };
            let noise = Normal::new(0.0, spec.sd).map_err(|e| Error::Validation(e.to_string()))?;
            means.into_iter().map(|m| m + noise.sample(&mut rng)).collect()
        }
    };
    OpinionVector::expressed(values)
}

pub fn polarize(v: &OpinionVector<f64>, p: f64, mode: PolarizeMode) -> Result<OpinionVector<f64>> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Validation("polarization p must be at least 1".into()));
    }
    let inv = 1.0 / p;
    OpinionVector::new(
        v.values()
            .iter()
            .map(|&x| {
                let mag = x.abs().powf(inv);
                match mode {
                    PolarizeMode::Signed => mag.copysign(x),
                    PolarizeMode::Literal => mag,
                }
            })
            .collect(),
        v.kind(),
    )
}

/// Inverts the equilibrium and standardizes to mean 0, sample sd 1.
pub fn make_innate(g: &Graph<f64>, expressed: &OpinionVector<f64>) -> Result<OpinionVector<f64>> {
    standardize(&invert_equilibrium(g, expressed)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthOpinions {
    pub expressed: OpinionVector<f64>,
    pub innate: OpinionVector<f64>,
}

/// Full opinion pipeline in the order chosen by `spec.order`. The returned
/// expressed opinions are the ones the innate vector was derived from.
pub fn synthesize_opinions(g: &Graph<f64>, spec: &OpinionGenSpec) -> Result<SynthOpinions> {
    let raw = generate_opinions(g, spec)?;
    match spec.order {
        SynthOrder::PolarizeExpressed => {
            let expressed = polarize(&raw, spec.polarization_p, spec.polarize_mode)?;
            let innate = make_innate(g, &expressed)?;
            Ok(SynthOpinions { expressed, innate })
        }
        SynthOrder::PolarizeInnate => {
            let inverted = invert_equilibrium(g, &raw)?;
            let innate = standardize(&polarize(&inverted, spec.polarization_p, spec.polarize_mode)?)?;
            Ok(SynthOpinions { expressed: raw, innate })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphModel {
    ErdosRenyi { n: usize, p: f64 },
    BarabasiAlbert { n: usize, m: usize },
}

/// Raw model output with unit weights, before preprocessing.
pub fn sample_graph(model: GraphModel, directed: bool, seed: u64) -> Result<Graph<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match model {
        GraphModel::ErdosRenyi { n, p } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Validation("edge probability must lie in [0, 1]".into()));
            }
            let mut edges = Vec::new();
            for i in 0..n {
                let start = if directed { 0 } else { i + 1 };
                for j in start..n {
                    if i != j && rng.random_bool(p) {
                        edges.push((i, j, 1.0));
                    }
                }
            }
            Graph::from_edges(n, edges, directed)
        }
        GraphModel::BarabasiAlbert { n, m } => {
            if m == 0 || m >= n {
                return Err(Error::Validation("Barabási–Albert needs 1 ≤ m < n".into()));
            }
            let mut edges: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
            // Every edge endpoint once, so uniform draws are degree-proportional.
            let mut endpoints: Vec<usize> = edges.iter().flat_map(|&(i, j)| [i, j]).collect();
            let mut chosen = Vec::with_capacity(m);
            for t in m..n {
                chosen.clear();
                while chosen.len() < m {
                    let u = if endpoints.is_empty() { rng.random_range(0..t) } else { endpoints[rng.random_range(0..endpoints.len())] };
                    if !chosen.contains(&u) {
                        chosen.push(u);
                    }
                }
                for &u in &chosen {
                    edges.push((u, t));
                    endpoints.extend([u, t]);
                }
            }
            let weighted = edges.into_iter().flat_map(|(i, j)| {
                let both = if directed { vec![(i, j, 1.0), (j, i, 1.0)] } else { vec![(i, j, 1.0)] };
                both.into_iter()
            });
            Graph::from_edges(n, weighted, directed)
        }
    }
}

/// Samples, preprocesses, and row-normalizes directed output.
pub fn generate_graph(model: GraphModel, directed: bool, seed: u64) -> Result<Graph<f64>> {
    let g = preprocess(&sample_graph(model, directed, seed)?)?.graph;
    if directed {
        row_normalize(&g)
    } else {
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fj::equilibrium;
    use crate::solver::SolverConfig;

    fn two_triangles() -> Graph<f64> {
        let e = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)];
        Graph::from_edges(6, e.map(|(i, j)| (i, j, 1.0)), false).unwrap()
    }

    /// Exhaustive minimum over balanced splits.
    fn brute_min_cut(g: &Graph<f64>) -> f64 {
        let n = g.n();
        (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == n / 2)
            .map(|m| cut_weight(g, &(0..n).map(|v| m >> v & 1 == 1).collect::<Vec<_>>()))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn kl_separates_triangles() {
        let g = two_triangles();
        assert_eq!(brute_min_cut(&g), 1.0);
        for seed in 0..10 {
            let b = kernighan_lin_bisection(&g, seed).unwrap();
            let mut parts = b.parts.clone();
            parts.sort();
            assert_eq!(parts, [vec![0, 1, 2], vec![3, 4, 5]], "seed {seed}");
            assert_eq!(b.cut(), 1.0);
            for w in b.cut_history.windows(2) {
                assert!(w[1] <= w[0]);
            }
        }
    }

    #[test]
    fn kl_small_cases() {
        let k4 = Graph::from_edges(4, (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j, 1.0))), false).unwrap();
        let b = kernighan_lin_bisection(&k4, 3).unwrap();
        assert_eq!(b.cut(), 4.0);
        assert_eq!(b.parts[0].len(), 2);
        let edge = Graph::from_edges(2, [(0, 1, 1.0)], false).unwrap();
        let b = kernighan_lin_bisection(&edge, 0).unwrap();
        let mut parts = b.parts.clone();
        parts.sort();
        assert_eq!(parts, [vec![0], vec![1]]);
    }

    #[test]
    fn polarize_examples() {
        let v = OpinionVector::expressed(vec![-0.125, 0.0, 0.3]).unwrap();
        let p = polarize(&v, 3.0, PolarizeMode::Signed).unwrap();
        assert!((p.values()[0] + 0.5).abs() < 1e-15);
        assert_eq!(p.values()[1], 0.0);
        assert_eq!(polarize(&v, 1.0, PolarizeMode::Signed).unwrap().values(), v.values());
        assert!((polarize(&v, 3.0, PolarizeMode::Literal).unwrap().values()[0] - 0.5).abs() < 1e-15);
        assert!(polarize(&v, 0.5, PolarizeMode::Signed).is_err());
    }

    #[test]
    fn degenerate_gaussian_is_exact() {
        let spec = OpinionGenSpec { sd: 0.0, ..OpinionGenSpec::default() };
        let z = generate_opinions(&two_triangles(), &spec).unwrap();
        let mut vals = z.values().to_vec();
        vals.sort_by(f64::total_cmp);
        assert_eq!(vals, vec![-0.5, -0.5, -0.5, 0.5, 0.5, 0.5]);
        assert_eq!(z.values()[0], z.values()[1]);
    }

    #[test]
    fn uniform_mean_near_zero() {
        let g = Graph::<f64>::from_edges(100_000, [], false).unwrap();
        let spec = OpinionGenSpec { distribution: OpinionDistribution::Uniform, seed: 5, ..OpinionGenSpec::default() };
        let z = generate_opinions(&g, &spec).unwrap();
        let n = z.len() as f64;
        let mean = z.values().iter().sum::<f64>() / n;
        let se = (1.0 / 12.0f64).sqrt() / n.sqrt();
        assert!(mean.abs() < 3.0 * se);
        assert!(z.values().iter().all(|v| (-0.5..=0.5).contains(v)));
        assert_eq!(generate_opinions(&g, &spec).unwrap(), z);
    }

    #[test]
    fn make_innate_examples() {
        let two = Graph::from_edges(2, [(0, 1, 1.0), (1, 0, 1.0)], true).unwrap();
        let z = OpinionVector::expressed(vec![1.0 / 3.0, -1.0 / 3.0]).unwrap();
        let s = make_innate(&two, &z).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((s.values()[0] - r).abs() < 1e-12 && (s.values()[1] + r).abs() < 1e-12);

        let tri = Graph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)], false).unwrap();
        assert!(matches!(make_innate(&tri, &OpinionVector::expressed(vec![0.2; 3]).unwrap()), Err(Error::ZeroVariance)));
    }

    #[test]
    fn make_innate_round_trip() {
        let g = generate_graph(GraphModel::ErdosRenyi { n: 30, p: 0.3 }, true, 4).unwrap();
        let spec = OpinionGenSpec { distribution: OpinionDistribution::Uniform, seed: 9, ..OpinionGenSpec::default() };
        let s0 = standardize(&generate_opinions(&g, &spec).unwrap()).unwrap();
        let s0 = OpinionVector::innate(s0.into_values()).unwrap();
        let z = equilibrium(&g, &s0, &SolverConfig::default()).unwrap();
        let back = make_innate(&g, &OpinionVector::expressed(z.into_values()).unwrap()).unwrap();
        for (a, b) in back.values().iter().zip(s0.values()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn graph_examples() {
        let er = generate_graph(GraphModel::ErdosRenyi { n: 10, p: 1.0 }, true, 0).unwrap();
        assert_eq!(er.n(), 10);
        assert_eq!(er.num_edges(), 90);
        assert!(er.is_normalized());
        assert!(matches!(
            generate_graph(GraphModel::ErdosRenyi { n: 10, p: 0.0 }, true, 0),
            Err(Error::NoUsableNodes)
        ));

        let ba = sample_graph(GraphModel::BarabasiAlbert { n: 10, m: 5 }, false, 1).unwrap();
        assert_eq!(ba.n(), 10);
        assert_eq!(ba.num_edges(), 10 + 5 * 5);
        for v in 5..10 {
            assert!(ba.out_neighbors(v).len() >= 5);
        }
        let bad = sample_graph(GraphModel::BarabasiAlbert { n: 3, m: 3 }, false, 1);
        assert!(bad.is_err());
    }

    #[test]
    fn deterministic_generation() {
        let m = GraphModel::BarabasiAlbert { n: 40, m: 3 };
        assert_eq!(generate_graph(m, true, 8).unwrap(), generate_graph(m, true, 8).unwrap());
    }
}
