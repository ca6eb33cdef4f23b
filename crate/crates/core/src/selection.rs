//! Choosing which nodes to query.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionStrategy {
    Degree,
    Closeness,
    Pagerank,
    Random,
}

impl SelectionStrategy {
    pub const ALL: [SelectionStrategy; 4] = [Self::Degree, Self::Closeness, Self::Pagerank, Self::Random];

    pub fn name(self) -> &'static str {
        match self {
            Self::Degree => "degree",
            Self::Closeness => "closeness",
            Self::Pagerank => "pagerank",
            Self::Random => "random",
        }
    }
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown selection strategy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub strategy: SelectionStrategy,
    pub budget_b: usize,
    /// Ascending node ids, `min(b, n)` of them.
    pub selected: Vec<usize>,
    /// Ranking scores; all zero for the random strategy.
    pub scores: Vec<f64>,
}

/// Weighted in-degree plus weighted out-degree.
pub fn degree_centrality(g: &Graph<f64>) -> Vec<f64> {
    let a = g.adjacency();
    a.row_sums().into_iter().zip(a.col_sums()).map(|(o, i)| o + i).collect()
}

/// Closeness with reachability scaling, over unweighted out-edge hop
/// distances. Nodes reaching nobody score 0.
pub fn closeness_centrality(g: &Graph<f64>) -> Vec<f64> {
    let n = g.n();
    if n < 2 {
        return vec![0.0; n];
    }
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    (0..n)
        .map(|u| {
            dist.fill(usize::MAX);
            dist[u] = 0;
            queue.clear();
            queue.push_back(u);
            let (mut reached, mut total) = (0usize, 0usize);
            while let Some(v) = queue.pop_front() {
                for &w in g.out_neighbors(v) {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        reached += 1;
                        total += dist[w];
                        queue.push_back(w);
                    }
                }
            }
            if total == 0 {
                0.0
            } else {
                let r = reached as f64;
                (r / (n - 1) as f64) * (r / total as f64)
            }
        })
        .collect()
}

pub const PAGERANK_DAMPING: f64 = 0.85;
pub const PAGERANK_TOL: f64 = 1e-10;
pub const PAGERANK_MAX_ITER: usize = 200;

/// Power iteration with a uniform teleport vector. Edge weights are divided
/// by the row sum, and the mass of dangling nodes is spread uniformly.
pub fn pagerank(g: &Graph<f64>, damping: f64, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&damping) {
        return Err(Error::Validation("damping must lie in [0, 1)".into()));
    }
    let n = g.n();
    if n == 0 {
        return Ok(Vec::new());
    }
    let a = g.adjacency();
    let out = a.row_sums();
    let uniform = 1.0 / n as f64;
    let mut pr = vec![uniform; n];
    let mut next = vec![0.0; n];
    let mut delta = f64::INFINITY;
    for _ in 0..max_iter {
        let dangling: f64 = (0..n).filter(|&i| out[i] <= 0.0).map(|i| pr[i]).sum();
        next.fill((1.0 - damping) * uniform + damping * dangling * uniform);
        for i in 0..n {
            if out[i] > 0.0 {
                let share = damping * pr[i] / out[i];
                let (cols, vals) = a.row(i);
                for (&j, &w) in cols.iter().zip(vals) {
                    next[j] += share * w;
                }
            }
        }
        delta = pr.iter().zip(&next).map(|(x, y)| (x - y).abs()).sum();
        std::mem::swap(&mut pr, &mut next);
        if delta <= tol {
            return Ok(pr);
        }
    }
    Err(Error::PageRankDidNotConverge { delta })
}

/// `max(1, round(frac · n))`, for `frac ∈ (0, 1]`.
pub fn budget_from_fraction(n: usize, frac: f64) -> Result<usize> {
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(Error::Validation(format!("budget fraction {frac} outside (0, 1]")));
    }
    Ok(((frac * n as f64).round() as usize).max(1))
}

/// Indices of the `b` largest scores, ties to the smaller id, returned sorted.
pub fn top_b(scores: &[f64], b: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    order.truncate(b);
    order.sort_unstable();
    order
}

pub fn select(g: &Graph<f64>, strategy: SelectionStrategy, b: usize, seed: u64) -> Result<SelectionResult> {
    if b == 0 {
        return Err(Error::Validation("budget must be at least 1".into()));
    }
    let n = g.n();
    let (selected, scores) = match strategy {
        SelectionStrategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked = rand::seq::index::sample(&mut rng, n, b.min(n)).into_vec();
            picked.sort_unstable();
            (picked, vec![0.0; n])
        }
        _ => {
            let scores = match strategy {
                SelectionStrategy::Degree => degree_centrality(g),
                SelectionStrategy::Closeness => closeness_centrality(g),
                _ => pagerank(g, PAGERANK_DAMPING, PAGERANK_TOL, PAGERANK_MAX_ITER)?,
            };
            (top_b(&scores, b), scores)
        }
    };
    Ok(SelectionResult { strategy, budget_b: b, selected, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::row_normalize;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn bidirected_star() -> Graph<f64> {
        let edges = (1..4).flat_map(|l| [(0, l, 1.0), (l, 0, 1.0)]);
        row_normalize(&Graph::from_edges(4, edges, true).unwrap()).unwrap()
    }

    #[test]
    fn degree_examples() {
        let two = Graph::from_edges(2, [(0, 1, 1.0), (1, 0, 1.0)], true).unwrap();
        assert_eq!(degree_centrality(&two), vec![2.0, 2.0]);
        assert!(close(&degree_centrality(&bidirected_star()), &[4.0, 4.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0], 1e-12));
        let empty = Graph::<f64>::from_edges(3, [], true).unwrap();
        assert_eq!(degree_centrality(&empty), vec![0.0; 3]);
    }

    #[test]
    fn closeness_examples() {
        let path = Graph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)], true).unwrap();
        let c = closeness_centrality(&path);
        assert!((c[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((c[1] - 0.5).abs() < 1e-12);
        assert_eq!(c[2], 0.0);

        let k4 = Graph::from_edges(4, (0..4).flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j, 1.0))), true)
            .unwrap();
        assert!(close(&closeness_centrality(&k4), &[1.0; 4], 1e-12));
    }

    #[test]
    fn pagerank_examples() {
        let two = Graph::from_edges(2, [(0, 1, 1.0), (1, 0, 1.0)], true).unwrap();
        assert!(close(&pagerank(&two, 0.85, 1e-10, 200).unwrap(), &[0.5, 0.5], 1e-10));
        let three = Graph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)], true).unwrap();
        assert!(close(&pagerank(&three, 0.85, 1e-10, 200).unwrap(), &[1.0 / 3.0; 3], 1e-10));
    }

    #[test]
    fn pagerank_dangling_matches_dense_power_iteration() {
        let g = Graph::from_edges(2, [(0, 1, 1.0)], true).unwrap();
        let pr = pagerank(&g, 0.85, 1e-10, 200).unwrap();
        // Dense Google matrix: row 0 → (0, 1), dangling row 1 → (1/2, 1/2).
        let d = 0.85;
        let p = [[0.0, 1.0], [0.5, 0.5]];
        let mut x = [0.5, 0.5];
        for _ in 0..200 {
            let mut y = [(1.0 - d) / 2.0; 2];
            for i in 0..2 {
                for j in 0..2 {
                    y[j] += d * x[i] * p[i][j];
                }
            }
            x = y;
        }
        assert!(close(&pr, &x, 1e-9));
        assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn pagerank_reports_nonconvergence() {
        let g = Graph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)], true).unwrap();
        assert!(matches!(pagerank(&g, 0.85, 1e-10, 1), Err(Error::PageRankDidNotConverge { .. })));
    }

    #[test]
    fn select_examples() {
        assert_eq!(top_b(&[3.0, 1.0, 3.0], 2), vec![0, 2]);
        let g = bidirected_star();
        let all = select(&g, SelectionStrategy::Degree, 10, 0).unwrap();
        assert_eq!(all.selected, vec![0, 1, 2, 3]);
        let r1 = select(&g, SelectionStrategy::Random, 2, 42).unwrap();
        let r2 = select(&g, SelectionStrategy::Random, 2, 42).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.selected.len(), 2);
        assert!(select(&g, SelectionStrategy::Degree, 0, 0).is_err());
    }

    #[test]
    fn budget_rounding() {
        assert_eq!(budget_from_fraction(100, 0.2).unwrap(), 20);
        assert_eq!(budget_from_fraction(3, 0.1).unwrap(), 1);
        assert_eq!(budget_from_fraction(10, 1.0).unwrap(), 10);
        assert!(budget_from_fraction(10, 0.0).is_err());
        assert!(budget_from_fraction(10, 1.5).is_err());
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in SelectionStrategy::ALL {
            assert_eq!(s.name().parse::<SelectionStrategy>().unwrap(), s);
        }
    }
}
