//! KONECT-style whitespace edge lists: `u v [w]` per line, `%` or `#` comments.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::Graph;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// A parsed edge list together with the original id of every node.
#[derive(Debug, Clone)]
pub struct EdgeListIds<T> {
    pub graph: Graph<T>,
    /// `original_ids[k]` is the id used in the file for node `k`.
    pub original_ids: Vec<u64>,
}

pub fn load_edge_list<T: Real>(path: impl AsRef<Path>, directed: bool) -> Result<Graph<T>> {
    Ok(load_edge_list_with_ids(path, directed)?.graph)
}

pub fn load_edge_list_with_ids<T: Real>(path: impl AsRef<Path>, directed: bool) -> Result<EdgeListIds<T>> {
    let text = fs::read_to_string(path)?;
    parse_edge_list(&text, directed)
}

/// Parses edge-list text. Node ids are remapped to `0..n` in ascending order of
/// the ids that appear, so a file using `0..n` keeps its numbering.
pub fn parse_edge_list<T: Real>(text: &str, directed: bool) -> Result<EdgeListIds<T>> {
    let mut raw = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::Parse { line: line_no, message: format!("expected `u v [w]`, got {trimmed:?}") });
        }
        let id = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| Error::Parse { line: line_no, message: format!("invalid node id {s:?}") })
        };
        let u = id(fields[0])?;
        let v = id(fields[1])?;
        let w = match fields.get(2) {
            None => 1.0,
            Some(s) => s
                .parse::<f64>()
                .map_err(|_| Error::Parse { line: line_no, message: format!("invalid weight {s:?}") })?,
        };
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::Validation(format!("line {line_no}: weight must be positive, got {w}")));
        }
        raw.push((u, v, w));
    }

    let mut ids: Vec<u64> = raw.iter().flat_map(|&(u, v, _)| [u, v]).collect();
    ids.sort_unstable();
    ids.dedup();
    let index = |id: u64| ids.binary_search(&id).expect("id collected above");
    let edges: Vec<(usize, usize, T)> = raw.iter().map(|&(u, v, w)| (index(u), index(v), T::lit(w))).collect();
    let graph = Graph::from_edges(ids.len(), edges, directed)?;
    Ok(EdgeListIds { graph, original_ids: ids })
}

/// Writes `u v w` lines using contiguous ids. Undirected edges are written
/// once with `u < v`. Weights use the shortest representation that parses
/// back to the same value.
pub fn write_edge_list<T: Real>(g: &Graph<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_edge_list(g))?;
    Ok(())
}

pub(crate) fn format_edge_list<T: Real>(g: &Graph<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "% {} {} {}", if g.is_directed() { "directed" } else { "undirected" }, g.n(), g.num_edges());
    for (i, j, w) in g.adjacency().iter() {
        if g.is_directed() || i < j {
            let _ = writeln!(out, "{i} {j} {}", w.to_f64_lossy());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_cycle() {
        let e = parse_edge_list::<f64>("0 1\n1 0\n", true).unwrap();
        assert_eq!(e.graph.n(), 2);
        assert_eq!(e.graph.num_edges(), 2);
        assert_eq!(e.graph.weight(0, 1), 1.0);
        assert_eq!(e.graph.weight(1, 0), 1.0);
    }

    #[test]
    fn duplicates_merge_by_sum() {
        let e = parse_edge_list::<f64>("0 1 2.0\n0 1 3.0\n", true).unwrap();
        assert_eq!(e.graph.num_edges(), 1);
        assert_eq!(e.graph.adjacency().values(), &[5.0]);
        assert_eq!(e.graph.weight(0, 1), 5.0);
    }

    #[test]
    fn self_loop_dropped() {
        let e = parse_edge_list::<f64>("0 0 1.0\n", true).unwrap();
        assert_eq!(e.graph.n(), 1);
        assert_eq!(e.graph.num_edges(), 0);
    }

    #[test]
    fn comments_and_sparse_ids() {
        let e = parse_edge_list::<f64>("% header\n# other\n\n10 30\n30 10 0.5\n", true).unwrap();
        assert_eq!(e.original_ids, vec![10, 30]);
        assert_eq!(e.graph.weight(1, 0), 0.5);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_edge_list::<f64>("0 1\nx 2\n", true) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_edge_list::<f64>("0 1 -2\n", true), Err(Error::Validation(_))));
        assert!(matches!(parse_edge_list::<f64>("0 1 0\n", true), Err(Error::Validation(_))));
        assert!(matches!(parse_edge_list::<f64>("0\n", true), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn undirected_lines_store_both_directions() {
        let e = parse_edge_list::<f64>("0 1 2\n1 2\n", false).unwrap();
        assert_eq!(e.graph.num_edges(), 2);
        assert_eq!(e.graph.weight(1, 0), 2.0);
        let text = format_edge_list(&e.graph);
        let back = parse_edge_list::<f64>(&text, false).unwrap();
        assert_eq!(back.graph, e.graph);
    }
}
