//! Plain-text graph files: a header line `n m`, then `m` lines `u v w`.

use std::path::Path;

use pbit_forge_core::mapping::{Edge, WeightedGraph};

use crate::error::HarnessError;

pub fn parse_graph(text: &str) -> Result<WeightedGraph, HarnessError> {
    let bad =
        |line: usize, msg: &str| HarnessError::Validation(format!("graph line {line}: {msg}"));
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (header_no, header) = lines
        .next()
        .ok_or_else(|| HarnessError::Validation("graph file is empty".into()))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    let [n, m] = head[..] else {
        return Err(bad(header_no, "expected `n m`"));
    };
    let n: usize = n.parse().map_err(|_| bad(header_no, "bad vertex count"))?;
    let m: usize = m.parse().map_err(|_| bad(header_no, "bad edge count"))?;
    let mut edges = Vec::with_capacity(m);
    for (no, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [u, v, w] = fields[..] else {
            return Err(bad(no, "expected `u v w`"));
        };
        edges.push(Edge {
            u: u.parse().map_err(|_| bad(no, "bad vertex"))?,
            v: v.parse().map_err(|_| bad(no, "bad vertex"))?,
            weight: w.parse().map_err(|_| bad(no, "bad weight"))?,
        });
    }
    if edges.len() != m {
        return Err(HarnessError::Validation(format!(
            "graph header declares {m} edges, found {}",
            edges.len()
        )));
    }
    Ok(WeightedGraph::new(n, edges)?)
}

pub fn read_graph(path: &Path) -> Result<WeightedGraph, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_graph(&text)
}

/// Inverse of [`parse_graph`]; integral weights are written without a fraction.
pub fn format_graph(graph: &WeightedGraph) -> String {
    let mut out = format!("{} {}\n", graph.n_vertices(), graph.edges().len());
    for e in graph.edges() {
        out.push_str(&format!("{} {} {}\n", e.u, e.v, e.weight));
    }
    out
}
