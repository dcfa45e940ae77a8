//! Chordal graphs, clique trees and Agler splitting.

mod embed;
mod split;
mod tree;

pub use embed::{chordal_embed, chordal_embed_with_order, extract_cliques, is_chordal, mcs_order, ChordalEmbedding};
pub use split::{agler_split, reassemble_blocks};
pub use tree::{build_clique_tree, CliqueTree};

use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChordalError {
    #[error("cliques do not cover vertex {0}")]
    NotCovered(usize),
    #[error("clique {0} contains vertex {1} outside the graph")]
    VertexOutOfRange(usize, usize),
    #[error("clique tree violates the clique intersection property at vertex {0}")]
    CliqueIntersection(usize),
    #[error("matrix is not negative semidefinite within tolerance ({0})")]
    NotNsd(NumericsError),
    #[error("entry ({0}, {1}) lies outside every clique")]
    SupportOutsidePattern(usize, usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid edge list: {0}")]
    Format(String),
}

/// Undirected simple graph on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl SparsityGraph {
    /// Builds from arbitrary pairs; orientation is normalized, duplicates and
    /// self-loops are dropped.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut e: Vec<(usize, usize)> = edges
            .into_iter()
            .filter(|&(i, j)| i != j)
            .map(|(i, j)| {
                assert!(i < n && j < n, "edge ({i}, {j}) outside {n} vertices");
                (i.min(j), i.max(j))
            })
            .collect();
        e.sort_unstable();
        e.dedup();
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in &e {
            adj[i].push(j);
            adj[j].push(i);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        Self { n, edges: e, adj }
    }

    pub fn empty(n: usize) -> Self {
        Self::new(n, [])
    }

    pub fn complete(n: usize) -> Self {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted `(i, j)` pairs with `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.adj[i].binary_search(&j).is_ok()
    }

    /// Graph with the extra edges added.
    pub fn with_edges(&self, extra: &[(usize, usize)]) -> Self {
        Self::new(self.n, self.edges.iter().chain(extra).copied())
    }

    /// One `"i j"` line per edge, 0-based.
    pub fn to_edge_list(&self) -> String {
        self.edges.iter().map(|(i, j)| format!("{i} {j}\n")).collect()
    }

    pub fn from_edge_list(n: usize, text: &str) -> Result<Self, ChordalError> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| ChordalError::Format(format!("line {}: '{line}'", lineno + 1)))
            };
            if parts.len() != 2 {
                return Err(ChordalError::Format(format!("line {}: expected two indices", lineno + 1)));
            }
            let (i, j) = (parse(parts[0])?, parse(parts[1])?);
            if i >= n || j >= n {
                return Err(ChordalError::Format(format!("line {}: vertex outside 0..{n}", lineno + 1)));
            }
            edges.push((i, j));
        }
        Ok(Self::new(n, edges))
    }
}
