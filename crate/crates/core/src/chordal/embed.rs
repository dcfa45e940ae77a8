use std::collections::BTreeSet;

use super::SparsityGraph;

/// Chordal supergraph obtained by symbolic elimination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChordalEmbedding {
    pub base: SparsityGraph,
    pub fill: Vec<(usize, usize)>,
    pub filled: SparsityGraph,
    /// Perfect elimination ordering of `filled` (first eliminated first).
    pub order: Vec<usize>,
}

impl ChordalEmbedding {
    /// Position of every vertex in `order`.
    pub fn positions(&self) -> Vec<usize> {
        positions(&self.order)
    }
}

fn positions(order: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; order.len()];
    for (k, &v) in order.iter().enumerate() {
        pos[v] = k;
    }
    pos
}

/// Maximum cardinality search, returned as an elimination ordering (the
/// reverse of the visit order). Ties go to the lowest vertex index.
pub fn mcs_order(g: &SparsityGraph) -> Vec<usize> {
    let n = g.n();
    let mut weight = vec![0usize; n];
    let mut done = vec![false; n];
    let mut visit = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !done[v])
            .max_by(|&a, &b| weight[a].cmp(&weight[b]).then(b.cmp(&a)))
            .expect("unvisited vertex");
        done[v] = true;
        visit.push(v);
        for &u in g.neighbors(v) {
            if !done[u] {
                weight[u] += 1;
            }
        }
    }
    visit.reverse();
    visit
}

/// Whether `order` is a perfect elimination ordering of `g`.
pub(crate) fn is_peo(g: &SparsityGraph, order: &[usize]) -> bool {
    let pos = positions(order);
    for &v in order {
        let later: Vec<usize> = g.neighbors(v).iter().copied().filter(|&u| pos[u] > pos[v]).collect();
        if let Some(&first) = later.iter().min_by_key(|&&u| pos[u]) {
            if later.iter().any(|&u| u != first && !g.has_edge(first, u)) {
                return false;
            }
        }
    }
    true
}

/// Chordality via maximum cardinality search and PEO verification.
pub fn is_chordal(g: &SparsityGraph) -> bool {
    is_peo(g, &mcs_order(g))
}

/// Symbolic elimination in a fixed order.
pub fn chordal_embed_with_order(g: &SparsityGraph, order: &[usize]) -> ChordalEmbedding {
    let n = g.n();
    assert_eq!(order.len(), n, "ordering length");
    let pos = positions(order);
    let mut adj: Vec<BTreeSet<usize>> = (0..n).map(|v| g.neighbors(v).iter().copied().collect()).collect();
    let mut fill = Vec::new();
    for &v in order {
        let later: Vec<usize> = adj[v].iter().copied().filter(|&u| pos[u] > pos[v]).collect();
        for (a, &x) in later.iter().enumerate() {
            for &y in &later[a + 1..] {
                if adj[x].insert(y) {
                    adj[y].insert(x);
                    fill.push((x.min(y), x.max(y)));
                }
            }
        }
    }
    fill.sort_unstable();
    let filled = g.with_edges(&fill);
    ChordalEmbedding { base: g.clone(), fill, filled, order: order.to_vec() }
}

/// Minimum-degree ordering (ties to the lowest index) followed by symbolic elimination.
pub fn chordal_embed(g: &SparsityGraph) -> ChordalEmbedding {
    let n = g.n();
    let mut adj: Vec<BTreeSet<usize>> = (0..n).map(|v| g.neighbors(v).iter().copied().collect()).collect();
    let mut alive: BTreeSet<(usize, usize)> = (0..n).map(|v| (adj[v].len(), v)).collect();
    let mut order = Vec::with_capacity(n);
    while let Some((_, v)) = alive.pop_first() {
        order.push(v);
        let nbrs: Vec<usize> = adj[v].iter().copied().collect();
        for &u in &nbrs {
            alive.remove(&(adj[u].len(), u));
            adj[u].remove(&v);
        }
        for (a, &x) in nbrs.iter().enumerate() {
            for &y in &nbrs[a + 1..] {
                if adj[x].insert(y) {
                    adj[y].insert(x);
                }
            }
        }
        for &u in &nbrs {
            alive.insert((adj[u].len(), u));
        }
        adj[v].clear();
    }
    chordal_embed_with_order(g, &order)
}

/// Maximal cliques of the filled graph, ordered by the elimination position
/// of their lowest vertex. Each clique is sorted.
pub fn extract_cliques(emb: &ChordalEmbedding) -> Vec<Vec<usize>> {
    let n = emb.filled.n();
    let pos = emb.positions();
    let higher: Vec<Vec<usize>> = (0..n)
        .map(|v| emb.filled.neighbors(v).iter().copied().filter(|&u| pos[u] > pos[v]).collect())
        .collect();
    let mut maximal = vec![true; n];
    for u in 0..n {
        if let Some(&p) = higher[u].iter().min_by_key(|&&w| pos[w]) {
            if higher[u].len() == higher[p].len() + 1 {
                maximal[p] = false;
            }
        }
    }
    emb.order
        .iter()
        .filter(|&&v| maximal[v])
        .map(|&v| {
            let mut c = higher[v].clone();
            c.push(v);
            c.sort_unstable();
            c
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> SparsityGraph {
        SparsityGraph::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    #[test]
    fn chordality_examples() {
        assert!(!is_chordal(&cycle(4)));
        assert!(is_chordal(&SparsityGraph::complete(4)));
        assert!(is_chordal(&SparsityGraph::new(3, [(0, 1), (1, 2)])));
        assert!(is_chordal(&SparsityGraph::empty(5)));
        assert!(is_chordal(&cycle(3)));
        assert!(!is_chordal(&cycle(6)));
    }

    #[test]
    fn embedding_examples() {
        let e = chordal_embed(&cycle(4));
        assert_eq!(e.fill.len(), 1);
        assert!(is_chordal(&e.filled));
        assert!(is_peo(&e.filled, &e.order));
        assert!(chordal_embed(&SparsityGraph::complete(5)).fill.is_empty());
        assert!(chordal_embed(&SparsityGraph::empty(4)).fill.is_empty());
    }

    #[test]
    fn mcs_order_gives_zero_fill_on_chordal_graphs() {
        let g = SparsityGraph::new(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)]);
        assert!(is_chordal(&g));
        assert!(chordal_embed_with_order(&g, &mcs_order(&g)).fill.is_empty());
    }

    #[test]
    fn clique_examples() {
        let path = chordal_embed(&SparsityGraph::new(3, [(0, 1), (1, 2)]));
        let mut c = extract_cliques(&path);
        c.sort();
        assert_eq!(c, vec![vec![0, 1], vec![1, 2]]);

        assert_eq!(extract_cliques(&chordal_embed(&SparsityGraph::complete(4))), vec![vec![0, 1, 2, 3]]);

        let chorded = SparsityGraph::new(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]);
        let mut c = extract_cliques(&chordal_embed_with_order(&chorded, &mcs_order(&chorded)));
        c.sort();
        assert_eq!(c, vec![vec![0, 1, 2], vec![0, 2, 3]]);
    }

    #[test]
    fn isolated_vertices_are_cliques() {
        let c = extract_cliques(&chordal_embed(&SparsityGraph::empty(3)));
        assert_eq!(c, vec![vec![0], vec![1], vec![2]]);
    }
}
