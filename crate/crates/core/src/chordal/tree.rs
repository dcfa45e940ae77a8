use std::collections::VecDeque;

use serde::Serialize;

use super::ChordalError;

/// Clique tree rooted at clique 0 with every parent indexed before its children.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CliqueTree {
    pub n: usize,
    pub cliques: Vec<Vec<usize>>,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    /// `R_k = C_k \ C_parent(k)` (`R_0 = C_0`).
    pub residuals: Vec<Vec<usize>>,
    /// `S_k = C_k ∩ C_parent(k)` (`S_0 = ∅`).
    pub separators: Vec<Vec<usize>>,
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.binary_search(x).is_ok()).collect()
}

/// Maximum-weight spanning tree on the clique intersection graph (Prim from
/// clique 0, ties to the smaller index), re-indexed breadth first.
pub fn build_clique_tree(cliques: &[Vec<usize>], n: usize) -> Result<CliqueTree, ChordalError> {
    let mut cliques: Vec<Vec<usize>> = cliques.to_vec();
    let mut covered = vec![false; n];
    for (k, c) in cliques.iter_mut().enumerate() {
        c.sort_unstable();
        c.dedup();
        for &v in c.iter() {
            if v >= n {
                return Err(ChordalError::VertexOutOfRange(k, v));
            }
            covered[v] = true;
        }
    }
    if let Some(v) = covered.iter().position(|c| !c) {
        return Err(ChordalError::NotCovered(v));
    }
    let l = cliques.len();
    if l == 0 {
        return Ok(CliqueTree { n, cliques, parent: vec![], children: vec![], residuals: vec![], separators: vec![] });
    }

    let mut in_tree = vec![false; l];
    let mut best: Vec<(isize, usize)> = vec![(-1, 0); l];
    let mut tree_parent = vec![None; l];
    in_tree[0] = true;
    for j in 1..l {
        best[j] = (intersect(&cliques[0], &cliques[j]).len() as isize, 0);
    }
    for _ in 1..l {
        let j = (0..l)
            .filter(|&j| !in_tree[j])
            .max_by(|&a, &b| best[a].0.cmp(&best[b].0).then(b.cmp(&a)))
            .expect("clique outside tree");
        in_tree[j] = true;
        tree_parent[j] = Some(best[j].1);
        for k in 0..l {
            if !in_tree[k] {
                let w = intersect(&cliques[j], &cliques[k]).len() as isize;
                if w > best[k].0 || (w == best[k].0 && j < best[k].1) {
                    best[k] = (w, j);
                }
            }
        }
    }

    let mut kids = vec![Vec::new(); l];
    for j in 1..l {
        kids[tree_parent[j].unwrap()].push(j);
    }
    for k in &mut kids {
        k.sort_unstable();
    }
    let mut order = Vec::with_capacity(l);
    let mut queue = VecDeque::from([0usize]);
    while let Some(c) = queue.pop_front() {
        order.push(c);
        queue.extend(kids[c].iter().copied());
    }
    let mut new_index = vec![0; l];
    for (k, &c) in order.iter().enumerate() {
        new_index[c] = k;
    }

    let cliques: Vec<Vec<usize>> = order.iter().map(|&c| cliques[c].clone()).collect();
    let parent: Vec<Option<usize>> = order.iter().map(|&c| tree_parent[c].map(|p| new_index[p])).collect();
    let mut children = vec![Vec::new(); l];
    for (k, p) in parent.iter().enumerate() {
        if let Some(p) = *p {
            children[p].push(k);
        }
    }
    let mut residuals = Vec::with_capacity(l);
    let mut separators = Vec::with_capacity(l);
    for k in 0..l {
        match parent[k] {
            None => {
                residuals.push(cliques[k].clone());
                separators.push(Vec::new());
            }
            Some(p) => {
                let s = intersect(&cliques[k], &cliques[p]);
                residuals.push(cliques[k].iter().copied().filter(|v| s.binary_search(v).is_err()).collect());
                separators.push(s);
            }
        }
    }
    let tree = CliqueTree { n, cliques, parent, children, residuals, separators };
    if let Some(v) = tree.clique_intersection_violation() {
        return Err(ChordalError::CliqueIntersection(v));
    }
    Ok(tree)
}

impl CliqueTree {
    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    /// A vertex whose cliques do not form a connected subtree, if any.
    pub fn clique_intersection_violation(&self) -> Option<usize> {
        for v in 0..self.n {
            let holders: Vec<usize> = (0..self.len()).filter(|&k| self.cliques[k].binary_search(&v).is_ok()).collect();
            // a set of tree nodes is connected iff exactly one of them has its parent outside the set
            let tops = holders
                .iter()
                .filter(|&&k| self.parent[k].is_none_or(|p| self.cliques[p].binary_search(&v).is_err()))
                .count();
            if tops != 1 {
                return Some(v);
            }
        }
        None
    }

    /// Parent-before-child ordering, residual/separator definitions and the
    /// residual partition of the vertex set.
    pub fn check_running_intersection(&self) -> bool {
        let mut seen = vec![0usize; self.n];
        for k in 0..self.len() {
            if let Some(p) = self.parent[k] {
                if p >= k {
                    return false;
                }
                let s = intersect(&self.cliques[k], &self.cliques[p]);
                if s != self.separators[k] {
                    return false;
                }
                // S_k ⊆ C_1 ∪ … ∪ C_{k−1} restricted to C_k
                let earlier: Vec<usize> = (0..k).flat_map(|j| self.cliques[j].iter().copied()).collect();
                let mut prior: Vec<usize> =
                    self.cliques[k].iter().copied().filter(|v| earlier.contains(v)).collect();
                prior.sort_unstable();
                if prior != self.separators[k] {
                    return false;
                }
            } else if k != 0 || !self.separators[k].is_empty() {
                return false;
            }
            for &v in &self.residuals[k] {
                seen[v] += 1;
            }
        }
        seen.iter().all(|&c| c == 1)
    }

    /// Least-index clique containing every vertex of `set`.
    pub fn least_clique_containing(&self, set: &[usize]) -> Option<usize> {
        (0..self.len()).find(|&k| set.iter().all(|v| self.cliques[k].binary_search(v).is_ok()))
    }

    /// Perfect elimination ordering of the chordal graph spanned by the
    /// cliques: residuals in reverse clique order.
    pub fn peo(&self) -> Vec<usize> {
        (0..self.len()).rev().flat_map(|k| self.residuals[k].iter().copied()).collect()
    }

    /// `m̄ = ½ Σ_k |S_k| (|S_k| + 1)`.
    pub fn coupling_count(&self) -> usize {
        self.separators.iter().map(|s| s.len() * (s.len() + 1) / 2).sum()
    }

    /// Tree path from clique `a` to clique `b` (inclusive).
    pub fn path(&self, a: usize, b: usize) -> Vec<usize> {
        let up = |mut k: usize| {
            let mut p = vec![k];
            while let Some(q) = self.parent[k] {
                p.push(q);
                k = q;
            }
            p
        };
        let (pa, pb) = (up(a), up(b));
        let common = *pa.iter().find(|k| pb.contains(k)).expect("tree is connected");
        let mut path: Vec<usize> = pa.iter().copied().take_while(|&k| k != common).collect();
        path.push(common);
        let tail: Vec<usize> = pb.iter().copied().take_while(|&k| k != common).collect();
        path.extend(tail.into_iter().rev());
        path
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain() {
        let t = build_clique_tree(&[vec![0, 1], vec![1, 2]], 3).unwrap();
        assert_eq!(t.parent, vec![None, Some(0)]);
        assert_eq!(t.separators[1], vec![1]);
        assert_eq!(t.residuals[1], vec![2]);
        assert_eq!(t.residuals[0], vec![0, 1]);
        assert!(t.check_running_intersection());
        assert_eq!(t.peo(), vec![2, 0, 1]);
    }

    #[test]
    fn single_clique() {
        let t = build_clique_tree(&[vec![0, 1, 2]], 3).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.separators[0].is_empty());
        assert_eq!(t.residuals[0], vec![0, 1, 2]);
        assert_eq!(t.coupling_count(), 0);
    }

    #[test]
    fn two_triangles() {
        let t = build_clique_tree(&[vec![0, 1, 2], vec![0, 2, 3]], 4).unwrap();
        assert_eq!(t.separators[1], vec![0, 2]);
        assert_eq!(t.residuals[1], vec![3]);
        assert_eq!(t.coupling_count(), 3);
    }

    #[test]
    fn uncovered_vertex() {
        assert_eq!(build_clique_tree(&[vec![0, 1]], 3).unwrap_err(), ChordalError::NotCovered(2));
    }

    #[test]
    fn non_chordal_cliques_rejected() {
        // edges of a 4-cycle are not the cliques of a chordal graph
        let r = build_clique_tree(&[vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]], 4);
        assert!(matches!(r, Err(ChordalError::CliqueIntersection(_))));
    }

    #[test]
    fn star_of_cliques_and_paths() {
        let t = build_clique_tree(&[vec![0, 1], vec![1, 2], vec![1, 3], vec![3, 4]], 5).unwrap();
        assert!(t.check_running_intersection());
        assert!(t.clique_intersection_violation().is_none());
        let leaf = t.cliques.iter().position(|c| c == &vec![3, 4]).unwrap();
        let p = t.path(leaf, 0);
        assert_eq!(p.first(), Some(&leaf));
        assert_eq!(p.last(), Some(&0));
    }
}
