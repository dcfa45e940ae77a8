//! Range-space decomposition of a sparse LMI along a clique tree.
//!
//! Every structural entry of `W` and of each coefficient `Q_i` is given to
//! the least-index clique containing both of its endpoints. Cliques are then
//! coupled through variables `d_{ijk}`, one per pair `i ≥ j` in a separator
//! `S_k`, which enter block `k` with a plus sign and block `parent(k)` with a
//! minus sign, so they cancel in the sum of all blocks.

use std::collections::{BTreeSet, HashMap};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chordal::CliqueTree;
use crate::iqc::{HermitianAffineLMI, SparseHermitian, VariableMeta};
use crate::numerics::{CMatrix, J};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompError {
    #[error("entry ({0}, {1}) is not covered by any clique")]
    Pattern(usize, usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index ({i}, {j}) is not in clique {k}")]
    OutsideClique { i: usize, j: usize, k: usize },
}

/// One coupling triple `(i, j, k)`, `i ≥ j ∈ S_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CouplingTriple {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    /// Offset of this triple's real coordinates in the `d` vector.
    pub offset: usize,
}

impl CouplingTriple {
    /// Real coordinates: one on the diagonal, two (real, imaginary) off it.
    pub fn width(&self) -> usize {
        if self.i == self.j {
            1
        } else {
            2
        }
    }
}

/// Enumeration of the coupling variables, `k`-major then column-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CouplingIndex {
    pub triples: Vec<CouplingTriple>,
    /// Triples of clique `k` as a range into `triples`.
    pub by_clique: Vec<std::ops::Range<usize>>,
    pub real_dim: usize,
}

impl CouplingIndex {
    pub fn new(tree: &CliqueTree) -> Self {
        let mut triples = Vec::new();
        let mut by_clique = Vec::with_capacity(tree.len());
        let mut offset = 0;
        for k in 0..tree.len() {
            let start = triples.len();
            if tree.parent[k].is_some() {
                let s = &tree.separators[k];
                for &j in s {
                    for &i in s.iter().filter(|&&i| i >= j) {
                        let t = CouplingTriple { i, j, k, offset };
                        offset += t.width();
                        triples.push(t);
                    }
                }
            }
            by_clique.push(start..triples.len());
        }
        Self { triples, by_clique, real_dim: offset }
    }

    /// `m̄`, the number of triples.
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

/// Per-clique data of a decomposed LMI.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueBlock {
    /// Global LMI indices of the clique, ascending; local index = position.
    pub index: Vec<usize>,
    pub w: SparseHermitian,
    /// `(variable, restricted coefficient)` for every variable with entries here.
    pub coeffs: Vec<(usize, SparseHermitian)>,
}

impl CliqueBlock {
    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn local(&self, global: usize) -> Option<usize> {
        self.index.binary_search(&global).ok()
    }
}

/// Index of a scalar in the combined vector `v = [y; d]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum VarRef {
    Y(usize),
    D(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedProblem {
    pub tree: CliqueTree,
    pub blocks: Vec<CliqueBlock>,
    pub coupling: CouplingIndex,
    pub vars: Vec<VariableMeta>,
    pub index_owner: Vec<usize>,
    pub dense_coupling: bool,
    pub n: usize,
}

/// Splits `lmi` into clique blocks; the LMI pattern must lie inside the
/// cliques of `tree`.
pub fn decompose(lmi: &HermitianAffineLMI, tree: &CliqueTree) -> Result<DecomposedProblem, DecompError> {
    let n = lmi.dim();
    if tree.n != n {
        return Err(DecompError::Dimension(format!("LMI of dimension {n} with a tree on {} vertices", tree.n)));
    }
    let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
    let mut assign = |i: usize, j: usize| -> Result<usize, DecompError> {
        if let Some(&k) = owner.get(&(i, j)) {
            return Ok(k);
        }
        let k = tree.least_clique_containing(&[i, j]).ok_or(DecompError::Pattern(i, j))?;
        owner.insert((i, j), k);
        Ok(k)
    };
    let l = tree.len();
    let mut blocks: Vec<CliqueBlock> = tree
        .cliques
        .iter()
        .map(|c| CliqueBlock { index: c.clone(), w: SparseHermitian::new(c.len()), coeffs: Vec::new() })
        .collect();
    let local: Vec<HashMap<usize, usize>> =
        tree.cliques.iter().map(|c| c.iter().enumerate().map(|(a, &g)| (g, a)).collect()).collect();

    for ((i, j), v) in lmi.w.upper_entries() {
        let k = assign(i, j)?;
        blocks[k].w.add(local[k][&i], local[k][&j], v);
    }
    for (var, q) in lmi.coeffs.iter().enumerate() {
        let mut parts: Vec<Option<SparseHermitian>> = vec![None; l];
        for ((i, j), v) in q.upper_entries() {
            let k = assign(i, j)?;
            parts[k]
                .get_or_insert_with(|| SparseHermitian::new(tree.cliques[k].len()))
                .add(local[k][&i], local[k][&j], v);
        }
        for (k, part) in parts.into_iter().enumerate() {
            if let Some(p) = part {
                blocks[k].coeffs.push((var, p));
            }
        }
    }
    Ok(DecomposedProblem {
        tree: tree.clone(),
        blocks,
        coupling: CouplingIndex::new(tree),
        vars: lmi.vars.clone(),
        index_owner: lmi.index_owner.clone(),
        dense_coupling: lmi.dense_coupling,
        n,
    })
}

/// Signed local contributions of a unit `d_{ijk}`: `+E_ij` in clique `k`
/// and `−E_ij` in `parent(k)`, each in that clique's local indices.
pub fn coupling_matrix(tree: &CliqueTree, k: usize, i: usize, j: usize) -> Result<Vec<(usize, CMatrix)>, DecompError> {
    let unit = |c: usize, sign: f64| -> Result<(usize, CMatrix), DecompError> {
        let clique = &tree.cliques[c];
        let a = clique.binary_search(&i).map_err(|_| DecompError::OutsideClique { i, j, k: c })?;
        let b = clique.binary_search(&j).map_err(|_| DecompError::OutsideClique { i, j, k: c })?;
        let mut m = CMatrix::zeros(clique.len(), clique.len());
        m[(a, b)] += Complex64::new(sign, 0.0);
        if a != b {
            m[(b, a)] += Complex64::new(sign, 0.0);
        }
        Ok((c, m))
    };
    let sep = &tree.separators[k];
    if sep.binary_search(&i).is_err() || sep.binary_search(&j).is_err() {
        return Err(DecompError::OutsideClique { i, j, k });
    }
    let mut out = vec![unit(k, 1.0)?];
    if let Some(p) = tree.parent[k] {
        out.push(unit(p, -1.0)?);
    }
    Ok(out)
}

impl DecomposedProblem {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn num_y(&self) -> usize {
        self.vars.len()
    }

    pub fn num_d(&self) -> usize {
        self.coupling.real_dim
    }

    /// Length of the combined vector `[y; d]`.
    pub fn num_combined(&self) -> usize {
        self.num_y() + self.num_d()
    }

    pub fn combined_index(&self, r: VarRef) -> usize {
        match r {
            VarRef::Y(i) => i,
            VarRef::D(i) => self.num_y() + i,
        }
    }

    fn add_coupling(&self, k: usize, d: &[f64], sign: f64, t: &CouplingTriple, out: &mut CMatrix) {
        let blk = &self.blocks[k];
        let a = blk.local(t.i).expect("separator inside clique");
        let b = blk.local(t.j).expect("separator inside clique");
        if a == b {
            out[(a, a)] += Complex64::new(sign * d[t.offset], 0.0);
        } else {
            let v = Complex64::new(d[t.offset], d[t.offset + 1]) * sign;
            out[(a, b)] += v;
            out[(b, a)] += v.conj();
        }
    }

    /// `Q̄^k(y) + W^k + U^k(d)`.
    pub fn eval_block(&self, k: usize, y: &[f64], d: &[f64]) -> CMatrix {
        assert_eq!(y.len(), self.num_y(), "y length");
        assert_eq!(d.len(), self.num_d(), "d length");
        let blk = &self.blocks[k];
        let mut out = blk.w.to_dense();
        for (var, q) in &blk.coeffs {
            if y[*var] != 0.0 {
                q.add_to_dense(y[*var], &mut out);
            }
        }
        for t in &self.coupling.triples[self.coupling.by_clique[k].clone()] {
            self.add_coupling(k, d, 1.0, t, &mut out);
        }
        for &c in &self.tree.children[k] {
            for t in &self.coupling.triples[self.coupling.by_clique[c].clone()] {
                self.add_coupling(k, d, -1.0, t, &mut out);
            }
        }
        out
    }

    /// `Σ_k E_k (Q̄^k(y) + W^k + U^k(d)) E_kᵀ`.
    pub fn reassemble(&self, y: &[f64], d: &[f64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.n, self.n);
        for k in 0..self.len() {
            let b = self.eval_block(k, y, d);
            let idx = &self.blocks[k].index;
            for (a, &i) in idx.iter().enumerate() {
                for (c, &j) in idx.iter().enumerate() {
                    out[(i, j)] += b[(a, c)];
                }
            }
        }
        out
    }

    /// Affine description of block `k` over the combined vector:
    /// constant `W^k` and `(variable, coefficient)` terms.
    pub fn local_affine(&self, k: usize) -> (SparseHermitian, Vec<(VarRef, SparseHermitian)>) {
        let blk = &self.blocks[k];
        let dim = blk.dim();
        let mut terms: Vec<(VarRef, SparseHermitian)> =
            blk.coeffs.iter().map(|(v, q)| (VarRef::Y(*v), q.clone())).collect();
        let mut push = |t: &CouplingTriple, sign: f64| {
            let a = blk.local(t.i).expect("separator inside clique");
            let b = blk.local(t.j).expect("separator inside clique");
            let mut re = SparseHermitian::new(dim);
            re.add(a, b, Complex64::new(sign, 0.0));
            terms.push((VarRef::D(t.offset), re));
            if a != b {
                let mut im = SparseHermitian::new(dim);
                im.add(a, b, J * sign);
                terms.push((VarRef::D(t.offset + 1), im));
            }
        };
        for t in &self.coupling.triples[self.coupling.by_clique[k].clone()] {
            push(t, 1.0);
        }
        for &c in &self.tree.children[k] {
            for t in &self.coupling.triples[self.coupling.by_clique[c].clone()] {
                push(t, -1.0);
            }
        }
        (blk.w.clone(), terms)
    }

    /// Variables (combined indices) that block `k` depends on, ascending.
    pub fn block_variables(&self, k: usize) -> Vec<VarRef> {
        let (_, terms) = self.local_affine(k);
        let set: BTreeSet<VarRef> = terms.into_iter().map(|t| t.0).collect();
        set.into_iter().collect()
    }

    /// Subsystems whose model data block `k` is built from.
    pub fn subsystems_referenced(&self, k: usize) -> Vec<usize> {
        if self.dense_coupling {
            let count = self.index_owner.iter().copied().max().map_or(0, |m| m + 1);
            return (0..count).collect();
        }
        let set: BTreeSet<usize> = self.blocks[k].index.iter().map(|&g| self.index_owner[g]).collect();
        set.into_iter().collect()
    }

    /// Coupling values `d` making every block equal to the given targets,
    /// which must sum to `Q(y) + W`. Solved from the leaves up; returns `d`
    /// and the largest entry mismatch over all blocks.
    pub fn recover_coupling(&self, y: &[f64], targets: &[CMatrix]) -> Result<(Vec<f64>, f64), DecompError> {
        if targets.len() != self.len() {
            return Err(DecompError::Dimension(format!("{} targets for {} cliques", targets.len(), self.len())));
        }
        let mut d = vec![0.0; self.num_d()];
        for k in (0..self.len()).rev() {
            let base = self.eval_block(k, y, &d);
            let blk = &self.blocks[k];
            for t in &self.coupling.triples[self.coupling.by_clique[k].clone()] {
                let a = blk.local(t.i).expect("separator inside clique");
                let b = blk.local(t.j).expect("separator inside clique");
                let need = targets[k][(a, b)] - base[(a, b)];
                d[t.offset] = need.re;
                if a != b {
                    d[t.offset + 1] = need.im;
                }
            }
        }
        let mut residual = 0.0_f64;
        for (k, target) in targets.iter().enumerate() {
            let diff = self.eval_block(k, y, &d) - target;
            residual = residual.max(crate::numerics::max_abs(&diff));
        }
        Ok((d, residual))
    }

    pub fn dump(&self) -> DecompositionDump {
        let cliques = (0..self.len())
            .map(|k| CliqueRecord {
                id: k,
                vertices: self.tree.cliques[k].clone(),
                parent: self.tree.parent[k],
                separator: self.tree.separators[k].clone(),
                residual: self.tree.residuals[k].clone(),
                dimension: self.blocks[k].dim(),
                local_variables: self.block_variables(k).len(),
                coupling_count: self.coupling.by_clique[k].len(),
                subsystems: self.subsystems_referenced(k),
            })
            .collect();
        DecompositionDump {
            dimension: self.n,
            variables: self.num_y(),
            cliques: self.len(),
            coupling_count: self.coupling.len(),
            coupling_real_dim: self.num_d(),
            clique_records: cliques,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliqueRecord {
    pub id: usize,
    pub vertices: Vec<usize>,
    pub parent: Option<usize>,
    pub separator: Vec<usize>,
    pub residual: Vec<usize>,
    pub dimension: usize,
    pub local_variables: usize,
    pub coupling_count: usize,
    pub subsystems: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionDump {
    pub dimension: usize,
    pub variables: usize,
    pub cliques: usize,
    pub coupling_count: usize,
    pub coupling_real_dim: usize,
    #[serde(rename = "clique_list")]
    pub clique_records: Vec<CliqueRecord>,
}
