use std::collections::BTreeMap;

use crate::iqc::SparseHermitian;
use crate::numerics::{CMatrix, RMatrix};

/// Upper-triangle entries `(i, j, value)`, `i ≤ j`, of a real symmetric matrix.
pub type SymEntries = Vec<(usize, usize, f64)>;

/// Realified upper-triangle entries of a sparse Hermitian matrix, scaled by `s`:
/// `M ↦ [[Re M, −Im M], [Im M, Re M]]`.
pub fn realify_sparse(m: &SparseHermitian, s: f64) -> SymEntries {
    let n = m.dim();
    let mut out = Vec::with_capacity(4 * m.nnz_upper());
    for ((a, b), v) in m.upper_entries() {
        out.push((a, b, s * v.re));
        out.push((n + a, n + b, s * v.re));
        if a != b {
            out.push((a, n + b, -s * v.im));
            out.push((b, n + a, s * v.im));
        }
    }
    out
}

/// Real symmetric 2n×2n embedding of a Hermitian matrix.
pub fn realify_matrix(m: &CMatrix) -> RMatrix {
    let n = m.nrows();
    let mut out = RMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            let v = m[(i, j)];
            out[(i, j)] = v.re;
            out[(n + i, n + j)] = v.re;
            out[(i, n + j)] = -v.im;
            out[(n + i, j)] = v.im;
        }
    }
    out
}

/// `v ↦ C + Σ v_i A_i` over sparse real symmetric matrices of size `dim`.
#[derive(Debug, Clone)]
pub struct RealAffineMap {
    pub dim: usize,
    pub constant: SymEntries,
    pub columns: Vec<SymEntries>,
}

fn weight(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        2.0
    }
}

impl RealAffineMap {
    pub fn num_vars(&self) -> usize {
        self.columns.len()
    }

    /// Dense `C + Σ v_i A_i`.
    pub fn apply(&self, v: &[f64]) -> RMatrix {
        let mut m = RMatrix::zeros(self.dim, self.dim);
        for &(i, j, x) in &self.constant {
            m[(i, j)] += x;
        }
        for (col, &vi) in self.columns.iter().zip(v) {
            if vi != 0.0 {
                for &(i, j, x) in col {
                    m[(i, j)] += vi * x;
                }
            }
        }
        for j in 0..self.dim {
            for i in 0..j {
                m[(j, i)] = m[(i, j)];
            }
        }
        m
    }

    /// `⟨A_i, T⟩_F` for every column.
    pub fn adjoint(&self, t: &RMatrix) -> Vec<f64> {
        self.columns
            .iter()
            .map(|col| col.iter().map(|&(i, j, x)| weight(i, j) * x * t[(i, j)]).sum())
            .collect()
    }

    /// `⟨C, T⟩_F`-free Gram matrix `G_ij = ⟨A_i, A_j⟩_F`.
    pub fn gram(&self) -> RMatrix {
        let p = self.num_vars();
        let mut at: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
        for (c, col) in self.columns.iter().enumerate() {
            for &(i, j, x) in col {
                at.entry((i, j)).or_default().push((c, x));
            }
        }
        let mut g = RMatrix::zeros(p, p);
        for (&(i, j), list) in &at {
            let w = weight(i, j);
            // merge duplicates of the same column at one position
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(list.len());
            for &(c, x) in list {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += x,
                    _ => merged.push((c, x)),
                }
            }
            for &(a, xa) in &merged {
                for &(b, xb) in &merged {
                    g[(a, b)] += w * xa * xb;
                }
            }
        }
        g
    }
}
