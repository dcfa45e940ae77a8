use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numerics::CMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sparse Hermitian matrix holding the upper triangle `(i ≤ j)`.
///
/// Entries are structural: an explicitly inserted zero stays in the pattern.
/// Diagonal entries are real by construction, so `M = M*` holds exactly.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseHermitian {
    n: usize,
    upper: BTreeMap<(usize, usize), Complex64>,
}

impl SparseHermitian {
    pub fn new(n: usize) -> Self {
        Self { n, upper: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Adds `v` at `(i, j)` and `v̄` at `(j, i)`; on the diagonal only `Re v` is kept.
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        assert!(i < self.n && j < self.n, "entry ({i}, {j}) outside {}x{}", self.n, self.n);
        let (key, val) = match i.cmp(&j) {
            std::cmp::Ordering::Less => ((i, j), v),
            std::cmp::Ordering::Greater => ((j, i), v.conj()),
            std::cmp::Ordering::Equal => ((i, i), Complex64::new(v.re, 0.0)),
        };
        *self.upper.entry(key).or_insert(ZERO) += val;
    }

    /// Adds `α · a* b + ᾱ · b* a` for row vectors `a`, `b` given as sparse
    /// `(index, value)` lists, i.e. entry `(i, j)` gets `α ā_i b_j + ᾱ b̄_i a_j`.
    pub fn add_sym_outer(&mut self, alpha: Complex64, a: &[(usize, Complex64)], b: &[(usize, Complex64)]) {
        for &(i, ai) in a {
            for &(j, bj) in b {
                let v = alpha * ai.conj() * bj;
                if i == j {
                    self.add(i, i, v + v.conj());
                } else {
                    self.add(i, j, v);
                }
            }
        }
    }

    /// Entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if i <= j {
            self.upper.get(&(i, j)).copied().unwrap_or(ZERO)
        } else {
            self.upper.get(&(j, i)).map(|v| v.conj()).unwrap_or(ZERO)
        }
    }

    /// Stored upper-triangle entries `((i, j), value)` with `i ≤ j`.
    pub fn upper_entries(&self) -> impl Iterator<Item = ((usize, usize), Complex64)> + '_ {
        self.upper.iter().map(|(&k, &v)| (k, v))
    }

    pub fn nnz_upper(&self) -> usize {
        self.upper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.upper.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, upper: self.upper.iter().map(|(&k, &v)| (k, v * s)).collect() }
    }

    /// `self += s · other` (patterns are merged).
    pub fn axpy(&mut self, s: f64, other: &SparseHermitian) {
        assert_eq!(self.n, other.n);
        for (&k, &v) in &other.upper {
            *self.upper.entry(k).or_insert(ZERO) += v * s;
        }
    }

    /// Accumulates `s · self` into a dense matrix.
    pub fn add_to_dense(&self, s: f64, out: &mut CMatrix) {
        for (&(i, j), &v) in &self.upper {
            out[(i, j)] += v * s;
            if i != j {
                out[(j, i)] += v.conj() * s;
            }
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.n, self.n);
        self.add_to_dense(1.0, &mut out);
        out
    }

    /// Structural upper pattern of a dense Hermitian matrix (entries with `|v| > tol`).
    pub fn from_dense(m: &CMatrix, tol: f64) -> Self {
        let mut out = Self::new(m.nrows());
        for j in 0..m.ncols() {
            for i in 0..=j {
                let v = m[(i, j)];
                if v.norm() > tol {
                    out.upper.insert((i, j), if i == j { Complex64::new(v.re, 0.0) } else { v });
                }
            }
        }
        out
    }

    /// Restriction to `index` (local index `a` ↔ global `index[a]`).
    pub fn restrict(&self, index: &[usize]) -> Self {
        let mut local = vec![usize::MAX; self.n];
        for (a, &g) in index.iter().enumerate() {
            local[g] = a;
        }
        let mut out = Self::new(index.len());
        for (&(i, j), &v) in &self.upper {
            let (a, b) = (local[i], local[j]);
            if a != usize::MAX && b != usize::MAX {
                out.add(a, b, v);
            }
        }
        out
    }

    pub fn to_triplets(&self) -> TripletMatrix {
        let mut t = TripletMatrix { n: self.n, rows: vec![], cols: vec![], re: vec![], im: vec![] };
        for (&(i, j), &v) in &self.upper {
            t.rows.push(i);
            t.cols.push(j);
            t.re.push(v.re);
            t.im.push(v.im);
        }
        t
    }

    pub fn from_triplets(t: &TripletMatrix) -> Result<Self, String> {
        let len = t.rows.len();
        if t.cols.len() != len || t.re.len() != len || t.im.len() != len {
            return Err("triplet arrays differ in length".into());
        }
        let mut out = Self::new(t.n);
        for k in 0..len {
            let (i, j) = (t.rows[k], t.cols[k]);
            if i >= t.n || j >= t.n {
                return Err(format!("triplet ({i}, {j}) outside dimension {}", t.n));
            }
            out.add(i, j, Complex64::new(t.re[k], t.im[k]));
        }
        Ok(out)
    }
}

/// Upper-triangle sparse triplets with separate real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletMatrix {
    pub n: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::hermitian_defect;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn add_is_hermitian() {
        let mut m = SparseHermitian::new(3);
        m.add(0, 1, c(1.0, 2.0));
        m.add(2, 0, c(0.5, -1.0));
        m.add(1, 1, c(3.0, 7.0));
        let d = m.to_dense();
        assert_eq!(hermitian_defect(&d), 0.0);
        assert_eq!(d[(1, 0)], c(1.0, -2.0));
        assert_eq!(d[(0, 2)], c(0.5, 1.0));
        assert_eq!(d[(1, 1)], c(3.0, 0.0));
        assert_eq!(m.get(2, 0), c(0.5, -1.0));
    }

    #[test]
    fn sym_outer_matches_dense() {
        let a = [(0, c(1.0, 1.0)), (2, c(0.0, -2.0))];
        let b = [(1, c(3.0, 0.0)), (2, c(1.0, 0.5))];
        let alpha = c(0.3, -0.7);
        let mut m = SparseHermitian::new(3);
        m.add_sym_outer(alpha, &a, &b);
        let mut av = CMatrix::zeros(1, 3);
        let mut bv = CMatrix::zeros(1, 3);
        for &(i, v) in &a {
            av[(0, i)] = v;
        }
        for &(i, v) in &b {
            bv[(0, i)] = v;
        }
        let t = av.adjoint() * &bv * alpha;
        let expected = &t + t.adjoint();
        assert!((m.to_dense() - expected).norm() < 1e-14);
    }

    #[test]
    fn structural_zero_kept() {
        let mut m = SparseHermitian::new(2);
        m.add(0, 1, c(0.0, 0.0));
        assert_eq!(m.nnz_upper(), 1);
    }

    #[test]
    fn triplets_round_trip() {
        let mut m = SparseHermitian::new(3);
        m.add(0, 2, c(1.0, -1.0));
        m.add(1, 1, c(2.0, 0.0));
        let t = m.to_triplets();
        assert_eq!(SparseHermitian::from_triplets(&t).unwrap(), m);
    }

    #[test]
    fn restrict_maps_indices() {
        let mut m = SparseHermitian::new(4);
        m.add(1, 3, c(1.0, 1.0));
        m.add(0, 1, c(5.0, 0.0));
        let r = m.restrict(&[1, 3]);
        assert_eq!(r.get(0, 1), c(1.0, 1.0));
        assert_eq!(r.nnz_upper(), 1);
    }
}
