use num_complex::Complex64;

use super::{max_abs, CMatrix, NumericsError, Tolerances};

/// Square-root factor `P = L L*` of a Hermitian positive semidefinite matrix.
///
/// Column `k` of `l` is the factor column produced when the `k`-th vertex of
/// `order` was eliminated; with the natural order `l` is lower triangular.
/// Columns whose pivot vanished to roundoff are exactly zero.
#[derive(Debug, Clone)]
pub struct SemidefFactor {
    pub l: CMatrix,
    pub order: Vec<usize>,
    pub rank: usize,
}

impl SemidefFactor {
    /// Row indices where column `k` is nonzero.
    pub fn column_support(&self, k: usize) -> Vec<usize> {
        (0..self.l.nrows()).filter(|&r| self.l[(r, k)] != Complex64::new(0.0, 0.0)).collect()
    }
}

/// Semidefinite-safe square-root factorization in the natural order.
pub fn semidef_sqrt(p: &CMatrix, pivot_tol: f64) -> Result<SemidefFactor, NumericsError> {
    let order: Vec<usize> = (0..p.nrows()).collect();
    semidef_sqrt_ordered(p, &order, pivot_tol)
}

/// Semidefinite-safe square-root factorization eliminating vertices in `order`.
///
/// Small positive pivots are still eliminated (semidefiniteness bounds the
/// factor entries); only pivots at roundoff level produce a zero column. The
/// input is rejected if a pivot is negative beyond `pivot_tol` or the
/// reconstruction error exceeds the residual tolerance.
pub fn semidef_sqrt_ordered(
    p: &CMatrix,
    order: &[usize],
    pivot_tol: f64,
) -> Result<SemidefFactor, NumericsError> {
    let n = p.nrows();
    if p.ncols() != n || order.len() != n {
        return Err(NumericsError::Dimension(format!(
            "factorization of {}x{} with an ordering of length {}",
            n,
            p.ncols(),
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &v in order {
        if v >= n || seen[v] {
            return Err(NumericsError::Dimension("ordering is not a permutation".into()));
        }
        seen[v] = true;
    }

    let scale = max_abs(p);
    let floor = pivot_tol.min(64.0 * n as f64 * f64::EPSILON * scale);
    let mut work = p.clone();
    let mut l = CMatrix::zeros(n, n);
    let mut remaining = vec![true; n];
    let mut rank = 0;
    for (k, &v) in order.iter().enumerate() {
        remaining[v] = false;
        let pivot = work[(v, v)].re;
        if pivot < -pivot_tol.max(f64::MIN_POSITIVE) {
            return Err(NumericsError::Indefinite { index: v, pivot });
        }
        if pivot <= floor || pivot <= 0.0 {
            continue;
        }
        let root = pivot.sqrt();
        let support: Vec<usize> = (0..n)
            .filter(|&r| r == v || (remaining[r] && work[(r, v)] != Complex64::new(0.0, 0.0)))
            .collect();
        for &r in &support {
            l[(r, k)] = if r == v { Complex64::new(root, 0.0) } else { work[(r, v)] / root };
        }
        for &c in &support {
            if c == v {
                continue;
            }
            let lc = l[(c, k)].conj();
            for &r in &support {
                if r == v {
                    continue;
                }
                work[(r, c)] -= l[(r, k)] * lc;
            }
        }
        rank += 1;
    }

    let recon = &l * l.adjoint();
    let err = max_abs(&(&recon - p));
    if err > Tolerances::default().sqrt_residual_rel * scale.max(f64::MIN_POSITIVE) && err > 0.0 {
        let worst = (0..n)
            .max_by(|&a, &b| work[(a, a)].re.total_cmp(&work[(b, b)].re))
            .unwrap_or(0);
        return Err(NumericsError::Indefinite { index: worst, pivot: -err });
    }
    Ok(SemidefFactor { l, order: order.to_vec(), rank })
}

/// Solves `A X = B` by LU with partial pivoting.
pub fn solve_dense(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, NumericsError> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(NumericsError::Dimension(format!(
            "solve with A {}x{} and B {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let scale = max_abs(a);
    let floor = Tolerances::default().lu_pivot_rel * scale;
    let mut lu = a.clone();
    let mut x = b.clone();
    for k in 0..n {
        let (piv_row, piv_mag) = (k..n)
            .map(|r| (r, lu[(r, k)].norm()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_mag <= floor || piv_mag == 0.0 {
            return Err(NumericsError::Singular { pivot: piv_mag });
        }
        if piv_row != k {
            lu.swap_rows(k, piv_row);
            x.swap_rows(k, piv_row);
        }
        let pivot = lu[(k, k)];
        for r in k + 1..n {
            let factor = lu[(r, k)] / pivot;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            lu[(r, k)] = factor;
            for c in k + 1..n {
                let t = lu[(k, c)];
                lu[(r, c)] -= factor * t;
            }
            for c in 0..x.ncols() {
                let t = x[(k, c)];
                x[(r, c)] -= factor * t;
            }
        }
    }
    for c in 0..x.ncols() {
        for k in (0..n).rev() {
            let mut acc = x[(k, c)];
            for j in k + 1..n {
                acc -= lu[(k, j)] * x[(j, c)];
            }
            x[(k, c)] = acc / lu[(k, k)];
        }
    }
    Ok(x)
}
