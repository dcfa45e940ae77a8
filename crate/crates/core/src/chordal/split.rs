use num_complex::Complex64;

use super::{ChordalError, CliqueTree};
use crate::numerics::{max_abs, semidef_sqrt_ordered, CMatrix, Tolerances};

/// Splits a negative semidefinite `H` with chordal pattern into per-clique
/// blocks `H^k ⪯ 0` with `H = Σ_k E_k H^k E_kᵀ`.
///
/// `−H` is factored along the tree's elimination ordering; the rank-one term
/// of each factor column goes to the least-index clique holding its support.
/// When `−H` is numerically singular and the ordered factorization breaks
/// down, `−H + σI` is factored instead (with σ at roundoff scale) and `σ` is
/// returned to the diagonal of each vertex's residual clique, so the blocks
/// satisfy `H^k ⪯ σI` and reassemble exactly.
pub fn agler_split(h: &CMatrix, tree: &CliqueTree) -> Result<Vec<CMatrix>, ChordalError> {
    let n = h.nrows();
    if h.ncols() != n || tree.n != n {
        return Err(ChordalError::Dimension(format!("H is {}x{} for a tree on {} vertices", n, h.ncols(), tree.n)));
    }
    let scale = max_abs(h);
    let tau = Tolerances::default().sqrt_pivot_rel * scale;
    for j in 0..n {
        for i in 0..j {
            if h[(i, j)].norm() > tau && tree.least_clique_containing(&[i, j]).is_none() {
                return Err(ChordalError::SupportOutsidePattern(i, j));
            }
        }
    }
    let p = h.map(|z| -z);
    let first = match split_factor(&p, tree, tau) {
        Ok(blocks) => return Ok(blocks),
        Err(e) => e,
    };
    let sigma = 1e3 * n as f64 * f64::EPSILON * scale;
    let mut shifted = p;
    for v in 0..n {
        shifted[(v, v)] += Complex64::new(sigma, 0.0);
    }
    let mut blocks = split_factor(&shifted, tree, tau).map_err(|_| first)?;
    for (k, residual) in tree.residuals.iter().enumerate() {
        for &v in residual {
            let a = tree.cliques[k].iter().position(|&u| u == v).expect("residual vertex lies in its clique");
            blocks[k][(a, a)] += Complex64::new(sigma, 0.0);
        }
    }
    Ok(blocks)
}

fn split_factor(p: &CMatrix, tree: &CliqueTree, tau: f64) -> Result<Vec<CMatrix>, ChordalError> {
    let n = p.nrows();
    let factor = semidef_sqrt_ordered(p, &tree.peo(), tau).map_err(ChordalError::NotNsd)?;
    let mut blocks: Vec<CMatrix> = tree.cliques.iter().map(|c| CMatrix::zeros(c.len(), c.len())).collect();
    for col in 0..n {
        let support = factor.column_support(col);
        if support.is_empty() {
            continue;
        }
        let k = tree
            .least_clique_containing(&support)
            .ok_or(ChordalError::SupportOutsidePattern(support[0], *support.last().unwrap()))?;
        let clique = &tree.cliques[k];
        let ell: Vec<Complex64> = clique.iter().map(|&v| factor.l[(v, col)]).collect();
        let block = &mut blocks[k];
        for a in 0..clique.len() {
            if ell[a] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..clique.len() {
                block[(a, b)] -= ell[a] * ell[b].conj();
            }
        }
    }
    Ok(blocks)
}

/// `Σ_k E_k H^k E_kᵀ`.
pub fn reassemble_blocks(blocks: &[CMatrix], tree: &CliqueTree) -> CMatrix {
    let mut out = CMatrix::zeros(tree.n, tree.n);
    for (k, b) in blocks.iter().enumerate() {
        let c = &tree.cliques[k];
        for (a, &i) in c.iter().enumerate() {
            for (bb, &j) in c.iter().enumerate() {
                out[(i, j)] += b[(a, bb)];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chordal::build_clique_tree;
    use crate::numerics::herm_max_eig;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn single_clique_keeps_matrix() {
        let h = CMatrix::from_row_slice(2, 2, &[c(-2.0), c(1.0), c(1.0), c(-1.0)]);
        let tree = build_clique_tree(&[vec![0, 1]], 2).unwrap();
        let blocks = agler_split(&h, &tree).unwrap();
        assert!(max_abs(&(&blocks[0] - &h)) < 1e-14);
    }

    #[test]
    fn tridiagonal_split() {
        let h = CMatrix::from_row_slice(3, 3, &[c(-2.0), c(-1.0), c(0.0), c(-1.0), c(-2.0), c(-1.0), c(0.0), c(-1.0), c(-2.0)]);
        let tree = build_clique_tree(&[vec![0, 1], vec![1, 2]], 3).unwrap();
        let blocks = agler_split(&h, &tree).unwrap();
        assert_eq!(blocks.len(), 2);
        for b in &blocks {
            assert!(herm_max_eig(b).unwrap() <= 1e-12);
        }
        assert!(max_abs(&(reassemble_blocks(&blocks, &tree) - &h)) < 1e-14);
    }

    #[test]
    fn zero_matrix() {
        let tree = build_clique_tree(&[vec![0, 1], vec![1, 2]], 3).unwrap();
        let blocks = agler_split(&CMatrix::zeros(3, 3), &tree).unwrap();
        assert!(blocks.iter().all(|b| max_abs(b) == 0.0));
    }

    #[test]
    fn rejects_positive_and_off_pattern() {
        let tree = build_clique_tree(&[vec![0, 1], vec![1, 2]], 3).unwrap();
        assert!(matches!(agler_split(&CMatrix::identity(3, 3), &tree), Err(ChordalError::NotNsd(_))));
        let mut h = -CMatrix::identity(3, 3);
        h[(0, 2)] = c(-0.1);
        h[(2, 0)] = c(-0.1);
        assert_eq!(agler_split(&h, &tree).unwrap_err(), ChordalError::SupportOutsidePattern(0, 2));
    }
}
