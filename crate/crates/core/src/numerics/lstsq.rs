use nalgebra::{DVector, SVD};

use super::{NumericsError, RMatrix, Tolerances};

/// Minimum-norm least-squares solution with a rank report.
#[derive(Debug, Clone)]
pub struct LstsqSolution {
    pub x: DVector<f64>,
    pub rank: usize,
    pub rank_deficient: bool,
}

/// Minimizes `‖Ax − b‖₂`; rank-deficient systems get the minimum-norm minimizer.
pub fn lstsq(a: &RMatrix, b: &DVector<f64>) -> Result<LstsqSolution, NumericsError> {
    if a.nrows() != b.len() {
        return Err(NumericsError::Dimension(format!(
            "lstsq with A {}x{} and b of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    let full = a.nrows().min(a.ncols());
    if full == 0 {
        return Ok(LstsqSolution { x: DVector::zeros(a.ncols()), rank: 0, rank_deficient: a.ncols() > 0 });
    }
    let svd = SVD::new(a.clone(), true, true);
    let smax = svd.singular_values.max();
    let cutoff = Tolerances::default().lstsq_rcond * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff && s > 0.0).count();
    let x = svd
        .solve(b, cutoff.max(f64::MIN_POSITIVE))
        .map_err(|e| NumericsError::Dimension(e.to_string()))?;
    Ok(LstsqSolution { x, rank, rank_deficient: rank < a.ncols() })
}
