//! Dense numerical kernels used throughout the crate.
//!
//! Storage and elementary arithmetic come from `nalgebra`; the kernels the
//! analysis depends on for its guarantees (Jacobi eigensolvers, the
//! semidefinite square-root factorization and the complex LU solve) live
//! here so their tolerances are under our control.

mod eig;
mod factor;
mod lstsq;

pub use eig::{herm_eig, herm_max_eig, sym_eig, HermEig, SymEig};
pub use factor::{semidef_sqrt, semidef_sqrt_ordered, solve_dense, SemidefFactor};
pub use lstsq::{lstsq, LstsqSolution};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Complex dense matrix.
pub type CMatrix = DMatrix<Complex64>;
/// Real dense matrix.
pub type RMatrix = DMatrix<f64>;

/// Imaginary unit.
pub const J: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:.3e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
    #[error("matrix is singular to working precision (smallest pivot {pivot:.3e})")]
    Singular { pivot: f64 },
    #[error("matrix is indefinite beyond tolerance (pivot {pivot:.3e} at index {index})")]
    Indefinite { index: usize, pivot: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite entry encountered")]
    NonFinite,
}

/// Tolerances shared by the kernels and their callers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative Hermitian-ness required on input to the eigensolvers.
    pub hermitian_rel: f64,
    /// Off-diagonal Frobenius norm (relative) at which Jacobi stops.
    pub jacobi_off_rel: f64,
    /// Jacobi sweep budget.
    pub jacobi_sweeps: usize,
    /// Pivots below this fraction of the largest pivot make LU fail.
    pub lu_pivot_rel: f64,
    /// Semidefinite square-root pivot tolerance relative to `‖P‖_∞`.
    pub sqrt_pivot_rel: f64,
    /// Reconstruction error allowed for the square-root factor, relative to `‖P‖_∞`.
    pub sqrt_residual_rel: f64,
    /// Singular values below this fraction of the largest are dropped by `lstsq`.
    pub lstsq_rcond: f64,
    /// Default well-posedness threshold on `σ_min(I − ΓG_zw)`.
    pub well_posed_sigma: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian_rel: 1e-12,
            jacobi_off_rel: 1e-15,
            jacobi_sweeps: 30,
            lu_pivot_rel: 1e-14,
            sqrt_pivot_rel: 1e-10,
            sqrt_residual_rel: 1e-9,
            lstsq_rcond: 1e-12,
            well_posed_sigma: 1e-6,
        }
    }
}

/// Entrywise max-abs norm.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Entrywise max-abs norm of a real matrix.
pub fn max_abs_real(m: &RMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Induced infinity norm (max row sum).
pub fn inf_norm(m: &CMatrix) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `max |A − A*|` entrywise.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Promotes a real matrix to a complex one.
pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Largest real part of the eigenvalues of a real square matrix (−∞ when
/// empty), from a real Schur form with a bounded QR iteration count. When the
/// iteration stalls it is retried on orthogonally similar matrices `QᵀAQ`
/// with fixed pseudo-random `Q`; NaN if every attempt fails.
pub fn spectral_abscissa(a: &RMatrix) -> f64 {
    use rand::{Rng, SeedableRng};
    let n = a.nrows();
    if n == 0 {
        return f64::NEG_INFINITY;
    }
    let budget = 200 * n.max(4);
    let abscissa = |m: RMatrix| {
        nalgebra::Schur::try_new(m, f64::EPSILON, budget)
            .map(|s| s.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
    };
    if let Some(x) = abscissa(a.clone()) {
        return x;
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..8 {
        let q = RMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)).qr().q();
        if let Some(x) = abscissa(q.transpose() * a * &q) {
            return x;
        }
    }
    f64::NAN
}
