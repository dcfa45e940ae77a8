use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{hermitian_defect, CMatrix, NumericsError, RMatrix, Tolerances};

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: RMatrix,
}

/// Eigen-decomposition of a complex Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl SymEig {
    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

impl HermEig {
    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

/// Cyclic Jacobi eigensolver for complex Hermitian matrices.
pub fn herm_eig(a: &CMatrix) -> Result<HermEig, NumericsError> {
    let tol = Tolerances::default();
    let n = square_dim(a.nrows(), a.ncols())?;
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    let scale = a.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let asym = hermitian_defect(a);
    if asym > tol.hermitian_rel * scale {
        return Err(NumericsError::NotHermitian { asymmetry: asym });
    }

    let mut m: Vec<Complex64> = a.as_slice().to_vec();
    for i in 0..n {
        m[i + i * n].im = 0.0;
    }
    let mut v: Vec<Complex64> = CMatrix::identity(n, n).as_slice().to_vec();
    let fro = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let target = tol.jacobi_off_rel * fro;

    let mut converged = n <= 1 || fro == 0.0;
    for sweep in 0..tol.jacobi_sweeps {
        if converged {
            break;
        }
        if herm_off_norm(&m, n) <= target {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[p + q * n];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let app = m[p + p * n].re;
                let aqq = m[q + q * n].re;
                let g = 100.0 * mag;
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    m[p + q * n] = Complex64::new(0.0, 0.0);
                    m[q + p * n] = Complex64::new(0.0, 0.0);
                    continue;
                }
                let (t, _c, s, tau) = rotation(app, aqq, mag);
                let delta = (apq / mag).conj();
                m[p + p * n] = Complex64::new(app - t * mag, 0.0);
                m[q + q * n] = Complex64::new(aqq + t * mag, 0.0);
                m[p + q * n] = Complex64::new(0.0, 0.0);
                m[q + p * n] = Complex64::new(0.0, 0.0);
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let gr = m[r + p * n];
                    let hr = m[r + q * n] * delta;
                    let np = gr - (hr + gr * tau) * s;
                    let nq = hr + (gr - hr * tau) * s;
                    m[r + p * n] = np;
                    m[r + q * n] = nq;
                    m[p + r * n] = np.conj();
                    m[q + r * n] = nq.conj();
                }
                for r in 0..n {
                    let gr = v[r + p * n];
                    let hr = v[r + q * n] * delta;
                    v[r + p * n] = gr - (hr + gr * tau) * s;
                    v[r + q * n] = hr + (gr - hr * tau) * s;
                }
            }
        }
    }
    if !converged {
        let off = herm_off_norm(&m, n);
        if off > target.max(1e-13 * fro) {
            return Err(NumericsError::NoConvergence { sweeps: tol.jacobi_sweeps, off_norm: off });
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| m[i + i * n].re).collect();
    let order = ascending(&diag);
    let vectors = DMatrix::from_fn(n, n, |r, k| v[r + order[k] * n]);
    Ok(HermEig { values: order.iter().map(|&i| diag[i]).collect(), vectors })
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn herm_max_eig(a: &CMatrix) -> Result<f64, NumericsError> {
    Ok(herm_eig(a)?.max())
}

/// Eigen-decomposition of a real symmetric matrix (Householder tridiagonalization
/// plus implicit QR, via nalgebra).
pub fn sym_eig(a: &RMatrix) -> Result<SymEig, NumericsError> {
    let n = square_dim(a.nrows(), a.ncols())?;
    if a.iter().any(|x| !x.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    check_symmetric(a)?;
    let sweeps = Tolerances::default().jacobi_sweeps;
    let e = nalgebra::SymmetricEigen::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or(NumericsError::NoConvergence { sweeps, off_norm: f64::NAN })?;
    let values: Vec<f64> = e.eigenvalues.iter().copied().collect();
    let order = ascending(&values);
    let vectors = DMatrix::from_fn(n, n, |r, k| e.eigenvectors[(r, order[k])]);
    Ok(SymEig { values: order.iter().map(|&i| values[i]).collect(), vectors })
}

/// Jacobi rotation `(t, c, s, τ)` annihilating the off-diagonal of
/// `[[app, apq], [apq, aqq]]`.
fn rotation(app: f64, aqq: f64, apq: f64) -> (f64, f64, f64, f64) {
    let h = aqq - app;
    let g = 100.0 * apq.abs();
    let t = if h.abs() + g == h.abs() {
        apq / h
    } else {
        let theta = 0.5 * h / apq;
        let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
        if theta < 0.0 {
            -t
        } else {
            t
        }
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    (t, c, s, s / (1.0 + c))
}

fn herm_off_norm(m: &[Complex64], n: usize) -> f64 {
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..j {
            s += 2.0 * m[i + j * n].norm_sqr();
        }
    }
    s.sqrt()
}

fn ascending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    order
}

fn square_dim(rows: usize, cols: usize) -> Result<usize, NumericsError> {
    if rows != cols {
        return Err(NumericsError::Dimension(format!("expected a square matrix, got {rows}x{cols}")));
    }
    Ok(rows)
}

fn check_symmetric(a: &RMatrix) -> Result<(), NumericsError> {
    let n = a.nrows();
    let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut asym = 0.0_f64;
    for j in 0..n {
        for i in 0..j {
            asym = asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if asym > Tolerances::default().hermitian_rel * scale {
        return Err(NumericsError::NotHermitian { asymmetry: asym });
    }
    Ok(())
}
