mod common;

use common::{c, random_hermitian, rng};
use iqc_chordal::numerics::{herm_eig, lstsq, max_abs, semidef_sqrt, solve_dense, sym_eig, CMatrix, NumericsError, RMatrix};
use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn real(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_row_slice(rows, cols, &data.iter().map(|&v| c(v)).collect::<Vec<_>>())
}

fn eig_residuals(a: &CMatrix) -> (f64, f64, f64) {
    let e = herm_eig(a).unwrap();
    let n = a.nrows();
    let lam = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, e.values.iter().map(|&v| c(v))));
    let res = (a * &e.vectors - &e.vectors * lam).norm();
    let orth = (e.vectors.adjoint() * &e.vectors - CMatrix::identity(n, n)).norm();
    let trace: f64 = (0..n).map(|i| a[(i, i)].re).sum();
    let sum: f64 = e.values.iter().sum();
    (res / a.norm().max(1.0), orth, (trace - sum).abs() / a.norm().max(1.0))
}

#[test]
fn herm_eig_examples() {
    let e = herm_eig(&real(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
    assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);

    let d = real(3, 3, &[3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0]);
    let e = herm_eig(&d).unwrap();
    assert_eq!(e.values, vec![-1.0, 2.0, 3.0]);
    for col in 0..3 {
        let nz: Vec<usize> = (0..3).filter(|&r| e.vectors[(r, col)].norm() > 0.0).collect();
        assert_eq!(nz.len(), 1);
        assert!((e.vectors[(nz[0], col)].norm() - 1.0).abs() < 1e-15);
    }

    let mut r = rng(20);
    let a = random_hermitian(20, &mut r);
    let (res, orth, tr) = eig_residuals(&a);
    assert!(res <= 1e-10 && orth <= 1e-10 && tr <= 1e-10, "{res} {orth} {tr}");
}

#[test]
fn herm_eig_rejects_non_hermitian() {
    let a = real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    assert!(matches!(herm_eig(&a), Err(NumericsError::NotHermitian { .. })));
}

#[test]
fn sym_eig_matches_herm_eig() {
    let mut r = rng(3);
    let s = common::random_symmetric(12, &mut r);
    let a = sym_eig(&s).unwrap();
    let b = herm_eig(&s.map(c)).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn semidef_sqrt_examples() {
    let f = semidef_sqrt(&CMatrix::identity(3, 3), 1e-10).unwrap();
    assert!(max_abs(&(f.l - CMatrix::identity(3, 3))) < 1e-15);

    let f = semidef_sqrt(&real(2, 2, &[4.0, 2.0, 2.0, 1.0]), 1e-10).unwrap();
    assert!(max_abs(&(&f.l - real(2, 2, &[2.0, 0.0, 1.0, 0.0]))) < 1e-14, "{}", f.l);
    assert_eq!(f.rank, 1);

    let f = semidef_sqrt(&CMatrix::zeros(3, 3), 1e-10).unwrap();
    assert_eq!(f.l, CMatrix::zeros(3, 3));
    assert_eq!(f.rank, 0);
}

#[test]
fn semidef_sqrt_rejects_indefinite() {
    let p = real(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    assert!(matches!(semidef_sqrt(&p, 1e-10), Err(NumericsError::Indefinite { .. })));
}

#[test]
fn semidef_sqrt_keeps_tridiagonal_supports() {
    let p = real(4, 4, &[2.0, -1.0, 0.0, 0.0, -1.0, 2.0, -1.0, 0.0, 0.0, -1.0, 2.0, -1.0, 0.0, 0.0, -1.0, 2.0]);
    let f = semidef_sqrt(&p, 1e-10).unwrap();
    for k in 0..4 {
        assert!(f.column_support(k).iter().all(|&r| r == k || r == k + 1));
    }
    assert!(max_abs(&(&f.l * f.l.adjoint() - &p)) <= 1e-9 * max_abs(&p));
}

#[test]
fn solve_dense_examples() {
    let b = real(2, 1, &[3.0, -4.0]);
    assert_eq!(solve_dense(&CMatrix::identity(2, 2), &b).unwrap(), b);
    let x = solve_dense(&real(1, 1, &[2.0]), &real(1, 1, &[1.0])).unwrap();
    assert!((x[(0, 0)] - c(0.5)).norm() < 1e-16);

    let mut r = rng(10);
    let a = CMatrix::from_fn(10, 10, |i, j| {
        Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)) + if i == j { c(5.0) } else { c(0.0) }
    });
    let b = CMatrix::from_fn(10, 2, |_, _| Complex64::new(r.random_range(-1.0..1.0), 0.0));
    let x = solve_dense(&a, &b).unwrap();
    assert!((&a * &x - &b).norm() <= 1e-10 * a.norm() * x.norm() + 1e-12 * b.norm());
}

#[test]
fn solve_dense_reports_singularity() {
    let a = real(2, 2, &[1.0, 2.0, 2.0, 4.0]);
    assert!(matches!(solve_dense(&a, &real(2, 1, &[1.0, 1.0])), Err(NumericsError::Singular { .. })));
}

#[test]
fn lstsq_examples() {
    let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
    assert!((lstsq(&RMatrix::identity(3, 3), &b).unwrap().x - &b).norm() < 1e-15);

    let s = lstsq(&RMatrix::from_row_slice(2, 1, &[1.0, 1.0]), &DVector::from_vec(vec![1.0, 3.0])).unwrap();
    assert!((s.x[0] - 2.0).abs() < 1e-14);

    let s = lstsq(&RMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]), &DVector::zeros(2)).unwrap();
    assert_eq!(s.x.norm(), 0.0);
}

#[test]
fn lstsq_rank_deficient_gives_minimum_norm() {
    let a = RMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    let s = lstsq(&a, &DVector::from_vec(vec![2.0, 2.0])).unwrap();
    assert!(s.rank_deficient && s.rank == 1);
    assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
}

#[test]
fn kernels_are_deterministic() {
    let mut r = rng(5);
    let a = random_hermitian(15, &mut r);
    let (e1, e2) = (herm_eig(&a).unwrap(), herm_eig(&a).unwrap());
    assert_eq!(e1.values, e2.values);
    assert_eq!(e1.vectors, e2.vectors);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn herm_eig_bounds(n in 1usize..30, seed in any::<u64>()) {
        let a = random_hermitian(n, &mut rng(seed));
        let (res, orth, tr) = eig_residuals(&a);
        prop_assert!(res <= 1e-10 && orth <= 1e-10 && tr <= 1e-10);
    }

    #[test]
    fn semidef_sqrt_reconstructs(n in 1usize..15, rank in 0usize..15, seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = CMatrix::from_fn(n, rank.min(n), |_, _| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
        let p = &m * m.adjoint();
        let f = semidef_sqrt(&p, 1e-10 * max_abs(&p).max(1e-300)).unwrap();
        prop_assert!(max_abs(&(&f.l * f.l.adjoint() - &p)) <= 1e-9 * max_abs(&p).max(1.0));
    }

    #[test]
    fn lstsq_residual_is_orthogonal(rows in 1usize..12, cols in 1usize..12, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = RMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0));
        let b = DVector::from_fn(rows, |_, _| r.random_range(-1.0..1.0));
        let x = lstsq(&a, &b).unwrap().x;
        prop_assert!((a.transpose() * (&a * &x - &b)).norm() <= 1e-8 * a.norm() * b.norm().max(1e-300));
    }
}
