use num_complex::Complex64;

use super::{Frequency, ModelError};
use crate::numerics::{solve_dense, to_complex, CMatrix, RMatrix};

/// Real state-space realization `G(s) = C (sI − A)⁻¹ B + D`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: RMatrix,
    b: RMatrix,
    c: RMatrix,
    d: RMatrix,
}

impl StateSpace {
    pub fn new(a: RMatrix, b: RMatrix, c: RMatrix, d: RMatrix) -> Result<Self, ModelError> {
        let n = a.nrows();
        let ok = a.ncols() == n
            && b.nrows() == n
            && c.ncols() == n
            && d.nrows() == c.nrows()
            && d.ncols() == b.ncols();
        if !ok {
            return Err(ModelError::Dimension(format!(
                "inconsistent realization: A {}x{}, B {}x{}, C {}x{}, D {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        if [&a, &b, &c, &d].iter().any(|m| m.iter().any(|x| !x.is_finite())) {
            return Err(ModelError::Numerics(crate::numerics::NumericsError::NonFinite));
        }
        Ok(Self { a, b, c, d })
    }

    /// Memoryless gain `G(s) = D`.
    pub fn static_gain(d: RMatrix) -> Self {
        let (p, m) = d.shape();
        Self { a: RMatrix::zeros(0, 0), b: RMatrix::zeros(0, m), c: RMatrix::zeros(p, 0), d }
    }

    pub fn a(&self) -> &RMatrix {
        &self.a
    }
    pub fn b(&self) -> &RMatrix {
        &self.b
    }
    pub fn c(&self) -> &RMatrix {
        &self.c
    }
    pub fn d(&self) -> &RMatrix {
        &self.d
    }
    pub fn states(&self) -> usize {
        self.a.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Hurwitz test on `A`.
    pub fn is_stable(&self) -> bool {
        is_hurwitz(&self.a)
    }
}

/// Largest real part of the eigenvalues of `a` (−∞ for an empty matrix).
pub(crate) fn spectral_abscissa(a: &RMatrix) -> f64 {
    crate::numerics::spectral_abscissa(a)
}

/// All eigenvalues strictly left of `−1e-12·max(1, ‖A‖_F)`.
pub(crate) fn is_hurwitz(a: &RMatrix) -> bool {
    a.nrows() == 0 || spectral_abscissa(a) < -1e-12 * a.norm().max(1.0)
}

/// `G(jω) = C (jωI − A)⁻¹ B + D`, or `D` at `ω = ∞`.
pub fn eval_frequency(ss: &StateSpace, omega: Frequency) -> Result<CMatrix, ModelError> {
    let d = to_complex(&ss.d);
    let w = match omega {
        Frequency::Infinite => return Ok(d),
        Frequency::Finite(w) => w,
    };
    if ss.states() == 0 || ss.inputs() == 0 || ss.outputs() == 0 {
        return Ok(d);
    }
    let n = ss.states();
    let mut lhs = to_complex(&ss.a).map(|z| -z);
    for i in 0..n {
        lhs[(i, i)] += Complex64::new(0.0, w);
    }
    let x = solve_dense(&lhs, &to_complex(&ss.b)).map_err(|_| ModelError::Evaluation { omega })?;
    Ok(to_complex(&ss.c) * x + d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_order() -> StateSpace {
        StateSpace::new(
            RMatrix::from_element(1, 1, -1.0),
            RMatrix::from_element(1, 1, 1.0),
            RMatrix::from_element(1, 1, 1.0),
            RMatrix::from_element(1, 1, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn dc_gain() {
        let g = eval_frequency(&first_order(), Frequency::Finite(0.0)).unwrap();
        assert!((g[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn infinite_frequency_is_feedthrough() {
        let g = eval_frequency(&first_order(), Frequency::Infinite).unwrap();
        assert_eq!(g[(0, 0)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn unit_frequency() {
        let g = eval_frequency(&first_order(), Frequency::Finite(1.0)).unwrap();
        assert!((g[(0, 0)] - Complex64::new(0.5, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn marginal_pole_is_an_evaluation_error() {
        let integrator = StateSpace::new(
            RMatrix::zeros(1, 1),
            RMatrix::from_element(1, 1, 1.0),
            RMatrix::from_element(1, 1, 1.0),
            RMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(!integrator.is_stable());
        let err = eval_frequency(&integrator, Frequency::Finite(0.0)).unwrap_err();
        assert!(matches!(err, ModelError::Evaluation { .. }));
        assert!(err.to_string().contains("ω = 0"));
    }

    #[test]
    fn bad_dimensions() {
        let r = StateSpace::new(RMatrix::zeros(2, 2), RMatrix::zeros(1, 1), RMatrix::zeros(1, 2), RMatrix::zeros(1, 1));
        assert!(matches!(r, Err(ModelError::Dimension(_))));
    }

    #[test]
    fn hurwitz() {
        assert!(first_order().is_stable());
        assert!(StateSpace::static_gain(RMatrix::zeros(1, 1)).is_stable());
        let osc = RMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(!is_hurwitz(&osc));
    }
}
