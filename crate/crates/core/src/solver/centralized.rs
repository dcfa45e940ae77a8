use nalgebra::{Cholesky, DVector, Dyn};

use super::{
    clip_spectrum, cone_distance, realify, verify, Certificate, NoCertificate, RealAffineMap, SolveOutcome, SolveRun,
    SolverError, SolverOptions, StallDetector, Termination,
};
use crate::iqc::HermitianAffineLMI;
use crate::numerics::{lstsq, sym_eig, RMatrix, SymEig};

/// Alternating projections on a normalized real problem
/// `find v: C + Σ v_i A_i ⪯ −cI, v_N ≥ 0`.
pub(crate) struct ApProblem {
    pub map: RealAffineMap,
    pub nonneg: Vec<usize>,
    adj_const: Vec<f64>,
    chol: Cholesky<f64, Dyn>,
    /// `sqrt(‖A_i‖_F² + [i ∈ N])`.
    col_norms: Vec<f64>,
}

impl ApProblem {
    pub(crate) fn new(map: RealAffineMap, nonneg: Vec<usize>) -> Result<Self, SolverError> {
        let mut sys = map.gram();
        for &i in &nonneg {
            sys[(i, i)] += 1.0;
        }
        let col_norms = (0..sys.nrows()).map(|i| sys[(i, i)].sqrt()).collect();
        add_ridge(&mut sys);
        let chol = Cholesky::new(sys).ok_or_else(|| SolverError::Internal("normal equations not positive definite".into()))?;
        let c = RealAffineMap { dim: map.dim, constant: map.constant.clone(), columns: vec![] }.apply(&[]);
        let adj_const = map.adjoint(&c);
        Ok(Self { map, nonneg, adj_const, chol, col_norms })
    }

    /// Relative residual of the infeasibility alternative built from the
    /// displacement at `v`: `Z = B(v) − P_K(B(v)) ⪰ 0` and `z = max(v_N, …)`,
    /// `max_i |⟨A_i, Z⟩ − z_i| / (‖A_i‖ ‖(Z, z)‖)`, or `None` when the
    /// displacement vanishes or does not separate the constant term.
    fn witness_residual(&self, v: &[f64], m: &RMatrix, eig: &SymEig, ceil: f64) -> Option<f64> {
        let z_mat = m - clip_spectrum(m, &eig.values, &eig.vectors, ceil);
        let mut z_sign = vec![0.0; v.len()];
        for &i in &self.nonneg {
            z_sign[i] = (-v[i]).max(0.0);
        }
        let norm = (z_mat.norm_squared() + z_sign.iter().map(|x| x * x).sum::<f64>()).sqrt();
        if norm == 0.0 {
            return None;
        }
        // ⟨C + cI, Z⟩ must be positive for the alternative to exclude feasibility
        let c = RealAffineMap { dim: self.map.dim, constant: self.map.constant.clone(), columns: vec![] }.apply(&[]);
        if c.dot(&z_mat) - ceil * z_mat.trace() <= 0.0 {
            return None;
        }
        let az = self.map.adjoint(&z_mat);
        let worst = az
            .iter()
            .zip(&z_sign)
            .zip(&self.col_norms)
            .map(|((a, z), g)| (a - z).abs() / (g.max(1e-300) * norm))
            .fold(0.0_f64, f64::max);
        Some(worst)
    }

    fn sign_violation(&self, v: &[f64]) -> f64 {
        self.nonneg.iter().map(|&i| v[i].min(0.0).powi(2)).sum::<f64>().sqrt()
    }

    fn clamp(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        for &i in &self.nonneg {
            out[i] = out[i].max(0.0);
        }
        out
    }

    /// One projection onto the cone followed by the least-squares
    /// projection onto the range of `v ↦ (C + Σ v_i A_i, −v_N)`.
    fn step(&self, v: &[f64], m: &RMatrix, eig: &SymEig, ceil: f64, relax: f64) -> Vec<f64> {
        let clip = clip_spectrum(m, &eig.values, &eig.vectors, ceil);
        let t = if relax == 1.0 { clip } else { m + (clip - m) * relax };
        let at = self.map.adjoint(&t);
        let mut rhs = DVector::from_iterator(v.len(), at.iter().zip(&self.adj_const).map(|(a, c)| a - c));
        for &i in &self.nonneg {
            // −t_i where t = −v_i + ω(min(−v_i, 0) + v_i)
            let ti = -v[i] + relax * ((-v[i]).min(0.0) + v[i]);
            rhs[i] -= ti;
        }
        self.chol.solve(&rhs).as_slice().to_vec()
    }
}

/// Ridge `1e-10·max diag` keeping the normal equations definite when
/// coefficients are linearly dependent.
pub(crate) fn add_ridge(sys: &mut RMatrix) {
    let n = sys.nrows();
    let top = (0..n).map(|i| sys[(i, i)]).fold(0.0_f64, f64::max).max(1e-300);
    for i in 0..n {
        sys[(i, i)] += 1e-10 * top;
    }
}

fn nonneg_indices(lmi: &HermitianAffineLMI) -> Vec<usize> {
    lmi.vars.iter().enumerate().filter(|(_, m)| m.nonneg).map(|(i, _)| i).collect()
}

/// Centralized alternating-projection solve of `Q(y) + W ⪯ −εI`.
pub fn solve_centralized(lmi: &HermitianAffineLMI, opts: &SolverOptions) -> Result<SolveOutcome, SolverError> {
    Ok(solve_centralized_run(lmi, opts)?.outcome)
}

/// Type-II Anderson acceleration of a fixed-point map, memory `m`.
pub(crate) struct Anderson {
    memory: usize,
    last: Option<(Vec<f64>, Vec<f64>)>,
    df: Vec<Vec<f64>>,
    dg: Vec<Vec<f64>>,
}

impl Anderson {
    pub(crate) fn new(memory: usize) -> Self {
        Self { memory, last: None, df: Vec::new(), dg: Vec::new() }
    }

    pub(crate) fn reset(&mut self) {
        self.last = None;
        self.df.clear();
        self.dg.clear();
    }

    /// Next iterate from `x` and its image `g = F(x)`.
    pub(crate) fn next(&mut self, x: &[f64], g: Vec<f64>) -> Vec<f64> {
        if self.memory == 0 || x.is_empty() {
            return g;
        }
        let f: Vec<f64> = g.iter().zip(x).map(|(a, b)| a - b).collect();
        if let Some((f_old, g_old)) = self.last.take() {
            self.df.push(f.iter().zip(&f_old).map(|(a, b)| a - b).collect());
            self.dg.push(g.iter().zip(&g_old).map(|(a, b)| a - b).collect());
            if self.df.len() > self.memory {
                self.df.remove(0);
                self.dg.remove(0);
            }
        }
        self.last = Some((f.clone(), g.clone()));
        let k = self.df.len();
        if k == 0 {
            return g;
        }
        let a = RMatrix::from_fn(f.len(), k, |i, j| self.df[j][i]);
        let Ok(sol) = lstsq(&a, &DVector::from_column_slice(&f)) else {
            self.reset();
            return g;
        };
        let mut out = g;
        for (j, gam) in sol.x.iter().enumerate() {
            for (o, d) in out.iter_mut().zip(&self.dg[j]) {
                *o -= gam * d;
            }
        }
        if out.iter().all(|v| v.is_finite()) {
            out
        } else {
            self.reset();
            self.last.as_ref().map(|l| l.1.clone()).unwrap_or_default()
        }
    }
}

/// `W = 0`: the feasible set is a cone and any strictly feasible point can be rescaled.
pub(crate) fn is_homogeneous(lmi: &HermitianAffineLMI) -> bool {
    lmi.w.upper_entries().all(|(_, v)| v.norm() == 0.0)
}

/// As [`solve_centralized`], also returning the residual trace.
pub fn solve_centralized_run(lmi: &HermitianAffineLMI, opts: &SolverOptions) -> Result<SolveRun, SolverError> {
    opts.validate()?;
    lmi.validate()?;
    let eps = opts.epsilon;
    let mut map = realify(lmi);
    for e in &mut map.constant {
        e.2 /= eps;
    }
    let ap = ApProblem::new(map, nonneg_indices(lmi))?;
    let homogeneous = is_homogeneous(lmi);
    let ceil = -opts.margin_factor;
    let mut v = opts.initial_point(lmi.num_vars(), 0);
    let mut stall = StallDetector::new(opts.stall_window, opts.stall_tol, 1e-3 * opts.margin_factor);
    let mut accel = Anderson::new(opts.anderson_memory);
    let mut residuals = Vec::new();
    let mut best = f64::INFINITY;
    // plain step taken from the previous iterate, kept for the safeguard
    let mut fallback: Option<(Vec<f64>, f64)> = None;
    let mut best_gap = f64::INFINITY;

    let mut it = 0;
    loop {
        let m = ap.map.apply(&v);
        let eig = sym_eig(&m)?;
        let lmax = eig.max();
        let gap = cone_distance(&eig.values, ceil).hypot(ap.sign_violation(&v));
        if let Some((plain, prev_gap)) = fallback.take() {
            if gap > prev_gap && gap > best_gap {
                // accelerated point made things worse: restart from the plain step
                accel.reset();
                v = plain;
                continue;
            }
        }
        best_gap = best_gap.min(gap);
        residuals.push(gap);
        if ap.sign_violation(&v) == 0.0 {
            best = best.min(lmax * eps);
        }
        let scale = if lmax <= -1.0 {
            Some(1.0)
        } else if homogeneous && lmax < 0.0 {
            Some(opts.margin_factor / -lmax)
        } else {
            None
        };
        if let Some(scale) = scale {
            let clamped = ap.clamp(&v);
            let ok = clamped == v || sym_eig(&ap.map.apply(&clamped))?.max() * scale <= -1.0;
            if ok {
                let y: Vec<f64> = clamped.iter().map(|x| x * eps * scale).collect();
                let mut cert = Certificate {
                    omega: lmi.omega,
                    epsilon: eps,
                    y,
                    d: None,
                    lambda_max: f64::NAN,
                    block_lambda_max: Vec::new(),
                    iterations: it,
                };
                let report = verify(lmi, &cert, opts.tol_feasibility)?;
                if report.pass {
                    cert.lambda_max = report.lambda_max;
                    return Ok(SolveRun { outcome: SolveOutcome::Certified(cert), residuals, agents: Vec::new() });
                }
            }
        }
        let reason = if it == opts.max_iters {
            Some(Termination::BudgetExhausted)
        } else if stall.push(gap) && ap.witness_residual(&v, &m, &eig, ceil).is_some_and(|r| r <= opts.witness_tol) {
            Some(Termination::Stalled)
        } else {
            None
        };
        if let Some(reason) = reason {
            let outcome = SolveOutcome::NoCertificate(NoCertificate {
                omega: lmi.omega,
                reason,
                iterations: it,
                best_lambda_max: best.is_finite().then_some(best),
                gap,
            });
            return Ok(SolveRun { outcome, residuals, agents: Vec::new() });
        }
        let plain = ap.step(&v, &m, &eig, ceil, opts.relaxation);
        let next = accel.next(&v, plain.clone());
        if next != plain {
            fallback = Some((plain, gap));
        }
        v = next;
        it += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iqc::{assemble_lumped, MultiplierSpec, SparseHermitian};
    use crate::model::{Frequency, Interconnection, Network, StateSpace, Subsystem};
    use crate::numerics::RMatrix;
    use num_complex::Complex64;

    fn scalar_lmi(g: f64) -> HermitianAffineLMI {
        let s = Subsystem::isolated(StateSpace::static_gain(RMatrix::from_element(1, 1, g))).unwrap();
        let net = Network::new(vec![s], Interconnection::zeros(0, 0)).unwrap();
        assemble_lumped(&net, &MultiplierSpec::for_network(&net), Frequency::Finite(0.0)).unwrap()
    }

    #[test]
    fn small_gain_is_certified() {
        let lmi = scalar_lmi(0.5);
        let out = solve_centralized(&lmi, &SolverOptions::default()).unwrap();
        let cert = out.certificate().expect("certified");
        assert!(cert.y[0] > 0.0);
        assert!(cert.lambda_max <= -1e-6 + 1e-7);
    }

    #[test]
    fn large_gain_has_no_certificate() {
        let lmi = scalar_lmi(2.0);
        let out = solve_centralized(&lmi, &SolverOptions::default()).unwrap();
        assert!(!out.is_certified());
        assert!(out.is_decisive());
    }

    #[test]
    fn constant_negative_definite_needs_no_iterations() {
        let mut w = SparseHermitian::new(2);
        w.add(0, 0, Complex64::new(-1.0, 0.0));
        w.add(1, 1, Complex64::new(-1.0, 0.0));
        let lmi = HermitianAffineLMI {
            omega: Frequency::Finite(1.0),
            formulation: crate::iqc::Formulation::Sparse,
            w,
            coeffs: vec![],
            vars: vec![],
            index_owner: vec![0, 0],
            dense_coupling: false,
        };
        let opts = SolverOptions { epsilon: 0.5, ..Default::default() };
        let out = solve_centralized(&lmi, &opts).unwrap();
        assert_eq!(out.certificate().unwrap().iterations, 0);
    }
}
