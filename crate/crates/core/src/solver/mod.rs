//! Feasibility solvers for the per-frequency LMIs.
//!
//! Both solvers work on the realified problem normalized by `ε`: the
//! constraint `Q(y) + W ⪯ −εI` becomes `Q(v) + W/ε ⪯ −I` with `y = εv`,
//! and the iterates are pushed toward the deeper cone `⪯ −cI`
//! (`c = margin_factor`). Certificates are always re-verified on the
//! complex LMI in original units.

mod affine;
mod analyze;
mod centralized;
mod distributed;

pub use affine::{realify_matrix, realify_sparse, RealAffineMap, SymEntries};
pub use analyze::{analyze, analyze_pattern, AnalysisReport, FrequencyRecord, FrequencyStatus, Mode, Verdict};
pub use centralized::{solve_centralized, solve_centralized_run};
pub use distributed::{agent_records, solve_distributed, solve_distributed_run, AgentRecord, AgentState};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chordal::ChordalError;
use crate::decomp::{DecompError, DecomposedProblem};
use crate::iqc::{HermitianAffineLMI, IqcError};
use crate::model::{Frequency, ModelError};
use crate::numerics::{herm_max_eig, max_abs, sym_eig, NumericsError, RMatrix};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Iqc(#[from] IqcError),
    #[error(transparent)]
    Decomp(#[from] DecompError),
    #[error(transparent)]
    Chordal(#[from] ChordalError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid solver options: {0}")]
    Options(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<ModelError> for SolverError {
    fn from(e: ModelError) -> Self {
        SolverError::Iqc(IqcError::Model(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Required margin: certificates satisfy `λ_max ≤ −ε`.
    pub epsilon: f64,
    /// Centralized iteration budget.
    pub max_iters: usize,
    /// Distributed round budget.
    pub max_rounds: usize,
    /// Slack allowed on `−ε` when verifying.
    pub tol_feasibility: f64,
    /// Largest relative disagreement between neighboring local copies.
    pub tol_consensus: f64,
    /// Over-relaxation of the cone step, in `(0, 2)`.
    pub relaxation: f64,
    /// ADMM penalty on the block constraints.
    pub sigma: f64,
    /// ADMM penalty on the consensus constraints.
    pub rho: f64,
    /// Iterates target `⪯ −margin_factor·ε`.
    pub margin_factor: f64,
    /// Window (iterations) of the stall test.
    pub stall_window: usize,
    /// Relative decrease of the gap over one window below which the run has stalled.
    pub stall_tol: f64,
    /// A stall counts as decisive only if the infeasibility alternative built
    /// from the final displacement holds to this relative residual.
    pub witness_tol: f64,
    /// Anderson acceleration memory of the centralized iteration (0 disables).
    pub anderson_memory: usize,
    /// Seed for the initial iterate (used only when `initial_spread > 0`).
    pub seed: u64,
    /// Initial iterate drawn uniformly from `[0, initial_spread]` (normalized units).
    pub initial_spread: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            max_iters: 5000,
            max_rounds: 2000,
            tol_feasibility: 1e-7,
            tol_consensus: 1e-4,
            relaxation: 1.0,
            sigma: 1.0,
            rho: 1.0,
            margin_factor: 2.0,
            stall_window: 100,
            stall_tol: 1e-4,
            anderson_memory: 10,
            witness_tol: 1e-6,
            seed: 0,
            initial_spread: 0.0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = [
            ("epsilon", self.epsilon),
            ("tol_feasibility", self.tol_feasibility),
            ("tol_consensus", self.tol_consensus),
            ("sigma", self.sigma),
            ("rho", self.rho),
            ("stall_tol", self.stall_tol),
            ("witness_tol", self.witness_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SolverError::Options(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(SolverError::Options(format!("relaxation must lie in (0, 2), got {}", self.relaxation)));
        }
        if !(self.margin_factor.is_finite() && self.margin_factor >= 1.0) {
            return Err(SolverError::Options(format!("margin_factor must be at least 1, got {}", self.margin_factor)));
        }
        if !(self.initial_spread.is_finite() && self.initial_spread >= 0.0) {
            return Err(SolverError::Options("initial_spread must be nonnegative".into()));
        }
        if self.stall_window == 0 {
            return Err(SolverError::Options("stall_window must be positive".into()));
        }
        Ok(())
    }

    /// Budget multiplied by `factor` (both solvers).
    pub fn with_budget_factor(mut self, factor: usize) -> Self {
        self.max_iters *= factor;
        self.max_rounds *= factor;
        self
    }

    fn initial_point(&self, n: usize, stream: u64) -> Vec<f64> {
        if self.initial_spread == 0.0 || n == 0 {
            return vec![0.0; n];
        }
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        (0..n).map(|_| rng.random_range(0.0..=self.initial_spread)).collect()
    }
}

/// Verified multiplier values at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub omega: Frequency,
    pub epsilon: f64,
    pub y: Vec<f64>,
    /// Coupling values, for decomposed solves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<Vec<f64>>,
    /// `λ_max(Q(y) + W)`.
    pub lambda_max: f64,
    /// `λ_max` of every clique block (decomposed solves only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub block_lambda_max: Vec<f64>,
    pub iterations: usize,
}

/// Why a solve ended without a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The distance to the target cone stopped decreasing while still large.
    Stalled,
    /// Iteration or round budget used up.
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoCertificate {
    pub omega: Frequency,
    pub reason: Termination,
    pub iterations: usize,
    /// Smallest `λ_max(Q(y) + W)` seen at a sign-feasible iterate, original units.
    pub best_lambda_max: Option<f64>,
    /// Final distance to the target cone, normalized units.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveOutcome {
    Certified(Certificate),
    NoCertificate(NoCertificate),
}

impl SolveOutcome {
    pub fn is_certified(&self) -> bool {
        matches!(self, SolveOutcome::Certified(_))
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            SolveOutcome::Certified(c) => Some(c),
            SolveOutcome::NoCertificate(_) => None,
        }
    }

    /// Certified, or stalled far from the cone. A budget exhaustion is not decisive.
    pub fn is_decisive(&self) -> bool {
        match self {
            SolveOutcome::Certified(_) => true,
            SolveOutcome::NoCertificate(n) => n.reason == Termination::Stalled,
        }
    }

    pub fn iterations(&self) -> usize {
        match self {
            SolveOutcome::Certified(c) => c.iterations,
            SolveOutcome::NoCertificate(n) => n.iterations,
        }
    }
}

/// Solver output plus the per-iteration residual trace.
#[derive(Debug, Clone)]
pub struct SolveRun {
    pub outcome: SolveOutcome,
    /// Normalized residual after every iteration (distance to the target cone)
    /// or round (combined consensus and block residual `‖Δ(S, U, z, λ)‖`).
    pub residuals: Vec<f64>,
    /// Per-agent statistics (distributed solves).
    pub agents: Vec<AgentRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub epsilon: f64,
    pub tol_feasibility: f64,
    /// `λ_max(Q(y) + W)`.
    pub lambda_max: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub block_lambda_max: Vec<f64>,
    /// `‖Σ_k E_k B_k E_kᵀ − (Q(y) + W)‖_∞` for decomposed certificates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reassembly_error: Option<f64>,
    /// Every sign-constrained variable is nonnegative.
    pub signs_ok: bool,
    pub pass: bool,
}

fn threshold(eps: f64, tol: f64) -> f64 {
    -eps + tol
}

fn signs_ok(lmi: &HermitianAffineLMI, y: &[f64]) -> bool {
    lmi.vars.iter().zip(y).all(|(m, &v)| !m.nonneg || v >= 0.0)
}

/// Recomputes `λ_max(Q(y) + W)` and the sign constraints from scratch.
pub fn verify(lmi: &HermitianAffineLMI, cert: &Certificate, tol_feasibility: f64) -> Result<VerificationReport, SolverError> {
    if cert.y.len() != lmi.num_vars() {
        return Err(SolverError::Dimension(format!("{} values for {} variables", cert.y.len(), lmi.num_vars())));
    }
    let lambda_max = if lmi.dim() == 0 { f64::NEG_INFINITY } else { herm_max_eig(&lmi.eval(&cert.y))? };
    let signs = signs_ok(lmi, &cert.y);
    Ok(VerificationReport {
        epsilon: cert.epsilon,
        tol_feasibility,
        lambda_max,
        block_lambda_max: Vec::new(),
        reassembly_error: None,
        signs_ok: signs,
        pass: signs && lambda_max <= threshold(cert.epsilon, tol_feasibility),
    })
}

/// Verifies a decomposed certificate: every clique block, the reassembled
/// matrix against `Q(y) + W`, and the full LMI.
pub fn verify_decomposed(
    lmi: &HermitianAffineLMI,
    dp: &DecomposedProblem,
    cert: &Certificate,
    tol_feasibility: f64,
) -> Result<VerificationReport, SolverError> {
    let mut report = verify(lmi, cert, tol_feasibility)?;
    let d = cert.d.clone().unwrap_or_else(|| vec![0.0; dp.num_d()]);
    if d.len() != dp.num_d() || dp.num_y() != lmi.num_vars() || dp.n != lmi.dim() {
        return Err(SolverError::Dimension("certificate does not match the decomposition".into()));
    }
    let mut blocks = Vec::with_capacity(dp.len());
    for k in 0..dp.len() {
        let b = dp.eval_block(k, &cert.y, &d);
        blocks.push(if b.nrows() == 0 { f64::NEG_INFINITY } else { herm_max_eig(&b)? });
    }
    let full = lmi.eval(&cert.y);
    let err = max_abs(&(dp.reassemble(&cert.y, &d) - &full));
    let thr = threshold(cert.epsilon, tol_feasibility);
    let scale = 1.0 + lmi.scale() * cert.y.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    report.pass = report.pass && blocks.iter().all(|&l| l <= thr) && err <= 1e-9 * scale;
    report.block_lambda_max = blocks;
    report.reassembly_error = Some(err);
    Ok(report)
}

/// Real symmetric embedding of every matrix of the LMI:
/// `(W_r, [Q_r])` as sparse upper-triangle entries.
pub fn realify(lmi: &HermitianAffineLMI) -> RealAffineMap {
    RealAffineMap {
        dim: 2 * lmi.dim(),
        constant: realify_sparse(&lmi.w, 1.0),
        columns: lmi.coeffs.iter().map(|q| realify_sparse(q, 1.0)).collect(),
    }
}

/// Frobenius-nearest point of `{S ⪯ −εI}`.
pub fn project_nsd(s: &RMatrix, epsilon: f64) -> Result<RMatrix, SolverError> {
    let eig = sym_eig(s)?;
    Ok(clip_spectrum(s, &eig.values, &eig.vectors, -epsilon))
}

/// `S − Σ_{λ_i > ceil} (λ_i − ceil) v_i v_iᵀ`, symmetrized.
pub(crate) fn clip_spectrum(s: &RMatrix, values: &[f64], vectors: &RMatrix, ceil: f64) -> RMatrix {
    let mut out = s.clone();
    for (i, &l) in values.iter().enumerate() {
        if l > ceil {
            let v = vectors.column(i);
            out.ger(-(l - ceil), &v, &v, 1.0);
        }
    }
    let n = out.nrows();
    for j in 0..n {
        for i in 0..j {
            let avg = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = avg;
            out[(j, i)] = avg;
        }
    }
    out
}

/// `sqrt(Σ_{λ_i > ceil} (λ_i − ceil)²)`.
pub(crate) fn cone_distance(values: &[f64], ceil: f64) -> f64 {
    values.iter().map(|&l| (l - ceil).max(0.0).powi(2)).sum::<f64>().sqrt()
}

/// Sliding-window stall test on a nonincreasing gap sequence.
#[derive(Debug, Clone)]
pub(crate) struct StallDetector {
    window: usize,
    tol: f64,
    floor: f64,
    history: std::collections::VecDeque<f64>,
}

impl StallDetector {
    /// `floor`: gaps below it never count as stalled.
    pub(crate) fn new(window: usize, tol: f64, floor: f64) -> Self {
        Self { window, tol, floor, history: std::collections::VecDeque::with_capacity(window + 1) }
    }

    pub(crate) fn push(&mut self, gap: f64) -> bool {
        self.history.push_back(gap);
        if self.history.len() <= self.window {
            return false;
        }
        let old = self.history.pop_front().unwrap_or(gap);
        gap >= self.floor && old - gap <= self.tol * old
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{herm_eig, CMatrix, J};
    use num_complex::Complex64;

    #[test]
    fn project_examples() {
        let s = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -2.0]));
        let p0 = project_nsd(&s, 0.0).unwrap();
        assert!((p0 - RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, -2.0]))).norm() < 1e-15);
        let p = project_nsd(&s, 0.5).unwrap();
        assert!((p - RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-0.5, -2.0]))).norm() < 1e-15);
        let inside = RMatrix::from_row_slice(2, 2, &[-3.0, 1.0, 1.0, -3.0]);
        assert!((project_nsd(&inside, 1.0).unwrap() - &inside).norm() < 1e-14);
    }

    #[test]
    fn realify_examples() {
        let m = CMatrix::from_row_slice(2, 2, &[Complex64::new(0.0, 0.0), -J, J, Complex64::new(0.0, 0.0)]);
        let r = realify_matrix(&m);
        let vals = sym_eig(&r).unwrap().values;
        for (v, e) in vals.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((v - e).abs() < 1e-12);
        }
        let h = herm_eig(&m).unwrap().values;
        assert!((h[0] + 1.0).abs() < 1e-12 && (h[1] - 1.0).abs() < 1e-12);

        let real = CMatrix::from_row_slice(2, 2, &[Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(3.0, 0.0)]);
        let r = realify_matrix(&real);
        assert_eq!(r.view((0, 2), (2, 2)).norm(), 0.0);
        assert_eq!(r.view((0, 0), (2, 2)), r.view((2, 2), (2, 2)));
        assert_eq!(realify_matrix(&CMatrix::zeros(3, 3)), RMatrix::zeros(6, 6));
    }

    #[test]
    fn options_validation() {
        assert!(SolverOptions::default().validate().is_ok());
        let bad = SolverOptions { epsilon: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = SolverOptions { relaxation: 2.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn stall_detector() {
        let mut s = StallDetector::new(3, 1e-3, 0.5);
        assert!(!s.push(2.0));
        assert!(!s.push(2.0));
        assert!(!s.push(2.0));
        assert!(s.push(2.0));
        let mut small = StallDetector::new(1, 1e-3, 0.5);
        small.push(0.1);
        assert!(!small.push(0.1));
    }
}
