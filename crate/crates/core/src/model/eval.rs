use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::{eval_frequency, Frequency, ModelError, Network};
use crate::numerics::{solve_dense, to_complex, CMatrix, Tolerances};

/// Block-diagonal stacked transfer matrices of a network at one frequency.
#[derive(Debug, Clone)]
pub struct StackedBlocks {
    pub omega: Frequency,
    pub pq: CMatrix,
    pub pw: CMatrix,
    pub zq: CMatrix,
    pub zw: CMatrix,
}

impl StackedBlocks {
    pub fn evaluate(net: &Network, omega: Frequency) -> Result<Self, ModelError> {
        let lay = net.layout();
        let (d, m, l) = (lay.total_d(), lay.total_m(), lay.total_l());
        let mut out = Self {
            omega,
            pq: CMatrix::zeros(d, d),
            pw: CMatrix::zeros(d, m),
            zq: CMatrix::zeros(l, d),
            zw: CMatrix::zeros(l, m),
        };
        for (i, s) in net.subsystems().iter().enumerate() {
            let (q0, w0, z0) = (lay.q[i], lay.w[i], lay.z[i]);
            put(&mut out.pq, q0, q0, &eval_frequency(s.g_pq(), omega)?);
            put(&mut out.pw, q0, w0, &eval_frequency(s.g_pw(), omega)?);
            put(&mut out.zq, z0, q0, &eval_frequency(s.g_zq(), omega)?);
            put(&mut out.zw, z0, w0, &eval_frequency(s.g_zw(), omega)?);
        }
        Ok(out)
    }
}

fn put(dst: &mut CMatrix, r0: usize, c0: usize, src: &CMatrix) {
    dst.view_mut((r0, c0), src.shape()).copy_from(src);
}

/// Smallest singular value of a complex matrix (1 for an empty one).
pub(crate) fn sigma_min(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    m.clone().singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// `I − ΓG_zw(jω)` together with `Γ` as a dense complex matrix.
fn loop_matrix(net: &Network, blocks: &StackedBlocks) -> (CMatrix, CMatrix) {
    let gamma = to_complex(&net.gamma().to_dense());
    let m = gamma.nrows();
    let lhs = DMatrix::<Complex64>::identity(m, m) - &gamma * &blocks.zw;
    (lhs, gamma)
}

/// Lumped transfer `Ḡ = G_pq + G_pw (I − ΓG_zw)⁻¹ Γ G_zq` at `omega`.
pub fn lumped_transfer(net: &Network, omega: Frequency) -> Result<CMatrix, ModelError> {
    lumped_transfer_with_tol(net, omega, Tolerances::default().well_posed_sigma)
}

pub fn lumped_transfer_with_tol(net: &Network, omega: Frequency, sigma_tol: f64) -> Result<CMatrix, ModelError> {
    let blocks = StackedBlocks::evaluate(net, omega)?;
    lumped_from_blocks(net, &blocks, sigma_tol)
}

pub(crate) fn lumped_from_blocks(net: &Network, blocks: &StackedBlocks, sigma_tol: f64) -> Result<CMatrix, ModelError> {
    if net.gamma().entries().is_empty() {
        return Ok(blocks.pq.clone());
    }
    let (lhs, gamma) = loop_matrix(net, blocks);
    let sigma = sigma_min(&lhs);
    if sigma <= sigma_tol {
        return Err(ModelError::WellPosedness { omega: blocks.omega, sigma_min: sigma });
    }
    let rhs = &gamma * &blocks.zq;
    let x = solve_dense(&lhs, &rhs).map_err(|_| ModelError::WellPosedness { omega: blocks.omega, sigma_min: sigma })?;
    Ok(&blocks.pq + &blocks.pw * x)
}

#[derive(Debug, Clone, Serialize)]
pub struct WellPosednessRecord {
    pub omega: Frequency,
    pub sigma_min: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WellPosednessReport {
    pub tolerance: f64,
    pub records: Vec<WellPosednessRecord>,
    pub pass: bool,
}

impl WellPosednessReport {
    pub fn worst(&self) -> Option<&WellPosednessRecord> {
        self.records.iter().min_by(|a, b| a.sigma_min.total_cmp(&b.sigma_min))
    }
}

/// `σ_min(I − ΓG_zw(jω))` at every frequency; passes iff all exceed `sigma_tol`.
pub fn check_well_posed(net: &Network, grid: &[Frequency], sigma_tol: f64) -> Result<WellPosednessReport, ModelError> {
    let mut records = Vec::with_capacity(grid.len());
    for &omega in grid {
        let blocks = StackedBlocks::evaluate(net, omega)?;
        let (lhs, _) = loop_matrix(net, &blocks);
        let sigma = sigma_min(&lhs);
        records.push(WellPosednessRecord { omega, sigma_min: sigma, pass: sigma > sigma_tol });
    }
    let pass = records.iter().all(|r| r.pass);
    Ok(WellPosednessReport { tolerance: sigma_tol, records, pass })
}
