use num_complex::Complex64;

use super::eval::{sigma_min, StackedBlocks};
use super::{eval_frequency, Frequency, ModelError, Network, UncertaintyKind, UncertaintySpec};
use crate::numerics::{solve_dense, to_complex, CMatrix};

/// Network whose interconnection `w^i = Δ̃^i(Γ_i z)` carries its own uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedNetwork {
    base: Network,
    interconnection_uncertainty: Vec<UncertaintySpec>,
}

/// Per-subsystem augmented blocks at one frequency.
#[derive(Debug, Clone)]
pub struct AugmentedBlocks {
    /// `[[G_pq, G_pw], [0, 0]]`, size `(d+m)×(d+m)`.
    pub pq_bar: CMatrix,
    /// `[0; I]`, size `(d+m)×m`.
    pub pw_bar: CMatrix,
    /// `[G_zq, G_zw]`, size `l×(d+m)`.
    pub zq_bar: CMatrix,
}

pub fn augment(net: &Network, specs: Vec<UncertaintySpec>) -> Result<AugmentedNetwork, ModelError> {
    if specs.len() != net.len() {
        return Err(ModelError::Uncertainty(format!(
            "{} interconnection uncertainty specs for {} subsystems",
            specs.len(),
            net.len()
        )));
    }
    for (i, (spec, s)) in specs.iter().zip(net.subsystems()).enumerate() {
        if spec.dim != s.m() {
            return Err(ModelError::Uncertainty(format!(
                "interconnection uncertainty of subsystem {i} has dimension {} but m_{i} = {}",
                spec.dim,
                s.m()
            )));
        }
    }
    Ok(AugmentedNetwork { base: net.clone(), interconnection_uncertainty: specs })
}

impl AugmentedNetwork {
    /// Every interconnection certain (`Δ̃ = I`).
    pub fn identity(net: &Network) -> Self {
        let specs = net.subsystems().iter().map(|s| UncertaintySpec::identity(s.m())).collect();
        Self { base: net.clone(), interconnection_uncertainty: specs }
    }

    pub fn base(&self) -> &Network {
        &self.base
    }

    pub fn interconnection_uncertainty(&self) -> &[UncertaintySpec] {
        &self.interconnection_uncertainty
    }

    pub fn all_identity(&self) -> bool {
        self.interconnection_uncertainty.iter().all(|s| s.kind == UncertaintyKind::Identity)
    }

    /// Dimensions of `p_A^i` (equal to `m_i`).
    pub fn p_a_dims(&self) -> Vec<usize> {
        self.interconnection_uncertainty.iter().map(|s| s.dim).collect()
    }

    /// Stacked dimension of `[q; q_A]`.
    pub fn dim(&self) -> usize {
        let lay = self.base.layout();
        lay.total_d() + lay.total_m()
    }

    /// Augmented blocks of subsystem `i` at `omega`.
    pub fn subsystem_blocks(&self, i: usize, omega: Frequency) -> Result<AugmentedBlocks, ModelError> {
        let s = &self.base.subsystems()[i];
        let (d, m, l) = (s.d(), s.m(), s.l());
        let mut pq_bar = CMatrix::zeros(d + m, d + m);
        pq_bar.view_mut((0, 0), (d, d)).copy_from(&eval_frequency(s.g_pq(), omega)?);
        pq_bar.view_mut((0, d), (d, m)).copy_from(&eval_frequency(s.g_pw(), omega)?);
        let mut pw_bar = CMatrix::zeros(d + m, m);
        for k in 0..m {
            pw_bar[(d + k, k)] = Complex64::new(1.0, 0.0);
        }
        let mut zq_bar = CMatrix::zeros(l, d + m);
        zq_bar.view_mut((0, 0), (l, d)).copy_from(&eval_frequency(s.g_zq(), omega)?);
        zq_bar.view_mut((0, d), (l, m)).copy_from(&eval_frequency(s.g_zw(), omega)?);
        Ok(AugmentedBlocks { pq_bar, pw_bar, zq_bar })
    }

    /// `G̃ = [[G_pq, G_pw], [ΓG_zq, ΓG_zw]]` in the reordered `[q; q_A]` coordinates.
    pub fn g_tilde(&self, omega: Frequency) -> Result<CMatrix, ModelError> {
        let blocks = StackedBlocks::evaluate(&self.base, omega)?;
        Ok(g_tilde_from_blocks(&self.base, &blocks))
    }

    /// Transfer from `q` to `z` after closing `q_A = p_A`.
    pub fn identity_closed_q_to_z(&self, omega: Frequency) -> Result<CMatrix, ModelError> {
        let g = self.g_tilde(omega)?;
        let lay = self.base.layout();
        let (d, m) = (lay.total_d(), lay.total_m());
        let blocks = StackedBlocks::evaluate(&self.base, omega)?;
        let lower_left = g.view((d, 0), (m, d)).into_owned();
        let lower_right = g.view((d, d), (m, m)).into_owned();
        let lhs = CMatrix::identity(m, m) - lower_right;
        let sigma = sigma_min(&lhs);
        let q_a = solve_dense(&lhs, &lower_left).map_err(|_| ModelError::WellPosedness { omega, sigma_min: sigma })?;
        Ok(&blocks.zq + &blocks.zw * q_a)
    }
}

pub(crate) fn g_tilde_from_blocks(net: &Network, blocks: &StackedBlocks) -> CMatrix {
    let lay = net.layout();
    let (d, m) = (lay.total_d(), lay.total_m());
    let gamma = to_complex(&net.gamma().to_dense());
    let mut g = CMatrix::zeros(d + m, d + m);
    g.view_mut((0, 0), (d, d)).copy_from(&blocks.pq);
    g.view_mut((0, d), (d, m)).copy_from(&blocks.pw);
    g.view_mut((d, 0), (m, d)).copy_from(&(&gamma * &blocks.zq));
    g.view_mut((d, d), (m, m)).copy_from(&(&gamma * &blocks.zw));
    g
}

impl Network {
    /// Transfer from `q` to `z` with `w = Γz` closed: `(I − G_zw Γ)⁻¹ G_zq`.
    pub fn closed_q_to_z(&self, omega: Frequency) -> Result<CMatrix, ModelError> {
        let blocks = StackedBlocks::evaluate(self, omega)?;
        let gamma = to_complex(&self.gamma().to_dense());
        let l = blocks.zw.nrows();
        let lhs = CMatrix::identity(l, l) - &blocks.zw * gamma;
        let sigma = sigma_min(&lhs);
        solve_dense(&lhs, &blocks.zq).map_err(|_| ModelError::WellPosedness { omega, sigma_min: sigma })
    }
}
