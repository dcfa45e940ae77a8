//! Subsystems, interconnections and their frequency-domain evaluation.
//!
//! Every transfer block is a real state-space realization. A network stacks
//! `N` subsystems
//!
//! ```text
//! p^i = G_pq^i q^i + G_pw^i w^i
//! z^i = G_zq^i q^i + G_zw^i w^i
//! q^i = Δ^i(p^i)
//! ```
//!
//! and couples them through a 0-1 matrix `w = Γ z`.

mod augment;
mod eval;
mod frequency;
mod io;
mod oracle;
mod statespace;

pub use augment::{augment, AugmentedBlocks, AugmentedNetwork};
pub use eval::{
    check_well_posed, lumped_transfer, lumped_transfer_with_tol, StackedBlocks, WellPosednessRecord,
    WellPosednessReport,
};
pub use frequency::Frequency;
pub use io::{GammaEntry, GammaFile, NetworkFile, StateSpaceFile, SubsystemFile};
pub use oracle::{brute_force_stability, delta_grid, StabilityVerdict};
pub use statespace::{eval_frequency, StateSpace};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{NumericsError, RMatrix};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-0-1 entry {value} at ({row}, {col}) of the interconnection matrix")]
    NonBinaryEntry { row: usize, col: usize, value: f64 },
    #[error("network has no subsystems")]
    EmptyNetwork,
    #[error("cannot evaluate transfer block at ω = {omega}: (jωI − A) is singular")]
    Evaluation { omega: Frequency },
    #[error("interconnection is not well-posed at ω = {omega}: σ_min(I − ΓG_zw) = {sigma_min:.3e}")]
    WellPosedness { omega: Frequency, sigma_min: f64 },
    #[error("invalid uncertainty description: {0}")]
    Uncertainty(String),
    #[error("invalid network file: {0}")]
    Format(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Kind of uncertainty block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyKind {
    /// Unknown constant real gain `δ ∈ [−1, 1]` repeated on the diagonal.
    NormalizedScalarGain,
    /// `Δ = I`; used for certain interconnections in the augmented form.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UncertaintySpec {
    pub kind: UncertaintyKind,
    pub dim: usize,
}

impl UncertaintySpec {
    pub fn gain(dim: usize) -> Self {
        Self { kind: UncertaintyKind::NormalizedScalarGain, dim }
    }

    pub fn identity(dim: usize) -> Self {
        Self { kind: UncertaintyKind::Identity, dim }
    }
}

/// One uncertain subsystem with its four transfer blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Subsystem {
    g_pq: StateSpace,
    g_pw: StateSpace,
    g_zq: StateSpace,
    g_zw: StateSpace,
    uncertainty: UncertaintySpec,
}

impl Subsystem {
    pub fn new(
        g_pq: StateSpace,
        g_pw: StateSpace,
        g_zq: StateSpace,
        g_zw: StateSpace,
        uncertainty: UncertaintySpec,
    ) -> Result<Self, ModelError> {
        let d = g_pq.outputs();
        let m = g_pw.inputs();
        let l = g_zq.outputs();
        let checks = [
            (g_pq.inputs() == d, "G_pq must be square (d×d)"),
            (g_pw.outputs() == d, "G_pw must have d outputs"),
            (g_zq.inputs() == d, "G_zq must have d inputs"),
            (g_zw.outputs() == l, "G_zw must have l outputs"),
            (g_zw.inputs() == m, "G_zw must have m inputs"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(ModelError::Dimension(format!(
                    "{msg} (d={d}, m={m}, l={l}; G_pq {}x{}, G_pw {}x{}, G_zq {}x{}, G_zw {}x{})",
                    g_pq.outputs(),
                    g_pq.inputs(),
                    g_pw.outputs(),
                    g_pw.inputs(),
                    g_zq.outputs(),
                    g_zq.inputs(),
                    g_zw.outputs(),
                    g_zw.inputs()
                )));
            }
        }
        if uncertainty.dim != d {
            return Err(ModelError::Uncertainty(format!(
                "uncertainty dimension {} does not match d = {d}",
                uncertainty.dim
            )));
        }
        if d == 0 {
            return Err(ModelError::Uncertainty("subsystem has an empty uncertainty channel".into()));
        }
        Ok(Self { g_pq, g_pw, g_zq, g_zw, uncertainty })
    }

    /// A SISO-uncertainty subsystem without interconnection channels.
    pub fn isolated(g: StateSpace) -> Result<Self, ModelError> {
        let d = g.outputs();
        let empty = |outputs: usize, inputs: usize| StateSpace::static_gain(RMatrix::zeros(outputs, inputs));
        Self::new(g, empty(d, 0), empty(0, d), empty(0, 0), UncertaintySpec::gain(d))
    }

    pub fn g_pq(&self) -> &StateSpace {
        &self.g_pq
    }
    pub fn g_pw(&self) -> &StateSpace {
        &self.g_pw
    }
    pub fn g_zq(&self) -> &StateSpace {
        &self.g_zq
    }
    pub fn g_zw(&self) -> &StateSpace {
        &self.g_zw
    }
    pub fn uncertainty(&self) -> UncertaintySpec {
        self.uncertainty
    }
    /// Uncertainty channel dimension `d_i`.
    pub fn d(&self) -> usize {
        self.g_pq.outputs()
    }
    /// Interconnection input dimension `m_i`.
    pub fn m(&self) -> usize {
        self.g_pw.inputs()
    }
    /// Interconnection output dimension `l_i`.
    pub fn l(&self) -> usize {
        self.g_zq.outputs()
    }

    pub fn blocks(&self) -> [&StateSpace; 4] {
        [&self.g_pq, &self.g_pw, &self.g_zq, &self.g_zw]
    }

    pub fn is_stable(&self) -> bool {
        self.blocks().iter().all(|b| b.is_stable())
    }
}

/// Sparse 0-1 interconnection matrix stored as sorted `(row, col)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interconnection {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize)>,
}

impl Interconnection {
    pub fn new(rows: usize, cols: usize, mut entries: Vec<(usize, usize)>) -> Result<Self, ModelError> {
        for &(r, c) in &entries {
            if r >= rows || c >= cols {
                return Err(ModelError::Dimension(format!(
                    "interconnection entry ({r}, {c}) outside {rows}x{cols}"
                )));
            }
        }
        entries.sort_unstable();
        entries.dedup();
        Ok(Self { rows, cols, entries })
    }

    /// Builds from `(row, col, value)` triplets; zeros are dropped, anything
    /// other than 0 or 1 is rejected.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, ModelError> {
        let mut entries = Vec::new();
        for &(row, col, value) in triplets {
            if value == 1.0 {
                entries.push((row, col));
            } else if value != 0.0 {
                return Err(ModelError::NonBinaryEntry { row, col, value });
            }
        }
        Self::new(rows, cols, entries)
    }

    pub fn from_dense(m: &RMatrix) -> Result<Self, ModelError> {
        let mut triplets = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                triplets.push((r, c, m[(r, c)]));
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &triplets)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: Vec::new() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn to_dense(&self) -> RMatrix {
        let mut m = RMatrix::zeros(self.rows, self.cols);
        for &(r, c) in &self.entries {
            m[(r, c)] = 1.0;
        }
        m
    }

    /// Columns (stacked z indices) feeding row `r` (a stacked w index).
    pub fn row_support(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        let start = self.entries.partition_point(|&(row, _)| row < r);
        self.entries[start..].iter().take_while(move |&&(row, _)| row == r).map(|&(_, c)| c)
    }
}

/// Offsets of every subsystem's channels in the stacked vectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockLayout {
    /// Start of `p^i`/`q^i` in the stacked uncertainty channels (length N+1).
    pub q: Vec<usize>,
    /// Start of `w^i` in stacked w (length N+1).
    pub w: Vec<usize>,
    /// Start of `z^i` in stacked z (length N+1).
    pub z: Vec<usize>,
}

impl BlockLayout {
    fn new(subsystems: &[Subsystem]) -> Self {
        let prefix = |f: &dyn Fn(&Subsystem) -> usize| {
            let mut v = vec![0];
            for s in subsystems {
                v.push(v.last().unwrap() + f(s));
            }
            v
        };
        Self { q: prefix(&|s| s.d()), w: prefix(&|s| s.m()), z: prefix(&|s| s.l()) }
    }

    pub fn total_d(&self) -> usize {
        *self.q.last().unwrap()
    }
    pub fn total_m(&self) -> usize {
        *self.w.last().unwrap()
    }
    pub fn total_l(&self) -> usize {
        *self.z.last().unwrap()
    }

    fn owner(offsets: &[usize], idx: usize) -> usize {
        offsets.partition_point(|&o| o <= idx) - 1
    }
    /// Subsystem owning stacked uncertainty index `idx`.
    pub fn q_owner(&self, idx: usize) -> usize {
        Self::owner(&self.q, idx)
    }
    pub fn w_owner(&self, idx: usize) -> usize {
        Self::owner(&self.w, idx)
    }
    pub fn z_owner(&self, idx: usize) -> usize {
        Self::owner(&self.z, idx)
    }
}

/// Interconnected uncertain system.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    subsystems: Vec<Subsystem>,
    gamma: Interconnection,
    layout: BlockLayout,
}

impl Network {
    pub fn new(subsystems: Vec<Subsystem>, gamma: Interconnection) -> Result<Self, ModelError> {
        if subsystems.is_empty() {
            return Err(ModelError::EmptyNetwork);
        }
        let layout = BlockLayout::new(&subsystems);
        if gamma.rows() != layout.total_m() || gamma.cols() != layout.total_l() {
            return Err(ModelError::Dimension(format!(
                "Γ is {}x{} but the stacked w and z have dimensions {} and {}",
                gamma.rows(),
                gamma.cols(),
                layout.total_m(),
                layout.total_l()
            )));
        }
        Ok(Self { subsystems, gamma, layout })
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }
    pub fn gamma(&self) -> &Interconnection {
        &self.gamma
    }
    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }
    pub fn len(&self) -> usize {
        self.subsystems.len()
    }
    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    /// Subsystem pairs `(i, j)`, `i ≠ j`, with a Γ entry routing `z^j` into `w^i`.
    pub fn coupling_edges(&self) -> Vec<(usize, usize)> {
        let mut edges: Vec<(usize, usize)> = self
            .gamma
            .entries()
            .iter()
            .map(|&(r, c)| (self.layout.w_owner(r), self.layout.z_owner(c)))
            .filter(|(i, j)| i != j)
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Undirected subsystem degree implied by Γ.
    pub fn degrees(&self) -> Vec<usize> {
        let mut adj = vec![std::collections::BTreeSet::new(); self.len()];
        for (i, j) in self.coupling_edges() {
            adj[i].insert(j);
            adj[j].insert(i);
        }
        adj.iter().map(|s| s.len()).collect()
    }

    pub fn is_stable(&self) -> bool {
        self.subsystems.iter().all(Subsystem::is_stable)
    }
}

/// Validating constructor mirroring [`Network::new`].
pub fn build_network(subsystems: Vec<Subsystem>, gamma: Interconnection) -> Result<Network, ModelError> {
    Network::new(subsystems, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn siso(a: f64, b: f64, c: f64, d: f64) -> StateSpace {
        StateSpace::new(
            RMatrix::from_element(1, 1, a),
            RMatrix::from_element(1, 1, b),
            RMatrix::from_element(1, 1, c),
            RMatrix::from_element(1, 1, d),
        )
        .unwrap()
    }

    fn gain(k: f64) -> StateSpace {
        StateSpace::static_gain(RMatrix::from_element(1, 1, k))
    }

    fn coupled_siso() -> Subsystem {
        Subsystem::new(siso(-1.0, 1.0, 1.0, 0.0), gain(1.0), gain(1.0), gain(0.0), UncertaintySpec::gain(1)).unwrap()
    }

    #[test]
    fn decoupled_network_has_no_edges() {
        let net = build_network(vec![coupled_siso(), coupled_siso()], Interconnection::zeros(2, 2)).unwrap();
        assert!(net.coupling_edges().is_empty());
        assert_eq!(net.layout().total_m(), 2);
    }

    #[test]
    fn swap_coupling() {
        let gamma = Interconnection::from_dense(&RMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let net = build_network(vec![coupled_siso(), coupled_siso()], gamma).unwrap();
        assert_eq!(net.coupling_edges(), vec![(0, 1), (1, 0)]);
        assert_eq!(net.gamma().row_support(0).collect::<Vec<_>>(), vec![1]);
        assert_eq!(net.gamma().row_support(1).collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn non_binary_entry_rejected() {
        let err = Interconnection::from_dense(&RMatrix::from_row_slice(1, 1, &[2.0])).unwrap_err();
        assert!(matches!(err, ModelError::NonBinaryEntry { value, .. } if value == 2.0));
        assert!(err.to_string().contains("non-0-1 entry"));
    }

    #[test]
    fn gamma_dimension_mismatch() {
        let err = build_network(vec![coupled_siso()], Interconnection::zeros(2, 1)).unwrap_err();
        assert!(matches!(err, ModelError::Dimension(_)));
        assert!(matches!(build_network(vec![], Interconnection::zeros(0, 0)), Err(ModelError::EmptyNetwork)));
    }

    #[test]
    fn uncertainty_dimension_must_match() {
        let err = Subsystem::new(siso(-1.0, 1.0, 1.0, 0.0), gain(1.0), gain(1.0), gain(0.0), UncertaintySpec::gain(2));
        assert!(matches!(err, Err(ModelError::Uncertainty(_))));
    }

    #[test]
    fn layout_owners() {
        let net = build_network(vec![coupled_siso(), coupled_siso()], Interconnection::zeros(2, 2)).unwrap();
        assert_eq!(net.layout().q_owner(0), 0);
        assert_eq!(net.layout().q_owner(1), 1);
        assert_eq!(net.layout().w_owner(1), 1);
    }
}
