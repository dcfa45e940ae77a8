use num_complex::Complex64;

use super::{
    Formulation, HermitianAffineLMI, IqcError, MultiplierFamily, MultiplierSite, MultiplierSpec, SparseHermitian,
    VariableKind, VariableMeta,
};
use crate::chordal::SparsityGraph;
use crate::model::{lumped_transfer, AugmentedNetwork, Frequency, Network, StackedBlocks};
use crate::numerics::J;

type SparseRow = Vec<(usize, Complex64)>;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

struct Builder {
    n: usize,
    coeffs: Vec<SparseHermitian>,
    vars: Vec<VariableMeta>,
}

impl Builder {
    fn new(n: usize) -> Self {
        Self { n, coeffs: Vec::new(), vars: Vec::new() }
    }

    fn push(&mut self, q: SparseHermitian, meta: VariableMeta) {
        self.coeffs.push(q);
        self.vars.push(meta);
    }

    /// Adds the parameters of one multiplier block acting on `a_r = fa[r]·v`, `b_r = fb[r]·v`.
    fn block(&mut self, family: MultiplierFamily, fa: &[SparseRow], fb: &[SparseRow], site: MultiplierSite, subsystem: usize) {
        match family {
            MultiplierFamily::DgScaling => {
                let mut qx = SparseHermitian::new(self.n);
                let mut qy = SparseHermitian::new(self.n);
                for (a, b) in fa.iter().zip(fb) {
                    qx.add_sym_outer((0.5).into(), a, a);
                    qx.add_sym_outer((-0.5).into(), b, b);
                    qy.add_sym_outer(J, a, b);
                }
                self.push(qx, VariableMeta { kind: VariableKind::DgX, site, subsystem, nonneg: true });
                self.push(qy, VariableMeta { kind: VariableKind::DgY, site, subsystem, nonneg: false });
            }
            MultiplierFamily::Lossless => {
                for (a, b) in fa.iter().zip(fb) {
                    let channel = b.first().map(|e| e.0).unwrap_or(0);
                    let g = difference(a, b);
                    let mut q = SparseHermitian::new(self.n);
                    q.add_sym_outer((-0.5).into(), &g, &g);
                    self.push(
                        q,
                        VariableMeta { kind: VariableKind::Lossless { channel }, site, subsystem, nonneg: false },
                    );
                }
            }
        }
    }

    fn finish(self, omega: Frequency, formulation: Formulation, index_owner: Vec<usize>, dense: bool) -> HermitianAffineLMI {
        HermitianAffineLMI {
            omega,
            formulation,
            w: SparseHermitian::new(self.n),
            coeffs: self.coeffs,
            vars: self.vars,
            index_owner,
            dense_coupling: dense,
        }
    }
}

/// `a − b` as a sparse row, keeping the union of both supports.
fn difference(a: &[(usize, Complex64)], b: &[(usize, Complex64)]) -> SparseRow {
    let mut out: SparseRow = a.to_vec();
    for &(j, v) in b {
        match out.iter_mut().find(|e| e.0 == j) {
            Some(e) => e.1 -= v,
            None => out.push((j, -v)),
        }
    }
    out.sort_by_key(|e| e.0);
    out
}

fn unit(i: usize) -> SparseRow {
    vec![(i, ONE)]
}

/// Lumped test `[Ḡ; I]* Π̄ [Ḡ; I] ⪯ −εI` of dimension `Σd_i`.
pub fn assemble_lumped(net: &Network, mult: &MultiplierSpec, omega: Frequency) -> Result<HermitianAffineLMI, IqcError> {
    mult.check(net.subsystems().iter().map(|s| s.d()), "uncertainty")?;
    let g = lumped_transfer(net, omega)?;
    let lay = net.layout();
    let n = lay.total_d();
    let mut b = Builder::new(n);
    for (i, &(family, _)) in mult.subsystems.iter().enumerate() {
        let rows = lay.q[i]..lay.q[i + 1];
        let fa: Vec<SparseRow> = rows.clone().map(|r| (0..n).map(|c| (c, g[(r, c)])).collect()).collect();
        let fb: Vec<SparseRow> = rows.map(unit).collect();
        b.block(family, &fa, &fb, MultiplierSite::Subsystem, i);
    }
    let owner = (0..n).map(|k| lay.q_owner(k)).collect();
    Ok(b.finish(omega, Formulation::Lumped, owner, !net.gamma().entries().is_empty()))
}

/// Rows `p^i` of `[G_pq, G_pw]`, with structural support on subsystem `i`'s channels.
fn p_rows(net: &Network, blocks: &StackedBlocks, i: usize) -> Vec<SparseRow> {
    let lay = net.layout();
    let d = lay.total_d();
    (lay.q[i]..lay.q[i + 1])
        .map(|r| {
            let mut row: SparseRow = (lay.q[i]..lay.q[i + 1]).map(|c| (c, blocks.pq[(r, c)])).collect();
            row.extend((lay.w[i]..lay.w[i + 1]).map(|c| (d + c, blocks.pw[(r, c)])));
            row
        })
        .collect()
}

/// Row `r` of `[ΓG_zq, ΓG_zw]` (stacked w index `r`).
fn interconnection_row(net: &Network, blocks: &StackedBlocks, r: usize) -> SparseRow {
    let lay = net.layout();
    let d = lay.total_d();
    let mut acc: std::collections::BTreeMap<usize, Complex64> = Default::default();
    for c in net.gamma().row_support(r) {
        let j = lay.z_owner(c);
        for k in lay.q[j]..lay.q[j + 1] {
            *acc.entry(k).or_default() += blocks.zq[(c, k)];
        }
        for k in lay.w[j]..lay.w[j + 1] {
            *acc.entry(d + k).or_default() += blocks.zw[(c, k)];
        }
    }
    acc.into_iter().collect()
}

fn sparse_owner(net: &Network) -> Vec<usize> {
    let lay = net.layout();
    (0..lay.total_d())
        .map(|k| lay.q_owner(k))
        .chain((0..lay.total_m()).map(|k| lay.w_owner(k)))
        .collect()
}

fn subsystem_terms(b: &mut Builder, net: &Network, mult: &MultiplierSpec, blocks: &StackedBlocks) {
    for (i, &(family, _)) in mult.subsystems.iter().enumerate() {
        let fa = p_rows(net, blocks, i);
        let fb: Vec<SparseRow> = (net.layout().q[i]..net.layout().q[i + 1]).map(unit).collect();
        b.block(family, &fa, &fb, MultiplierSite::Subsystem, i);
    }
}

fn interconnection_terms(b: &mut Builder, net: &Network, families: &[MultiplierFamily], blocks: &StackedBlocks) {
    let lay = net.layout();
    let d = lay.total_d();
    for (i, &family) in families.iter().enumerate() {
        let rows = lay.w[i]..lay.w[i + 1];
        let fa: Vec<SparseRow> = rows.clone().map(|r| interconnection_row(net, blocks, r)).collect();
        let fb: Vec<SparseRow> = rows.map(|r| unit(d + r)).collect();
        b.block(family, &fa, &fb, MultiplierSite::Interconnection, i);
    }
}

/// Sparse test over `[q; w]`: the subsystem multipliers plus a lossless
/// diagonal `X` on the interconnection `(I − ΓG_zw) w − ΓG_zq q`.
pub fn assemble_sparse(net: &Network, mult: &MultiplierSpec, omega: Frequency) -> Result<HermitianAffineLMI, IqcError> {
    mult.check(net.subsystems().iter().map(|s| s.d()), "uncertainty")?;
    let blocks = StackedBlocks::evaluate(net, omega)?;
    let lay = net.layout();
    let mut b = Builder::new(lay.total_d() + lay.total_m());
    subsystem_terms(&mut b, net, mult, &blocks);
    interconnection_terms(&mut b, net, &vec![MultiplierFamily::Lossless; net.len()], &blocks);
    Ok(b.finish(omega, Formulation::Sparse, sparse_owner(net), false))
}

/// Test on `G̃ = [[G_pq, G_pw], [ΓG_zq, ΓG_zw]]` with block-diagonal
/// multipliers `Π̄` (subsystems) and `Π̃` (interconnections, `tilde_mult`).
pub fn assemble_augmented(
    aug: &AugmentedNetwork,
    mult: &MultiplierSpec,
    tilde_mult: &MultiplierSpec,
    omega: Frequency,
) -> Result<HermitianAffineLMI, IqcError> {
    let net = aug.base();
    mult.check(net.subsystems().iter().map(|s| s.d()), "uncertainty")?;
    tilde_mult.check(net.subsystems().iter().map(|s| s.m()), "interconnection")?;
    let blocks = StackedBlocks::evaluate(net, omega)?;
    let lay = net.layout();
    let mut b = Builder::new(lay.total_d() + lay.total_m());
    subsystem_terms(&mut b, net, mult, &blocks);
    let families: Vec<MultiplierFamily> = tilde_mult.subsystems.iter().map(|s| s.0).collect();
    interconnection_terms(&mut b, net, &families, &blocks);
    Ok(b.finish(omega, Formulation::Augmented, sparse_owner(net), false))
}

/// Assembles `formulation` with the default multipliers. For the augmented
/// form a plain network is treated as having certain interconnections.
pub fn assemble(
    net: &Network,
    aug: Option<&AugmentedNetwork>,
    formulation: Formulation,
    omega: Frequency,
) -> Result<HermitianAffineLMI, IqcError> {
    let mult = MultiplierSpec::for_network(net);
    match formulation {
        Formulation::Lumped => assemble_lumped(net, &mult, omega),
        Formulation::Sparse => assemble_sparse(net, &mult, omega),
        Formulation::Augmented => {
            let owned;
            let aug = match aug {
                Some(a) => a,
                None => {
                    owned = AugmentedNetwork::identity(net);
                    &owned
                }
            };
            let tilde = MultiplierSpec::from_uncertainty(aug.interconnection_uncertainty());
            assemble_augmented(aug, &mult, &tilde, omega)
        }
    }
}

/// Graph with an edge `(i, j)` for every structurally nonzero off-diagonal entry.
pub fn sparsity_pattern(lmi: &HermitianAffineLMI) -> SparsityGraph {
    let edges = std::iter::once(&lmi.w)
        .chain(&lmi.coeffs)
        .flat_map(|m| m.upper_entries().map(|(k, _)| k))
        .filter(|&(i, j)| i != j);
    SparsityGraph::new(lmi.dim(), edges)
}
