use std::collections::{BTreeMap, BTreeSet};
use std::hash::{DefaultHasher, Hash, Hasher};

use nalgebra::{Cholesky, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::centralized::add_ridge;
use super::{
    clip_spectrum, realify_sparse, verify_decomposed, Certificate, NoCertificate, RealAffineMap, SolveOutcome, SolveRun,
    SolverError, SolverOptions, Termination,
};
use crate::decomp::DecomposedProblem;
use crate::iqc::HermitianAffineLMI;
use crate::numerics::{sym_eig, RMatrix};

/// Per-agent statistics reported with a distributed solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub clique: usize,
    pub dimension: usize,
    /// Variables the agent's block depends on.
    pub local_variables: usize,
    /// Variables the agent only relays between neighbors.
    pub routed_variables: usize,
    pub coupling_count: usize,
    pub neighbors: Vec<usize>,
    /// Subsystems whose model data the agent reads.
    pub subsystems: Vec<usize>,
}

/// One consensus edge of the clique tree and the variables it carries.
#[derive(Debug, Clone)]
struct Edge {
    child: usize,
    parent: usize,
    vars: Vec<usize>,
    z: Vec<f64>,
}

/// Local state of the agent attached to one clique.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub clique: usize,
    /// Combined `[y; d]` indices of the local copy, ascending.
    pub vars: Vec<usize>,
    /// Subset of `vars` that the block does not depend on.
    pub routed: Vec<usize>,
    pub x: Vec<f64>,
    /// Scaled consensus multipliers, one vector per incident edge.
    pub edge_duals: Vec<Vec<f64>>,
    /// Hash of the last values sent to the neighbors.
    pub last_digest: u64,
    map: RealAffineMap,
    nonneg: Vec<usize>,
    adj_const: Vec<f64>,
    chol: Cholesky<f64, Dyn>,
    /// Incident edges: `(edge id, local slot of each carried variable)`.
    incident: Vec<(usize, Vec<usize>)>,
    slack: RMatrix,
    dual: RMatrix,
    sign_slack: Vec<f64>,
    sign_dual: Vec<f64>,
}

struct Setup {
    agents: Vec<AgentState>,
    edges: Vec<Edge>,
    /// Agent whose copy defines each combined variable in the consensus point.
    owner: Vec<usize>,
    records: Vec<AgentRecord>,
}

/// Cliques of the smallest subtree containing `holders`.
fn steiner_subtree(dp: &DecomposedProblem, holders: &[usize]) -> BTreeSet<usize> {
    let mut nodes: BTreeSet<usize> = holders.iter().copied().collect();
    if let Some(&first) = holders.first() {
        for &h in &holders[1..] {
            nodes.extend(dp.tree.path(first, h));
        }
    }
    nodes
}

fn setup(dp: &DecomposedProblem, opts: &SolverOptions) -> Result<Setup, SolverError> {
    let l = dp.len();
    let nc = dp.num_combined();
    let eps = opts.epsilon;
    let mut block_vars: Vec<Vec<usize>> = Vec::with_capacity(l);
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); nc];
    for k in 0..l {
        let vars: Vec<usize> = dp.block_variables(k).into_iter().map(|r| dp.combined_index(r)).collect();
        for &g in &vars {
            holders[g].push(k);
        }
        block_vars.push(vars);
    }

    // local-copy closure along tree paths
    let mut local: Vec<BTreeSet<usize>> = block_vars.iter().map(|v| v.iter().copied().collect()).collect();
    let mut edge_vars: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut owner = vec![0; nc];
    for (g, hs) in holders.iter().enumerate() {
        if hs.is_empty() {
            continue;
        }
        let nodes = steiner_subtree(dp, hs);
        let mut tops = 0;
        for &k in &nodes {
            local[k].insert(g);
            match dp.tree.parent[k] {
                Some(p) if nodes.contains(&p) => edge_vars.entry(k).or_default().push(g),
                _ => {
                    tops += 1;
                    owner[g] = k;
                }
            }
        }
        if tops != 1 {
            return Err(SolverError::Internal(format!("variable {g} has a disconnected holder set")));
        }
    }
    let init = opts.initial_point(nc, 1);
    let edges: Vec<Edge> = edge_vars
        .into_iter()
        .map(|(child, vars)| {
            let z = vars.iter().map(|&g| init[g]).collect();
            Edge { child, parent: dp.tree.parent[child].expect("edge has a parent"), vars, z }
        })
        .collect();

    let mut agents = Vec::with_capacity(l);
    let mut records = Vec::with_capacity(l);
    for k in 0..l {
        let vars: Vec<usize> = local[k].iter().copied().collect();
        let slot = |g: usize| vars.binary_search(&g).expect("variable in local copy");
        let (w, terms) = dp.local_affine(k);
        let dim = 2 * w.dim();
        let mut columns = vec![Vec::new(); vars.len()];
        for (r, q) in &terms {
            columns[slot(dp.combined_index(*r))].extend(realify_sparse(q, 1.0));
        }
        let map = RealAffineMap { dim, constant: realify_sparse(&w, 1.0 / eps), columns };
        let nonneg: Vec<usize> = vars
            .iter()
            .enumerate()
            .filter(|(_, &g)| g < dp.num_y() && dp.vars[g].nonneg)
            .map(|(i, _)| i)
            .collect();
        let incident: Vec<(usize, Vec<usize>)> = edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.child == k || e.parent == k)
            .map(|(id, e)| (id, e.vars.iter().map(|&g| slot(g)).collect()))
            .collect();

        let mut sys = map.gram() * opts.sigma;
        for &i in &nonneg {
            sys[(i, i)] += opts.sigma;
        }
        for (_, slots) in &incident {
            for &s in slots {
                sys[(s, s)] += opts.rho;
            }
        }
        add_ridge(&mut sys);
        let chol = Cholesky::new(sys).ok_or_else(|| SolverError::Internal(format!("agent {k}: singular local system")))?;
        let c = RealAffineMap { dim, constant: map.constant.clone(), columns: vec![] }.apply(&[]);
        let adj_const = map.adjoint(&c);

        let x: Vec<f64> = vars.iter().map(|&g| init[g]).collect();
        let m = map.apply(&x);
        let eig = sym_eig(&m)?;
        let slack = clip_spectrum(&m, &eig.values, &eig.vectors, -opts.margin_factor);
        let sign_slack = nonneg.iter().map(|&i| (-x[i]).min(0.0)).collect();
        let routed: Vec<usize> = vars.iter().copied().filter(|g| block_vars[k].binary_search(g).is_err()).collect();
        let mut neighbors: Vec<usize> = dp.tree.children[k].clone();
        neighbors.extend(dp.tree.parent[k]);
        neighbors.sort_unstable();
        records.push(AgentRecord {
            clique: k,
            dimension: w.dim(),
            local_variables: block_vars[k].len(),
            routed_variables: routed.len(),
            coupling_count: dp.coupling.by_clique[k].len(),
            neighbors,
            subsystems: dp.subsystems_referenced(k),
        });
        agents.push(AgentState {
            clique: k,
            edge_duals: incident.iter().map(|(_, s)| vec![0.0; s.len()]).collect(),
            vars,
            routed,
            x,
            last_digest: 0,
            map,
            adj_const,
            chol,
            incident,
            dual: RMatrix::zeros(dim, dim),
            slack,
            sign_dual: vec![0.0; nonneg.len()],
            sign_slack,
            nonneg,
        });
    }
    Ok(Setup { agents, edges, owner, records })
}

impl AgentState {
    /// Local x-update, then the projections onto the block cone and sign
    /// constraints. Returns `σ(‖ΔS‖² + ‖ΔU‖²)` over the block and sign parts,
    /// the agent's share of the squared fixed-point residual.
    fn local_step(&mut self, edges: &[Edge], opts: &SolverOptions) -> Result<f64, SolverError> {
        let (sigma, rho, alpha) = (opts.sigma, opts.rho, opts.relaxation);
        let target = &self.slack - &self.dual;
        let at = self.map.adjoint(&target);
        let mut rhs =
            DVector::from_iterator(self.x.len(), at.iter().zip(&self.adj_const).map(|(a, c)| sigma * (a - c)));
        for (j, &i) in self.nonneg.iter().enumerate() {
            rhs[i] += sigma * (self.sign_dual[j] - self.sign_slack[j]);
        }
        for ((id, slots), lam) in self.incident.iter().zip(&self.edge_duals) {
            for ((&s, z), l) in slots.iter().zip(&edges[*id].z).zip(lam) {
                rhs[s] += rho * (z - l);
            }
        }
        self.x = self.chol.solve(&rhs).as_slice().to_vec();

        let m = self.map.apply(&self.x);
        let relaxed = if alpha == 1.0 { m.clone() } else { &m * alpha + &self.slack * (1.0 - alpha) };
        let shifted = &relaxed + &self.dual;
        let eig = sym_eig(&shifted)?;
        let slack = clip_spectrum(&shifted, &eig.values, &eig.vectors, -opts.margin_factor);
        let dual = shifted - &slack;
        let mut res = (&slack - &self.slack).norm_squared() + (&dual - &self.dual).norm_squared();
        self.slack = slack;
        self.dual = dual;
        for (j, &i) in self.nonneg.iter().enumerate() {
            let rh = alpha * -self.x[i] + (1.0 - alpha) * self.sign_slack[j];
            let s = (rh + self.sign_dual[j]).min(0.0);
            let u = self.sign_dual[j] + rh - s;
            res += (s - self.sign_slack[j]).powi(2) + (u - self.sign_dual[j]).powi(2);
            self.sign_slack[j] = s;
            self.sign_dual[j] = u;
        }
        res *= sigma;
        let mut h = DefaultHasher::new();
        for (_, slots) in &self.incident {
            for &s in slots {
                self.x[s].to_bits().hash(&mut h);
            }
        }
        self.last_digest = h.finish();
        Ok(res)
    }

    fn value(&self, g: usize) -> f64 {
        self.x[self.vars.binary_search(&g).expect("variable in local copy")]
    }
}

/// Distributed solve of a decomposed LMI: one agent per clique, consensus
/// ADMM over the clique-tree edges.
pub fn solve_distributed(lmi: &HermitianAffineLMI, dp: &DecomposedProblem, opts: &SolverOptions) -> Result<SolveOutcome, SolverError> {
    Ok(solve_distributed_run(lmi, dp, opts)?.outcome)
}

/// As [`solve_distributed`], also returning the residual trace and agent statistics.
///
/// `lmi` is the undecomposed problem; it is used only to re-verify the
/// final certificate.
pub fn solve_distributed_run(lmi: &HermitianAffineLMI, dp: &DecomposedProblem, opts: &SolverOptions) -> Result<SolveRun, SolverError> {
    opts.validate()?;
    if dp.n != lmi.dim() || dp.num_y() != lmi.num_vars() {
        return Err(SolverError::Dimension("decomposition does not match the LMI".into()));
    }
    let eps = opts.epsilon;
    let Setup { mut agents, mut edges, owner, records } = setup(dp, opts)?;
    let alpha = opts.relaxation;
    let mut residuals = Vec::new();
    let mut best: Option<f64> = None;

    for round in 0..=opts.max_rounds {
        // consensus point from the top holder of every variable
        let point: Vec<f64> = owner.iter().enumerate().map(|(g, &k)| if agents[k].vars.binary_search(&g).is_ok() { agents[k].value(g) } else { 0.0 }).collect();
        let scale = point.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let disagreement = edges
            .iter()
            .flat_map(|e| e.vars.iter().map(move |&g| (e, g)))
            .map(|(e, g)| (agents[e.child].value(g) - agents[e.parent].value(g)).abs())
            .fold(0.0_f64, f64::max);
        if disagreement <= opts.tol_consensus * scale {
            let mut v = point.clone();
            for (g, m) in dp.vars.iter().enumerate() {
                if m.nonneg {
                    v[g] = v[g].max(0.0);
                }
            }
            let y: Vec<f64> = v[..dp.num_y()].iter().map(|x| x * eps).collect();
            let d: Vec<f64> = v[dp.num_y()..].iter().map(|x| x * eps).collect();
            let mut cert = Certificate {
                omega: lmi.omega,
                epsilon: eps,
                y,
                d: Some(d),
                lambda_max: f64::NAN,
                block_lambda_max: Vec::new(),
                iterations: round,
            };
            let report = verify_decomposed(lmi, dp, &cert, opts.tol_feasibility)?;
            if report.signs_ok {
                best = Some(best.map_or(report.lambda_max, |b: f64| b.min(report.lambda_max)));
            }
            if report.pass {
                cert.lambda_max = report.lambda_max;
                cert.block_lambda_max = report.block_lambda_max;
                return Ok(SolveRun { outcome: SolveOutcome::Certified(cert), residuals, agents: records });
            }
        }
        if round == opts.max_rounds {
            let gap = residuals.last().copied().unwrap_or(f64::NAN);
            let outcome = SolveOutcome::NoCertificate(NoCertificate {
                omega: lmi.omega,
                reason: Termination::BudgetExhausted,
                iterations: round,
                best_lambda_max: best,
                gap,
            });
            return Ok(SolveRun { outcome, residuals, agents: records });
        }

        let local: Vec<f64> = agents.par_iter_mut().map(|a| a.local_step(&edges, opts)).collect::<Result<_, _>>()?;
        let mut total: f64 = local.iter().sum();

        // neighbor exchange on every tree edge
        for (id, e) in edges.iter_mut().enumerate() {
            let (c, p) = (&agents[e.child], &agents[e.parent]);
            let ci = c.incident.iter().position(|(i, _)| *i == id).expect("incident edge");
            let pi = p.incident.iter().position(|(i, _)| *i == id).expect("incident edge");
            let mut new_z = Vec::with_capacity(e.vars.len());
            for (t, &zo) in e.z.iter().enumerate() {
                let xc = alpha * c.x[c.incident[ci].1[t]] + (1.0 - alpha) * zo;
                let xp = alpha * p.x[p.incident[pi].1[t]] + (1.0 - alpha) * zo;
                new_z.push(0.5 * (xc + c.edge_duals[ci][t] + xp + p.edge_duals[pi][t]));
            }
            for (zn, zo) in new_z.iter().zip(&e.z) {
                total += 2.0 * opts.rho * (zn - zo).powi(2);
            }
            for (side, slot_pos) in [(e.child, ci), (e.parent, pi)] {
                let a = &mut agents[side];
                for (t, &zn) in new_z.iter().enumerate() {
                    let xv = a.x[a.incident[slot_pos].1[t]];
                    let step = alpha * xv + (1.0 - alpha) * e.z[t] - zn;
                    a.edge_duals[slot_pos][t] += step;
                    total += opts.rho * step * step;
                }
            }
            e.z = new_z;
        }
        residuals.push(total.sqrt());
    }
    unreachable!("loop returns at the budget")
}

/// Agent statistics for a decomposition without running a solve.
pub fn agent_records(dp: &DecomposedProblem, opts: &SolverOptions) -> Result<Vec<AgentRecord>, SolverError> {
    Ok(setup(dp, opts)?.records)
}
