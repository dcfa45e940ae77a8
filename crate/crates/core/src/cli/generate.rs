use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{CliError, ExperimentConfig};
use crate::model::{check_well_posed, eval_frequency, Frequency, Interconnection, Network, StateSpace, Subsystem, UncertaintySpec};
use crate::numerics::RMatrix;

const MAX_ATTEMPTS: u64 = 32;

/// Largest singular value of `G(jω)` over a coarse log sweep plus `ω = 0`.
pub fn peak_gain(ss: &StateSpace) -> Result<f64, CliError> {
    if ss.inputs() == 0 || ss.outputs() == 0 {
        return Ok(0.0);
    }
    let mut peak = 0.0_f64;
    let sweep = std::iter::once(0.0).chain((0..=60).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 60.0)));
    for w in sweep {
        let g = eval_frequency(ss, Frequency::Finite(w))?;
        peak = peak.max(g.singular_values().max());
    }
    Ok(peak)
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> RMatrix {
    RMatrix::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

/// Undirected graph: non-hubs have degree ≤ cap; hubs are wired above it.
fn random_graph(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let n = cfg.subsystems;
    let cap = cfg.degree_cap;
    let mut hubs: Vec<usize> = rand::seq::index::sample(rng, n, cfg.hub_count).into_vec();
    hubs.sort_unstable();
    let mut is_hub = vec![false; n];
    for &h in &hubs {
        is_hub[h] = true;
    }
    let mut deg = vec![0usize; n];
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let room = |v: usize, deg: &[usize], is_hub: &[bool]| is_hub[v] || deg[v] < cap;

    for &h in &hubs {
        let target = (cap + 1 + rng.random_range(0..=cap)).min(n - 1);
        let mut others: Vec<usize> = (0..n).filter(|&v| v != h).collect();
        others.shuffle(rng);
        for v in others {
            if deg[h] >= target {
                break;
            }
            let e = (h.min(v), h.max(v));
            if !edges.contains(&e) && room(v, &deg, &is_hub) {
                edges.insert(e);
                deg[h] += 1;
                deg[v] += 1;
            }
        }
    }

    let target = ((n as f64) * cfg.mean_degree / 2.0).round() as usize;
    let mut tries = 0;
    while n > 1 && edges.len() < target && tries < 50 * target.max(1) {
        tries += 1;
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        let e = (i.min(j), i.max(j));
        if i == j || edges.contains(&e) || !room(i, &deg, &is_hub) || !room(j, &deg, &is_hub) {
            continue;
        }
        edges.insert(e);
        deg[i] += 1;
        deg[j] += 1;
    }
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in &edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    for a in &mut adj {
        a.sort_unstable();
    }
    adj
}

fn subsystem(cfg: &ExperimentConfig, deg: usize, rng: &mut ChaCha8Rng) -> Result<Subsystem, CliError> {
    let n = cfg.state_dim;
    let mut a = gaussian(rng, n, n, 1.0 / (n.max(1) as f64).sqrt());
    if n > 0 {
        let mut abscissa = crate::numerics::spectral_abscissa(&a);
        if !abscissa.is_finite() {
            // Gershgorin bound on the real parts
            abscissa = (0..n).map(|i| a[(i, i)] + (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max);
        }
        let shift = abscissa + 0.1 + rng.random_range(0.0..1.0);
        for i in 0..n {
            a[(i, i)] -= shift;
        }
    }
    let bq = gaussian(rng, n, 1, 1.0);
    let mut bw = gaussian(rng, n, deg, 1.0);
    let mut cp = gaussian(rng, 1, n, 1.0);
    let mut cz = gaussian(rng, deg, n, 1.0);
    let zero = |r: usize, c: usize| RMatrix::zeros(r, c);

    let target_pq = cfg.uncertainty_gain * rng.random_range(0.5..=1.0);
    let peak = peak_gain(&StateSpace::new(a.clone(), bq.clone(), cp.clone(), zero(1, 1))?)?;
    if peak > 0.0 {
        cp *= target_pq / peak;
    }
    if deg > 0 && cfg.coupling_gain > 0.0 {
        let peak = peak_gain(&StateSpace::new(a.clone(), bw.clone(), cp.clone(), zero(1, deg))?)?;
        if peak > 0.0 {
            bw *= cfg.coupling_gain / peak;
        }
        let peak = peak_gain(&StateSpace::new(a.clone(), bq.clone(), cz.clone(), zero(deg, 1))?)?;
        if peak > 0.0 {
            cz *= cfg.coupling_gain / peak;
        }
    } else {
        bw.fill(0.0);
        cz.fill(0.0);
    }
    let ss = |b: &RMatrix, c: &RMatrix| StateSpace::new(a.clone(), b.clone(), c.clone(), zero(c.nrows(), b.ncols()));
    Ok(Subsystem::new(ss(&bq, &cp)?, ss(&bw, &cp)?, ss(&bq, &cz)?, ss(&bw, &cz)?, UncertaintySpec::gain(1))?)
}

fn attempt(cfg: &ExperimentConfig, seed: u64) -> Result<Network, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let adj = random_graph(cfg, &mut rng);
    let subsystems = adj.iter().map(|nb| subsystem(cfg, nb.len(), &mut rng)).collect::<Result<Vec<_>, _>>()?;
    // w channel c of subsystem i listens to the z channel of its c-th neighbor aimed at i
    let mut offset = Vec::with_capacity(adj.len());
    let mut total = 0;
    for nb in &adj {
        offset.push(total);
        total += nb.len();
    }
    let mut entries = Vec::with_capacity(total);
    for (i, nb) in adj.iter().enumerate() {
        for (c, &j) in nb.iter().enumerate() {
            let back = adj[j].binary_search(&i).expect("symmetric adjacency");
            entries.push((offset[i] + c, offset[j] + back));
        }
    }
    Ok(Network::new(subsystems, Interconnection::new(total, total, entries)?)?)
}

/// Random sparse network: degree-capped graph plus hubs, one scalar
/// uncertainty per subsystem and one scalar channel pair per edge.
/// Retried with derived seeds until it is well-posed on the grid.
pub fn generate_network(cfg: &ExperimentConfig) -> Result<Network, CliError> {
    cfg.validate()?;
    let grid = cfg.grid.build()?;
    for k in 0..MAX_ATTEMPTS {
        let seed = cfg.seed.wrapping_add(k.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let net = attempt(cfg, seed)?;
        if net.is_stable() && check_well_posed(&net, &grid, 1e-6)?.pass {
            return Ok(net);
        }
    }
    Err(CliError::Input(format!("no well-posed network found in {MAX_ATTEMPTS} attempts")))
}
