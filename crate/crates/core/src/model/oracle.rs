use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::statespace::spectral_abscissa;
use super::{ModelError, Network, StateSpace, UncertaintyKind};
use crate::numerics::RMatrix;

/// Result of gridding the uncertainty box and checking closed-loop poles.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StabilityVerdict {
    RobustlyStableOnGrid { checked: usize },
    Counterexample { delta: Vec<f64>, abscissa: f64 },
    IllPosed { delta: Vec<f64> },
}

impl StabilityVerdict {
    pub fn is_stable(&self) -> bool {
        matches!(self, StabilityVerdict::RobustlyStableOnGrid { .. })
    }
}

/// Cartesian grid of `points` values per scalar on `[−1, 1]^n`. Beyond `cap`
/// combinations a seeded random subset of `cap` grid points is returned
/// (always including the origin).
pub fn delta_grid(n: usize, points: usize, cap: usize, seed: u64) -> Vec<Vec<f64>> {
    let points = points.max(1);
    let values: Vec<f64> = if points == 1 {
        vec![0.0]
    } else {
        (0..points).map(|k| -1.0 + 2.0 * k as f64 / (points - 1) as f64).collect()
    };
    let decode = |mut idx: usize| {
        let mut v = vec![0.0; n];
        for slot in v.iter_mut() {
            *slot = values[idx % points];
            idx /= points;
        }
        v
    };
    let total = (points as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total <= cap as u128 {
        return (0..total as usize).map(decode).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![vec![0.0; n]];
    if total <= usize::MAX as u128 {
        let chosen = sample(&mut rng, total as usize, cap.saturating_sub(1));
        out.extend(chosen.into_iter().map(decode));
    } else {
        use rand::Rng;
        for _ in 1..cap {
            out.push((0..n).map(|_| values[rng.random_range(0..points)]).collect());
        }
    }
    out
}

/// Stacked realization of all four blocks of every subsystem, mapping
/// `u = [q; w]` to `y = [p; z]`.
struct StackedRealization {
    a: RMatrix,
    b: RMatrix,
    c: RMatrix,
    d: RMatrix,
}

fn stack(net: &Network) -> StackedRealization {
    let lay = net.layout();
    let (dq, m, l) = (lay.total_d(), lay.total_m(), lay.total_l());
    let n: usize = net.subsystems().iter().flat_map(|s| s.blocks()).map(StateSpace::states).sum();
    let mut a = RMatrix::zeros(n, n);
    let mut b = RMatrix::zeros(n, dq + m);
    let mut c = RMatrix::zeros(dq + l, n);
    let mut d = RMatrix::zeros(dq + l, dq + m);
    let mut x0 = 0;
    for (i, s) in net.subsystems().iter().enumerate() {
        let (q0, w0, z0) = (lay.q[i], dq + lay.w[i], dq + lay.z[i]);
        let p0 = lay.q[i];
        let placed = [(s.g_pq(), p0, q0), (s.g_pw(), p0, w0), (s.g_zq(), z0, q0), (s.g_zw(), z0, w0)];
        for (g, row, col) in placed {
            let k = g.states();
            a.view_mut((x0, x0), (k, k)).copy_from(g.a());
            b.view_mut((x0, col), (k, g.inputs())).copy_from(g.b());
            c.view_mut((row, x0), (g.outputs(), k)).copy_from(g.c());
            let mut dv = d.view_mut((row, col), (g.outputs(), g.inputs()));
            dv += g.d();
            x0 += k;
        }
    }
    StackedRealization { a, b, c, d }
}

/// Closes `q = δ_i p` per subsystem and `w = Γz`, and checks every closed-loop
/// `A` on the grid for Hurwitz stability.
pub fn brute_force_stability(net: &Network, delta_grid: &[Vec<f64>]) -> Result<StabilityVerdict, ModelError> {
    for (i, s) in net.subsystems().iter().enumerate() {
        if s.uncertainty().kind != UncertaintyKind::NormalizedScalarGain {
            return Err(ModelError::Uncertainty(format!("subsystem {i} is not a normalized scalar gain")));
        }
    }
    let sys = stack(net);
    let lay = net.layout();
    let dq = lay.total_d();
    let u = sys.d.ncols();
    let gamma = net.gamma().to_dense();
    let scale = sys.a.norm().max(1.0);
    for delta in delta_grid {
        if delta.len() != net.len() {
            return Err(ModelError::Dimension(format!(
                "δ has {} entries for {} subsystems",
                delta.len(),
                net.len()
            )));
        }
        let mut k = RMatrix::zeros(u, sys.d.nrows());
        for (i, &di) in delta.iter().enumerate() {
            for r in lay.q[i]..lay.q[i + 1] {
                k[(r, r)] = di;
            }
        }
        k.view_mut((dq, dq), gamma.shape()).copy_from(&gamma);
        let loop_m = RMatrix::identity(u, u) - &k * &sys.d;
        let kc = &k * &sys.c;
        let Some(gain) = loop_m.clone().lu().solve(&kc) else {
            return Ok(StabilityVerdict::IllPosed { delta: delta.clone() });
        };
        let cond_ok = loop_m.clone().singular_values().min() > 1e-12 * loop_m.norm().max(1.0);
        if !cond_ok {
            return Ok(StabilityVerdict::IllPosed { delta: delta.clone() });
        }
        let a_cl = &sys.a + &sys.b * gain;
        if a_cl.nrows() == 0 {
            continue;
        }
        let abscissa = spectral_abscissa(&a_cl);
        if !(abscissa < -1e-12 * scale) {
            return Ok(StabilityVerdict::Counterexample { delta: delta.clone(), abscissa });
        }
    }
    Ok(StabilityVerdict::RobustlyStableOnGrid { checked: delta_grid.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Interconnection, Subsystem};

    fn siso(num: f64, pole: f64) -> Network {
        let g = StateSpace::new(
            RMatrix::from_element(1, 1, -pole),
            RMatrix::from_element(1, 1, 1.0),
            RMatrix::from_element(1, 1, num),
            RMatrix::zeros(1, 1),
        )
        .unwrap();
        Network::new(vec![Subsystem::isolated(g).unwrap()], Interconnection::zeros(0, 0)).unwrap()
    }

    #[test]
    fn open_loop_is_stable() {
        let v = brute_force_stability(&siso(2.0, 1.0), &[vec![0.0]]).unwrap();
        assert!(v.is_stable());
    }

    #[test]
    fn pole_at_two_delta_minus_one() {
        let net = siso(2.0, 1.0);
        let v = brute_force_stability(&net, &[vec![0.75]]).unwrap();
        match v {
            StabilityVerdict::Counterexample { delta, abscissa } => {
                assert_eq!(delta, vec![0.75]);
                assert!((abscissa - 0.5).abs() < 1e-12);
            }
            other => panic!("expected counterexample, got {other:?}"),
        }
        assert!(brute_force_stability(&net, &[vec![0.25]]).unwrap().is_stable());
    }

    #[test]
    fn pole_at_delta_minus_two() {
        let grid = delta_grid(1, 21, 1_000_000, 0);
        assert_eq!(grid.len(), 21);
        let v = brute_force_stability(&siso(1.0, 2.0), &grid).unwrap();
        assert_eq!(v, StabilityVerdict::RobustlyStableOnGrid { checked: 21 });
    }

    #[test]
    fn grid_is_capped_and_seeded() {
        let g = delta_grid(6, 21, 1000, 3);
        assert_eq!(g.len(), 1000);
        assert_eq!(g[0], vec![0.0; 6]);
        assert_eq!(g, delta_grid(6, 21, 1000, 3));
        assert!(g.iter().flatten().all(|x| (-1.0..=1.0).contains(x)));
        assert_eq!(delta_grid(2, 3, 100, 0).len(), 9);
    }

    #[test]
    fn interconnected_loop_gain() {
        let lag = StateSpace::new(
            RMatrix::from_element(1, 1, -1.0),
            RMatrix::from_element(1, 1, 1.0),
            RMatrix::from_element(1, 1, 1.0),
            RMatrix::zeros(1, 1),
        )
        .unwrap();
        let k = |v: f64| StateSpace::static_gain(RMatrix::from_element(1, 1, v));
        let s = || Subsystem::new(lag.clone(), k(1.0), k(1.0), k(0.0), crate::model::UncertaintySpec::gain(1)).unwrap();
        let gamma = Interconnection::new(2, 2, vec![(0, 1), (1, 0)]).unwrap();
        let net = Network::new(vec![s(), s()], gamma).unwrap();
        assert!(brute_force_stability(&net, &[vec![0.0, 0.0]]).unwrap().is_stable());
        // δ = (1, 1) makes the static loop q = Γq singular
        let v = brute_force_stability(&net, &[vec![1.0, 1.0]]).unwrap();
        assert_eq!(v, StabilityVerdict::IllPosed { delta: vec![1.0, 1.0] });
        let v = brute_force_stability(&net, &[vec![0.9, 0.9]]).unwrap();
        assert!(matches!(v, StabilityVerdict::Counterexample { .. }));
    }
}
