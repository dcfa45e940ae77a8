#![allow(dead_code)]

use iqc_chordal::cli::{generate_network, ExperimentConfig, GridSpec};
use iqc_chordal::model::{Interconnection, Network, StateSpace, Subsystem, UncertaintySpec};
use iqc_chordal::numerics::{CMatrix, RMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn siso(a: f64, b: f64, cc: f64, d: f64) -> StateSpace {
    StateSpace::new(
        RMatrix::from_element(1, 1, a),
        RMatrix::from_element(1, 1, b),
        RMatrix::from_element(1, 1, cc),
        RMatrix::from_element(1, 1, d),
    )
    .unwrap()
}

pub fn gain(k: f64) -> StateSpace {
    StateSpace::static_gain(RMatrix::from_element(1, 1, k))
}

/// `G(s) = k / (s + a)` in feedback with a scalar gain in `[−1, 1]`, no coupling.
pub fn first_order_network(k: f64, a: f64) -> Network {
    let s = Subsystem::isolated(siso(-a, 1.0, k, 0.0)).unwrap();
    Network::new(vec![s], Interconnection::zeros(0, 0)).unwrap()
}

/// Static SISO subsystem with one coupling channel.
pub fn static_subsystem(pq: f64, pw: f64, zq: f64, zw: f64) -> Subsystem {
    Subsystem::new(gain(pq), gain(pw), gain(zq), gain(zw), UncertaintySpec::gain(1)).unwrap()
}

pub fn self_loop(pq: f64, pw: f64, zq: f64, zw: f64) -> Network {
    Network::new(vec![static_subsystem(pq, pw, zq, zw)], Interconnection::from_triplets(1, 1, &[(0, 0, 1.0)]).unwrap())
        .unwrap()
}

pub fn desk_config(n: usize, gain: f64, coupling: f64, seed: u64, points: usize) -> ExperimentConfig {
    ExperimentConfig {
        subsystems: n,
        state_dim: 2,
        degree_cap: 3,
        mean_degree: 2.0,
        uncertainty_gain: gain,
        coupling_gain: coupling,
        seed,
        grid: GridSpec { points, ..Default::default() },
        ..Default::default()
    }
}

pub fn desk_network(n: usize, gain: f64, coupling: f64, seed: u64) -> Network {
    generate_network(&desk_config(n, gain, coupling, seed, 4)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&m + m.adjoint()).scale(0.5)
}

pub fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> RMatrix {
    let m = RMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&m + m.transpose()).scale(0.5)
}

