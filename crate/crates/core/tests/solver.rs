mod common;

use common::{c, desk_network, first_order_network, random_hermitian, random_symmetric, rng};
use iqc_chordal::chordal::build_clique_tree;
use iqc_chordal::decomp::decompose;
use iqc_chordal::iqc::{
    assemble, assemble_lumped, assemble_sparse, Formulation, FrequencyGrid, HermitianAffineLMI, MultiplierSite,
    MultiplierSpec, SparseHermitian, VariableKind, VariableMeta,
};
use iqc_chordal::model::{brute_force_stability, delta_grid, Frequency, Interconnection, Network, StabilityVerdict};
use iqc_chordal::numerics::{herm_eig, sym_eig, CMatrix, RMatrix};
use iqc_chordal::solver::{
    analyze, analyze_pattern, project_nsd, realify, realify_matrix, solve_centralized, solve_centralized_run,
    solve_distributed, solve_distributed_run, verify, verify_decomposed, Certificate, FrequencyStatus, Mode,
    SolveOutcome, SolverOptions, Termination, Verdict,
};
use proptest::prelude::*;
use rand::Rng;

fn meta(nonneg: bool) -> VariableMeta {
    VariableMeta {
        kind: if nonneg { VariableKind::DgX } else { VariableKind::DgY },
        site: MultiplierSite::Subsystem,
        subsystem: 0,
        nonneg,
    }
}

fn toy(w: &[f64], coeffs: &[(&[f64], bool)]) -> HermitianAffineLMI {
    let n = (w.len() as f64).sqrt() as usize;
    let dense = |d: &[f64]| CMatrix::from_row_slice(n, n, &d.iter().map(|&v| c(v)).collect::<Vec<_>>());
    HermitianAffineLMI {
        omega: Frequency::Finite(0.0),
        formulation: Formulation::Sparse,
        w: SparseHermitian::from_dense(&dense(w), 0.0),
        coeffs: coeffs.iter().map(|(q, _)| SparseHermitian::from_dense(&dense(q), 0.0)).collect(),
        vars: coeffs.iter().map(|&(_, nn)| meta(nn)).collect(),
        index_owner: vec![0; n],
        dense_coupling: false,
    }
}

fn scalar(gbar: f64) -> HermitianAffineLMI {
    let net = first_order_network(2.0 * gbar, 2.0);
    assemble_lumped(&net, &MultiplierSpec::for_network(&net), Frequency::Finite(0.0)).unwrap()
}

/// Tridiagonal toy needing `y > 1 + √2`.
fn feasible_chain() -> HermitianAffineLMI {
    toy(&[1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0], &[(&[-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0], false)])
}

/// `3x` in the corner of a two-clique pattern, `x ≥ 0`.
fn infeasible_chain() -> HermitianAffineLMI {
    toy(&[0.0, 0.1, 0.0, 0.1, -1.0, 0.1, 0.0, 0.1, -1.0], &[(&[3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], true)])
}

fn chain_tree() -> iqc_chordal::chordal::CliqueTree {
    build_clique_tree(&[vec![0, 1], vec![1, 2]], 3).unwrap()
}

fn grid20() -> FrequencyGrid {
    FrequencyGrid::logspace(1e-2, 1e2, 18, true, true).unwrap()
}

fn cert(y: Vec<f64>) -> Certificate {
    Certificate {
        omega: Frequency::Finite(0.0),
        epsilon: 1e-6,
        y,
        d: None,
        lambda_max: f64::NAN,
        block_lambda_max: Vec::new(),
        iterations: 0,
    }
}

#[test]
fn realify_examples() {
    let m = RMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, -3.0]);
    let r = realify_matrix(&m.map(c));
    assert_eq!(r.view((0, 0), (2, 2)), m.view((0, 0), (2, 2)));
    assert_eq!(r.view((2, 2), (2, 2)), m.view((0, 0), (2, 2)));
    assert!(r.view((0, 2), (2, 2)).iter().all(|&v| v == 0.0));

    let j = num_complex::Complex64::new(0.0, 1.0);
    let m = CMatrix::from_row_slice(2, 2, &[c(0.0), -j, j, c(0.0)]);
    let vals = sym_eig(&realify_matrix(&m)).unwrap().values;
    for (v, e) in vals.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
        assert!((v - e).abs() < 1e-14);
    }
    assert_eq!(realify_matrix(&CMatrix::zeros(3, 3)), RMatrix::zeros(6, 6));
}

#[test]
fn realify_lmi_matches_dense_embedding() {
    let net = desk_network(4, 0.8, 0.5, 31);
    let lmi = assemble_sparse(&net, &MultiplierSpec::for_network(&net), Frequency::Finite(0.6)).unwrap();
    let map = realify(&lmi);
    let mut r = rng(2);
    let y: Vec<f64> = (0..lmi.num_vars()).map(|_| r.random_range(-1.0..1.0)).collect();
    let diff = map.apply(&y) - realify_matrix(&lmi.eval(&y));
    assert!(diff.amax() < 1e-13);
}

#[test]
fn project_nsd_examples() {
    let d = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -2.0]));
    let p = project_nsd(&d, 0.0).unwrap();
    assert!((p - RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, -2.0]))).amax() < 1e-15);
    let p = project_nsd(&d, 0.5).unwrap();
    assert!((p - RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-0.5, -2.0]))).amax() < 1e-15);
    let inside = RMatrix::from_row_slice(2, 2, &[-2.0, 0.5, 0.5, -3.0]);
    assert!((project_nsd(&inside, 0.1).unwrap() - &inside).amax() < 1e-14);
}

#[test]
fn centralized_examples() {
    let opts = SolverOptions::default();
    let lmi = scalar(0.5);
    let SolveOutcome::Certified(cert) = solve_centralized(&lmi, &opts).unwrap() else { panic!("0.5 not certified") };
    assert!(cert.y[0] > 0.0);
    assert!(cert.lambda_max <= -opts.epsilon + opts.tol_feasibility);
    assert!(verify(&lmi, &cert, opts.tol_feasibility).unwrap().pass);

    let out = solve_centralized(&scalar(2.0), &opts).unwrap();
    assert!(!out.is_certified());

    let eps = SolverOptions { epsilon: 0.5, ..opts };
    let lmi = toy(&[-1.0, 0.0, 0.0, -1.0], &[]);
    let SolveOutcome::Certified(cert) = solve_centralized(&lmi, &eps).unwrap() else { panic!("−I not certified") };
    assert_eq!(cert.iterations, 0);
    assert!((cert.lambda_max + 1.0).abs() < 1e-15);
}

#[test]
fn centralized_infeasible_scalar_stalls_decisively() {
    let run = solve_centralized_run(&scalar(2.0), &SolverOptions::default()).unwrap();
    match run.outcome {
        SolveOutcome::NoCertificate(n) => {
            assert_eq!(n.reason, Termination::Stalled);
            assert!(n.iterations < SolverOptions::default().max_iters);
        }
        SolveOutcome::Certified(_) => panic!("certified an infeasible LMI"),
    }
}

#[test]
fn distributed_examples() {
    let opts = SolverOptions::default();

    // single clique: same verdicts as the centralized solver
    for g in [0.5, 2.0] {
        let lmi = scalar(g);
        let tree = build_clique_tree(&[vec![0]], 1).unwrap();
        let dp = decompose(&lmi, &tree).unwrap();
        let a = solve_distributed(&lmi, &dp, &opts).unwrap();
        let b = solve_centralized(&lmi, &opts).unwrap();
        assert_eq!(a.is_certified(), b.is_certified(), "gain {g}");
        if let Some(cert) = a.certificate() {
            assert!(verify(&lmi, cert, opts.tol_feasibility).unwrap().pass);
        }
    }

    let lmi = feasible_chain();
    let dp = decompose(&lmi, &chain_tree()).unwrap();
    let SolveOutcome::Certified(cert) = solve_distributed(&lmi, &dp, &opts).unwrap() else { panic!("chain not certified") };
    assert!(cert.y[0] > 1.0 + 2f64.sqrt());
    let report = verify_decomposed(&lmi, &dp, &cert, opts.tol_feasibility).unwrap();
    assert!(report.pass);
    assert_eq!(report.block_lambda_max.len(), 2);
    assert!(report.block_lambda_max.iter().all(|&l| l <= -opts.epsilon + opts.tol_feasibility));

    let lmi = infeasible_chain();
    let dp = decompose(&lmi, &chain_tree()).unwrap();
    let opts = SolverOptions { max_rounds: 500, ..opts };
    assert!(!solve_distributed(&lmi, &dp, &opts).unwrap().is_certified());
}

#[test]
fn verify_examples() {
    let lmi = scalar(0.5);
    let r = verify(&lmi, &cert(vec![1.0, 0.0]), 1e-7).unwrap();
    assert!((r.lambda_max + 0.75).abs() < 1e-14);
    assert!(r.pass);
    let r = verify(&lmi, &cert(vec![0.0, 0.0]), 1e-7).unwrap();
    assert_eq!(r.lambda_max, 0.0);
    assert!(!r.pass);
    let r = verify(&lmi, &cert(vec![-1.0, 0.0]), 1e-7).unwrap();
    assert!(!r.signs_ok && !r.pass);
    assert!(verify(&lmi, &cert(vec![1.0]), 1e-7).is_err());
}

#[test]
fn tampered_coupling_keeps_reassembly() {
    let opts = SolverOptions::default();
    let lmi = feasible_chain();
    let dp = decompose(&lmi, &chain_tree()).unwrap();
    let mut cert = solve_distributed(&lmi, &dp, &opts).unwrap().certificate().cloned().unwrap();
    let d = cert.d.as_mut().unwrap();
    d[0] += 1e3;
    let report = verify_decomposed(&lmi, &dp, &cert, opts.tol_feasibility).unwrap();
    assert!(report.reassembly_error.unwrap() < 1e-9);
    assert!(report.lambda_max <= -opts.epsilon);
    assert!(!report.pass);
    assert!(report.block_lambda_max.iter().any(|&l| l > 0.0));
}

#[test]
fn analyze_first_order_examples() {
    let opts = SolverOptions::default();
    let ok = first_order_network(1.0, 2.0);
    let bad = first_order_network(2.0, 1.0);
    for mode in [Mode::Centralized, Mode::Distributed] {
        for f in [Formulation::Lumped, Formulation::Sparse] {
            let r = analyze(&ok, None, &grid20(), f, mode, &opts).unwrap();
            assert_eq!(r.verdict, Verdict::CertifiedOnGrid, "{f} {mode}");
            assert_eq!(r.frequencies.len(), 20);
            let r = analyze(&bad, None, &grid20(), f, mode, &opts).unwrap();
            assert_eq!(r.verdict, Verdict::NotCertified);
            assert_eq!(r.frequencies[0].status, FrequencyStatus::NoCertificate);
        }
    }
    assert!(brute_force_stability(&ok, &delta_grid(1, 41, 100, 0)).unwrap().is_stable());
    match brute_force_stability(&bad, &delta_grid(1, 41, 100, 0)).unwrap() {
        StabilityVerdict::Counterexample { delta, abscissa } => {
            assert!((abscissa - (2.0 * delta[0] - 1.0)).abs() < 1e-12);
            assert!(delta[0] >= 0.5);
        }
        v => panic!("expected a counterexample, got {v:?}"),
    }
}

#[test]
fn analyze_decoupled_is_conjunction() {
    let opts = SolverOptions::default();
    let parts = [(1.0, 2.0), (0.5, 1.0), (2.0, 1.0)];
    let nets: Vec<Network> = parts.iter().map(|&(k, a)| first_order_network(k, a)).collect();
    let grid = FrequencyGrid::logspace(1e-1, 1e1, 4, true, true).unwrap();
    let single: Vec<bool> = nets
        .iter()
        .map(|n| analyze(n, None, &grid, Formulation::Lumped, Mode::Centralized, &opts).unwrap().is_certified())
        .collect();
    assert_eq!(single, vec![true, true, false]);
    for take in [2usize, 3] {
        let subs = nets[..take].iter().map(|n| n.subsystems()[0].clone()).collect();
        let net = Network::new(subs, Interconnection::zeros(0, 0)).unwrap();
        for f in [Formulation::Lumped, Formulation::Sparse] {
            let r = analyze(&net, None, &grid, f, Mode::Centralized, &opts).unwrap();
            assert_eq!(r.is_certified(), single[..take].iter().all(|&b| b), "{take} {f}");
        }
    }
}

#[test]
fn certificates_verify_from_raw_network_data() {
    let opts = SolverOptions::default();
    let net = desk_network(5, 0.5, 0.3, 41);
    let grid = FrequencyGrid::logspace(1e-1, 1e1, 3, true, false).unwrap();
    for mode in [Mode::Centralized, Mode::Distributed] {
        let r = analyze(&net, None, &grid, Formulation::Sparse, mode, &opts).unwrap();
        for rec in &r.frequencies {
            if let Some(cert) = &rec.certificate {
                let fresh = assemble(&net, None, Formulation::Sparse, rec.omega).unwrap();
                assert!(verify(&fresh, cert, opts.tol_feasibility).unwrap().pass);
            }
        }
        if mode == Mode::Distributed {
            assert_eq!(r.agents.len(), r.decomposition.cliques);
        }
    }
}

#[test]
fn distributed_runs_are_deterministic() {
    let opts = SolverOptions { seed: 3, initial_spread: 0.5, ..Default::default() };
    let net = desk_network(6, 0.5, 0.3, 51);
    let lmi = assemble_sparse(&net, &MultiplierSpec::for_network(&net), Frequency::Finite(0.5)).unwrap();
    let dp = decompose(&lmi, &analyze_pattern(std::slice::from_ref(&lmi)).unwrap()).unwrap();
    let a = solve_distributed_run(&lmi, &dp, &opts).unwrap();
    let b = solve_distributed_run(&lmi, &dp, &opts).unwrap();
    assert_eq!(a.residuals, b.residuals);
    assert_eq!(a.outcome, b.outcome);
    let ca = solve_centralized_run(&lmi, &opts).unwrap();
    let cb = solve_centralized_run(&lmi, &opts).unwrap();
    assert_eq!(ca.outcome, cb.outcome);
}

#[test]
fn distributed_residual_trend_is_non_increasing() {
    let opts = SolverOptions::default();
    let mut checked = 0;
    for seed in 0..10 {
        let net = desk_network(5, 0.5, 0.3, 60 + seed);
        let lmi = assemble_sparse(&net, &MultiplierSpec::for_network(&net), Frequency::Finite(0.3)).unwrap();
        let dp = decompose(&lmi, &analyze_pattern(std::slice::from_ref(&lmi)).unwrap()).unwrap();
        let run = solve_distributed_run(&lmi, &dp, &opts).unwrap();
        if !run.outcome.is_certified() {
            continue;
        }
        checked += 1;
        let r = &run.residuals;
        let means: Vec<f64> = r.windows(10).map(|w| w.iter().sum::<f64>() / 10.0).collect();
        for (k, pair) in means.windows(2).enumerate() {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-9) + 1e-15, "seed {seed}, window {k}: {} > {}", pair[1], pair[0]);
        }
    }
    assert!(checked >= 5, "only {checked} certified instances");
}

#[test]
fn report_serializes() {
    let r = analyze(&first_order_network(1.0, 2.0), None, &grid20(), Formulation::Sparse, Mode::Distributed, &SolverOptions::default())
        .unwrap();
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    assert_eq!(v["verdict"], "certified_on_grid");
    assert_eq!(v["frequencies"].as_array().unwrap().len(), 20);
    assert!(v["frequencies"][0]["lambda_max"].as_f64().unwrap() < 0.0);
    assert!(v["agents"][0]["dimension"].as_u64().is_some());
}

#[test]
fn options_are_validated() {
    let bad = SolverOptions { epsilon: 0.0, ..Default::default() };
    assert!(solve_centralized(&scalar(0.5), &bad).is_err());
    let bad = SolverOptions { relaxation: 2.0, ..Default::default() };
    assert!(solve_centralized(&scalar(0.5), &bad).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn realify_duplicates_spectrum(n in 1usize..12, seed in any::<u64>()) {
        let h = random_hermitian(n, &mut rng(seed));
        let a = herm_eig(&h).unwrap().values;
        let b = sym_eig(&realify_matrix(&h)).unwrap().values;
        for (k, v) in a.iter().enumerate() {
            prop_assert!((b[2 * k] - v).abs() < 1e-9 && (b[2 * k + 1] - v).abs() < 1e-9);
        }
    }

    #[test]
    fn project_nsd_is_idempotent_and_non_expansive(n in 1usize..15, eps in 0.0f64..1.0, seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_symmetric(n, &mut r).scale(3.0);
        let b = random_symmetric(n, &mut r).scale(3.0);
        let pa = project_nsd(&a, eps).unwrap();
        let pb = project_nsd(&b, eps).unwrap();
        prop_assert!(sym_eig(&pa).unwrap().max() <= -eps + 1e-10);
        prop_assert!((project_nsd(&pa, eps).unwrap() - &pa).norm() <= 1e-10 * (1.0 + pa.norm()));
        prop_assert!((&pa - &pb).norm() <= (&a - &b).norm() + 1e-10);
    }

    #[test]
    fn certified_scalars_verify(gbar in 0.0f64..0.95) {
        let lmi = scalar(gbar);
        let opts = SolverOptions::default();
        let out = solve_centralized(&lmi, &opts).unwrap();
        let cert = out.certificate().expect("small gain is feasible");
        prop_assert!(verify(&lmi, cert, opts.tol_feasibility).unwrap().pass);
    }
}
