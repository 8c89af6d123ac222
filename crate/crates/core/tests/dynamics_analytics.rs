use sts_core::dynamics::{
    build_fmo_model, build_three_qubit_chain, evolve, evolve_reduced, mean_excitation,
    ChainParams, CollapseTerm, FmoParams, LindbladModel,
};
use sts_core::quantum::{c, frobenius, min_eigenvalue, pauli, ComplexMatrix, DensityMatrix};

fn fmo_initial() -> DensityMatrix {
    let parts: Vec<DensityMatrix> = (0..8)
        .map(|k| {
            if k == 5 {
                DensityMatrix::maximally_mixed(2)
            } else {
                DensityMatrix::basis_state(&[0], vec![2]).unwrap()
            }
        })
        .collect();
    DensityMatrix::product(&parts)
}

#[test]
fn dephasing_coherence_decay() {
    let gamma = 0.4;
    let model = LindbladModel::new(
        ComplexMatrix::zeros(2, 2),
        vec![CollapseTerm { operator: pauli::z(), rate: gamma }],
        vec![2],
    )
    .unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = DensityMatrix::pure(&[c(h, 0.), c(h, 0.)], vec![2]).unwrap();
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
    let traj = evolve(&model, &plus, &grid).unwrap();
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let want = 0.5 * (-4.0 * gamma * t).exp();
        assert!((s.matrix()[(0, 1)].re - want).abs() < 1e-6);
        assert!((s.trace() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn two_site_exchange() {
    let model = build_three_qubit_chain(ChainParams { j12: 1.0, j23: 0.0, gamma: 0.0 }).unwrap();
    let rho0 = DensityMatrix::basis_state(&[1, 0, 0], vec![2, 2, 2]).unwrap();
    let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
    let traj = evolve(&model, &rho0, &grid).unwrap();
    for (t, s) in traj.times.iter().zip(&traj.states) {
        // |010⟩ is basis index 2
        let pop = s.matrix()[(2, 2)].re;
        assert!((pop - t.sin().powi(2)).abs() < 1e-6, "t = {t}: {pop}");
        assert!((s.trace() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn fmo_trace_and_excitation_conserved() {
    let model = build_fmo_model(&FmoParams::default()).unwrap();
    let rho0 = fmo_initial();
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
    let traj = evolve_reduced(&model, &rho0, &grid).unwrap();
    let n0 = mean_excitation(&rho0);
    for s in &traj.states {
        assert!((s.trace() - 1.0).abs() <= 1e-9);
        assert!((mean_excitation(s) - n0).abs() <= 1e-8);
    }
}

#[test]
fn fmo_reduction_matches_full_space() {
    let model = build_fmo_model(&FmoParams::default()).unwrap();
    let rho0 = fmo_initial();
    let grid: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
    let full = evolve(&model, &rho0, &grid).unwrap();
    let reduced = evolve_reduced(&model, &rho0, &grid).unwrap();
    for (a, b) in full.states.iter().zip(&reduced.states) {
        let d = frobenius(&(a.matrix() - b.matrix()));
        assert!(d <= 1e-8, "{d}");
    }
}

#[test]
fn trajectories_stay_positive() {
    let rho0 = DensityMatrix::basis_state(&[1, 0, 0], vec![2, 2, 2]).unwrap();
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
    for gamma in [0.0, 0.01, 1.0, 20.0] {
        let model = build_three_qubit_chain(ChainParams { j12: 1.0, j23: 1.0, gamma }).unwrap();
        for s in evolve(&model, &rho0, &grid).unwrap().states {
            assert!(min_eigenvalue(s.matrix()) >= -1e-7);
            assert!((s.trace() - 1.0).abs() <= 1e-9);
        }
    }
    let model = build_fmo_model(&FmoParams::default()).unwrap();
    let grid: Vec<f64> = (0..=50).map(|i| i as f64 * 0.2).collect();
    for s in evolve_reduced(&model, &fmo_initial(), &grid).unwrap().states {
        assert!(min_eigenvalue(s.matrix()) >= -1e-7);
    }
}

#[test]
fn semigroup() {
    let model = build_three_qubit_chain(ChainParams { j12: 1.0, j23: 1.0, gamma: 1.0 }).unwrap();
    let rho0 = DensityMatrix::basis_state(&[1, 0, 0], vec![2, 2, 2]).unwrap();
    let (t1, t2) = (1.3, 3.7);
    let direct = evolve(&model, &rho0, &[0.0, t2]).unwrap().states.pop().unwrap();
    let mid = evolve(&model, &rho0, &[0.0, t1]).unwrap().states.pop().unwrap();
    let split = evolve(&model, &mid, &[0.0, t2 - t1]).unwrap().states.pop().unwrap();
    assert!(frobenius(&(direct.matrix() - split.matrix())) <= 1e-8);
}
