//! Dense-matrix oracle cross-checks on tiny grids: power-iteration norms
//! against brute-force SVD, and the Strang stepper against the dense matrix
//! exponential of the assembled generator.

mod common;

use num_complex::Complex64;

use kglab_core::grid::{Field, FieldState, Grid, NormSpec};
use kglab_core::interactions::{InteractionTerm, PotentialSpec, SpatialProfile};
use kglab_core::phase_space::{operator_norm, CutoffSpec, CutoffVariant, LinearOperatorHandle};
use kglab_core::scattering::{evolve, EvolveOptions};

use common::{dense_evolve, dense_operator_norm};

fn small_grid() -> Grid {
    Grid::new(1, 16.0, 32).unwrap()
}

#[test]
fn dense_svd_matches_power_iteration_for_multiplication() {
    let grid = Grid::new(1, 16.0, 64).unwrap();
    let op = LinearOperatorHandle::physical_weight(|x| 0.9 * (-0.3 * x[0] * x[0]).exp());
    let dense = dense_operator_norm(&op, &grid);
    let power = operator_norm(&op, &grid, 200, 11).unwrap();
    assert!(power <= dense * (1.0 + 1e-10), "power iteration must stay a lower bound");
    assert!(
        (dense - power).abs() <= 1e-4 * dense,
        "dense {dense} vs power {power}"
    );
}

#[test]
fn dense_svd_matches_power_iteration_for_disjoint_composition() {
    // spatial window |x| <= ~4 against a high-pass keeping |k| >= 4: nearly
    // disjoint phase-space supports, norm well below 1
    let grid = small_grid();
    let t = 16.0;
    let space = CutoffSpec::space_low(0.25, 1.0).unwrap();
    let freq = CutoffSpec::freq_high(-0.5, 1.0).unwrap();
    let op = LinearOperatorHandle::from_cutoff(space, t)
        .compose(&LinearOperatorHandle::from_cutoff(freq, t));
    let dense = dense_operator_norm(&op, &grid);
    let power = operator_norm(&op, &grid, 400, 12).unwrap();
    assert!(dense < 0.9, "supports should be nearly disjoint, got norm {dense}");
    assert!(
        (dense - power).abs() <= 1e-6 * dense.max(1e-12),
        "dense {dense} vs power {power}"
    );
}

#[test]
fn dense_svd_matches_power_iteration_for_commutator() {
    let grid = Grid::new(1, 32.0, 64).unwrap();
    let t = 4.0;
    let a = LinearOperatorHandle::from_cutoff(CutoffSpec::space_low(0.6, 1.0).unwrap(), t);
    let b = LinearOperatorHandle::from_cutoff(CutoffSpec::freq_high(0.2, 1.0).unwrap(), t);
    let comm = LinearOperatorHandle::commutator(&a, &b);
    let dense = dense_operator_norm(&comm, &grid);
    let power = operator_norm(&comm, &grid, 200, 13).unwrap();
    assert!(
        (dense - power).abs() <= 1e-4 * dense,
        "dense {dense} vs power {power}"
    );
}

#[test]
fn dense_svd_matches_power_iteration_for_velocity_handle() {
    let grid = small_grid();
    let t = 2.0;
    let space = CutoffSpec::new(
        CutoffVariant::DirectionalSpace { e: 0.6, axis: 0, sign: 1 },
        1.0,
    )
    .unwrap();
    let freq = CutoffSpec::new(
        CutoffVariant::DirectionalFreq { b: 0.1, axis: 0, sign: 1, threshold: 0.1 },
        1.0,
    )
    .unwrap();
    let delta = 2.5;
    let op = LinearOperatorHandle::from_cutoff(space, t)
        .compose(&LinearOperatorHandle::from_cutoff(freq, t))
        .compose(&LinearOperatorHandle::half_wave(4.0, 1))
        .compose(&LinearOperatorHandle::physical_weight(move |x| {
            (1.0 + x[0] * x[0]).powf(-0.5 * delta)
        }));
    let dense = dense_operator_norm(&op, &grid);
    let power = operator_norm(&op, &grid, 400, 14).unwrap();
    assert!(
        (dense - power).abs() <= 1e-6 * dense.max(1e-12),
        "dense {dense} vs power {power}"
    );
}

#[test]
fn strang_matches_dense_matrix_exponential() {
    let grid = small_grid();
    let spec = PotentialSpec {
        terms: vec![InteractionTerm::StaticLocalized {
            amplitude: 0.4,
            profile: SpatialProfile::Gaussian { rho: 2.0 },
        }],
    };
    let u = Field::from_fn(&grid, |x| {
        Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0)
    });
    let udot = Field::from_fn(&grid, |x| {
        Complex64::new(0.3 * (-0.25 * x[0] * x[0]).exp(), 0.0)
    });
    let initial = FieldState::new(u, udot).unwrap();

    let opts = EvolveOptions { checkpoint_stride: 0, ..Default::default() };
    let traj = evolve(&initial, &spec, 1.0, 1e-3, &opts).unwrap();
    let oracle = dense_evolve(&grid, &spec, &initial, 1.0);
    let err = traj
        .final_state()
        .sub(&oracle)
        .unwrap()
        .norm(&NormSpec::SNorm)
        .unwrap();
    assert!(err < 1e-6, "terminal S-norm error {err} against the dense exponential");
}
