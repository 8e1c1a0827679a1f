//! Randomized conservation checks: the projection must pin moments exactly,
//! and full solver steps must keep the global invariants at rounding level
//! for any admissible input state.

use fks::conservation::Projector;
use fks::grid::{SpatialGrid, VelocityGrid};
use fks::moments::{compute_moments, maxwellian_into, MacroState};
use fks::solver::{ModelKind, Solver, SolverOptions};
use fks::spectral::{KernelKind, SpectralConfig};
use fks::transport::BoundarySet;
use fks::bgk::{BgkIntegrator, BgkParams, NuRule};
use proptest::prelude::*;

// Ranges a 16^2 lattice on [-6, 6] resolves cleanly: mixing neighbouring
// cells during transport must never drive a sampled temperature negative.
fn cell_states() -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
    proptest::collection::vec(
        (0.5f64..2.0, -0.5f64..0.5, -0.5f64..0.5, 0.8f64..1.5),
        64,
    )
}

/// Build an 8x8 periodic box of per-cell projected Maxwellians.
fn solver_from_states(states: &[(f64, f64, f64, f64)], model: ModelKind) -> Solver {
    let sgrid = SpatialGrid::new(2, [8, 8, 1], [0.0; 3], [1.0, 1.0, 0.0], vec![]).unwrap();
    let vgrid = VelocityGrid::new(2, 16, 6.0).unwrap();
    let proj = Projector::new(&vgrid).unwrap();
    let nodes = vgrid.total_nodes();
    let mut field = vec![0.0; states.len() * nodes];
    for (j, &(rho, ux, uy, temp)) in states.iter().enumerate() {
        let st = MacroState::from_primitive(rho, [ux, uy, 0.0], temp, 2);
        let cell = &mut field[j * nodes..(j + 1) * nodes];
        maxwellian_into(cell, &st, &vgrid);
        proj.project(cell, &st);
    }
    let bounds = BoundarySet::periodic(&sgrid);
    Solver::new(sgrid, vgrid, bounds, model, SolverOptions::default(), |j, k| {
        field[j * nodes + k]
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_reaches_any_target_and_is_idempotent(
        raw in proptest::collection::vec(0.0f64..1.0, 256),
        rho in 0.1f64..5.0,
        ux in -2.0f64..2.0,
        uy in -2.0f64..2.0,
        temp in 0.1f64..3.0,
    ) {
        let grid = VelocityGrid::new(2, 16, 6.0).unwrap();
        let proj = Projector::new(&grid).unwrap();
        let target = MacroState::from_primitive(rho, [ux, uy, 0.0], temp, 2);
        let mut f = raw;
        // Accuracy is relative to the data the correction has to cancel.
        let scale = proj
            .moments(&f)
            .iter()
            .chain(proj.state_to_vector(&target).iter())
            .fold(1.0f64, |m, x| m.max(x.abs()));
        proj.project(&mut f, &target);
        let got = compute_moments(&f, &grid.node_table(), grid.cell_volume());
        prop_assert!((got.rho - target.rho).abs() <= 1e-12 * scale);
        prop_assert!((got.momentum[0] - target.momentum[0]).abs() <= 1e-12 * scale);
        prop_assert!((got.momentum[1] - target.momentum[1]).abs() <= 1e-12 * scale);
        prop_assert!((got.energy - target.energy).abs() <= 1e-12 * scale);

        let once = f.clone();
        proj.project(&mut f, &target);
        for (a, b) in f.iter().zip(once.iter()) {
            prop_assert!((a - b).abs() <= 1e-13 * b.abs().max(1.0));
        }
    }

    #[test]
    fn zero_projection_annihilates_invariants(
        raw in proptest::collection::vec(-1.0f64..1.0, 512),
    ) {
        let grid = VelocityGrid::new(3, 8, 5.0).unwrap();
        let proj = Projector::new(&grid).unwrap();
        let mut q = raw;
        let before = proj.moments(&q);
        proj.project_to_zero(&mut q);
        let after = proj.moments(&q);
        let scale = before.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for r in 0..proj.rows() {
            prop_assert!(after[r].abs() <= 1e-13 * scale, "moment {r} = {:.3e}", after[r]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bgk_steps_conserve_globals_on_random_states(states in cell_states()) {
        let model = ModelKind::Bgk(BgkParams {
            nu: NuRule::Density,
            tau: 0.5,
            integrator: BgkIntegrator::ForwardEuler,
        });
        let mut solver = solver_from_states(&states, model);
        for _ in 0..5 {
            let dt = solver.compute_dt().unwrap();
            solver.step(dt).unwrap();
        }
        let rows = &solver.diagnostics.rows;
        prop_assert_eq!(rows.len(), 5);
        let first = &rows[0];
        for row in rows {
            prop_assert!(row.exchange == 0.0, "periodic box leaked mass: {:.3e}", row.exchange);
            prop_assert!(row.collision_drift <= 1e-12, "drift {:.3e}", row.collision_drift);
            prop_assert!((row.mass - first.mass).abs() <= 1e-12 * first.mass);
            prop_assert!((row.energy - first.energy).abs() <= 1e-12 * first.energy);
            for a in 0..2 {
                prop_assert!(
                    (row.momentum[a] - first.momentum[a]).abs() <= 1e-12 * first.mass,
                    "momentum {a} drifted"
                );
            }
        }
    }

    #[test]
    fn boltzmann_steps_conserve_globals_on_random_states(states in cell_states()) {
        let model = ModelKind::Boltzmann(SpectralConfig {
            dv: 2,
            n: 16,
            kernel: KernelKind::Maxwell,
            angles: [4, 1],
            vel_bound: 6.0,
            kernel_const: 1.0 / (2.0 * std::f64::consts::PI),
            tau: 1.0,
        });
        let mut solver = solver_from_states(&states, model);
        for _ in 0..3 {
            let dt = solver.compute_dt().unwrap();
            solver.step(dt).unwrap();
        }
        let rows = &solver.diagnostics.rows;
        let first = &rows[0];
        for row in rows {
            prop_assert!(row.collision_drift <= 1e-12, "drift {:.3e}", row.collision_drift);
            prop_assert!((row.mass - first.mass).abs() <= 1e-12 * first.mass);
            prop_assert!((row.energy - first.energy).abs() <= 1e-12 * first.energy);
            for a in 0..2 {
                prop_assert!(
                    (row.momentum[a] - first.momentum[a]).abs() <= 1e-12 * first.mass,
                    "momentum {a} drifted"
                );
            }
        }
    }
}
