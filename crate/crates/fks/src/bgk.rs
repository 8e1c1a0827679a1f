//! BGK relaxation operator: collisions replaced by exponential decay of the
//! distribution towards its own local Maxwellian.
//!
//! The equilibrium used here is the lattice-projected Maxwellian, so the
//! operator's fixed point and its moment conservation hold exactly on the
//! velocity grid rather than only up to quadrature error.

use crate::conservation::Projector;
use crate::error::{FksError, Result};
use crate::grid::VelocityGrid;
use crate::moments::{maxwellian_into, MacroState};

/// How the collision frequency is formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NuRule {
    /// Frequency equals the local density.
    Density,
    /// Fixed frequency, typically the hard-sphere loss-rate bound.
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BgkIntegrator {
    ForwardEuler,
    ExactExponential,
}

#[derive(Debug, Clone, Copy)]
pub struct BgkParams {
    pub nu: NuRule,
    /// Relaxation scale dividing the frequency.
    pub tau: f64,
    pub integrator: BgkIntegrator,
}

impl BgkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(FksError::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if let NuRule::Constant(mu) = self.nu {
            if !(mu > 0.0) {
                return Err(FksError::Config(format!(
                    "constant collision frequency must be positive, got {mu}"
                )));
            }
        }
        Ok(())
    }

    /// Collision frequency for the given cell state.
    pub fn frequency(&self, state: &MacroState) -> f64 {
        match self.nu {
            NuRule::Density => state.rho,
            NuRule::Constant(mu) => mu,
        }
    }
}

/// Fill `out` with the projected Maxwellian of `state`: the discrete
/// distribution closest to the sampled Maxwellian whose lattice moments
/// reproduce `state` exactly.
pub fn equilibrium_into(out: &mut [f64], state: &MacroState, grid: &VelocityGrid, proj: &Projector) {
    maxwellian_into(out, state, grid);
    proj.project(out, state);
}

/// Relaxation rate `Q = nu (E[U] - f) / tau`, written into `q`.
///
/// `equil` must already hold the projected Maxwellian of the cell state
/// (see [`equilibrium_into`]); it is shared with the stepping path so the
/// Maxwellian is built once per cell per step.
pub fn bgk_rhs(q: &mut [f64], f: &[f64], equil: &[f64], state: &MacroState, params: &BgkParams) {
    let rate = params.frequency(state) / params.tau;
    for k in 0..f.len() {
        q[k] = rate * (equil[k] - f[k]);
    }
}

/// Advance one cell by `dt` in place.
///
/// Forward Euler is exact-moment-preserving because `equil` carries the same
/// lattice moments as `f`; it requires `nu dt / tau <= 1` for positivity, a
/// bound the solver's time-step choice enforces. The exact-exponential path
/// integrates the linear relaxation in closed form and is unconditionally
/// stable.
pub fn bgk_step(
    f: &mut [f64],
    dt: f64,
    equil: &[f64],
    state: &MacroState,
    params: &BgkParams,
) -> Result<()> {
    let ratio = params.frequency(state) * dt / params.tau;
    match params.integrator {
        BgkIntegrator::ForwardEuler => {
            if ratio > 1.0 + 1e-12 {
                return Err(FksError::Instability {
                    step: 0,
                    t: 0.0,
                    reason: format!("forward Euler relaxation step nu*dt/tau = {ratio:.3e} exceeds 1"),
                });
            }
            for k in 0..f.len() {
                f[k] = (1.0 - ratio) * f[k] + ratio * equil[k];
            }
        }
        BgkIntegrator::ExactExponential => {
            let decay = (-ratio).exp();
            for k in 0..f.len() {
                f[k] = equil[k] + (f[k] - equil[k]) * decay;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::compute_moments;

    fn params(nu: NuRule, integrator: BgkIntegrator) -> BgkParams {
        BgkParams { nu, tau: 0.5, integrator }
    }

    fn setup(n: usize) -> (VelocityGrid, Projector, Vec<f64>, MacroState) {
        let grid = VelocityGrid::new(2, n, 6.0).unwrap();
        let proj = Projector::new(&grid).unwrap();
        // Smooth but non-equilibrium data: sum of two displaced Maxwellians.
        let a = MacroState::from_primitive(0.6, [1.0, 0.3, 0.0], 0.8, 2);
        let b = MacroState::from_primitive(0.4, [-1.2, -0.1, 0.0], 0.5, 2);
        let mut f = crate::moments::maxwellian(&a, &grid);
        let fb = crate::moments::maxwellian(&b, &grid);
        for k in 0..f.len() {
            f[k] += fb[k];
        }
        let state = compute_moments(&f, &grid.node_table(), grid.cell_volume());
        (grid, proj, f, state)
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let (grid, proj, _, state) = setup(32);
        let mut e = vec![0.0; grid.total_nodes()];
        equilibrium_into(&mut e, &state, &grid, &proj);
        let mut q = vec![0.0; e.len()];
        bgk_rhs(&mut q, &e, &e, &state, &params(NuRule::Density, BgkIntegrator::ForwardEuler));
        assert!(q.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn rhs_has_zero_moments() {
        let (grid, proj, f, state) = setup(32);
        let mut e = vec![0.0; f.len()];
        equilibrium_into(&mut e, &state, &grid, &proj);
        let mut q = vec![0.0; f.len()];
        bgk_rhs(&mut q, &f, &e, &state, &params(NuRule::Density, BgkIntegrator::ForwardEuler));
        let m = compute_moments(&q, &grid.node_table(), grid.cell_volume());
        let scale = state.rho / 0.5;
        assert!(m.rho.abs() < 1e-12 * scale);
        assert!(m.momentum[0].abs() < 1e-12 * scale);
        assert!(m.momentum[1].abs() < 1e-12 * scale);
        assert!(m.energy.abs() < 1e-12 * scale * state.energy);
    }

    #[test]
    fn doubling_tau_halves_rhs() {
        let (grid, proj, f, state) = setup(16);
        let mut e = vec![0.0; f.len()];
        equilibrium_into(&mut e, &state, &grid, &proj);
        let mut q1 = vec![0.0; f.len()];
        let mut q2 = vec![0.0; f.len()];
        let mut p = params(NuRule::Density, BgkIntegrator::ForwardEuler);
        bgk_rhs(&mut q1, &f, &e, &state, &p);
        p.tau *= 2.0;
        bgk_rhs(&mut q2, &f, &e, &state, &p);
        for k in 0..f.len() {
            assert!((q1[k] - 2.0 * q2[k]).abs() <= 1e-15 * q1[k].abs().max(1e-300));
        }
    }

    #[test]
    fn euler_step_with_unit_ratio_lands_on_equilibrium() {
        let (grid, proj, mut f, state) = setup(16);
        let mut e = vec![0.0; f.len()];
        equilibrium_into(&mut e, &state, &grid, &proj);
        let p = params(NuRule::Constant(1.0), BgkIntegrator::ForwardEuler);
        // nu dt / tau = 1 with nu = 1, tau = 0.5.
        bgk_step(&mut f, 0.5, &e, &state, &p).unwrap();
        for k in 0..f.len() {
            assert_eq!(f[k], e[k]);
        }
    }

    #[test]
    fn euler_step_rejects_unstable_ratio() {
        let (grid, proj, mut f, state) = setup(16);
        let mut e = vec![0.0; f.len()];
        equilibrium_into(&mut e, &state, &grid, &proj);
        let p = params(NuRule::Constant(1.0), BgkIntegrator::ForwardEuler);
        assert!(bgk_step(&mut f, 0.51, &e, &state, &p).is_err());
    }

    #[test]
    fn exponential_step_with_log_two_halves_the_gap() {
        let (grid, proj, mut f, state) = setup(16);
        let mut e = vec![0.0; f.len()];
        equilibrium_into(&mut e, &state, &grid, &proj);
        let f0 = f.clone();
        let p = params(NuRule::Constant(1.0), BgkIntegrator::ExactExponential);
        bgk_step(&mut f, 0.5 * 2.0_f64.ln(), &e, &state, &p).unwrap();
        for k in 0..f.len() {
            let want = e[k] + 0.5 * (f0[k] - e[k]);
            assert!((f[k] - want).abs() <= 1e-15 * want.abs().max(1e-300));
        }
    }

    #[test]
    fn steps_preserve_moments() {
        for integ in [BgkIntegrator::ForwardEuler, BgkIntegrator::ExactExponential] {
            let (grid, proj, mut f, state) = setup(32);
            let mut e = vec![0.0; f.len()];
            equilibrium_into(&mut e, &state, &grid, &proj);
            let before = compute_moments(&f, &grid.node_table(), grid.cell_volume());
            bgk_step(&mut f, 0.3, &e, &state, &params(NuRule::Density, integ)).unwrap();
            let after = compute_moments(&f, &grid.node_table(), grid.cell_volume());
            assert!((after.rho - before.rho).abs() <= 1e-12 * before.rho);
            for a in 0..2 {
                assert!((after.momentum[a] - before.momentum[a]).abs() <= 1e-12 * before.rho);
            }
            assert!((after.energy - before.energy).abs() <= 1e-12 * before.energy);
        }
    }

    #[test]
    fn relaxation_gap_is_monotone() {
        for integ in [BgkIntegrator::ForwardEuler, BgkIntegrator::ExactExponential] {
            let (grid, proj, mut f, state) = setup(32);
            let mut e = vec![0.0; f.len()];
            equilibrium_into(&mut e, &state, &grid, &proj);
            let gap = |f: &[f64], e: &[f64]| -> f64 {
                f.iter().zip(e).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
            };
            let mut last = gap(&f, &e);
            for _ in 0..20 {
                bgk_step(&mut f, 0.4, &e, &state, &params(NuRule::Density, integ)).unwrap();
                let g = gap(&f, &e);
                assert!(g <= last * (1.0 + 1e-14));
                last = g;
            }
        }
    }

    #[test]
    fn validate_rejects_bad_parameters() {
        assert!(BgkParams { nu: NuRule::Density, tau: 0.0, integrator: BgkIntegrator::ForwardEuler }
            .validate()
            .is_err());
        assert!(BgkParams { nu: NuRule::Constant(-1.0), tau: 1.0, integrator: BgkIntegrator::ForwardEuler }
            .validate()
            .is_err());
    }
}
