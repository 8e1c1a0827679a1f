//! Velocity moments of discrete distributions and pointwise Maxwellian
//! construction.
//!
//! The conserved vector is `(rho, momentum, energy)` with
//! `energy = sum |v|^2 f dv^d`, so a Maxwellian at temperature `T` carries
//! `energy = rho * (dv * T + |u|^2)` and temperature recovers as
//! `T = (energy - rho |u|^2) / (dv * rho)`.
//!
//! Moment sums over thousands of nodes must survive a 1e-12 conservation
//! audit, so all reductions here use Neumaier-compensated accumulation.

use crate::grid::VelocityGrid;

/// Compensated (Neumaier) scalar accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Fold in another accumulator, keeping both compensation terms.
    pub fn merge(&mut self, other: Accumulator) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Conserved macroscopic state of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacroState {
    pub rho: f64,
    pub momentum: [f64; 3],
    pub energy: f64,
}

impl MacroState {
    pub fn zero() -> Self {
        Self { rho: 0.0, momentum: [0.0; 3], energy: 0.0 }
    }

    /// Build the conserved vector from density, bulk velocity and temperature.
    pub fn from_primitive(rho: f64, u: [f64; 3], temp: f64, dv: usize) -> Self {
        let usq = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        Self {
            rho,
            momentum: [rho * u[0], rho * u[1], rho * u[2]],
            energy: rho * (dv as f64 * temp + usq),
        }
    }

    pub fn velocity(&self) -> [f64; 3] {
        [
            self.momentum[0] / self.rho,
            self.momentum[1] / self.rho,
            self.momentum[2] / self.rho,
        ]
    }

    pub fn temperature(&self, dv: usize) -> f64 {
        let u = self.velocity();
        let usq = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        (self.energy - self.rho * usq) / (dv as f64 * self.rho)
    }

    /// True if the state cannot parametrize a Maxwellian.
    pub fn is_degenerate(&self, dv: usize) -> bool {
        if !self.rho.is_finite() || !self.energy.is_finite() {
            return true;
        }
        if self.momentum.iter().any(|m| !m.is_finite()) {
            return true;
        }
        if self.rho <= 0.0 {
            return true;
        }
        self.temperature(dv) <= 0.0
    }
}

/// Moments of `f` against `(1, v, |v|^2)`, scaled by the velocity cell volume.
pub fn compute_moments(f: &[f64], table: &[[f64; 4]], dvol: f64) -> MacroState {
    debug_assert_eq!(f.len(), table.len());
    let mut rho = Accumulator::new();
    let mut mx = Accumulator::new();
    let mut my = Accumulator::new();
    let mut mz = Accumulator::new();
    let mut en = Accumulator::new();
    for (fk, t) in f.iter().zip(table.iter()) {
        rho.add(*fk);
        mx.add(fk * t[0]);
        my.add(fk * t[1]);
        mz.add(fk * t[2]);
        en.add(fk * t[3]);
    }
    MacroState {
        rho: rho.value() * dvol,
        momentum: [mx.value() * dvol, my.value() * dvol, mz.value() * dvol],
        energy: en.value() * dvol,
    }
}

/// Evaluate the Maxwellian of `state` at every lattice node, writing into `out`.
///
/// The Gaussian factorizes per axis, so the hot path is `dv * n` exponentials
/// plus one product per node.
pub fn maxwellian_into(out: &mut [f64], state: &MacroState, grid: &VelocityGrid) {
    debug_assert_eq!(out.len(), grid.total_nodes());
    let dv = grid.dv;
    let n = grid.n;
    let u = state.velocity();
    let temp = state.temperature(dv);
    let coef = state.rho / (2.0 * std::f64::consts::PI * temp).powf(dv as f64 / 2.0);
    let inv2t = 1.0 / (2.0 * temp);
    let axis = grid.axis();

    let mut per_axis = vec![0.0; dv * n];
    for a in 0..dv {
        for i in 0..n {
            let d = axis[i] - u[a];
            per_axis[a * n + i] = (-d * d * inv2t).exp();
        }
    }
    let tx = &per_axis[0..n];
    let ty = &per_axis[n..2 * n];
    if dv == 2 {
        for ky in 0..n {
            let row = coef * ty[ky];
            for kx in 0..n {
                out[kx + n * ky] = row * tx[kx];
            }
        }
    } else {
        let tz = &per_axis[2 * n..3 * n];
        for kz in 0..n {
            for ky in 0..n {
                let row = coef * tz[kz] * ty[ky];
                let base = n * (ky + n * kz);
                for kx in 0..n {
                    out[base + kx] = row * tx[kx];
                }
            }
        }
    }
}

/// Allocating variant of [`maxwellian_into`].
pub fn maxwellian(state: &MacroState, grid: &VelocityGrid) -> Vec<f64> {
    let mut out = vec![0.0; grid.total_nodes()];
    maxwellian_into(&mut out, state, grid);
    out
}

/// Heat flux `q_a = 1/2 sum (v_a - u_a) |v - u|^2 f dv^d`.
pub fn heat_flux(f: &[f64], table: &[[f64; 4]], u: [f64; 3], dvol: f64) -> [f64; 3] {
    let mut q = [Accumulator::new(), Accumulator::new(), Accumulator::new()];
    for (fk, t) in f.iter().zip(table.iter()) {
        let c = [t[0] - u[0], t[1] - u[1], t[2] - u[2]];
        let csq = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
        for a in 0..3 {
            q[a].add(fk * c[a] * csq);
        }
    }
    [
        0.5 * q[0].value() * dvol,
        0.5 * q[1].value() * dvol,
        0.5 * q[2].value() * dvol,
    ]
}
