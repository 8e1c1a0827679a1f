//! Benchmark case library: initial data, exact references, boundary
//! schedules, and ready-to-run presets selectable by id.

use std::f64::consts::PI;

use crate::bgk::{BgkIntegrator, BgkParams, NuRule};
use crate::conservation::Projector;
use crate::error::{FksError, Result};
use crate::grid::{SolidBox, SpatialGrid, VelocityGrid};
use crate::moments::{maxwellian_into, MacroState};
use crate::solver::{ModelKind, Solver, SolverOptions};
use crate::spectral::{KernelKind, SpectralConfig};
use crate::transport::{BoundarySet, FaceRule, InflowState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseId {
    Bkw2d,
    Relax3d,
    Sod2v,
    Sod3v,
    Vortex2d,
    Reentry2d,
    Reentry3d,
    /// Uniform free stream on a periodic box; every parameter comes from the
    /// config file.
    Custom,
}

impl CaseId {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "bkw2d" => CaseId::Bkw2d,
            "relax3d" => CaseId::Relax3d,
            "sod2v" => CaseId::Sod2v,
            "sod3v" => CaseId::Sod3v,
            "vortex2d" => CaseId::Vortex2d,
            "reentry2d" => CaseId::Reentry2d,
            "reentry3d" => CaseId::Reentry3d,
            "custom" => CaseId::Custom,
            other => return Err(FksError::Config(format!("unknown case id `{other}`"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            CaseId::Bkw2d => "bkw2d",
            CaseId::Relax3d => "relax3d",
            CaseId::Sod2v => "sod2v",
            CaseId::Sod3v => "sod3v",
            CaseId::Vortex2d => "vortex2d",
            CaseId::Reentry2d => "reentry2d",
            CaseId::Reentry3d => "reentry3d",
            CaseId::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    Boltzmann,
    Bgk,
    EulerLimit,
}

/// Fully resolved run description: presets fill every field, the config file
/// overrides individual entries.
#[derive(Debug, Clone)]
pub struct CaseConfig {
    pub case: CaseId,
    pub dim: usize,
    pub m: [usize; 3],
    pub origin: [f64; 3],
    pub extent: [f64; 3],
    pub solids: Vec<SolidBox>,
    pub dv: usize,
    pub n: usize,
    pub vel_bound: f64,
    pub model: ModelChoice,
    pub kernel: KernelKind,
    pub kernel_const: f64,
    pub angles: [usize; 2],
    pub nu: NuRule,
    pub integrator: BgkIntegrator,
    pub tau: f64,
    pub t_final: f64,
    pub dt: Option<f64>,
    pub cfl: f64,
    pub dump_every: usize,
    pub binary_dumps: bool,
    /// Vortex strength and adiabatic exponent.
    pub beta: f64,
    pub gamma: f64,
    /// Two-Gaussian spread and centre offset.
    pub sigma_sq: f64,
    pub v1: [f64; 3],
    /// Turning-inflow schedule joints.
    pub t1: f64,
    pub t2: f64,
    /// Free-stream state for `custom` and the re-entry cases.
    pub stream_rho: f64,
    pub stream_u: [f64; 3],
    pub stream_temp: f64,
}

impl CaseConfig {
    pub fn preset(case: CaseId) -> Self {
        let mut c = CaseConfig {
            case,
            dim: 0,
            m: [1, 1, 1],
            origin: [0.0; 3],
            extent: [0.0; 3],
            solids: vec![],
            dv: 2,
            n: 32,
            vel_bound: 9.0,
            model: ModelChoice::Boltzmann,
            kernel: KernelKind::Maxwell,
            kernel_const: 1.0 / (2.0 * PI),
            angles: [8, 1],
            nu: NuRule::Density,
            integrator: BgkIntegrator::ForwardEuler,
            tau: 1.0,
            t_final: 10.0,
            dt: Some(0.02),
            cfl: 1.0,
            dump_every: 0,
            binary_dumps: false,
            beta: 5.0,
            gamma: 2.0,
            sigma_sq: 0.2,
            v1: [-1.0, -1.0, -0.25],
            t1: 1.5,
            t2: 1.5 * std::f64::consts::SQRT_2 + 1.5,
            stream_rho: 1.0,
            stream_u: [0.0; 3],
            stream_temp: 1.0,
        };
        match case {
            CaseId::Bkw2d => {}
            CaseId::Relax3d => {
                c.dv = 3;
                c.n = 32;
                c.vel_bound = 7.0;
                c.kernel = KernelKind::HardSphere;
                c.kernel_const = 1.0 / (4.0 * PI);
                c.angles = [6, 6];
                c.t_final = 2.0;
                c.dt = Some(0.05);
            }
            CaseId::Sod2v => {
                c.dim = 1;
                c.m = [100, 1, 1];
                c.extent = [2.0, 0.0, 0.0];
                c.n = 64;
                c.vel_bound = 15.0;
                c.tau = 1e-3;
                c.t_final = 0.15;
                c.dt = None;
            }
            CaseId::Sod3v => {
                c.dim = 1;
                c.m = [32, 1, 1];
                c.extent = [2.0, 0.0, 0.0];
                c.dv = 3;
                c.n = 32;
                c.vel_bound = 16.0;
                c.kernel = KernelKind::HardSphere;
                c.kernel_const = 1.0 / (4.0 * PI);
                c.angles = [4, 4];
                c.tau = 1e-2;
                c.t_final = 0.5;
                c.dt = None;
            }
            CaseId::Vortex2d => {
                c.dim = 2;
                c.m = [100, 100, 1];
                c.extent = [10.0, 10.0, 0.0];
                c.n = 32;
                c.vel_bound = 7.5;
                c.tau = 0.1;
                c.t_final = 10.0;
                c.dt = None;
            }
            CaseId::Reentry2d => {
                c.dim = 2;
                c.m = [200, 200, 1];
                c.extent = [4.0, 4.0, 0.0];
                c.solids = reentry2d_objects();
                c.n = 32;
                c.vel_bound = 10.0;
                c.tau = 1e-2;
                c.t_final = 10.0;
                c.dt = None;
                c.stream_u = [3.0, 0.0, 0.0];
            }
            CaseId::Reentry3d => {
                c.dim = 3;
                c.m = [45, 45, 45];
                c.extent = [2.0, 2.0, 2.0];
                c.solids = vec![SolidBox { lo: [0.8, 0.8, 0.8], hi: [1.2, 1.2, 1.2] }];
                c.dv = 3;
                c.n = 16;
                c.vel_bound = 10.0;
                c.kernel = KernelKind::HardSphere;
                c.kernel_const = 1.0 / (4.0 * PI);
                c.angles = [4, 4];
                c.tau = 0.3;
                c.t_final = 0.6;
                c.dt = None;
                c.stream_u = [2.0, 0.0, 0.0];
            }
            CaseId::Custom => {
                c.dim = 2;
                c.m = [32, 32, 1];
                c.extent = [1.0, 1.0, 0.0];
                c.n = 16;
                c.vel_bound = 6.0;
                c.model = ModelChoice::Bgk;
                c.tau = 0.1;
                c.t_final = 1.0;
                c.dt = None;
            }
        }
        c
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.dim, self.m, self.origin, self.extent, self.solids.clone())
    }

    pub fn velocity_grid(&self) -> Result<VelocityGrid> {
        VelocityGrid::new(self.dv, self.n, self.vel_bound)
    }

    pub fn model_kind(&self) -> ModelKind {
        match self.model {
            ModelChoice::Boltzmann => ModelKind::Boltzmann(SpectralConfig {
                dv: self.dv,
                n: self.n,
                kernel: self.kernel,
                angles: self.angles,
                vel_bound: self.vel_bound,
                kernel_const: self.kernel_const,
                tau: self.tau,
            }),
            ModelChoice::Bgk => ModelKind::Bgk(BgkParams {
                nu: self.nu,
                tau: self.tau,
                integrator: self.integrator,
            }),
            ModelChoice::EulerLimit => ModelKind::EulerLimit,
        }
    }

    pub fn boundaries(&self, sgrid: &SpatialGrid) -> Result<BoundarySet> {
        let p = || [FaceRule::Periodic, FaceRule::Periodic];
        let rules = match self.case {
            CaseId::Sod2v | CaseId::Sod3v => {
                let (left, right) = sod_states(self.dv);
                [
                    [
                        FaceRule::Inflow(InflowState::Constant(left)),
                        FaceRule::Inflow(InflowState::Constant(right)),
                    ],
                    p(),
                    p(),
                ]
            }
            CaseId::Reentry2d => [
                [
                    FaceRule::Inflow(InflowState::Turning {
                        rho: self.stream_rho,
                        speed: stream_speed(&self.stream_u),
                        temp: self.stream_temp,
                        t1: self.t1,
                        t2: self.t2,
                    }),
                    FaceRule::Outflow,
                ],
                [FaceRule::Outflow, FaceRule::Outflow],
                p(),
            ],
            CaseId::Reentry3d => {
                let stream = MacroState::from_primitive(
                    self.stream_rho,
                    self.stream_u,
                    self.stream_temp,
                    self.dv,
                );
                [
                    [FaceRule::Inflow(InflowState::Constant(stream)), FaceRule::Outflow],
                    [FaceRule::Outflow, FaceRule::Outflow],
                    [FaceRule::Outflow, FaceRule::Outflow],
                ]
            }
            _ => [p(), p(), p()],
        };
        BoundarySet::new(rules, sgrid)
    }

    /// Build a ready-to-step solver with this configuration's initial data.
    pub fn build(&self) -> Result<Solver> {
        let sgrid = self.spatial_grid()?;
        let vgrid = self.velocity_grid()?;
        let proj = Projector::new(&vgrid)?;
        let bounds = self.boundaries(&sgrid)?;
        let options = SolverOptions { cfl: self.cfl, dt_override: self.dt };
        let nodes = vgrid.total_nodes();
        let field: Vec<f64> = match self.case {
            CaseId::Bkw2d => init_bkw(&vgrid, &proj),
            CaseId::Relax3d => init_two_gaussians(&vgrid, &proj, self.sigma_sq, self.v1),
            CaseId::Sod2v | CaseId::Sod3v => {
                let (left, right) = sod_states(self.dv);
                let half = self.origin[0] + 0.5 * self.extent[0];
                let mut buf = vec![0.0; sgrid.total_cells() * nodes];
                for j in 0..sgrid.total_cells() {
                    let state = if sgrid.cell_center(j)[0] <= half { left } else { right };
                    fill_projected(&mut buf[j * nodes..(j + 1) * nodes], &state, &vgrid, &proj);
                }
                buf
            }
            CaseId::Vortex2d => {
                let mut buf = vec![0.0; sgrid.total_cells() * nodes];
                for j in 0..sgrid.total_cells() {
                    let c = sgrid.cell_center(j);
                    let state = vortex_state([c[0], c[1]], self.beta, self.gamma);
                    fill_projected(&mut buf[j * nodes..(j + 1) * nodes], &state, &vgrid, &proj);
                }
                buf
            }
            CaseId::Reentry2d | CaseId::Reentry3d | CaseId::Custom => {
                let state = MacroState::from_primitive(
                    self.stream_rho,
                    self.stream_u,
                    self.stream_temp,
                    self.dv,
                );
                let mut one = vec![0.0; nodes];
                fill_projected(&mut one, &state, &vgrid, &proj);
                let mut buf = vec![0.0; sgrid.total_cells() * nodes];
                for j in 0..sgrid.total_cells() {
                    buf[j * nodes..(j + 1) * nodes].copy_from_slice(&one);
                }
                buf
            }
        };
        Solver::new(sgrid, vgrid, bounds, self.model_kind(), options, |j, k| {
            field[j * nodes + k]
        })
    }
}

fn stream_speed(u: &[f64; 3]) -> f64 {
    (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt()
}

fn fill_projected(out: &mut [f64], state: &MacroState, vgrid: &VelocityGrid, proj: &Projector) {
    maxwellian_into(out, state, vgrid);
    proj.project(out, state);
}

/// The three rectangles of the 2D re-entry geometry.
pub fn reentry2d_objects() -> Vec<SolidBox> {
    let (x0, x1, xp0, xp1) = (1.5, 1.7, 1.8, 2.0);
    let (y0, y1, yp0, yp1) = (1.7, 1.95, 2.05, 2.3);
    vec![
        SolidBox { lo: [x0, y0, 0.0], hi: [x1, y1, 0.0] },
        SolidBox { lo: [x0, yp0, 0.0], hi: [x1, yp1, 0.0] },
        SolidBox {
            lo: [xp0, (y0 + yp0) / 2.0, 0.0],
            hi: [xp1, (y1 + yp1) / 2.0, 0.0],
        },
    ]
}

/// Inflow state of the 2D re-entry schedule at time `t`: a speed-3 stream
/// whose transverse component ramps up linearly between the two joints.
pub fn reentry2d_schedule(t: f64) -> MacroState {
    let turn = InflowState::Turning {
        rho: 1.0,
        speed: 3.0,
        temp: 1.0,
        t1: 1.5,
        t2: 1.5 * std::f64::consts::SQRT_2 + 1.5,
    };
    turn.state_at(t, 2)
}

/// Closed-form relaxing solution of the two-dimensional Maxwell-molecule
/// initial value problem started from `v^2/pi * exp(-v^2)`.
pub fn exact_bkw_value(vsq: f64, t: f64) -> f64 {
    let s = 1.0 - (-t / 8.0).exp() / 2.0;
    (-vsq / (2.0 * s)).exp() / (2.0 * PI * s * s) * (2.0 * s - 1.0 + (1.0 - s) / (2.0 * s) * vsq)
}

/// Pointwise evaluation of the exact relaxing solution on the grid.
pub fn exact_bkw(vgrid: &VelocityGrid, t: f64) -> Vec<f64> {
    (0..vgrid.total_nodes())
        .map(|k| {
            let v = vgrid.node(k);
            exact_bkw_value(v[0] * v[0] + v[1] * v[1], t)
        })
        .collect()
}

/// Initial data of the relaxation benchmark: the exact solution at `t = 0`,
/// projected onto its analytic moments (unit mass, zero momentum, unit
/// temperature).
pub fn init_bkw(vgrid: &VelocityGrid, proj: &Projector) -> Vec<f64> {
    let mut f = exact_bkw(vgrid, 0.0);
    let target = MacroState { rho: 1.0, momentum: [0.0; 3], energy: 2.0 };
    proj.project(&mut f, &target);
    f
}

/// Half-sum of two isotropic Gaussians of variance `sigma_sq` centred at
/// `v1` and `-v1`, projected onto its analytic moments.
pub fn init_two_gaussians(
    vgrid: &VelocityGrid,
    proj: &Projector,
    sigma_sq: f64,
    v1: [f64; 3],
) -> Vec<f64> {
    let norm = 0.5 / (2.0 * PI * sigma_sq).powf(1.5);
    let mut f: Vec<f64> = (0..vgrid.total_nodes())
        .map(|k| {
            let v = vgrid.node(k);
            let mut dp = 0.0;
            let mut dm = 0.0;
            for a in 0..3 {
                dp += (v[a] - v1[a]) * (v[a] - v1[a]);
                dm += (v[a] + v1[a]) * (v[a] + v1[a]);
            }
            norm * ((-dp / (2.0 * sigma_sq)).exp() + (-dm / (2.0 * sigma_sq)).exp())
        })
        .collect();
    let energy = v1[0] * v1[0] + v1[1] * v1[1] + v1[2] * v1[2] + 3.0 * sigma_sq;
    let target = MacroState { rho: 1.0, momentum: [0.0; 3], energy };
    proj.project(&mut f, &target);
    f
}

/// The two half-domain states of the shock-tube initial data.
pub fn sod_states(dv: usize) -> (MacroState, MacroState) {
    (
        MacroState::from_primitive(1.0, [0.0; 3], 2.5, dv),
        MacroState::from_primitive(0.125, [0.0; 3], 0.25, dv),
    )
}

/// Macro state of the travelling isentropic vortex at position `pos`,
/// free stream (1, (1,1), 1), centre (5,5).
pub fn vortex_state(pos: [f64; 2], beta: f64, gamma: f64) -> MacroState {
    let xp = pos[0] - 5.0;
    let yp = pos[1] - 5.0;
    let rsq = xp * xp + yp * yp;
    let envelope = (0.5 * (1.0 - rsq)).exp() * beta / (2.0 * PI);
    let du = [-yp * envelope, xp * envelope];
    let dtemp = -(gamma - 1.0) * beta / (8.0 * gamma * PI * PI) * (1.0 - rsq).exp();
    let temp = 1.0 + dtemp;
    let rho = temp.powf(1.0 / (gamma - 1.0));
    MacroState::from_primitive(rho, [1.0 + du[0], 1.0 + du[1], 0.0], temp, 2)
}
