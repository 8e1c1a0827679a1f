//! INI-style run configuration: `[section]` headers, `key = value` pairs,
//! `#` comments, case-sensitive keys, unknown keys rejected.
//!
//! Parsing starts from the preset selected by `[case] id` and applies the
//! remaining entries as overrides, so a minimal file only names the case.

use crate::bgk::{BgkIntegrator, BgkParams, NuRule};
use crate::cases::{CaseConfig, CaseId, ModelChoice};
use crate::error::{FksError, Result};
use crate::spectral::{hard_sphere_rate_bound, KernelKind, SpectralConfig};

pub fn parse_config(text: &str) -> Result<CaseConfig> {
    let entries = tokenize(text)?;
    let id = entries
        .iter()
        .find(|e| e.section == "case" && e.key == "id")
        .ok_or_else(|| FksError::Config("missing required key `id` in section [case]".into()))?;
    let mut cfg = CaseConfig::preset(CaseId::parse(&id.value)?);
    for e in &entries {
        if e.section == "case" && e.key == "id" {
            continue;
        }
        apply(&mut cfg, e)?;
    }
    validate(&cfg)?;
    Ok(cfg)
}

/// Consistency checks beyond per-field parsing; grids and model parameters
/// are constructed once to surface their own errors.
pub fn validate(cfg: &CaseConfig) -> Result<()> {
    cfg.spatial_grid()?;
    cfg.velocity_grid()?;
    match cfg.model {
        ModelChoice::Boltzmann => SpectralConfig {
            dv: cfg.dv,
            n: cfg.n,
            kernel: cfg.kernel,
            angles: cfg.angles,
            vel_bound: cfg.vel_bound,
            kernel_const: cfg.kernel_const,
            tau: cfg.tau,
        }
        .validate()?,
        ModelChoice::Bgk => BgkParams {
            nu: cfg.nu,
            tau: cfg.tau,
            integrator: cfg.integrator,
        }
        .validate()?,
        ModelChoice::EulerLimit => {}
    }
    if !(cfg.t_final >= 0.0) || !cfg.t_final.is_finite() {
        return Err(FksError::Config(format!("t_final must be nonnegative, got {}", cfg.t_final)));
    }
    if let Some(dt) = cfg.dt {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(FksError::Config(format!("dt must be positive, got {dt}")));
        }
    }
    if !(cfg.cfl > 0.0 && cfg.cfl <= 1.0) {
        return Err(FksError::Config(format!("cfl must be in (0, 1], got {}", cfg.cfl)));
    }
    if cfg.case == CaseId::Reentry2d {
        let speed =
            (cfg.stream_u[0].powi(2) + cfg.stream_u[1].powi(2) + cfg.stream_u[2].powi(2)).sqrt();
        if !(cfg.t2 > cfg.t1) || cfg.t2 - cfg.t1 > speed {
            return Err(FksError::Config(format!(
                "turning schedule needs t1 < t2 <= t1 + |u| (got t1={}, t2={}, |u|={speed})",
                cfg.t1, cfg.t2
            )));
        }
    }
    Ok(())
}

struct Entry {
    section: String,
    key: String,
    value: String,
    line: usize,
}

const SECTIONS: [&str; 6] = ["case", "grid", "velocity", "model", "time", "output"];

fn tokenize(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        if let Some(name) = stripped.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| FksError::Config(format!("line {line}: unterminated section header")))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(FksError::Config(format!("line {line}: unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = stripped
            .split_once('=')
            .ok_or_else(|| FksError::Config(format!("line {line}: expected `key = value`")))?;
        let section = section
            .clone()
            .ok_or_else(|| FksError::Config(format!("line {line}: entry before any [section]")))?;
        out.push(Entry {
            section,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(out)
}

fn apply(cfg: &mut CaseConfig, e: &Entry) -> Result<()> {
    let bad = |what: &str| {
        FksError::Config(format!("line {}: invalid {what} `{}` for key `{}`", e.line, e.value, e.key))
    };
    let f = || e.value.parse::<f64>().map_err(|_| bad("number"));
    let u = || e.value.parse::<usize>().map_err(|_| bad("integer"));
    let list = |n: usize| -> Result<Vec<f64>> {
        let vals: std::result::Result<Vec<f64>, _> =
            e.value.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|_| bad("number list"))?;
        if vals.is_empty() || vals.len() > n {
            return Err(bad("number list"));
        }
        Ok(vals)
    };
    match (e.section.as_str(), e.key.as_str()) {
        ("case", "beta") => cfg.beta = f()?,
        ("case", "gamma") => cfg.gamma = f()?,
        ("case", "sigma_sq") => cfg.sigma_sq = f()?,
        ("case", "v1") => {
            let v = list(3)?;
            for (a, x) in v.into_iter().enumerate() {
                cfg.v1[a] = x;
            }
        }
        ("case", "t1") => cfg.t1 = f()?,
        ("case", "t2") => cfg.t2 = f()?,
        ("case", "rho") => cfg.stream_rho = f()?,
        ("case", "ux") => cfg.stream_u[0] = f()?,
        ("case", "uy") => cfg.stream_u[1] = f()?,
        ("case", "uz") => cfg.stream_u[2] = f()?,
        ("case", "temp") => cfg.stream_temp = f()?,
        ("grid", "dim") => {
            cfg.dim = u()?;
            if cfg.dim > 3 {
                return Err(bad("dimension"));
            }
        }
        ("grid", "m") => {
            let v = list(3)?;
            cfg.m = [1, 1, 1];
            for (a, x) in v.into_iter().enumerate() {
                if x.fract() != 0.0 || x < 1.0 {
                    return Err(bad("cell count"));
                }
                cfg.m[a] = x as usize;
            }
        }
        ("grid", "origin") => {
            let v = list(3)?;
            cfg.origin = [0.0; 3];
            for (a, x) in v.into_iter().enumerate() {
                cfg.origin[a] = x;
            }
        }
        ("grid", "extent") => {
            let v = list(3)?;
            cfg.extent = [0.0; 3];
            for (a, x) in v.into_iter().enumerate() {
                cfg.extent[a] = x;
            }
        }
        ("velocity", "dv") => cfg.dv = u()?,
        ("velocity", "n") => cfg.n = u()?,
        ("velocity", "bound") => cfg.vel_bound = f()?,
        ("model", "kind") => {
            cfg.model = match e.value.as_str() {
                "boltzmann" => ModelChoice::Boltzmann,
                "bgk" => ModelChoice::Bgk,
                "euler_limit" => ModelChoice::EulerLimit,
                _ => return Err(bad("model kind")),
            }
        }
        ("model", "kernel") => {
            cfg.kernel = match e.value.as_str() {
                "maxwell" => KernelKind::Maxwell,
                "hard_sphere" => KernelKind::HardSphere,
                _ => return Err(bad("kernel")),
            }
        }
        ("model", "kernel_const") => cfg.kernel_const = f()?,
        ("model", "angles") => {
            let v = list(2)?;
            cfg.angles = [1, 1];
            for (a, x) in v.into_iter().enumerate() {
                if x.fract() != 0.0 || x < 1.0 {
                    return Err(bad("angle count"));
                }
                cfg.angles[a] = x as usize;
            }
        }
        ("model", "nu") => {
            cfg.nu = match e.value.as_str() {
                "density" => NuRule::Density,
                // The hard-sphere loss-rate bound, matching the collision
                // stability estimate.
                "mu" => NuRule::Constant(hard_sphere_rate_bound(cfg.kernel_const)),
                other => NuRule::Constant(other.parse::<f64>().map_err(|_| bad("frequency"))?),
            }
        }
        ("model", "integrator") => {
            cfg.integrator = match e.value.as_str() {
                "euler" => BgkIntegrator::ForwardEuler,
                "exponential" => BgkIntegrator::ExactExponential,
                _ => return Err(bad("integrator")),
            }
        }
        ("model", "tau") => cfg.tau = f()?,
        ("time", "t_final") => cfg.t_final = f()?,
        ("time", "dt") => cfg.dt = Some(f()?),
        ("time", "cfl") => cfg.cfl = f()?,
        ("output", "dump_every") => cfg.dump_every = u()?,
        ("output", "binary") => {
            cfg.binary_dumps = match e.value.as_str() {
                "true" => true,
                "false" => false,
                _ => return Err(bad("boolean")),
            }
        }
        (section, key) => {
            return Err(FksError::Config(format!(
                "line {}: unknown key `{key}` in section [{section}]",
                e.line
            )))
        }
    }
    Ok(())
}
