//! Field output and comparison: plain-text macro dumps, binary distribution
//! dumps with a fixed 64-byte descriptor, relative-error reports, and the
//! per-step diagnostics CSV.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::cases::exact_bkw_value;
use crate::error::{FksError, Result};
use crate::grid::VelocityGrid;
use crate::moments::{compute_moments, heat_flux, Accumulator};
use crate::solver::{RunDiagnostics, Solver};

pub const BINARY_MAGIC: &[u8; 4] = b"FKSB";
pub const BINARY_VERSION: u16 = 1;

/// Descriptor of a binary distribution dump; exactly 64 bytes on disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryHeader {
    pub version: u16,
    pub dv: u16,
    /// Spatial cells per axis, then velocity nodes per axis.
    pub dims: [u32; 6],
    pub t: f64,
    pub bound: f64,
    pub step: u64,
}

impl BinaryHeader {
    pub fn cells(&self) -> usize {
        (self.dims[0] * self.dims[1] * self.dims[2]) as usize
    }

    pub fn nodes(&self) -> usize {
        (self.dims[3] * self.dims[4] * self.dims[5]) as usize
    }

    fn to_bytes(self) -> [u8; 64] {
        let mut b = [0u8; 64];
        b[..4].copy_from_slice(BINARY_MAGIC);
        b[4..6].copy_from_slice(&self.version.to_le_bytes());
        b[6..8].copy_from_slice(&self.dv.to_le_bytes());
        for (i, d) in self.dims.iter().enumerate() {
            b[8 + 4 * i..12 + 4 * i].copy_from_slice(&d.to_le_bytes());
        }
        b[32..40].copy_from_slice(&self.t.to_le_bytes());
        b[40..48].copy_from_slice(&self.bound.to_le_bytes());
        b[48..56].copy_from_slice(&self.step.to_le_bytes());
        b
    }

    fn from_bytes(b: &[u8; 64]) -> Result<Self> {
        if &b[..4] != BINARY_MAGIC {
            return Err(FksError::Format("not a binary distribution dump".into()));
        }
        let version = u16::from_le_bytes([b[4], b[5]]);
        if version != BINARY_VERSION {
            return Err(FksError::Format(format!("unsupported dump version {version}")));
        }
        let mut dims = [0u32; 6];
        for (i, d) in dims.iter_mut().enumerate() {
            *d = u32::from_le_bytes(b[8 + 4 * i..12 + 4 * i].try_into().unwrap());
        }
        Ok(BinaryHeader {
            version,
            dv: u16::from_le_bytes([b[6], b[7]]),
            dims,
            t: f64::from_le_bytes(b[32..40].try_into().unwrap()),
            bound: f64::from_le_bytes(b[40..48].try_into().unwrap()),
            step: u64::from_le_bytes(b[48..56].try_into().unwrap()),
        })
    }
}

fn header_for(solver: &Solver, step: u64) -> BinaryHeader {
    let n = solver.vgrid.n as u32;
    let mut dims = [1u32; 6];
    for a in 0..3 {
        dims[a] = solver.sgrid.m[a] as u32;
    }
    for a in 0..solver.vgrid.dv {
        dims[3 + a] = n;
    }
    BinaryHeader {
        version: BINARY_VERSION,
        dv: solver.vgrid.dv as u16,
        dims,
        t: solver.state.t,
        bound: solver.vgrid.bound,
        step,
    }
}

/// Write the full distribution, cell-major, little-endian, solid cells
/// zeroed. Cells stream through a bounded buffer, so arbitrarily large
/// fields dump in constant memory.
pub fn write_binary_dump(path: &Path, solver: &Solver, step: u64) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&header_for(solver, step).to_bytes())?;
    let nodes = solver.vgrid.total_nodes();
    let cells = solver.sgrid.total_cells();
    let block = (262_144 / nodes).clamp(1, cells);
    let mut buf = vec![0.0f64; block * nodes];
    let mut lo = 0;
    while lo < cells {
        let count = block.min(cells - lo);
        let slice = &mut buf[..count * nodes];
        solver.state.sample_into(lo, count, &solver.sgrid, slice);
        for i in 0..count {
            if solver.sgrid.is_solid(lo + i) {
                slice[i * nodes..(i + 1) * nodes].fill(0.0);
            }
        }
        for v in slice.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        lo += count;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary_dump(path: &Path) -> Result<(BinaryHeader, Vec<f64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; 64];
    r.read_exact(&mut head)?;
    let header = BinaryHeader::from_bytes(&head)?;
    let len = header.cells() * header.nodes();
    let mut payload = vec![0.0f64; len];
    let mut chunk = [0u8; 8];
    for v in payload.iter_mut() {
        r.read_exact(&mut chunk)?;
        *v = f64::from_le_bytes(chunk);
    }
    if r.read(&mut chunk)? != 0 {
        return Err(FksError::Format("dump payload longer than its descriptor".into()));
    }
    Ok((header, payload))
}

/// One fluid-cell record of a text dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextRow {
    pub idx: [usize; 3],
    pub rho: f64,
    pub u: [f64; 3],
    pub temp: f64,
    pub q: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextHeader {
    pub case: String,
    pub t: f64,
    pub step: u64,
    pub dim: usize,
    pub m: [usize; 3],
    pub dv: usize,
    pub n: usize,
    pub bound: f64,
}

/// Write per-cell macro fields (one row per fluid cell) with 17 significant
/// digits, enough to reconstruct every value exactly.
pub fn write_text_dump(path: &Path, solver: &Solver, case: &str, step: u64) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "# case={case} t={:.16e} step={step} dim={} m={},{},{} dv={} n={} bound={:.16e}",
        solver.state.t,
        solver.sgrid.dim,
        solver.sgrid.m[0],
        solver.sgrid.m[1],
        solver.sgrid.m[2],
        solver.vgrid.dv,
        solver.vgrid.n,
        solver.vgrid.bound,
    )?;
    writeln!(w, "# ix iy iz rho ux uy uz temp qx qy qz")?;
    let nodes = solver.vgrid.total_nodes();
    let cells = solver.sgrid.total_cells();
    let dvol = solver.vgrid.cell_volume();
    let table = solver.vgrid.node_table();
    let block = (262_144 / nodes).clamp(1, cells);
    let mut buf = vec![0.0f64; block * nodes];
    let mut lo = 0;
    while lo < cells {
        let count = block.min(cells - lo);
        let slice = &mut buf[..count * nodes];
        solver.state.sample_into(lo, count, &solver.sgrid, slice);
        for i in 0..count {
            let j = lo + i;
            if solver.sgrid.is_solid(j) {
                continue;
            }
            let f = &slice[i * nodes..(i + 1) * nodes];
            let m = compute_moments(f, &table, dvol);
            let u = m.velocity();
            let q = heat_flux(f, &table, u, dvol);
            let idx = solver.sgrid.decompose(j);
            writeln!(
                w,
                "{} {} {} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
                idx[0],
                idx[1],
                idx[2],
                m.rho,
                u[0],
                u[1],
                u[2],
                m.temperature(solver.vgrid.dv),
                q[0],
                q[1],
                q[2],
            )?;
        }
        lo += count;
    }
    w.flush()?;
    Ok(())
}

pub fn read_text_dump(path: &Path) -> Result<(TextHeader, Vec<TextRow>)> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let head = lines
        .next()
        .ok_or_else(|| FksError::Format("empty dump".into()))??;
    let header = parse_text_header(&head)?;
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() != 11 {
            return Err(FksError::Format(format!("expected 11 columns, got {}", vals.len())));
        }
        let idx = |i: usize| -> Result<usize> {
            vals[i]
                .parse()
                .map_err(|_| FksError::Format(format!("bad cell index `{}`", vals[i])))
        };
        let num = |i: usize| -> Result<f64> {
            vals[i]
                .parse()
                .map_err(|_| FksError::Format(format!("bad number `{}`", vals[i])))
        };
        rows.push(TextRow {
            idx: [idx(0)?, idx(1)?, idx(2)?],
            rho: num(3)?,
            u: [num(4)?, num(5)?, num(6)?],
            temp: num(7)?,
            q: [num(8)?, num(9)?, num(10)?],
        });
    }
    Ok((header, rows))
}

fn parse_text_header(line: &str) -> Result<TextHeader> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| FksError::Format("missing dump header".into()))?;
    let mut case = String::new();
    let mut t = f64::NAN;
    let mut step = 0u64;
    let mut dim = usize::MAX;
    let mut m = [0usize; 3];
    let mut dv = 0usize;
    let mut n = 0usize;
    let mut bound = f64::NAN;
    for token in body.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| FksError::Format(format!("bad header token `{token}`")))?;
        let bad = || FksError::Format(format!("bad header value `{value}` for `{key}`"));
        match key {
            "case" => case = value.to_string(),
            "t" => t = value.parse().map_err(|_| bad())?,
            "step" => step = value.parse().map_err(|_| bad())?,
            "dim" => dim = value.parse().map_err(|_| bad())?,
            "m" => {
                let parts: Vec<&str> = value.split(',').collect();
                if parts.len() != 3 {
                    return Err(bad());
                }
                for (a, p) in parts.iter().enumerate() {
                    m[a] = p.parse().map_err(|_| bad())?;
                }
            }
            "dv" => dv = value.parse().map_err(|_| bad())?,
            "n" => n = value.parse().map_err(|_| bad())?,
            "bound" => bound = value.parse().map_err(|_| bad())?,
            _ => return Err(FksError::Format(format!("unknown header key `{key}`"))),
        }
    }
    if case.is_empty() || dim == usize::MAX || !t.is_finite() {
        return Err(FksError::Format("incomplete dump header".into()));
    }
    Ok(TextHeader { case, t, step, dim, m, dv, n, bound })
}

/// Relative L1 / L2 / Linf norms of `numeric - exact`, normalized by the
/// corresponding norms of `exact`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

pub fn relative_error_report(numeric: &[f64], exact: &[f64]) -> ErrorReport {
    assert_eq!(numeric.len(), exact.len());
    let mut d1 = Accumulator::new();
    let mut d2 = Accumulator::new();
    let mut dinf = 0.0f64;
    let mut e1 = Accumulator::new();
    let mut e2 = Accumulator::new();
    let mut einf = 0.0f64;
    for (a, b) in numeric.iter().zip(exact.iter()) {
        let d = a - b;
        d1.add(d.abs());
        d2.add(d * d);
        dinf = dinf.max(d.abs());
        e1.add(b.abs());
        e2.add(b * b);
        einf = einf.max(b.abs());
    }
    ErrorReport {
        l1: d1.value() / e1.value(),
        l2: (d2.value() / e2.value()).sqrt(),
        linf: dinf / einf,
    }
}

/// Compare two dump files of either format; the second operand is the
/// reference the norms are normalized by.
pub fn diff_files(a: &Path, b: &Path) -> Result<ErrorReport> {
    let mut magic = [0u8; 4];
    let n = File::open(a)?.read(&mut magic)?;
    if n == 4 && &magic == BINARY_MAGIC {
        let (ha, fa) = read_binary_dump(a)?;
        let (hb, fb) = read_binary_dump(b)?;
        if ha.dims != hb.dims || ha.dv != hb.dv {
            return Err(FksError::Format(format!(
                "dump shapes differ: {:?} vs {:?}",
                ha.dims, hb.dims
            )));
        }
        Ok(relative_error_report(&fa, &fb))
    } else {
        let (ha, ra) = read_text_dump(a)?;
        let (hb, rb) = read_text_dump(b)?;
        if ha.m != hb.m || ra.len() != rb.len() {
            return Err(FksError::Format("dump shapes differ".into()));
        }
        let flat = |rows: &[TextRow]| -> Vec<f64> {
            rows.iter()
                .flat_map(|r| {
                    [r.rho, r.u[0], r.u[1], r.u[2], r.temp, r.q[0], r.q[1], r.q[2]]
                })
                .collect()
        };
        Ok(relative_error_report(&flat(&ra), &flat(&rb)))
    }
}

/// Error of every homogeneous relaxation dump in `dir` against the exact
/// relaxing solution at the dump time, sorted by time.
pub fn bkw_report(dir: &Path) -> Result<Vec<(f64, ErrorReport)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().map_or(true, |e| e != "bin") {
            continue;
        }
        let (header, f) = read_binary_dump(&path)?;
        if header.dv != 2 || header.cells() != 1 {
            return Err(FksError::Format(format!(
                "{} is not a homogeneous two-dimensional dump",
                path.display()
            )));
        }
        let vgrid = VelocityGrid::new(2, header.dims[3] as usize, header.bound)?;
        let exact: Vec<f64> = (0..vgrid.total_nodes())
            .map(|k| {
                let v = vgrid.node(k);
                exact_bkw_value(v[0] * v[0] + v[1] * v[1], header.t)
            })
            .collect();
        out.push((header.t, relative_error_report(&f, &exact)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Per-step conservation audit trail.
pub fn write_diagnostics_csv(path: &Path, diag: &RunDiagnostics) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "step,t,dt,mass,momentum_x,momentum_y,momentum_z,energy,rho_max,exchange")?;
    for r in &diag.rows {
        writeln!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.step, r.t, r.dt, r.mass, r.momentum[0], r.momentum[1], r.momentum[2], r.energy,
            r.rho_max, r.exchange,
        )?;
    }
    w.flush()?;
    Ok(())
}
