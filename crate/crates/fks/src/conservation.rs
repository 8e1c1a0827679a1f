//! Discrete conservation correction.
//!
//! The velocity lattice does not conserve mass, momentum and energy exactly
//! under collision evaluation, so after every collision step the distribution
//! is projected back onto the affine set `{ f : C f = U }`, where the rows of
//! `C` are the collision invariants `(1, v, |v|^2)` times the velocity cell
//! volume. The minimal-L2 correction is `f += C^T (C C^T)^{-1} (U - C f)`.

use crate::error::{FksError, Result};
use crate::grid::VelocityGrid;
use crate::moments::{Accumulator, MacroState};

const MAX_ROWS: usize = 5;

/// Precomputed invariant rows and the inverse Gram matrix for one lattice.
#[derive(Debug, Clone)]
pub struct Projector {
    pub dv: usize,
    rows: usize,
    nodes: usize,
    c: Vec<f64>,
    ginv: [[f64; MAX_ROWS]; MAX_ROWS],
    /// One-norm condition estimate of the Gram matrix.
    pub condition: f64,
}

impl Projector {
    pub fn new(grid: &VelocityGrid) -> Result<Self> {
        let dv = grid.dv;
        let rows = dv + 2;
        let nodes = grid.total_nodes();
        let dvol = grid.cell_volume();
        let table = grid.node_table();

        let mut c = vec![0.0; rows * nodes];
        for k in 0..nodes {
            c[k] = dvol;
            for a in 0..dv {
                c[(1 + a) * nodes + k] = table[k][a] * dvol;
            }
            c[(rows - 1) * nodes + k] = table[k][3] * dvol;
        }

        let mut g = [[0.0f64; MAX_ROWS]; MAX_ROWS];
        for r in 0..rows {
            for s in 0..rows {
                let mut acc = Accumulator::new();
                for k in 0..nodes {
                    acc.add(c[r * nodes + k] * c[s * nodes + k]);
                }
                g[r][s] = acc.value();
            }
        }
        let ginv = invert(&g, rows).ok_or_else(|| {
            FksError::Internal("conservation Gram matrix is singular".into())
        })?;
        let condition = one_norm(&g, rows) * one_norm(&ginv, rows);
        if !condition.is_finite() || condition > 1e12 {
            return Err(FksError::Internal(format!(
                "conservation Gram matrix is ill-conditioned ({condition:.3e})"
            )));
        }
        Ok(Self { dv, rows, nodes, c, ginv, condition })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Invariant moments `C f`, ordered `(rho, momentum.., energy)`.
    pub fn moments(&self, f: &[f64]) -> [f64; MAX_ROWS] {
        debug_assert_eq!(f.len(), self.nodes);
        let mut out = [0.0; MAX_ROWS];
        for r in 0..self.rows {
            let row = &self.c[r * self.nodes..(r + 1) * self.nodes];
            let mut acc = Accumulator::new();
            for (fk, ck) in f.iter().zip(row.iter()) {
                acc.add(fk * ck);
            }
            out[r] = acc.value();
        }
        out
    }

    pub fn state_to_vector(&self, st: &MacroState) -> [f64; MAX_ROWS] {
        let mut v = [0.0; MAX_ROWS];
        v[0] = st.rho;
        for a in 0..self.dv {
            v[1 + a] = st.momentum[a];
        }
        v[self.rows - 1] = st.energy;
        v
    }

    pub fn vector_to_state(&self, v: &[f64; MAX_ROWS]) -> MacroState {
        let mut momentum = [0.0; 3];
        for a in 0..self.dv {
            momentum[a] = v[1 + a];
        }
        MacroState { rho: v[0], momentum, energy: v[self.rows - 1] }
    }

    /// Minimal correction moving `f` onto the moment target.
    pub fn project(&self, f: &mut [f64], target: &MacroState) {
        let want = self.state_to_vector(target);
        let have = self.moments(f);
        let mut defect = [0.0; MAX_ROWS];
        for r in 0..self.rows {
            defect[r] = want[r] - have[r];
        }
        self.apply_correction(f, &defect);
    }

    /// Remove every invariant moment from `q` (used on collision outputs).
    pub fn project_to_zero(&self, q: &mut [f64]) {
        let have = self.moments(q);
        let mut defect = [0.0; MAX_ROWS];
        for r in 0..self.rows {
            defect[r] = -have[r];
        }
        self.apply_correction(q, &defect);
    }

    fn apply_correction(&self, f: &mut [f64], defect: &[f64; MAX_ROWS]) {
        let mut lambda = [0.0; MAX_ROWS];
        for r in 0..self.rows {
            let mut s = 0.0;
            for t in 0..self.rows {
                s += self.ginv[r][t] * defect[t];
            }
            lambda[r] = s;
        }
        for r in 0..self.rows {
            let lr = lambda[r];
            if lr == 0.0 {
                continue;
            }
            let row = &self.c[r * self.nodes..(r + 1) * self.nodes];
            for (fk, ck) in f.iter_mut().zip(row.iter()) {
                *fk += lr * ck;
            }
        }
    }

    /// Largest entry of `C P - I`; should sit at rounding level.
    pub fn identity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for s in 0..self.rows {
            // Column s of P = C^T Ginv is sum_t C[t][k] ginv[t][s].
            let mut col = vec![0.0; self.nodes];
            for t in 0..self.rows {
                let row = &self.c[t * self.nodes..(t + 1) * self.nodes];
                let w = self.ginv[t][s];
                for (ck, out) in row.iter().zip(col.iter_mut()) {
                    *out += w * ck;
                }
            }
            let got = self.moments(&col);
            for r in 0..self.rows {
                let want = if r == s { 1.0 } else { 0.0 };
                worst = worst.max((got[r] - want).abs());
            }
        }
        worst
    }
}

fn one_norm(a: &[[f64; MAX_ROWS]; MAX_ROWS], r: usize) -> f64 {
    let mut best = 0.0f64;
    for j in 0..r {
        let mut col = 0.0;
        for i in 0..r {
            col += a[i][j].abs();
        }
        best = best.max(col);
    }
    best
}

/// Gauss-Jordan inverse with partial pivoting for tiny symmetric systems.
fn invert(a: &[[f64; MAX_ROWS]; MAX_ROWS], r: usize) -> Option<[[f64; MAX_ROWS]; MAX_ROWS]> {
    let mut m = [[0.0f64; 2 * MAX_ROWS]; MAX_ROWS];
    for i in 0..r {
        for j in 0..r {
            m[i][j] = a[i][j];
        }
        m[i][r + i] = 1.0;
    }
    for col in 0..r {
        let mut pivot = col;
        for row in col + 1..r {
            if m[row][col].abs() > m[pivot][col].abs() {
                pivot = row;
            }
        }
        if m[pivot][col] == 0.0 {
            return None;
        }
        m.swap(col, pivot);
        let inv = 1.0 / m[col][col];
        for j in 0..2 * r {
            m[col][j] *= inv;
        }
        for row in 0..r {
            if row == col {
                continue;
            }
            let factor = m[row][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..2 * r {
                m[row][j] -= factor * m[col][j];
            }
        }
    }
    let mut out = [[0.0f64; MAX_ROWS]; MAX_ROWS];
    for i in 0..r {
        for j in 0..r {
            out[i][j] = m[i][r + j];
        }
    }
    Some(out)
}
