//! Phase-space discretization: cell-centered velocity lattices and spatial meshes
//! with optional solid obstacles.
//!
//! Velocity nodes are built pairwise so that `v[n-1-k] == -v[k]` holds bitwise;
//! several downstream invariants (odd-moment cancellation, mirror reflection)
//! rely on that exact symmetry rather than on floating-point luck.

use crate::error::{FksError, Result};

/// Uniform symmetric velocity lattice on `[-bound, bound]^dv`.
///
/// Node `i` on each axis sits at the cell center `-bound + (i + 1/2) * delta`
/// with `delta = 2 * bound / n`. Multi-dimensional node indices linearize
/// x-fastest: `k = kx + n * (ky + n * kz)`.
#[derive(Debug, Clone)]
pub struct VelocityGrid {
    pub dv: usize,
    pub n: usize,
    pub bound: f64,
    pub delta: f64,
    nodes_axis: Vec<f64>,
}

impl VelocityGrid {
    pub fn new(dv: usize, n: usize, bound: f64) -> Result<Self> {
        if dv != 2 && dv != 3 {
            return Err(FksError::Grid(format!("velocity dimension must be 2 or 3, got {dv}")));
        }
        if n < 4 || n % 2 != 0 {
            return Err(FksError::Grid(format!("nodes per axis must be even and >= 4, got {n}")));
        }
        if !(bound > 0.0) || !bound.is_finite() {
            return Err(FksError::Grid(format!("velocity bound must be positive, got {bound}")));
        }
        let delta = 2.0 * bound / n as f64;
        let mut nodes_axis = vec![0.0; n];
        for i in n / 2..n {
            let val = ((i - n / 2) as f64 + 0.5) * delta;
            nodes_axis[i] = val;
            nodes_axis[n - 1 - i] = -val;
        }
        Ok(Self { dv, n, bound, delta, nodes_axis })
    }

    /// Nodes along one axis, ascending.
    pub fn axis(&self) -> &[f64] {
        &self.nodes_axis
    }

    /// Total number of lattice nodes, `n^dv`.
    pub fn total_nodes(&self) -> usize {
        self.n.pow(self.dv as u32)
    }

    /// Volume of one velocity cell, `delta^dv`.
    pub fn cell_volume(&self) -> f64 {
        self.delta.powi(self.dv as i32)
    }

    /// Largest node speed along any single axis.
    pub fn max_axis_speed(&self) -> f64 {
        self.bound - 0.5 * self.delta
    }

    /// Per-axis indices of node `k`; the z entry is 0 when `dv == 2`.
    pub fn decompose(&self, k: usize) -> [usize; 3] {
        let kx = k % self.n;
        let rest = k / self.n;
        if self.dv == 2 {
            [kx, rest, 0]
        } else {
            [kx, rest % self.n, rest / self.n]
        }
    }

    pub fn index(&self, ka: [usize; 3]) -> usize {
        ka[0] + self.n * (ka[1] + self.n * ka[2])
    }

    /// Velocity vector of node `k`; unused components are exactly zero.
    pub fn node(&self, k: usize) -> [f64; 3] {
        let ka = self.decompose(k);
        let mut v = [0.0; 3];
        for a in 0..self.dv {
            v[a] = self.nodes_axis[ka[a]];
        }
        v
    }

    /// Node with the velocity component along `axis` negated.
    /// An involution thanks to the pairwise-exact lattice construction.
    pub fn mirror_index(&self, k: usize, axis: usize) -> usize {
        debug_assert!(axis < self.dv);
        let mut ka = self.decompose(k);
        ka[axis] = self.n - 1 - ka[axis];
        self.index(ka)
    }

    /// Per-node `[vx, vy, vz, |v|^2]`, used by moment and equilibrium kernels.
    pub fn node_table(&self) -> Vec<[f64; 4]> {
        let mut table = Vec::with_capacity(self.total_nodes());
        for k in 0..self.total_nodes() {
            let v = self.node(k);
            table.push([v[0], v[1], v[2], v[0] * v[0] + v[1] * v[1] + v[2] * v[2]]);
        }
        table
    }
}

/// Axis-aligned solid obstacle, in physical coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolidBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

/// Uniform spatial mesh with x-fastest cell linearization
/// `j = jx + m[0] * (jy + m[1] * jz)`. Axes at or beyond `dim` collapse to a
/// single cell. Solid obstacles are rasterized by cell center and must stay
/// strictly interior so every solid cell keeps fluid neighbours to mirror from.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    pub dim: usize,
    pub m: [usize; 3],
    pub origin: [f64; 3],
    pub extent: [f64; 3],
    pub delta: [f64; 3],
    pub solids: Vec<SolidBox>,
    solid_mask: Vec<bool>,
    fluid_count: usize,
}

impl SpatialGrid {
    /// Space-homogeneous mesh: a single cell, no transport geometry.
    pub fn homogeneous() -> Self {
        Self {
            dim: 0,
            m: [1, 1, 1],
            origin: [0.0; 3],
            extent: [0.0; 3],
            delta: [1.0; 3],
            solids: Vec::new(),
            solid_mask: vec![false],
            fluid_count: 1,
        }
    }

    pub fn new(
        dim: usize,
        m: [usize; 3],
        origin: [f64; 3],
        extent: [f64; 3],
        solids: Vec<SolidBox>,
    ) -> Result<Self> {
        if dim > 3 {
            return Err(FksError::Grid(format!("spatial dimension must be <= 3, got {dim}")));
        }
        let mut mm = [1usize; 3];
        let mut delta = [1.0f64; 3];
        for a in 0..dim {
            if m[a] < 1 {
                return Err(FksError::Grid(format!("axis {a} has no cells")));
            }
            if !(extent[a] > 0.0) || !extent[a].is_finite() {
                return Err(FksError::Grid(format!("axis {a} extent must be positive")));
            }
            mm[a] = m[a];
            delta[a] = extent[a] / m[a] as f64;
        }
        for a in dim..3 {
            if m[a] > 1 {
                return Err(FksError::Grid(format!(
                    "axis {a} exceeds spatial dimension {dim}"
                )));
            }
        }
        let total = mm[0] * mm[1] * mm[2];
        let mut grid = Self {
            dim,
            m: mm,
            origin,
            extent,
            delta,
            solids,
            solid_mask: vec![false; total],
            fluid_count: total,
        };
        grid.rasterize_solids()?;
        Ok(grid)
    }

    fn rasterize_solids(&mut self) -> Result<()> {
        let solids = self.solids.clone();
        for (b, solid) in solids.iter().enumerate() {
            let mut hit = 0usize;
            for j in 0..self.total_cells() {
                let c = self.cell_center(j);
                let mut inside = true;
                for a in 0..self.dim {
                    if !(c[a] >= solid.lo[a] && c[a] < solid.hi[a]) {
                        inside = false;
                        break;
                    }
                }
                if self.dim == 0 {
                    inside = false;
                }
                if inside {
                    let idx = self.decompose(j);
                    for a in 0..self.dim {
                        if idx[a] == 0 || idx[a] + 1 == self.m[a] {
                            return Err(FksError::Grid(format!(
                                "solid box {b} touches the domain boundary on axis {a}"
                            )));
                        }
                    }
                    if !self.solid_mask[j] {
                        self.solid_mask[j] = true;
                        self.fluid_count -= 1;
                    }
                    hit += 1;
                }
            }
            if hit == 0 {
                return Err(FksError::Grid(format!("solid box {b} covers no cell centers")));
            }
        }
        Ok(())
    }

    pub fn total_cells(&self) -> usize {
        self.m[0] * self.m[1] * self.m[2]
    }

    pub fn fluid_cells(&self) -> usize {
        self.fluid_count
    }

    pub fn decompose(&self, j: usize) -> [usize; 3] {
        let jx = j % self.m[0];
        let rest = j / self.m[0];
        [jx, rest % self.m[1], rest / self.m[1]]
    }

    pub fn index(&self, ja: [usize; 3]) -> usize {
        ja[0] + self.m[0] * (ja[1] + self.m[1] * ja[2])
    }

    pub fn cell_center(&self, j: usize) -> [f64; 3] {
        let ja = self.decompose(j);
        let mut c = [0.0; 3];
        for a in 0..self.dim {
            c[a] = self.origin[a] + (ja[a] as f64 + 0.5) * self.delta[a];
        }
        c
    }

    pub fn is_solid(&self, j: usize) -> bool {
        self.solid_mask[j]
    }

    /// Volume of one spatial cell over the active axes.
    pub fn cell_volume(&self) -> f64 {
        let mut v = 1.0;
        for a in 0..self.dim {
            v *= self.delta[a];
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn velocity_nodes_are_exactly_antisymmetric() {
        for n in [4, 6, 8, 16, 32] {
            let g = VelocityGrid::new(2, n, 7.3).unwrap();
            for i in 0..n {
                assert_eq!(g.axis()[i].to_bits(), (-g.axis()[n - 1 - i]).to_bits());
            }
            for i in 1..n {
                assert!(g.axis()[i] > g.axis()[i - 1]);
            }
        }
    }

    #[test]
    fn velocity_node_spacing_and_bound() {
        let g = VelocityGrid::new(3, 8, 8.0).unwrap();
        assert_eq!(g.delta, 2.0);
        assert_eq!(g.axis()[0], -7.0);
        assert_eq!(g.axis()[7], 7.0);
        assert_eq!(g.max_axis_speed(), 7.0);
        assert_eq!(g.total_nodes(), 512);
        assert_eq!(g.cell_volume(), 8.0);
    }

    #[test]
    fn velocity_index_round_trip() {
        let g = VelocityGrid::new(3, 6, 3.0).unwrap();
        for k in 0..g.total_nodes() {
            assert_eq!(g.index(g.decompose(k)), k);
        }
        let g2 = VelocityGrid::new(2, 6, 3.0).unwrap();
        for k in 0..g2.total_nodes() {
            assert_eq!(g2.index(g2.decompose(k)), k);
        }
    }

    #[test]
    fn mirror_is_involution_and_negates_component() {
        let g = VelocityGrid::new(3, 8, 5.0).unwrap();
        for k in 0..g.total_nodes() {
            for a in 0..3 {
                let km = g.mirror_index(k, a);
                assert_eq!(g.mirror_index(km, a), k);
                let v = g.node(k);
                let vm = g.node(km);
                assert_eq!(vm[a].to_bits(), (-v[a]).to_bits());
                for b in 0..3 {
                    if b != a {
                        assert_eq!(vm[b].to_bits(), v[b].to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_velocity_parameters() {
        assert!(VelocityGrid::new(1, 8, 1.0).is_err());
        assert!(VelocityGrid::new(2, 7, 1.0).is_err());
        assert!(VelocityGrid::new(2, 2, 1.0).is_err());
        assert!(VelocityGrid::new(2, 8, 0.0).is_err());
    }

    #[test]
    fn spatial_round_trip_and_centers() {
        let g = SpatialGrid::new(2, [4, 3, 1], [0.0, 1.0, 0.0], [2.0, 3.0, 0.0], vec![]).unwrap();
        assert_eq!(g.total_cells(), 12);
        assert_eq!(g.delta[0], 0.5);
        assert_eq!(g.delta[1], 1.0);
        for j in 0..g.total_cells() {
            assert_eq!(g.index(g.decompose(j)), j);
        }
        let c = g.cell_center(g.index([2, 1, 0]));
        assert_eq!(c[0], 1.25);
        assert_eq!(c[1], 2.5);
        assert_eq!(c[2], 0.0);
    }

    #[test]
    fn solid_rasterization_by_cell_center() {
        let solid = SolidBox { lo: [0.25, 0.25, 0.0], hi: [0.75, 0.5, 0.0] };
        let g = SpatialGrid::new(2, [8, 8, 1], [0.0; 3], [1.0, 1.0, 0.0], vec![solid]).unwrap();
        let mut count = 0;
        for j in 0..g.total_cells() {
            if g.is_solid(j) {
                count += 1;
                let c = g.cell_center(j);
                assert!(c[0] >= 0.25 && c[0] < 0.75);
                assert!(c[1] >= 0.25 && c[1] < 0.5);
            }
        }
        assert_eq!(count, 4 * 2);
        assert_eq!(g.fluid_cells(), 64 - 8);
    }

    #[test]
    fn solid_touching_boundary_is_rejected() {
        let solid = SolidBox { lo: [0.0, 0.25, 0.0], hi: [0.5, 0.5, 0.0] };
        let err = SpatialGrid::new(2, [8, 8, 1], [0.0; 3], [1.0, 1.0, 0.0], vec![solid]);
        assert!(err.is_err());
        let empty = SolidBox { lo: [0.26, 0.26, 0.0], hi: [0.27, 0.27, 0.0] };
        assert!(SpatialGrid::new(2, [4, 4, 1], [0.0; 3], [1.0, 1.0, 0.0], vec![empty]).is_err());
    }

    #[test]
    fn homogeneous_grid_is_single_fluid_cell() {
        let g = SpatialGrid::homogeneous();
        assert_eq!(g.total_cells(), 1);
        assert_eq!(g.fluid_cells(), 1);
        assert!(!g.is_solid(0));
        assert_eq!(g.cell_volume(), 1.0);
    }
}
