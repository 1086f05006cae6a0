//! Phase-space bookkeeping: spatial mesh, per-cell velocity lattices,
//! Maxwellians and discrete moments.
//!
//! Velocity is one-dimensional throughout. Moments are stored in conserved
//! form `(rho, rho*U, E)`; velocity and temperature are derived on demand.

use std::f64::consts::PI;

use crate::error::{Result, SolverError};

/// Relaxation time model for the BGK operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CollisionModel {
    /// Fixed Knudsen number.
    Constant(f64),
    /// `tau = c * T^omega / rho`, with `T = RT / R`.
    TauLaw { c: f64, omega: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasParams {
    /// Gas constant.
    pub r: f64,
    pub collision: CollisionModel,
}

impl GasParams {
    pub fn new(r: f64, collision: CollisionModel) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(SolverError::InvalidParameter(format!("gas constant R = {r}")));
        }
        match collision {
            CollisionModel::Constant(eps) if !(eps > 0.0 && eps.is_finite()) => {
                return Err(SolverError::InvalidParameter(format!("epsilon = {eps}")));
            }
            CollisionModel::TauLaw { c, omega } if !(c > 0.0 && c.is_finite() && omega.is_finite()) => {
                return Err(SolverError::InvalidParameter(format!("tau law C = {c}, omega = {omega}")));
            }
            _ => {}
        }
        Ok(GasParams { r, collision })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    /// Zeroth-order extrapolation: ghost cells copy the boundary cell.
    FreeFlow,
}

/// Uniform cell-centred mesh on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub boundary: Boundary,
}

impl SpatialGrid {
    pub fn new(x_min: f64, x_max: f64, nx: usize, boundary: Boundary) -> Result<Self> {
        if !(x_max > x_min) || nx == 0 {
            return Err(SolverError::InvalidParameter(format!(
                "spatial grid [{x_min}, {x_max}] with {nx} cells"
            )));
        }
        Ok(SpatialGrid { x_min, x_max, nx, boundary })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Centre of cell `i`. Indices outside `0..nx` give the centres of the
    /// virtual cells continuing the mesh.
    pub fn center(&self, i: isize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.nx as isize).map(|i| self.center(i)).collect()
    }

    /// Maps a possibly out-of-range cell index onto the cell whose data it
    /// reads under the boundary condition.
    pub fn source_cell(&self, i: isize) -> usize {
        let n = self.nx as isize;
        match self.boundary {
            Boundary::Periodic => i.rem_euclid(n) as usize,
            Boundary::FreeFlow => i.clamp(0, n - 1) as usize,
        }
    }
}

/// Uniform velocity lattice `v_j = v_min + j*dv`, `j = 0..=nv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityGrid {
    pub v_min: f64,
    pub dv: f64,
    /// Number of intervals; the grid has `nv + 1` nodes.
    pub nv: usize,
}

impl VelocityGrid {
    pub fn new(v_min: f64, dv: f64, nv: usize) -> Result<Self> {
        if !(dv > 0.0 && dv.is_finite() && v_min.is_finite()) || nv < 2 {
            return Err(SolverError::InvalidParameter(format!(
                "velocity grid v_min = {v_min}, dv = {dv}, nv = {nv}"
            )));
        }
        Ok(VelocityGrid { v_min, dv, nv })
    }

    /// Grid with `nv` intervals spanning `[v_min, v_max]` (endpoints are nodes).
    pub fn spanning(v_min: f64, v_max: f64, nv: usize) -> Result<Self> {
        if nv == 0 {
            return Err(SolverError::InvalidParameter("nv = 0".into()));
        }
        Self::new(v_min, (v_max - v_min) / nv as f64, nv)
    }

    pub fn len(&self) -> usize {
        self.nv + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, j: usize) -> f64 {
        self.v_min + j as f64 * self.dv
    }

    pub fn v_max(&self) -> f64 {
        self.node(self.nv)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |j| self.node(j))
    }

    /// Lower edge of the velocity coverage (`v_min - dv/2`).
    pub fn lower_edge(&self) -> f64 {
        self.v_min - 0.5 * self.dv
    }

    pub fn upper_edge(&self) -> f64 {
        self.v_max() + 0.5 * self.dv
    }

    pub fn max_abs_velocity(&self) -> f64 {
        self.v_min.abs().max(self.v_max().abs())
    }

    /// Inclusive index range of velocity cells overlapping `(va, vb)` with
    /// positive measure, or `None`.
    pub fn cells_overlapping(&self, va: f64, vb: f64) -> Option<(usize, usize)> {
        let lo = self.lower_edge();
        let a = ((va - lo) / self.dv).floor();
        let b = ((vb - lo) / self.dv).ceil() - 1.0;
        let a = a.max(0.0);
        let b = b.min(self.nv as f64);
        if b < a {
            None
        } else {
            Some((a as usize, b as usize))
        }
    }
}

/// Conserved moments `(rho, rho*U, E)` of a 1D-velocity distribution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentSet {
    pub rho: f64,
    pub mom: f64,
    pub energy: f64,
}

impl MomentSet {
    pub fn new(rho: f64, mom: f64, energy: f64) -> Self {
        MomentSet { rho, mom, energy }
    }

    /// Moments of a Maxwellian with density, bulk velocity and `RT`.
    pub fn from_primitive(rho: f64, u: f64, rt: f64) -> Self {
        MomentSet { rho, mom: rho * u, energy: 0.5 * rho * (u * u + rt) }
    }

    pub fn velocity(&self) -> f64 {
        self.mom / self.rho
    }

    pub fn rt(&self) -> Result<f64> {
        temperature_from(self)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.rho, self.mom, self.energy]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        MomentSet { rho: a[0], mom: a[1], energy: a[2] }
    }
}

/// One spatial cell's distribution on its own velocity lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct CellDistribution {
    pub grid: VelocityGrid,
    pub values: Vec<f64>,
}

impl CellDistribution {
    pub fn new(grid: VelocityGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SolverError::GridMismatch(format!(
                "{} values on a {}-node grid",
                values.len(),
                grid.len()
            )));
        }
        Ok(CellDistribution { grid, values })
    }

    pub fn moments(&self) -> MomentSet {
        discrete_moments(&self.values, &self.grid)
    }
}

/// The unknown `f` at one time level, one entry per spatial cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    pub cells: Vec<CellDistribution>,
}

impl DistributionField {
    pub fn moments(&self) -> Vec<MomentSet> {
        self.cells.iter().map(CellDistribution::moments).collect()
    }

    /// Domain totals `sum_i (rho, m, E)_i * dx`.
    pub fn totals(&self, dx: f64) -> [f64; 3] {
        let mut t = [0.0; 3];
        for m in self.moments() {
            t[0] += m.rho * dx;
            t[1] += m.mom * dx;
            t[2] += m.energy * dx;
        }
        t
    }

    pub fn min_value(&self) -> f64 {
        self.cells
            .iter()
            .flat_map(|c| c.values.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Point value of the 1D Maxwellian.
#[inline]
pub fn maxwellian_value(rho: f64, u: f64, rt: f64, v: f64) -> f64 {
    let d = v - u;
    rho / (2.0 * PI * rt).sqrt() * (-d * d / (2.0 * rt)).exp()
}

/// Samples the Maxwellian with the given moments at every grid node.
pub fn maxwellian(m: &MomentSet, grid: &VelocityGrid) -> Result<Vec<f64>> {
    if !(m.rho > 0.0) {
        return Err(SolverError::NonPositiveDensity { rho: m.rho });
    }
    let rt = temperature_from(m)?;
    let u = m.velocity();
    Ok(grid.nodes().map(|v| maxwellian_value(m.rho, u, rt, v)).collect())
}

/// Midpoint-rule moments, accumulated in ascending node order.
pub fn discrete_moments(f: &[f64], grid: &VelocityGrid) -> MomentSet {
    debug_assert_eq!(f.len(), grid.len());
    let mut out = MomentSet::default();
    for (j, &fj) in f.iter().enumerate() {
        let v = grid.node(j);
        out.rho += fj;
        out.mom += v * fj;
        out.energy += 0.5 * v * v * fj;
    }
    out.rho *= grid.dv;
    out.mom *= grid.dv;
    out.energy *= grid.dv;
    out
}

/// `RT = (2E - rho U^2) / rho`.
pub fn temperature_from(m: &MomentSet) -> Result<f64> {
    if !(m.rho > 0.0) {
        return Err(SolverError::NonPositiveDensity { rho: m.rho });
    }
    let rt = (2.0 * m.energy - m.mom * m.mom / m.rho) / m.rho;
    if !(rt > 0.0) || !rt.is_finite() {
        return Err(SolverError::NonPositiveTemperature { rt });
    }
    Ok(rt)
}

/// Relaxation time for a cell with the given moments.
pub fn collision_time(m: &MomentSet, gas: &GasParams) -> Result<f64> {
    match gas.collision {
        CollisionModel::Constant(eps) => Ok(eps),
        CollisionModel::TauLaw { c, omega } => {
            let t = temperature_from(m)? / gas.r;
            Ok(c * t.powf(omega) / m.rho)
        }
    }
}
