//! Piecewise-linear phase-space reconstruction of `f`, `v f` and `v² f`,
//! plus the conservative shift evaluation used on global velocity grids.
//!
//! Each phase cell `(i, k)` carries three polynomials
//! `value + sx (x - x_i) + sv (v - v_k)` whose cell averages are exactly
//! `f_ik`, `v_k f_ik` and `v_k² f_ik`. Slopes come from the modified minmod
//! limiter; the `x` slopes need neighbour values at `v_k`, obtained by
//! averaging the neighbour's `v`-reconstruction over a window of the
//! neighbour's own width centred at `v_k`.

use rayon::prelude::*;

use crate::error::{Result, SolverError};
use crate::grid::{DistributionField, SpatialGrid, VelocityGrid};

/// Limiter parameter used throughout unless configured otherwise.
pub const DEFAULT_THETA: f64 = 1.5;

/// Argument of smaller magnitude (`a` on ties).
#[inline]
pub fn minmod(a: f64, b: f64) -> f64 {
    if a.abs() <= b.abs() {
        a
    } else {
        b
    }
}

/// `MM(MM(θ d⁻, θ d⁺), d_c)`.
#[inline]
pub fn modified_minmod(theta: f64, d_minus: f64, d_plus: f64, d_central: f64) -> f64 {
    minmod(minmod(theta * d_minus, theta * d_plus), d_central)
}

/// One linear polynomial about a phase-cell centre.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Poly {
    pub value: f64,
    /// Slope in `x`.
    pub sx: f64,
    /// Slope in `v`.
    pub sv: f64,
}

/// Reconstruction of one spatial cell: for each node the polynomials of
/// `f`, `v f`, `v² f` in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPolys {
    pub grid: VelocityGrid,
    pub coeffs: Vec<[Poly; 3]>,
}

/// Read-only view of a (possibly virtual) cell of a [`PolyField`].
pub struct CellView<'a> {
    pub polys: &'a CellPolys,
    pub x_center: f64,
    /// Free-flow ghost: the boundary cell's data, constant in `x`.
    pub ghost: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyField {
    pub space: SpatialGrid,
    pub cells: Vec<CellPolys>,
}

impl PolyField {
    /// Cell `i`, which may lie outside the mesh. Periodic indices wrap and
    /// keep the virtual cell centre; free-flow indices read the boundary
    /// cell with its `x` slope dropped.
    pub fn cell(&self, i: isize) -> CellView<'_> {
        let n = self.space.nx as isize;
        let src = self.space.source_cell(i);
        let ghost = (i < 0 || i >= n) && matches!(self.space.boundary, crate::grid::Boundary::FreeFlow);
        CellView { polys: &self.cells[src], x_center: self.space.center(i), ghost }
    }
}

/// `v`-direction data of one cell: values and limited `v` slopes for the
/// three moments.
struct VSlopes {
    grid: VelocityGrid,
    value: Vec<[f64; 3]>,
    sv: Vec<[f64; 3]>,
}

fn v_slopes(grid: &VelocityGrid, f: &[f64], theta: f64) -> VSlopes {
    let n = f.len();
    let value: Vec<[f64; 3]> = (0..n)
        .map(|k| {
            let v = grid.node(k);
            [f[k], v * f[k], v * v * f[k]]
        })
        .collect();
    let dv = grid.dv;
    let at = |k: isize, q: usize| -> f64 {
        if k < 0 || k >= n as isize {
            0.0
        } else {
            value[k as usize][q]
        }
    };
    let sv = (0..n as isize)
        .map(|k| {
            let mut s = [0.0; 3];
            for (q, slot) in s.iter_mut().enumerate() {
                let (am, a0, ap) = (at(k - 1, q), at(k, q), at(k + 1, q));
                *slot = modified_minmod(theta, (a0 - am) / dv, (ap - a0) / dv, (ap - am) / (2.0 * dv));
            }
            s
        })
        .collect();
    VSlopes { grid: *grid, value, sv }
}

/// Average of a cell's piecewise-linear `v` reconstruction of moment `q`
/// over `[vc - w/2, vc + w/2]`; zero outside its coverage.
fn window_average(cell: &VSlopes, q: usize, vc: f64, w: f64) -> f64 {
    let (lo, hi) = (vc - 0.5 * w, vc + 0.5 * w);
    let Some((m0, m1)) = cell.grid.cells_overlapping(lo, hi) else {
        return 0.0;
    };
    let dv = cell.grid.dv;
    let mut acc = 0.0;
    for m in m0..=m1 {
        let vm = cell.grid.node(m);
        let a = lo.max(vm - 0.5 * dv);
        let b = hi.min(vm + 0.5 * dv);
        if b <= a {
            continue;
        }
        let (da, db) = (a - vm, b - vm);
        acc += cell.value[m][q] * (b - a) + cell.sv[m][q] * 0.5 * (db * db - da * da);
    }
    acc / w
}

/// Neighbour value of moment `q` at node velocity `vc`.
fn cross_value(neigh: &VSlopes, q: usize, vc: f64) -> f64 {
    window_average(neigh, q, vc, neigh.grid.dv)
}

/// Builds the limited piecewise-linear reconstruction of a whole field.
pub fn build_poly_field(field: &DistributionField, space: &SpatialGrid, theta: f64) -> Result<PolyField> {
    if field.cells.len() != space.nx {
        return Err(SolverError::GridMismatch(format!(
            "{} cells in field, {} in spatial grid",
            field.cells.len(),
            space.nx
        )));
    }
    for (i, c) in field.cells.iter().enumerate() {
        if c.values.len() != c.grid.len() {
            return Err(SolverError::GridMismatch(format!(
                "cell {i}: {} values on a {}-node grid",
                c.values.len(),
                c.grid.len()
            )));
        }
    }
    let dx = space.dx();
    let vdata: Vec<VSlopes> = field
        .cells
        .par_iter()
        .map(|c| v_slopes(&c.grid, &c.values, theta))
        .collect();

    let cells = (0..space.nx)
        .into_par_iter()
        .map(|i| {
            let me = &vdata[i];
            let left = &vdata[space.source_cell(i as isize - 1)];
            let right = &vdata[space.source_cell(i as isize + 1)];
            let coeffs = (0..me.grid.len())
                .map(|k| {
                    let vk = me.grid.node(k);
                    let mut polys = [Poly::default(); 3];
                    for (q, p) in polys.iter_mut().enumerate() {
                        let a0 = me.value[k][q];
                        let am = cross_value(left, q, vk);
                        let ap = cross_value(right, q, vk);
                        p.value = a0;
                        p.sv = me.sv[k][q];
                        p.sx = modified_minmod(theta, (a0 - am) / dx, (ap - a0) / dx, (ap - am) / (2.0 * dx));
                    }
                    polys
                })
                .collect();
            CellPolys { grid: me.grid, coeffs }
        })
        .collect();
    Ok(PolyField { space: *space, cells })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Weights of the conservative shift evaluation for one derivative order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftCoefficients {
    pub alpha: f64,
    pub beta: f64,
}

impl ShiftCoefficients {
    pub fn new(ell: usize, theta: f64) -> Self {
        let denom = 2f64.powi(ell as i32 + 1) * factorial(ell + 1);
        let t = (2.0 * theta - 1.0).powi(ell as i32 + 1);
        let sign = if ell.is_multiple_of(2) { -1.0 } else { 1.0 }; // (-1)^(ell+1)
        ShiftCoefficients { alpha: (1.0 - t) / denom, beta: (t - sign) / denom }
    }
}

/// Largest reconstruction degree accepted by [`conservative_shift_eval`].
pub const MAX_SHIFT_DEGREE: usize = 2;

/// Average of the reconstruction over the cell-sized window centred at
/// `x_i + θ Δx`, from the derivatives `R_i^(ℓ)` (`left`) and `R_{i+1}^(ℓ)`
/// (`right`), `ℓ = 0..=k`.
pub fn conservative_shift_eval(left: &[f64], right: &[f64], theta: f64, dx: f64) -> Result<f64> {
    if left.len() != right.len() || left.is_empty() {
        return Err(SolverError::GridMismatch("shift evaluation needs matching derivative lists".into()));
    }
    let k = left.len() - 1;
    if k > MAX_SHIFT_DEGREE {
        return Err(SolverError::UnsupportedDegree(k));
    }
    let mut acc = 0.0;
    let mut dxl = 1.0;
    for ell in 0..=k {
        let c = ShiftCoefficients::new(ell, theta);
        acc += dxl * (c.alpha * left[ell] + c.beta * right[ell]);
        dxl *= dx;
    }
    Ok(acc)
}
