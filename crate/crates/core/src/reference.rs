//! Classical conservative semi-Lagrangian BGK solver on one global
//! velocity lattice.
//!
//! Every node `v_j` is transported by an exact shift of `v_j Δt` applied to
//! a piecewise-linear, limited reconstruction in `x`; the shifted value is
//! the window average given by [`ShiftCoefficients`], so mass is conserved
//! node by node. Relaxation is implicit, with the first-order scheme or
//! BDF2 (`4/3` shift by `Δt` minus `1/3` shift of the older level by `2Δt`).
//!
//! Storage is node-major: `f[j * nx + i]`.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Result, SolverError};
use crate::grid::{
    collision_time, discrete_moments, maxwellian, temperature_from, Boundary, CellDistribution, DistributionField,
    GasParams, MomentSet, SpatialGrid, VelocityGrid,
};
use crate::lvg::{step_sizes, Order, StepRecord};
use crate::reconstruction::{modified_minmod, ShiftCoefficients};

#[derive(Debug, Clone)]
pub struct GlobalGridState {
    pub grid: VelocityGrid,
    pub nx: usize,
    pub f: Vec<f64>,
    pub previous: Option<Vec<f64>>,
    pub last_dt: Option<f64>,
    pub time: f64,
    pub step: usize,
}

impl GlobalGridState {
    /// Copies a field whose cells all share one lattice.
    pub fn from_field(field: &DistributionField) -> Result<Self> {
        let nx = field.cells.len();
        let grid = field.cells.first().ok_or_else(|| SolverError::GridMismatch("empty field".into()))?.grid;
        let mut f = vec![0.0; nx * grid.len()];
        for (i, c) in field.cells.iter().enumerate() {
            if c.grid != grid {
                return Err(SolverError::GridMismatch(format!("cell {i} has a different lattice")));
            }
            for (j, &v) in c.values.iter().enumerate() {
                f[j * nx + i] = v;
            }
        }
        Ok(GlobalGridState { grid, nx, f, previous: None, last_dt: None, time: 0.0, step: 0 })
    }

    pub fn cell_values(&self, i: usize) -> Vec<f64> {
        (0..self.grid.len()).map(|j| self.f[j * self.nx + i]).collect()
    }

    pub fn to_field(&self) -> DistributionField {
        let cells = (0..self.nx)
            .map(|i| CellDistribution { grid: self.grid, values: self.cell_values(i) })
            .collect();
        DistributionField { cells }
    }

    pub fn moments(&self) -> Vec<MomentSet> {
        (0..self.nx).map(|i| discrete_moments(&self.cell_values(i), &self.grid)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceSolver {
    pub space: SpatialGrid,
    pub gas: GasParams,
    pub order: Order,
    pub theta: f64,
    pub cfl: f64,
}

#[derive(Debug, Clone)]
pub struct ReferenceRun {
    pub state: GlobalGridState,
    pub dt: f64,
    pub initial_totals: [f64; 3],
    pub steps: Vec<StepRecord>,
    pub wall_time: f64,
}

impl ReferenceSolver {
    /// Shifts one node's column `u` (length `nx`) by `shift` cell widths to
    /// the right, i.e. evaluates the window average at `x_i - shift Δx`.
    fn shift_column(&self, u: &[f64], shift: f64, out: &mut [f64]) {
        let nx = self.space.nx as isize;
        let dx = self.space.dx();
        let periodic = self.space.boundary == Boundary::Periodic;
        let value = |i: isize| u[self.space.source_cell(i)];
        let slopes: Vec<f64> = (0..nx)
            .map(|i| {
                let (um, u0, up) = (value(i - 1), value(i), value(i + 1));
                modified_minmod(self.theta, (u0 - um) / dx, (up - u0) / dx, (up - um) / (2.0 * dx))
            })
            .collect();
        let slope = |i: isize| {
            if periodic || (0..nx).contains(&i) {
                slopes[self.space.source_cell(i)]
            } else {
                0.0
            }
        };
        let sigma = -shift;
        let m = sigma.floor();
        let th = sigma - m;
        let m = m as isize;
        let c0 = ShiftCoefficients::new(0, th);
        let c1 = ShiftCoefficients::new(1, th);
        for (i, o) in out.iter_mut().enumerate() {
            let l = i as isize + m;
            *o = c0.alpha * value(l) + c0.beta * value(l + 1) + dx * (c1.alpha * slope(l) + c1.beta * slope(l + 1));
        }
    }

    /// `f` transported by `dt` (node-major layout).
    pub fn shifted(&self, grid: &VelocityGrid, f: &[f64], dt: f64) -> Vec<f64> {
        let nx = self.space.nx;
        let dx = self.space.dx();
        let mut out = vec![0.0; f.len()];
        out.par_chunks_mut(nx).enumerate().for_each(|(j, o)| {
            let v = grid.node(j);
            self.shift_column(&f[j * nx..(j + 1) * nx], v * dt / dx, o);
        });
        out
    }

    pub fn step(&self, state: &mut GlobalGridState, dt: f64) -> Result<StepRecord> {
        let nx = state.nx;
        let grid = state.grid;
        let step_no = state.step + 1;
        let use_second = self.order == Order::Second && state.previous.is_some() && state.last_dt == Some(dt);
        let order = if use_second { Order::Second } else { Order::First };

        let mut ft = self.shifted(&grid, &state.f, dt);
        if use_second {
            let old = self.shifted(&grid, state.previous.as_ref().expect("checked"), 2.0 * dt);
            ft.par_iter_mut().zip(old.par_iter()).for_each(|(a, b)| *a = 4.0 / 3.0 * *a - 1.0 / 3.0 * b);
        }

        let relaxed: Vec<Vec<f64>> = (0..nx)
            .into_par_iter()
            .map(|i| {
                let col: Vec<f64> = (0..grid.len()).map(|j| ft[j * nx + i]).collect();
                let m = discrete_moments(&col, &grid);
                if !(m.rho > 0.0) {
                    return Err(SolverError::NonPositiveDensity { rho: m.rho }.at(step_no, "relax", i));
                }
                temperature_from(&m).map_err(|e| e.at(step_no, "relax", i))?;
                let eps = collision_time(&m, &self.gas).map_err(|e| e.at(step_no, "relax", i))?;
                let mx = maxwellian(&m, &grid).map_err(|e| e.at(step_no, "relax", i))?;
                Ok(crate::lvg::implicit_relax(&col, &mx, dt, eps, order))
            })
            .collect::<Result<_>>()?;

        let mut next = vec![0.0; state.f.len()];
        for (i, col) in relaxed.iter().enumerate() {
            for (j, &v) in col.iter().enumerate() {
                next[j * nx + i] = v;
            }
        }
        let old = std::mem::replace(&mut state.f, next);
        state.previous = if self.order == Order::Second { Some(old) } else { None };
        state.last_dt = Some(dt);
        state.time += dt;
        state.step = step_no;

        let dxs = self.space.dx();
        let mut totals = [0.0; 3];
        for i in 0..nx {
            let m = discrete_moments(&state.cell_values(i), &grid);
            totals[0] += m.rho * dxs;
            totals[1] += m.mom * dxs;
            totals[2] += m.energy * dxs;
        }
        let min_f = state.f.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(StepRecord {
            step: step_no,
            time: state.time,
            totals,
            min_f,
            nv_min: grid.nv,
            nv_max: grid.nv,
            nv_mean: grid.nv as f64,
            order,
        })
    }

    /// Runs with the step derived from the CFL number and the global lattice.
    pub fn run(&self, initial: &DistributionField, t_final: f64) -> Result<ReferenceRun> {
        let grid = initial.cells.first().ok_or_else(|| SolverError::GridMismatch("empty field".into()))?.grid;
        let dt = crate::lvg::time_step_from_cfl(self.cfl, &[grid], self.space.dx())?;
        self.run_with_dt(initial, t_final, dt)
    }

    /// Runs with a prescribed step, e.g. the one used by a local-grid run
    /// of the same problem.
    pub fn run_with_dt(&self, initial: &DistributionField, t_final: f64, dt: f64) -> Result<ReferenceRun> {
        if !(t_final > 0.0) {
            return Err(SolverError::InvalidParameter(format!("t_final = {t_final}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SolverError::InvalidParameter(format!("dt = {dt}")));
        }
        let start = Instant::now();
        let mut state = GlobalGridState::from_field(initial)?;
        let initial_totals = initial.totals(self.space.dx());
        let mut steps = Vec::new();
        for h in step_sizes(dt, t_final) {
            steps.push(self.step(&mut state, h)?);
        }
        Ok(ReferenceRun { state, dt, initial_totals, steps, wall_time: start.elapsed().as_secs_f64() })
    }
}
