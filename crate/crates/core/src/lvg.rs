//! Semi-Lagrangian BGK stepping on per-cell adaptive velocity grids.
//!
//! One step advances `f^n -> f^{n+1}` as a barrier-synchronised pipeline:
//!
//! 1. reconstruct `P, Q, R` from `f^n` and integrate them over the
//!    backward-sheared image of every spatial cell to predict the moments
//!    at `t^{n+1}`;
//! 2. build each cell's new lattice from the predicted mean velocity and
//!    the min/max temperature over a stencil of neighbours;
//! 3. integrate the same polynomials over the sheared image of every new
//!    phase cell, giving the transported values `f̃` and the new moments
//!    (optionally widening the lattice while its end values are not small);
//! 4. make the Maxwellian and `f̃` moment-exact by weighted L² correction;
//! 5. relax implicitly towards the corrected Maxwellian.
//!
//! The second-order variant combines `4/3` of the level-`n` transport with
//! `-1/3` of the level-`n-1` transport over twice the shear, and relaxes
//! with `2Δt/(3ε)`.

use std::time::Instant;

use rayon::prelude::*;

use crate::conservation::{correct_maxwellian, correct_transported};
use crate::error::{Result, SolverError};
use crate::grid::{
    collision_time, maxwellian, temperature_from, CellDistribution, DistributionField, GasParams, MomentSet,
    SpatialGrid, VelocityGrid,
};
use crate::quadrature::{integrate_over_band, ShearedBand};
use crate::reconstruction::{build_poly_field, PolyField, DEFAULT_THETA};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
}

impl Order {
    pub fn from_int(n: u32) -> Option<Order> {
        match n {
            1 => Some(Order::First),
            2 => Some(Order::Second),
            _ => None,
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            Order::First => 1,
            Order::Second => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub cfl: f64,
    /// Half-width of the lattice in thermal speeds.
    pub alpha: f64,
    /// Lattice spacing in thermal speeds of the coldest stencil cell.
    pub beta: f64,
    /// Relative size of end values that triggers widening of a lattice.
    pub tol: f64,
    pub theta: f64,
    pub order: Order,
    pub gas: GasParams,
}

impl SolverConfig {
    pub fn new(gas: GasParams, cfl: f64, order: Order) -> Self {
        SolverConfig { cfl, alpha: 10.0, beta: 0.5, tol: 1e-6, theta: DEFAULT_THETA, order, gas }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(SolverError::InvalidParameter(what.to_string()));
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return bad("cfl must be positive");
        }
        if !(self.alpha >= 3.0 && self.alpha.is_finite()) {
            return bad("alpha must be at least 3");
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad("beta must lie in (0, 1]");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if !(1.0..=2.0).contains(&self.theta) {
            return bad("theta must lie in [1, 2]");
        }
        Ok(())
    }
}

/// Fixed time step from the CFL number and the largest lattice speed.
pub fn time_step_from_cfl(cfl: f64, grids: &[VelocityGrid], dx: f64) -> Result<f64> {
    let vmax = grids.iter().map(VelocityGrid::max_abs_velocity).fold(0.0, f64::max);
    if !(vmax > 0.0) {
        return Err(SolverError::ZeroVelocityGrid);
    }
    Ok(cfl * dx / vmax)
}

/// Half-width of the neighbour stencil used for lattice selection.
pub fn stencil_radius(cfl: f64, order: Order) -> usize {
    let reach = match order {
        Order::First => cfl,
        Order::Second => 2.0 * cfl,
    };
    reach.ceil() as usize + 1
}

/// Lattice for one cell from the predicted moments of its stencil.
///
/// `dv = β √(RT_min)`, `N_v = 2⌈α √(RT_max) / dv⌉`, centred on the cell's
/// own mean velocity.
pub fn build_local_grid(center: &MomentSet, stencil: &[MomentSet], alpha: f64, beta: f64) -> Result<VelocityGrid> {
    let u = center.velocity();
    temperature_from(center)?;
    let mut rt_min = f64::INFINITY;
    let mut rt_max: f64 = 0.0;
    for m in stencil {
        let rt = temperature_from(m)?;
        rt_min = rt_min.min(rt);
        rt_max = rt_max.max(rt);
    }
    let dv = beta * rt_min.sqrt();
    // Ratio form keeps equal stencil temperatures from rounding up a node.
    let width = alpha / beta * (rt_max / rt_min).sqrt();
    let half = (width * (1.0 - 1e-12)).ceil() as usize;
    let nv = 2 * half.max(1);
    VelocityGrid::new(u - half.max(1) as f64 * dv, dv, nv)
}

/// Widens `grid` one node at a time at either end while the value at the
/// candidate node, relative to the largest value, exceeds `tol`.
///
/// `values` holds the current node values and is extended in place;
/// `eval` returns the value at an arbitrary candidate node.
pub fn extend_grid_by_tail(
    grid: VelocityGrid,
    values: &mut Vec<f64>,
    tol: f64,
    mut eval: impl FnMut(f64) -> f64,
) -> Result<VelocityGrid> {
    let mut grid = grid;
    let limit = 4 * grid.nv;
    let mut added = 0;
    let mut peak = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) || !tol.is_finite() {
        return Ok(grid);
    }
    loop {
        let mut grew = false;
        let left = eval(grid.v_min - grid.dv);
        if left / peak > tol {
            grid = VelocityGrid { v_min: grid.v_min - grid.dv, dv: grid.dv, nv: grid.nv + 1 };
            values.insert(0, left);
            peak = peak.max(left);
            added += 1;
            grew = true;
        }
        let right = eval(grid.v_max() + grid.dv);
        if right / peak > tol {
            grid.nv += 1;
            values.push(right);
            peak = peak.max(right);
            added += 1;
            grew = true;
        }
        if added > limit {
            return Err(SolverError::RunawayGrid { limit });
        }
        if !grew {
            return Ok(grid);
        }
    }
}

/// Weighted band integrals of the reconstructed field(s) for one time step.
pub struct Transport<'a> {
    pub current: &'a PolyField,
    /// Level `n-1` reconstruction; present only for second-order steps.
    pub previous: Option<&'a PolyField>,
    pub dt: f64,
}

impl Transport<'_> {
    fn cell_band(&self, i: usize, va: f64, vb: f64, shear: f64) -> ShearedBand {
        let space = &self.current.space;
        let xc = space.center(i as isize);
        let h = 0.5 * space.dx();
        ShearedBand::new(xc - h, xc + h, va, vb, shear)
    }

    /// `(∫P, ∫Q, ∫R) / Δx` over the backward image of `I_i × [va, vb]`.
    pub fn integrate(&self, i: usize, va: f64, vb: f64) -> [f64; 3] {
        let dx = self.current.space.dx();
        let a = integrate_over_band(self.current, &self.cell_band(i, va, vb, self.dt));
        match self.previous {
            None => a.map(|x| x / dx),
            Some(prev) => {
                let b = integrate_over_band(prev, &self.cell_band(i, va, vb, 2.0 * self.dt));
                [0, 1, 2].map(|q| (4.0 / 3.0 * a[q] - 1.0 / 3.0 * b[q]) / dx)
            }
        }
    }

    /// Predicted moments of cell `i`, integrating over the cell's own
    /// lattice coverage at each level.
    pub fn predict(&self, i: usize) -> MomentSet {
        let dx = self.current.space.dx();
        let g = self.current.cells[i].grid;
        let a = integrate_over_band(self.current, &self.cell_band(i, g.lower_edge(), g.upper_edge(), self.dt));
        let s = match self.previous {
            None => a.map(|x| x / dx),
            Some(prev) => {
                let gp = prev.cells[i].grid;
                let b = integrate_over_band(prev, &self.cell_band(i, gp.lower_edge(), gp.upper_edge(), 2.0 * self.dt));
                [0, 1, 2].map(|q| (4.0 / 3.0 * a[q] - 1.0 / 3.0 * b[q]) / dx)
            }
        };
        MomentSet::new(s[0], s[1], 0.5 * s[2])
    }
}

/// Predicted moments for every cell.
pub fn predict_moments(transport: &Transport) -> Result<Vec<MomentSet>> {
    (0..transport.current.space.nx)
        .into_par_iter()
        .map(|i| {
            let m = transport.predict(i);
            temperature_from(&m).map(|_| m).map_err(|e| e.at(0, "predict", i))
        })
        .collect()
}

/// Transported values on a new lattice and the moments they carry.
#[derive(Debug, Clone)]
pub struct Transported {
    pub grid: VelocityGrid,
    pub f_tilde: Vec<f64>,
    pub target: MomentSet,
}

/// Transports into cell `i` on `grid`, widening it by the tail rule, and
/// sums the band integrals of `Q`, `R` into the target moments.
pub fn transport_and_remoment(transport: &Transport, i: usize, grid: VelocityGrid, tol: f64) -> Result<Transported> {
    let dv = grid.dv;
    let node = |v: f64| transport.integrate(i, v - 0.5 * dv, v + 0.5 * dv);
    let mut ints: Vec<[f64; 3]> = grid.nodes().map(node).collect();
    let mut f_tilde: Vec<f64> = ints.iter().map(|a| a[0] / dv).collect();

    let n0 = grid.len();
    let old_vmin = grid.v_min;
    let grid = extend_grid_by_tail(grid, &mut f_tilde, tol, |v| node(v)[0] / dv)?;
    if grid.len() != n0 {
        // Recompute the full integrals for added nodes (cheap, rare).
        let shift = ((old_vmin - grid.v_min) / dv).round() as usize;
        let mut full = Vec::with_capacity(grid.len());
        for j in 0..grid.len() {
            if j >= shift && j - shift < n0 {
                full.push(ints[j - shift]);
            } else {
                full.push(node(grid.node(j)));
            }
        }
        ints = full;
        f_tilde = ints.iter().map(|a| a[0] / dv).collect();
    }

    let mut s = [0.0; 3];
    for a in &ints {
        s[0] += a[0];
        s[1] += a[1];
        s[2] += a[2];
    }
    let target = MomentSet::new(s[0], s[1], 0.5 * s[2]);
    if !(target.rho > 0.0) {
        return Err(SolverError::NonPositiveDensity { rho: target.rho });
    }
    temperature_from(&target)?;
    Ok(Transported { grid, f_tilde, target })
}

/// Moment-exact Maxwellian `M` and transported field `g` for one cell.
pub fn conservation_correct(t: &Transported) -> Result<(Vec<f64>, Vec<f64>)> {
    let raw = maxwellian(&t.target, &t.grid)?;
    let m = correct_maxwellian(&raw, &t.target, &t.grid)?;
    let g = correct_transported(&t.f_tilde, &m, &t.target, &t.grid)?;
    Ok((g, m))
}

/// Implicit relaxation `f = (g + λ M) / (1 + λ)`, `λ = Δt/ε` (first order)
/// or `2Δt/(3ε)` (second order).
pub fn implicit_relax(g: &[f64], m: &[f64], dt: f64, eps: f64, order: Order) -> Vec<f64> {
    let lambda = match order {
        Order::First => dt / eps,
        Order::Second => 2.0 * dt / (3.0 * eps),
    };
    let denom = 1.0 + lambda;
    g.iter().zip(m).map(|(&gj, &mj)| (gj + lambda * mj) / denom).collect()
}

/// Solver state at one time level.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub time: f64,
    pub step: usize,
    pub field: DistributionField,
    /// Reconstruction at the previous level, kept for second-order steps.
    pub history: Option<PolyField>,
    /// Step size used to produce the current level.
    pub last_dt: Option<f64>,
}

impl SolverState {
    pub fn new(field: DistributionField) -> Self {
        SolverState { time: 0.0, step: 0, field, history: None, last_dt: None }
    }

    pub fn grids(&self) -> Vec<VelocityGrid> {
        self.field.cells.iter().map(|c| c.grid).collect()
    }
}

/// Per-step bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    /// Domain totals of mass, momentum and energy after the step.
    pub totals: [f64; 3],
    pub min_f: f64,
    pub nv_min: usize,
    pub nv_max: usize,
    pub nv_mean: f64,
    /// Order of the scheme actually used for this step.
    pub order: Order,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub state: SolverState,
    pub dt: f64,
    pub initial_totals: [f64; 3],
    pub steps: Vec<StepRecord>,
    pub wall_time: f64,
}

fn nv_stats(field: &DistributionField) -> (usize, usize, f64) {
    let nvs: Vec<usize> = field.cells.iter().map(|c| c.grid.nv).collect();
    let min = nvs.iter().copied().min().unwrap_or(0);
    let max = nvs.iter().copied().max().unwrap_or(0);
    let mean = nvs.iter().sum::<usize>() as f64 / nvs.len().max(1) as f64;
    (min, max, mean)
}

/// Local-velocity-grid semi-Lagrangian solver.
#[derive(Debug, Clone)]
pub struct LvgSolver {
    pub config: SolverConfig,
    pub space: SpatialGrid,
}

impl LvgSolver {
    pub fn new(config: SolverConfig, space: SpatialGrid) -> Result<Self> {
        config.validate()?;
        Ok(LvgSolver { config, space })
    }

    /// Advances `state` by `dt`. Second-order steps need history from a
    /// previous step of the same size; otherwise the first-order scheme is
    /// used.
    pub fn step(&self, state: &mut SolverState, dt: f64) -> Result<StepRecord> {
        let cfg = &self.config;
        let space = &self.space;
        let nx = space.nx;
        let step_no = state.step + 1;
        if state.field.cells.len() != nx {
            return Err(SolverError::GridMismatch(format!("{} cells for a {nx}-cell mesh", state.field.cells.len())));
        }

        let poly = build_poly_field(&state.field, space, cfg.theta)?;
        let use_second = cfg.order == Order::Second && state.history.is_some() && state.last_dt == Some(dt);
        let order = if use_second { Order::Second } else { Order::First };
        let transport = Transport { current: &poly, previous: if use_second { state.history.as_ref() } else { None }, dt };

        // Step 1: predicted moments.
        let predicted: Vec<MomentSet> = (0..nx)
            .into_par_iter()
            .map(|i| {
                let m = transport.predict(i);
                temperature_from(&m).map(|_| m).map_err(|e| e.at(step_no, "predict", i))
            })
            .collect::<Result<_>>()?;

        // Step 2: new lattices. The stencil covers the configured CFL or the
        // actual one, whichever is larger.
        let vmax = state.field.cells.iter().map(|c| c.grid.max_abs_velocity()).fold(0.0, f64::max);
        let cfl = cfg.cfl.max(vmax * dt / space.dx());
        let delta = stencil_radius(cfl, order) as isize;
        let grids: Vec<VelocityGrid> = (0..nx)
            .into_par_iter()
            .map(|i| {
                let stencil: Vec<MomentSet> = (-delta..=delta)
                    .map(|o| predicted[space.source_cell(i as isize + o)])
                    .collect();
                build_local_grid(&predicted[i], &stencil, cfg.alpha, cfg.beta).map_err(|e| e.at(step_no, "grid", i))
            })
            .collect::<Result<_>>()?;

        // Steps 3-5, independent per cell.
        let cells: Vec<CellDistribution> = grids
            .into_par_iter()
            .enumerate()
            .map(|(i, grid)| {
                let t = transport_and_remoment(&transport, i, grid, cfg.tol).map_err(|e| e.at(step_no, "transport", i))?;
                let (g, m) = conservation_correct(&t).map_err(|e| e.at(step_no, "correct", i))?;
                let eps = collision_time(&t.target, &cfg.gas).map_err(|e| e.at(step_no, "relax", i))?;
                let f = implicit_relax(&g, &m, dt, eps, order);
                Ok(CellDistribution { grid: t.grid, values: f })
            })
            .collect::<Result<_>>()?;

        state.field = DistributionField { cells };
        state.history = if cfg.order == Order::Second { Some(poly) } else { None };
        state.last_dt = Some(dt);
        state.time += dt;
        state.step = step_no;

        let (nv_min, nv_max, nv_mean) = nv_stats(&state.field);
        Ok(StepRecord {
            step: step_no,
            time: state.time,
            totals: state.field.totals(space.dx()),
            min_f: state.field.min_value(),
            nv_min,
            nv_max,
            nv_mean,
            order,
        })
    }

    /// Runs from `initial` to `t_final` with a fixed step derived from the
    /// CFL number; the last step is shortened to land on `t_final`.
    pub fn run(&self, initial: DistributionField, t_final: f64) -> Result<RunSummary> {
        if !(t_final > 0.0) {
            return Err(SolverError::InvalidParameter(format!("t_final = {t_final}")));
        }
        let start = Instant::now();
        let grids: Vec<VelocityGrid> = initial.cells.iter().map(|c| c.grid).collect();
        let dt = time_step_from_cfl(self.config.cfl, &grids, self.space.dx())?;
        let initial_totals = initial.totals(self.space.dx());
        let mut state = SolverState::new(initial);
        let mut steps = Vec::new();
        for h in step_sizes(dt, t_final) {
            steps.push(self.step(&mut state, h)?);
        }
        Ok(RunSummary { state, dt, initial_totals, steps, wall_time: start.elapsed().as_secs_f64() })
    }
}

/// Sequence of step sizes covering `[0, t_final]`: `dt` repeated, then one
/// shorter step if needed.
pub fn step_sizes(dt: f64, t_final: f64) -> Vec<f64> {
    let ratio = t_final / dt;
    let mut n = ratio.floor() as usize;
    let rem = t_final - n as f64 * dt;
    let mut out = vec![dt; n];
    if rem > 1e-9 * dt {
        out.push(rem);
    } else if n == 0 {
        n = 1;
        out = vec![t_final; n];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Boundary, CollisionModel};

    fn gas(eps: f64) -> GasParams {
        GasParams::new(1.0, CollisionModel::Constant(eps)).unwrap()
    }

    #[test]
    fn cfl_time_step() {
        let g = VelocityGrid::spanning(-10.0, 10.0, 40).unwrap();
        assert!((time_step_from_cfl(2.0, &[g], 0.1).unwrap() - 0.02).abs() < 1e-15);
        assert!((time_step_from_cfl(2.4, &[g], 2.0 / 80.0).unwrap() - 0.006).abs() < 1e-15);
        let a = time_step_from_cfl(2.4, &[g], 2.0 / 80.0).unwrap();
        let b = time_step_from_cfl(2.4, &[g], 2.0 / 160.0).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-15);
        let z = VelocityGrid { v_min: 0.0, dv: 0.0, nv: 2 };
        assert_eq!(time_step_from_cfl(1.0, &[z], 0.1), Err(SolverError::ZeroVelocityGrid));
    }

    #[test]
    fn local_grid_rule() {
        let m = MomentSet::from_primitive(1.0, 0.0, 1.0);
        let g = build_local_grid(&m, &[m; 5], 10.0, 0.5).unwrap();
        assert_eq!(g.nv, 40);
        assert!((g.dv - 0.5).abs() < 1e-15);
        assert!((g.v_min + 10.0).abs() < 1e-14 && (g.v_max() - 10.0).abs() < 1e-14);

        let hot = MomentSet::from_primitive(1.0, 0.0, 4.0);
        let g2 = build_local_grid(&m, &[m, hot, m], 10.0, 0.5).unwrap();
        assert_eq!(g2.nv, 80);

        let shifted = MomentSet::from_primitive(2.0, 1.5, 0.7);
        let g3 = build_local_grid(&shifted, &[shifted], 10.0, 0.5).unwrap();
        assert!((0.5 * (g3.v_min + g3.v_max()) - 1.5).abs() < 1e-13);
    }

    #[test]
    fn grid_rule_monotonicity() {
        let a = MomentSet::from_primitive(1.0, 0.2, 0.8);
        let b = MomentSet::from_primitive(1.0, 0.2, 2.3);
        let mut last = 0;
        for alpha in [3.0, 5.0, 8.0, 10.0, 12.5] {
            let nv = build_local_grid(&a, &[a, b], alpha, 0.5).unwrap().nv;
            assert!(nv >= last);
            last = nv;
        }
        let mut last = usize::MAX;
        for beta in [0.2, 0.3, 0.5, 0.75, 1.0] {
            let nv = build_local_grid(&a, &[a, b], 10.0, beta).unwrap().nv;
            assert!(nv <= last);
            last = nv;
        }
    }

    #[test]
    fn stencil_radii() {
        assert_eq!(stencil_radius(2.4, Order::First), 4);
        assert_eq!(stencil_radius(2.4, Order::Second), 6);
        assert_eq!(stencil_radius(2.0, Order::Second), 5);
    }

    #[test]
    fn tail_extension() {
        let grid = VelocityGrid::spanning(-10.0, 10.0, 40).unwrap();
        let gauss = |v: f64| (-0.5 * v * v).exp();
        let mut vals: Vec<f64> = grid.nodes().map(gauss).collect();
        let g = extend_grid_by_tail(grid, &mut vals, 1e-6, gauss).unwrap();
        assert_eq!(g, grid);

        // A second bump centred at v = 12 forces growth to the right.
        let bimodal = |v: f64| gauss(v) + 0.5 * (-0.5 * (v - 12.0) * (v - 12.0)).exp();
        let mut vals: Vec<f64> = grid.nodes().map(bimodal).collect();
        let g = extend_grid_by_tail(grid, &mut vals, 1e-6, bimodal).unwrap();
        assert!(g.v_max() > 16.0);
        assert_eq!(g.v_min, grid.v_min);
        assert_eq!(vals.len(), g.len());
        assert!(bimodal(g.v_max() + g.dv) / 1.0 <= 1e-6);

        let mut vals: Vec<f64> = grid.nodes().map(bimodal).collect();
        assert_eq!(extend_grid_by_tail(grid, &mut vals, f64::INFINITY, bimodal).unwrap(), grid);

        let mut vals: Vec<f64> = grid.nodes().map(|_| 1.0).collect();
        let err = extend_grid_by_tail(grid, &mut vals, 1e-6, |_| 1.0);
        assert!(matches!(err, Err(SolverError::RunawayGrid { .. })));
    }

    #[test]
    fn relaxation_limits() {
        let g = [1.0, 2.0, 3.0];
        let m = [0.5, 0.5, 0.5];
        let f = implicit_relax(&g, &m, 1e-12, 1.0, Order::First);
        assert!(f.iter().zip(&g).all(|(a, b)| (a - b).abs() < 1e-11));
        let f = implicit_relax(&g, &m, 1.0, 1e-14, Order::Second);
        assert!(f.iter().zip(&m).all(|(a, b)| (a - b).abs() < 1e-13));
        let f = implicit_relax(&m, &m, 0.3, 0.01, Order::First);
        assert!(f.iter().zip(&m).all(|(a, b)| (a - b).abs() < 1e-15));
        // BDF2 coefficient: lambda = 2 dt / (3 eps).
        let f = implicit_relax(&[0.0], &[1.0], 1.5, 1.0, Order::Second);
        assert!((f[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn step_size_sequence() {
        let s = step_sizes(0.006, 0.32);
        assert_eq!(s.len(), 54);
        assert!((s.iter().sum::<f64>() - 0.32).abs() < 1e-12);
        assert!((s[53] - 0.002).abs() < 1e-9);
        let s = step_sizes(0.1, 1.0);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(s.iter().all(|&h| h > 0.05));
    }

    fn uniform_state(nx: usize, m: MomentSet) -> (SpatialGrid, DistributionField) {
        let space = SpatialGrid::new(0.0, 1.0, nx, Boundary::Periodic).unwrap();
        let rt = m.rt().unwrap();
        let u = m.velocity();
        let grid = VelocityGrid::spanning(u - 10.0 * rt.sqrt(), u + 10.0 * rt.sqrt(), 40).unwrap();
        let f = maxwellian(&m, &grid).unwrap();
        let cells = (0..nx).map(|_| CellDistribution::new(grid, f.clone()).unwrap()).collect();
        (space, DistributionField { cells })
    }

    #[test]
    fn uniform_maxwellian_predicts_its_own_moments() {
        let m = MomentSet::from_primitive(1.0, 0.4, 1.0);
        let (space, field) = uniform_state(8, m);
        let poly = build_poly_field(&field, &space, 1.5).unwrap();
        let t = Transport { current: &poly, previous: None, dt: 0.013 };
        let target = field.cells[0].moments();
        for p in predict_moments(&t).unwrap() {
            assert!((p.rho - target.rho).abs() < 1e-12);
            assert!((p.mom - target.mom).abs() < 1e-12);
            assert!((p.energy - target.energy).abs() < 1e-12);
        }
        let t0 = Transport { current: &poly, previous: None, dt: 0.0 };
        for p in predict_moments(&t0).unwrap() {
            assert!((p.rho - target.rho).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_shear_on_same_grid_reproduces_field() {
        let space = SpatialGrid::new(0.0, 1.0, 5, Boundary::Periodic).unwrap();
        let grid = VelocityGrid::spanning(-6.0, 6.0, 24).unwrap();
        let cells = (0..5)
            .map(|i| {
                let m = MomentSet::from_primitive(1.0 + 0.1 * i as f64, 0.1 * i as f64, 1.0);
                CellDistribution::new(grid, maxwellian(&m, &grid).unwrap()).unwrap()
            })
            .collect();
        let field = DistributionField { cells };
        let poly = build_poly_field(&field, &space, 1.5).unwrap();
        let t = Transport { current: &poly, previous: None, dt: 0.0 };
        for i in 0..5 {
            let tr = transport_and_remoment(&t, i, grid, f64::INFINITY).unwrap();
            for (a, b) in tr.f_tilde.iter().zip(&field.cells[i].values) {
                assert!((a - b).abs() < 1e-14, "{a} {b}");
            }
        }
    }

    #[test]
    fn equilibrium_step_is_fixed_point() {
        let m = MomentSet::from_primitive(1.0, 0.0, 1.0);
        let (space, field) = uniform_state(10, m);
        let solver = LvgSolver::new(SolverConfig::new(gas(1e-3), 2.0, Order::Second), space).unwrap();
        let mut state = SolverState::new(field.clone());
        let dt = time_step_from_cfl(2.0, &state.grids(), space.dx()).unwrap();
        for _ in 0..3 {
            solver.step(&mut state, dt).unwrap();
        }
        for c in &state.field.cells {
            assert_eq!(c.grid.nv, 40);
            for (a, b) in c.values.iter().zip(&field.cells[0].values) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn conservation_correct_on_equilibrium() {
        let m = MomentSet::from_primitive(0.7, -0.3, 1.4);
        let grid = VelocityGrid::spanning(-0.3 - 10.0 * 1.4f64.sqrt(), -0.3 + 10.0 * 1.4f64.sqrt(), 40).unwrap();
        let f = maxwellian(&m, &grid).unwrap();
        let t = Transported { grid, f_tilde: f.clone(), target: m };
        let (g, mc) = conservation_correct(&t).unwrap();
        for j in 0..f.len() {
            assert!((g[j] - f[j]).abs() < 1e-12);
            assert!((mc[j] - f[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn coarse_five_node_correction_is_exact() {
        let m = MomentSet::from_primitive(1.0, 0.2, 1.0);
        let grid = VelocityGrid::spanning(-2.0, 2.0, 4).unwrap();
        let f: Vec<f64> = maxwellian(&m, &grid).unwrap().iter().map(|x| x * 1.1).collect();
        let t = Transported { grid, f_tilde: f, target: m };
        let (g, mc) = conservation_correct(&t).unwrap();
        let mg = crate::grid::discrete_moments(&g, &grid);
        let mm = crate::grid::discrete_moments(&mc, &grid);
        for (a, b) in [(mg, m), (mm, m)] {
            assert!((a.rho - b.rho).abs() < 1e-13);
            assert!((a.mom - b.mom).abs() < 1e-13);
            assert!((a.energy - b.energy).abs() < 1e-13);
        }
    }
}
