//! Test problems, error norms and run diagnostics.

use rayon::prelude::*;

use crate::error::{Result, SolverError};
use crate::grid::{
    maxwellian, Boundary, CellDistribution, CollisionModel, DistributionField, GasParams, MomentSet, SpatialGrid,
    VelocityGrid,
};
use crate::lvg::{build_local_grid, stencil_radius, RunSummary, SolverConfig, StepRecord};

/// Gas constant of the rarefied-gas problems.
pub const R_GAS: f64 = 208.1;
pub const TAU_OMEGA: f64 = -0.19;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    Accuracy,
    Riemann,
    Blast,
}

impl CaseKind {
    pub fn name(self) -> &'static str {
        match self {
            CaseKind::Accuracy => "accuracy",
            CaseKind::Riemann => "riemann",
            CaseKind::Blast => "blast",
        }
    }

    pub fn parse(s: &str) -> Option<CaseKind> {
        match s {
            "accuracy" => Some(CaseKind::Accuracy),
            "riemann" => Some(CaseKind::Riemann),
            "blast" => Some(CaseKind::Blast),
            _ => None,
        }
    }
}

/// How the step-0 velocity lattices are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialLattice {
    /// Every cell starts on this lattice.
    Global(VelocityGrid),
    /// Each cell gets the lattice-selection rule applied to the initial data.
    Local,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub kind: CaseKind,
    pub space: SpatialGrid,
    pub gas: GasParams,
    pub t_final: f64,
    pub cfl: f64,
    pub initial_lattice: InitialLattice,
    /// Lattice of the global-grid reference solver.
    pub reference_grid: VelocityGrid,
}

impl TestCase {
    /// Smooth periodic problem with a constant relaxation time `eps`.
    pub fn accuracy(nx: usize, nv0: usize, eps: f64) -> Result<TestCase> {
        let grid = VelocityGrid::spanning(-10.0, 10.0, nv0)?;
        Ok(TestCase {
            kind: CaseKind::Accuracy,
            space: SpatialGrid::new(-1.0, 1.0, nx, Boundary::Periodic)?,
            gas: GasParams::new(1.0, CollisionModel::Constant(eps))?,
            t_final: 0.32,
            cfl: 2.4,
            initial_lattice: InitialLattice::Global(grid),
            reference_grid: grid,
        })
    }

    /// Shock-tube problem with `ε = c T^ω / ρ`.
    pub fn riemann(nx: usize, nv0: usize, c: f64) -> Result<TestCase> {
        let grid = VelocityGrid::spanning(-15.0, 15.0, nv0)?;
        Ok(TestCase {
            kind: CaseKind::Riemann,
            space: SpatialGrid::new(0.0, 0.6, nx, Boundary::FreeFlow)?,
            gas: GasParams::new(R_GAS, CollisionModel::TauLaw { c, omega: TAU_OMEGA })?,
            t_final: 7.34e-2,
            cfl: 2.0,
            initial_lattice: InitialLattice::Global(grid),
            reference_grid: grid,
        })
    }

    /// Two interacting blast waves; step-0 lattices are local.
    pub fn blast(nx: usize, c: f64) -> Result<TestCase> {
        Ok(TestCase {
            kind: CaseKind::Blast,
            space: SpatialGrid::new(0.0, 1.0, nx, Boundary::FreeFlow)?,
            gas: GasParams::new(R_GAS, CollisionModel::TauLaw { c, omega: TAU_OMEGA })?,
            t_final: 0.008,
            cfl: 2.0,
            initial_lattice: InitialLattice::Local,
            reference_grid: VelocityGrid::spanning(-190.0, 190.0, 3800)?,
        })
    }

    /// Initial `(ρ, u, T)` at `x`.
    pub fn primitive(&self, x: f64) -> (f64, f64, f64) {
        match self.kind {
            CaseKind::Accuracy => {
                let u = 0.1 * (-(10.0 * x - 1.0).powi(2)).exp() - 2.0 * (-(10.0 * x + 3.0).powi(2)).exp();
                (1.0, u, 1.0)
            }
            CaseKind::Riemann => {
                if x <= 0.3 {
                    (1e-4, 0.0, 4.80208e-3)
                } else {
                    (1.25e-5, 0.0, 3.84167e-3)
                }
            }
            CaseKind::Blast => {
                let t = if x < 0.1 {
                    4.8
                } else if x < 0.9 {
                    4.8e-5
                } else {
                    0.48
                };
                (1.0, 0.0, t)
            }
        }
    }

    pub fn initial_moments(&self) -> Vec<MomentSet> {
        self.space
            .centers()
            .iter()
            .map(|&x| {
                let (rho, u, t) = self.primitive(x);
                MomentSet::from_primitive(rho, u, self.gas.r * t)
            })
            .collect()
    }

    /// Maxwellian initial distribution on the lattices chosen by
    /// `initial_lattice` (lattice parameters from `config`).
    pub fn initial_field(&self, config: &SolverConfig) -> Result<DistributionField> {
        let moments = self.initial_moments();
        let grids: Vec<VelocityGrid> = match self.initial_lattice {
            InitialLattice::Global(g) => vec![g; moments.len()],
            InitialLattice::Local => {
                let delta = stencil_radius(config.cfl, config.order) as isize;
                (0..moments.len())
                    .map(|i| {
                        let stencil: Vec<MomentSet> =
                            (-delta..=delta).map(|o| moments[self.space.source_cell(i as isize + o)]).collect();
                        build_local_grid(&moments[i], &stencil, config.alpha, config.beta)
                    })
                    .collect::<Result<_>>()?
            }
        };
        self.field_on(&grids)
    }

    /// Maxwellian initial distribution on the reference lattice.
    pub fn reference_field(&self) -> Result<DistributionField> {
        self.field_on(&vec![self.reference_grid; self.space.nx])
    }

    fn field_on(&self, grids: &[VelocityGrid]) -> Result<DistributionField> {
        let moments = self.initial_moments();
        let cells = moments
            .par_iter()
            .zip(grids.par_iter())
            .map(|(m, g)| CellDistribution::new(*g, maxwellian(m, g)?))
            .collect::<Result<_>>()?;
        Ok(DistributionField { cells })
    }
}

/// `Σ|ρ_c − ρ̄_f| / Σ|ρ̄_f|`, where `ρ̄_f` averages consecutive pairs of
/// the fine solution onto the coarse mesh.
pub fn rel_l1_error(coarse: &[f64], fine: &[f64]) -> Result<f64> {
    if fine.len() != 2 * coarse.len() {
        return Err(SolverError::GridMismatch(format!(
            "fine mesh has {} cells, expected {}",
            fine.len(),
            2 * coarse.len()
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &c) in coarse.iter().enumerate() {
        let f = 0.5 * (fine[2 * i] + fine[2 * i + 1]);
        num += (c - f).abs();
        den += f.abs();
    }
    Ok(num / den)
}

/// `Σ|a − b| / Σ|b|` on matching meshes.
pub fn rel_l1_difference(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(SolverError::GridMismatch(format!("{} vs {} cells", a.len(), b.len())));
    }
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    let den: f64 = b.iter().map(|y| y.abs()).sum();
    Ok(num / den)
}

/// Locations of the sharp fronts of a profile, in cell-index units.
///
/// Jumps `|a_{i+1} - a_i|` above `frac` times the largest jump are grouped
/// when at most one cell apart; each group reports its jump-weighted
/// interface position.
pub fn front_positions(a: &[f64], frac: f64) -> Vec<f64> {
    let jumps: Vec<f64> = a.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let top = jumps.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Vec::new();
    }
    let mut fronts = Vec::new();
    let mut group: Option<(f64, f64, usize)> = None; // (Σ w·pos, Σ w, last index)
    for (i, &g) in jumps.iter().enumerate() {
        if g < frac * top {
            continue;
        }
        let pos = i as f64 + 1.0;
        group = match group {
            Some((sp, sw, last)) if i <= last + 2 => Some((sp + g * pos, sw + g, i)),
            Some((sp, sw, _)) => {
                fronts.push(sp / sw);
                Some((g * pos, g, i))
            }
            None => Some((g * pos, g, i)),
        };
    }
    if let Some((sp, sw, _)) = group {
        fronts.push(sp / sw);
    }
    fronts
}

pub fn convergence_rate(e_coarse: f64, e_fine: f64) -> f64 {
    (e_coarse / e_fine).log2()
}

/// Run-level summary of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub steps: usize,
    pub dt: f64,
    /// Largest relative drift of mass, momentum, energy totals.
    pub max_drift: [f64; 3],
    pub min_f: f64,
    pub nv_min: usize,
    pub nv_max: usize,
    /// Mean over cells and steps.
    pub nv_mean: f64,
    /// Mean over cells at the final time.
    pub nv_mean_final: f64,
    pub wall_time: f64,
}

/// Relative drift of the totals; momentum is measured against
/// `√(2 M E)`, which stays meaningful when the net momentum vanishes.
fn drift(initial: &[f64; 3], steps: &[StepRecord]) -> [f64; 3] {
    let scale = [initial[0].abs(), (2.0 * initial[0] * initial[2]).abs().sqrt(), initial[2].abs()];
    let mut out = [0.0f64; 3];
    for s in steps {
        for q in 0..3 {
            out[q] = out[q].max((s.totals[q] - initial[q]).abs() / scale[q]);
        }
    }
    out
}

pub fn diagnostics(initial_totals: &[f64; 3], steps: &[StepRecord], dt: f64, wall_time: f64) -> Diagnostics {
    let n = steps.len().max(1) as f64;
    Diagnostics {
        steps: steps.len(),
        dt,
        max_drift: drift(initial_totals, steps),
        min_f: steps.iter().map(|s| s.min_f).fold(f64::INFINITY, f64::min),
        nv_min: steps.iter().map(|s| s.nv_min).min().unwrap_or(0),
        nv_max: steps.iter().map(|s| s.nv_max).max().unwrap_or(0),
        nv_mean: steps.iter().map(|s| s.nv_mean).sum::<f64>() / n,
        nv_mean_final: steps.last().map_or(0.0, |s| s.nv_mean),
        wall_time,
    }
}

impl RunSummary {
    pub fn diagnostics(&self) -> Diagnostics {
        diagnostics(&self.initial_totals, &self.steps, self.dt, self.wall_time)
    }
}
