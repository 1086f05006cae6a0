//! Weighted L² moment correction.
//!
//! Given a candidate distribution `f`, a positive weight `h` and target
//! moments `U = (rho, rho*U, E)`, returns `g∘h` where `g` minimises
//! `|f∘(1/h) - g|₂` subject to the discrete moments of `g∘h` being `U`.
//! With `h ≡ 1` this is the classical L² projection.
//!
//! The closed form is
//! `g∘h = f + (Cᵀ (C Cᵀ)⁻¹ (U - C(f∘1/h)))∘h`, with `C` the 3×N matrix of
//! weighted collision invariants. The constraint rows are formed in the
//! basis `(1, (v-c)/s, ((v-c)/s)²/2)` centred and scaled by the weight;
//! it spans the same space as `(1, v, v²/2)`, so the feasible set and the
//! minimiser are unchanged while the 3×3 Gram matrix stays well
//! conditioned for grids far from `v = 0`.

use crate::error::{Result, SolverError};
use crate::grid::{discrete_moments, MomentSet, VelocityGrid};

/// Relative floor applied to the weight: `h_j <- max(h_j, WEIGHT_FLOOR * max h)`.
pub const WEIGHT_FLOOR: f64 = 1e-14;

/// Gram matrices with reciprocal 1-norm condition below this are rejected.
pub const RCOND_MIN: f64 = 1e-13;

type Mat3 = [[f64; 3]; 3];

/// Weighted constraint rows and their Gram matrix for one velocity lattice.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    /// Velocity shift of the invariant basis.
    pub center: f64,
    /// Velocity scale of the invariant basis.
    pub scale: f64,
    /// Normalised, floored weight.
    pub weight: Vec<f64>,
    /// `rows[k][j] = h_j * psi_k(v_j) * dv`.
    pub rows: [Vec<f64>; 3],
    pub gram: Mat3,
}

impl ConstraintMatrix {
    pub fn new(h: &[f64], grid: &VelocityGrid) -> Result<Self> {
        if h.len() != grid.len() {
            return Err(SolverError::GridMismatch(format!(
                "weight of length {} on a {}-node grid",
                h.len(),
                grid.len()
            )));
        }
        let h_max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(h_max > 0.0 && h_max.is_finite()) {
            return Err(SolverError::SingularGram { rcond: 0.0 });
        }
        let weight: Vec<f64> = h.iter().map(|&x| (x / h_max).max(WEIGHT_FLOOR)).collect();

        let (mut w_sum, mut w_v) = (0.0, 0.0);
        for (j, &w) in weight.iter().enumerate() {
            w_sum += w * w;
            w_v += w * w * grid.node(j);
        }
        let center = w_v / w_sum;
        let mut w_var = 0.0;
        for (j, &w) in weight.iter().enumerate() {
            let d = grid.node(j) - center;
            w_var += w * w * d * d;
        }
        let mut scale = (w_var / w_sum).sqrt();
        if !(scale > 0.0) {
            scale = grid.dv;
        }

        let n = grid.len();
        let mut rows = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (j, &w) in weight.iter().enumerate() {
            let psi = basis(grid.node(j), center, scale);
            for k in 0..3 {
                rows[k][j] = w * psi[k] * grid.dv;
            }
        }
        let mut gram = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in a..3 {
                let s: f64 = rows[a].iter().zip(&rows[b]).map(|(x, y)| x * y).sum();
                gram[a][b] = s;
                gram[b][a] = s;
            }
        }
        Ok(ConstraintMatrix { center, scale, weight, rows, gram })
    }

    /// Moment residual `target - moments(f)` expressed in the shifted basis.
    fn to_basis(&self, d: MomentSet) -> [f64; 3] {
        let c = self.center;
        let s = self.scale;
        [
            d.rho,
            (d.mom - c * d.rho) / s,
            (d.energy - c * d.mom + 0.5 * c * c * d.rho) / (s * s),
        ]
    }
}

#[inline]
fn basis(v: f64, center: f64, scale: f64) -> [f64; 3] {
    let y = (v - center) / scale;
    [1.0, y, 0.5 * y * y]
}

fn inverse3(m: &Mat3) -> Option<Mat3> {
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let adj = [
        [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ];
    let det = m[0][0] * adj[0][0] + m[0][1] * adj[1][0] + m[0][2] * adj[2][0];
    if !(det.abs() > 0.0) || !det.is_finite() {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            inv[r][c] = adj[r][c] / det;
        }
    }
    Some(inv)
}

fn norm1(m: &Mat3) -> f64 {
    (0..3).map(|c| (0..3).map(|r| m[r][c].abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn matvec(m: &Mat3, x: &[f64; 3]) -> [f64; 3] {
    let mut y = [0.0; 3];
    for r in 0..3 {
        y[r] = m[r][0] * x[0] + m[r][1] * x[1] + m[r][2] * x[2];
    }
    y
}

/// Reciprocal 1-norm condition number of a 3×3 matrix (0 if singular).
pub fn rcond(m: &Mat3) -> f64 {
    match inverse3(m) {
        Some(inv) => 1.0 / (norm1(m) * norm1(&inv)),
        None => 0.0,
    }
}

/// Weighted L² correction of `f` towards the moments `target`.
pub fn weighted_l2_correct(
    f: &[f64],
    h: &[f64],
    target: &MomentSet,
    grid: &VelocityGrid,
) -> Result<Vec<f64>> {
    if f.len() != grid.len() {
        return Err(SolverError::GridMismatch(format!(
            "{} values on a {}-node grid",
            f.len(),
            grid.len()
        )));
    }
    let cm = ConstraintMatrix::new(h, grid)?;
    let inv = inverse3(&cm.gram).ok_or(SolverError::SingularGram { rcond: 0.0 })?;
    let rc = 1.0 / (norm1(&cm.gram) * norm1(&inv));
    if !(rc >= RCOND_MIN) {
        return Err(SolverError::SingularGram { rcond: rc });
    }

    let m = discrete_moments(f, grid);
    let rhs = cm.to_basis(MomentSet::new(
        target.rho - m.rho,
        target.mom - m.mom,
        target.energy - m.energy,
    ));
    // One step of iterative refinement on the 3×3 solve.
    let mut lambda = matvec(&inv, &rhs);
    let resid = matvec(&cm.gram, &lambda);
    let r = [rhs[0] - resid[0], rhs[1] - resid[1], rhs[2] - resid[2]];
    let dl = matvec(&inv, &r);
    for k in 0..3 {
        lambda[k] += dl[k];
    }

    let out = f
        .iter()
        .enumerate()
        .map(|(j, &fj)| {
            let w = cm.weight[j];
            let ct = cm.rows[0][j] * lambda[0] + cm.rows[1][j] * lambda[1] + cm.rows[2][j] * lambda[2];
            fj + w * ct
        })
        .collect();
    Ok(out)
}

/// Moment-exact version of a sampled Maxwellian: minimises `|1 - p|` and
/// returns `p∘M`.
pub fn correct_maxwellian(m: &[f64], target: &MomentSet, grid: &VelocityGrid) -> Result<Vec<f64>> {
    weighted_l2_correct(m, m, target, grid)
}

/// Corrects a transported distribution using the (corrected) Maxwellian as
/// the weight.
pub fn correct_transported(
    f_tilde: &[f64],
    m_corrected: &[f64],
    target: &MomentSet,
    grid: &VelocityGrid,
) -> Result<Vec<f64>> {
    weighted_l2_correct(f_tilde, m_corrected, target, grid)
}
