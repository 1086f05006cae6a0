//! Exact integration of degree-1 polynomials over trapezoids, and over the
//! intersection of sheared transport bands with rectangular phase cells.
//!
//! The integral over a polygon is evaluated on its boundary: with
//! `q = c00 x + c10 x²/2 + c01 x v` (so that `∂q/∂x = p`), the divergence
//! theorem reduces `∫ p` to a sum over directed edges of
//! `Δv · ∫₀¹ q(r(t)) dt`, which is a closed-form cubic in the endpoints.

use crate::reconstruction::PolyField;

/// `p(x, v) = c00 + c10 x + c01 v`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearPoly2 {
    pub c00: f64,
    pub c10: f64,
    pub c01: f64,
}

impl LinearPoly2 {
    pub fn new(c00: f64, c10: f64, c01: f64) -> Self {
        LinearPoly2 { c00, c10, c01 }
    }

    pub fn eval(&self, x: f64, v: f64) -> f64 {
        self.c00 + self.c10 * x + self.c01 * v
    }
}

/// Quadrilateral with vertices `(x, v)`; possibly degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trapezoid {
    pub vertices: [(f64, f64); 4],
}

impl Trapezoid {
    pub fn new(vertices: [(f64, f64); 4]) -> Self {
        Trapezoid { vertices }
    }

    pub fn signed_area(&self) -> f64 {
        signed_basis_integrals(&self.vertices)[0]
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }
}

/// Region `{ x_l - s v <= x <= x_r - s v, v_a <= v <= v_b }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShearedBand {
    pub x_l: f64,
    pub x_r: f64,
    pub v_a: f64,
    pub v_b: f64,
    pub shear: f64,
}

impl ShearedBand {
    pub fn new(x_l: f64, x_r: f64, v_a: f64, v_b: f64, shear: f64) -> Self {
        debug_assert!(x_l < x_r && v_a < v_b && shear >= 0.0);
        ShearedBand { x_l, x_r, v_a, v_b, shear }
    }

    pub fn area(&self) -> f64 {
        (self.x_r - self.x_l) * (self.v_b - self.v_a)
    }

    /// Smallest and largest `x` reached by the band.
    pub fn x_extent(&self) -> (f64, f64) {
        let a = self.x_l - self.shear * self.v_a;
        let b = self.x_l - self.shear * self.v_b;
        let c = self.x_r - self.shear * self.v_a;
        let d = self.x_r - self.shear * self.v_b;
        (a.min(b), c.max(d))
    }
}

/// Axis-aligned phase cell `[x_l, x_r] × [v_a, v_b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_l: f64,
    pub x_r: f64,
    pub v_a: f64,
    pub v_b: f64,
}

/// Integrals of `1`, `x`, `v` over a closed polygon, by the directed-edge
/// formula. Positive for counterclockwise orientation.
pub fn signed_basis_integrals(vertices: &[(f64, f64)]) -> [f64; 3] {
    let n = vertices.len();
    let mut out = [0.0; 3];
    for a in 0..n {
        let (xi, vi) = vertices[a];
        let (xj, vj) = vertices[(a + 1) % n];
        let dx = xj - xi;
        let dv = vj - vi;
        if dv == 0.0 {
            continue;
        }
        out[0] += dv * (xi + 0.5 * dx);
        out[1] += dv * 0.5 * (xi * xi + xi * dx + dx * dx / 3.0);
        out[2] += dv * (xi * vi + 0.5 * (xi * dv + vi * dx) + dx * dv / 3.0);
    }
    out
}

/// Integrals of `1`, `x`, `v` over a polygon, independent of its orientation.
pub fn basis_integrals(vertices: &[(f64, f64)]) -> [f64; 3] {
    let s = signed_basis_integrals(vertices);
    if s[0] < 0.0 {
        [-s[0], -s[1], -s[2]]
    } else {
        s
    }
}

/// Exact `∫_T p dx dv`.
pub fn trapezoid_integral(p: &LinearPoly2, t: &Trapezoid) -> f64 {
    let m = basis_integrals(&t.vertices);
    p.c00 * m[0] + p.c10 * m[1] + p.c01 * m[2]
}

/// Decomposes `band ∩ cell` into trapezoids with horizontal top and bottom
/// sides, calling `emit` with counterclockwise vertices for each non-empty
/// piece.
pub fn for_each_clip_piece(band: &ShearedBand, cell: &Rect, mut emit: impl FnMut([(f64, f64); 4])) {
    let v0 = band.v_a.max(cell.v_a);
    let v1 = band.v_b.min(cell.v_b);
    if !(v1 > v0) {
        return;
    }
    let s = band.shear;
    let tol = 1e-14 * band.v_a.abs().max(band.v_b.abs()).max(band.v_b - band.v_a);

    let mut cuts = [0.0; 6];
    let mut n = 0;
    cuts[n] = v0;
    n += 1;
    if s > 0.0 {
        for line in [band.x_l, band.x_r] {
            for edge in [cell.x_l, cell.x_r] {
                let v = (line - edge) / s;
                if v > v0 && v < v1 {
                    cuts[n] = v;
                    n += 1;
                }
            }
        }
    }
    cuts[n] = v1;
    n += 1;
    let cuts = &mut cuts[..n];
    cuts.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());

    let left = |v: f64| (band.x_l - s * v).max(cell.x_l);
    let right = |v: f64| (band.x_r - s * v).min(cell.x_r);

    let mut lo = cuts[0];
    for &hi in &cuts[1..] {
        if hi - lo <= tol {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        if right(mid) > left(mid) {
            let (la, lb) = (left(lo), left(hi));
            let ra = right(lo).max(la);
            let rb = right(hi).max(lb);
            emit([(la, lo), (ra, lo), (rb, hi), (lb, hi)]);
        }
        lo = hi;
    }
}

/// Trapezoids covering `band ∩ cell`; empty when they do not overlap.
pub fn clip_band_to_cell(band: &ShearedBand, cell: &Rect) -> Vec<Trapezoid> {
    let mut out = Vec::new();
    for_each_clip_piece(band, cell, |v| out.push(Trapezoid::new(v)));
    out
}

/// Integrals of `1`, `x - origin.0`, `v - origin.1` over `band ∩ cell`.
pub fn band_cell_moments(band: &ShearedBand, cell: &Rect, origin: (f64, f64)) -> [f64; 3] {
    let mut acc = [0.0; 3];
    for_each_clip_piece(band, cell, |verts| {
        let local = verts.map(|(x, v)| (x - origin.0, v - origin.1));
        let m = signed_basis_integrals(&local);
        acc[0] += m[0];
        acc[1] += m[1];
        acc[2] += m[2];
    });
    acc
}

/// `(∫P, ∫Q, ∫R)` over a sheared band, summed over every phase cell of
/// `field` it overlaps. Parts of the band outside the field's velocity
/// coverage contribute nothing.
pub fn integrate_over_band(field: &PolyField, band: &ShearedBand) -> [f64; 3] {
    let space = &field.space;
    let dx = space.dx();
    let (xa, xb) = band.x_extent();
    let i_lo = ((xa - space.x_min) / dx).floor() as isize;
    let i_hi = ((xb - space.x_min) / dx).ceil() as isize - 1;

    let mut out = [0.0; 3];
    for ic in i_lo..=i_hi {
        let view = field.cell(ic);
        let grid = &view.polys.grid;
        let Some((k_lo, k_hi)) = grid.cells_overlapping(band.v_a, band.v_b) else {
            continue;
        };
        let x_c = view.x_center;
        for k in k_lo..=k_hi {
            let v_c = grid.node(k);
            let rect = Rect {
                x_l: x_c - 0.5 * dx,
                x_r: x_c + 0.5 * dx,
                v_a: v_c - 0.5 * grid.dv,
                v_b: v_c + 0.5 * grid.dv,
            };
            let m = band_cell_moments(band, &rect, (x_c, v_c));
            if m[0] == 0.0 {
                continue;
            }
            let polys = &view.polys.coeffs[k];
            for (q, p) in polys.iter().enumerate() {
                let sx = if view.ghost { 0.0 } else { p.sx };
                out[q] += p.value * m[0] + sx * m[1] + p.sv * m[2];
            }
        }
    }
    out
}
