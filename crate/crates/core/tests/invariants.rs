use bgk_lvg::conservation::weighted_l2_correct;
use bgk_lvg::grid::{
    discrete_moments, maxwellian, maxwellian_value, Boundary, CellDistribution, CollisionModel, DistributionField,
    GasParams, MomentSet, SpatialGrid, VelocityGrid,
};
use bgk_lvg::lvg::{build_local_grid, time_step_from_cfl, LvgSolver, Order, SolverConfig, SolverState};
use bgk_lvg::quadrature::{trapezoid_integral, LinearPoly2, Trapezoid};
use bgk_lvg::reference::ReferenceSolver;
use proptest::prelude::*;

fn moments() -> impl Strategy<Value = MomentSet> {
    (0.1f64..5.0, -3.0f64..3.0, 0.05f64..20.0).prop_map(|(rho, u, rt)| MomentSet::from_primitive(rho, u, rt))
}

fn poly() -> impl Strategy<Value = LinearPoly2> {
    (-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b, c)| LinearPoly2::new(a, b, c))
}

/// Trapezoid with horizontal sides: `(va, vb, bottom (l, r), top (l, r))`.
fn trapezoid() -> impl Strategy<Value = (f64, f64, (f64, f64), (f64, f64))> {
    (-4.0f64..4.0, 0.01f64..3.0, -3.0f64..3.0, 0.0f64..2.0, -3.0f64..3.0, 0.01f64..2.0)
        .prop_map(|(va, h, bl, bw, tl, tw)| (va, va + h, (bl, bl + bw), (tl, tl + tw)))
}

fn trap(va: f64, vb: f64, bottom: (f64, f64), top: (f64, f64)) -> Trapezoid {
    Trapezoid::new([(bottom.0, va), (bottom.1, va), (top.1, vb), (top.0, vb)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lattice_covers_hottest_neighbour_and_resolves_coldest(
        center in moments(),
        others in prop::collection::vec(moments(), 0..6),
        alpha in 4.0f64..12.0,
        beta in 0.1f64..1.0,
    ) {
        let mut stencil = others.clone();
        stencil.push(center);
        let g = build_local_grid(&center, &stencil, alpha, beta).unwrap();
        let rts: Vec<f64> = stencil.iter().map(|m| m.rt().unwrap()).collect();
        let rt_min = rts.iter().copied().fold(f64::INFINITY, f64::min);
        let rt_max = rts.iter().copied().fold(0.0, f64::max);
        let u = center.velocity();
        prop_assert!((g.dv - beta * rt_min.sqrt()).abs() <= 1e-12 * g.dv);
        prop_assert_eq!(g.nv % 2, 0);
        prop_assert!((g.v_min + g.v_max() - 2.0 * u).abs() <= 1e-9 * (1.0 + g.v_max().abs()));
        prop_assert!(g.v_max() - u >= alpha * rt_max.sqrt() * (1.0 - 1e-9));
        prop_assert!(g.v_max() - u < alpha * rt_max.sqrt() + g.dv);
    }

    #[test]
    fn wider_stencil_never_coarsens_lattice(
        center in moments(),
        others in prop::collection::vec(moments(), 0..6),
        extra in moments(),
    ) {
        let mut stencil = others.clone();
        stencil.push(center);
        let a = build_local_grid(&center, &stencil, 10.0, 0.5).unwrap();
        stencil.push(extra);
        let b = build_local_grid(&center, &stencil, 10.0, 0.5).unwrap();
        prop_assert!(b.nv >= a.nv);
        prop_assert!(b.dv <= a.dv);
    }

    #[test]
    fn correction_hits_target_moments(
        m in moments(),
        noise in prop::collection::vec(-0.2f64..0.2, 64),
        scale in (0.9f64..1.1, -0.1f64..0.1, 0.9f64..1.1),
        weighted in any::<bool>(),
    ) {
        let rt = m.rt().unwrap();
        let grid = VelocityGrid::spanning(m.velocity() - 8.0 * rt.sqrt(), m.velocity() + 8.0 * rt.sqrt(), 63).unwrap();
        let f: Vec<f64> = grid
            .nodes()
            .zip(&noise)
            .map(|(v, n)| maxwellian_value(m.rho, m.velocity(), rt, v) * (1.0 + n))
            .collect();
        let target = MomentSet::from_primitive(m.rho * scale.0, m.velocity() + scale.1 * rt.sqrt(), rt * scale.2);
        let h = if weighted { maxwellian(&target, &grid).unwrap() } else { vec![1.0; grid.len()] };
        let out = weighted_l2_correct(&f, &h, &target, &grid).unwrap();
        let got = discrete_moments(&out, &grid);
        let mom_scale = (2.0 * target.rho * target.energy).sqrt();
        prop_assert!((got.rho - target.rho).abs() <= 1e-12 * target.rho);
        prop_assert!((got.mom - target.mom).abs() <= 1e-12 * mom_scale);
        prop_assert!((got.energy - target.energy).abs() <= 1e-12 * target.energy);
    }

    #[test]
    fn trapezoid_integral_is_additive_under_horizontal_cuts(
        p in poly(),
        (va, vb, bottom, top) in trapezoid(),
        s in 0.05f64..0.95,
    ) {
        let vm = va + s * (vb - va);
        let mid = (bottom.0 + s * (top.0 - bottom.0), bottom.1 + s * (top.1 - bottom.1));
        let whole = trapezoid_integral(&p, &trap(va, vb, bottom, top));
        let parts = trapezoid_integral(&p, &trap(va, vm, bottom, mid)) + trapezoid_integral(&p, &trap(vm, vb, mid, top));
        let scale = trap(va, vb, bottom, top).area() * (p.c00.abs() + 6.0 * p.c10.abs() + 8.0 * p.c01.abs());
        prop_assert!((whole - parts).abs() <= 1e-13 * scale.max(1e-300));
    }

    #[test]
    fn trapezoid_integral_is_translation_invariant(
        p in poly(),
        (va, vb, bottom, top) in trapezoid(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        // q(x, v) = p(x - a, v - b) over the trapezoid moved by (a, b).
        let q = LinearPoly2::new(p.c00 - p.c10 * a - p.c01 * b, p.c10, p.c01);
        let moved = trap(va + b, vb + b, (bottom.0 + a, bottom.1 + a), (top.0 + a, top.1 + a));
        let x = trapezoid_integral(&p, &trap(va, vb, bottom, top));
        let y = trapezoid_integral(&q, &moved);
        let scale = moved.area() * (p.c00.abs() + 10.0 * p.c10.abs() + 12.0 * p.c01.abs());
        prop_assert!((x - y).abs() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn periodic_reference_shift_conserves_every_node(
        data in prop::collection::vec(0.0f64..1.0, 24 * 9),
        dt in 0.0f64..0.5,
    ) {
        let space = SpatialGrid::new(0.0, 1.0, 24, Boundary::Periodic).unwrap();
        let grid = VelocityGrid::spanning(-4.0, 4.0, 8).unwrap();
        let solver = ReferenceSolver {
            space,
            gas: GasParams::new(1.0, CollisionModel::Constant(1.0)).unwrap(),
            order: Order::Second,
            theta: 1.5,
            cfl: 1.0,
        };
        let out = solver.shifted(&grid, &data, dt);
        for j in 0..grid.len() {
            let a: f64 = data[j * 24..(j + 1) * 24].iter().sum();
            let b: f64 = out[j * 24..(j + 1) * 24].iter().sum();
            prop_assert!((a - b).abs() <= 1e-13 * a.max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn local_grid_step_conserves_totals(
        rho in prop::collection::vec(0.5f64..1.5, 16),
        u in prop::collection::vec(-0.5f64..0.5, 16),
        rt in prop::collection::vec(0.5f64..2.0, 16),
        eps in prop_oneof![Just(1e-6), Just(1e-2), Just(1.0)],
        cfl in 0.5f64..3.0,
    ) {
        let space = SpatialGrid::new(0.0, 1.0, 16, Boundary::Periodic).unwrap();
        let config = SolverConfig::new(GasParams::new(1.0, CollisionModel::Constant(eps)).unwrap(), cfl, Order::Second);
        let ms: Vec<MomentSet> = (0..16).map(|i| MomentSet::from_primitive(rho[i], u[i], rt[i])).collect();
        let cells = (0..16)
            .map(|i| {
                let stencil: Vec<MomentSet> = (-1..=1isize).map(|o| ms[space.source_cell(i as isize + o)]).collect();
                let g = build_local_grid(&ms[i], &stencil, config.alpha, config.beta).unwrap();
                CellDistribution::new(g, maxwellian(&ms[i], &g).unwrap()).unwrap()
            })
            .collect();
        let field = DistributionField { cells };
        let grids: Vec<VelocityGrid> = field.cells.iter().map(|c| c.grid).collect();
        let dt = time_step_from_cfl(cfl, &grids, space.dx()).unwrap();
        let start = field.totals(space.dx());
        let solver = LvgSolver::new(config, space).unwrap();
        let mut state = SolverState::new(field);
        for _ in 0..3 {
            solver.step(&mut state, dt).unwrap();
        }
        let end = state.field.totals(space.dx());
        let scale = [start[0], (2.0 * start[0] * start[2]).sqrt(), start[2]];
        for q in 0..3 {
            prop_assert!((end[q] - start[q]).abs() <= 1e-12 * scale[q], "q {}: {} vs {}", q, end[q], start[q]);
        }
    }
}
