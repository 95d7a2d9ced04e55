use super::*;
use crate::design::{Bounds, MH, MW, ROT0};
use crate::materials::CostGroup;
use proptest::prelude::*;

fn consts() -> MachineConstants {
    MachineConstants::default()
}

fn initial_geom() -> MachinePatchwork<f64> {
    build_geometry(&DesignVector::initial(), &consts(), &Discretization::default()).unwrap()
}

struct Lcg(u64);
impl Lcg {
    fn next(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64) / ((1u64 << 53) as f64)
    }
}

fn random_feasible(rng: &mut Lcg) -> DesignVector {
    let c = consts();
    let b = Bounds::reference(&c);
    loop {
        let z: Vec<f64> = (0..N_VARS).map(|_| rng.next()).collect();
        let x = b.denormalize(&z);
        if feasibility(&x, &c).feasible(-1e-5) {
            return x;
        }
    }
}

#[test]
fn initial_design_magnet_and_counts() {
    let g = initial_geom();
    let a = g.patch_area(CostGroup::Magnet);
    assert!((a - 0.019 * 0.007).abs() / 1.33e-4 < 1e-12, "magnet area {a}");
    let cps = g.control_point_count();
    // same order as the reference model's 741 control points / 4095 DoFs
    assert!((1000..10000).contains(&cps), "{cps}");
    let magnets: Vec<_> = g.rotor.blocks.iter().filter(|b| b.tag == MaterialTag::Magnet).collect();
    assert_eq!(magnets.len(), 1);
    let coppers = g.stator.blocks.iter().filter(|b| matches!(b.tag, MaterialTag::Copper { .. })).count();
    assert_eq!(coppers, 6);
}

fn row_line_radius_error(s: &SplineSurface<f64>, v: f64, r: f64) -> f64 {
    let (u0, u1) = s.ku.range();
    (0..=400)
        .map(|k| {
            let p = s.eval(u0 + (u1 - u0) * k as f64 / 400.0, v).unwrap();
            ((p[0] * p[0] + p[1] * p[1]).sqrt() - r).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn zero_offsets_keep_circles() {
    let c = consts();
    let g = initial_geom();
    assert!(row_line_radius_error(&g.rotor.surface, 4.0, c.r_rotor) < 1e-12);
    assert!(row_line_radius_error(&g.stator.surface, 1.0, c.r_bore()) < 1e-12);
}

#[test]
fn coupling_arcs_share_the_circle() {
    let c = consts();
    let mut x = DesignVector::initial();
    x.0[ROT0] = 2e-4;
    x.0[ROT0 + 7] = -1e-4;
    let g = build_geometry(&x, &c, &Discretization::default()).unwrap();
    let rc = c.r_coupling();
    assert!(row_line_radius_error(&g.rotor.surface, 5.0, rc) < 1e-10);
    assert!(row_line_radius_error(&g.stator.surface, 0.0, rc) < 1e-10);
}

#[test]
fn symmetric_offsets_keep_pole_symmetry() {
    let mut x = DesignVector::initial();
    x.0[ROT0] = 2e-4;
    x.0[ROT0 + 4] = 2e-4;
    x.0[ROT0 + 2] = -1e-4;
    let g = build_geometry(&x, &consts(), &Discretization::default()).unwrap();
    for s in g.subdomains() {
        let sf = &s.surface;
        for j in 0..sf.nv() {
            for i in 0..sf.nu() {
                let p = sf.points[sf.index(i, j)];
                let q = sf.points[sf.index(sf.nu() - 1 - i, j)];
                assert!((p[0] + q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn antiperiodic_cuts_map_by_rotation() {
    let g = initial_geom();
    let (s, c) = (-g.sector_angle).sin_cos();
    for sd in g.subdomains() {
        let sf = &sd.surface;
        for j in 0..sf.nv() {
            let p = sf.points[sf.index(0, j)];
            let q = sf.points[sf.index(sf.nu() - 1, j)];
            let r = [c * p[0] - s * p[1], s * p[0] + c * p[1]];
            assert!((r[0] - q[0]).abs() < 1e-14 && (r[1] - q[1]).abs() < 1e-14);
            assert_eq!(sf.weights[sf.index(0, j)], sf.weights[sf.index(sf.nu() - 1, j)]);
        }
    }
}

#[test]
fn blocks_conform_on_shared_edges() {
    let g = initial_geom();
    for sd in g.subdomains() {
        for b in &sd.blocks {
            if b.col + 1 < sd.ncols {
                let n = &sd.blocks[b.col + 1 + sd.ncols * b.row];
                for k in 0..3 {
                    assert_eq!(b.patch.points[2 + 3 * k], n.patch.points[3 * k]);
                    assert_eq!(b.patch.weights[2 + 3 * k], n.patch.weights[3 * k]);
                }
            }
            if b.row + 1 < sd.nrows {
                let n = &sd.blocks[b.col + sd.ncols * (b.row + 1)];
                for k in 0..3 {
                    assert_eq!(b.patch.points[6 + k], n.patch.points[k]);
                }
            }
        }
    }
}

#[test]
fn refined_surface_reproduces_blocks() {
    let g = initial_geom();
    for sd in g.subdomains() {
        for b in sd.blocks.iter().step_by(3) {
            for &(u, v) in &[(0.3, 0.2), (0.77, 0.61)] {
                let p = b.patch.eval(u, v).unwrap();
                let q = sd.surface.eval(b.col as f64 + u, b.row as f64 + v).unwrap();
                assert!((p[0] - q[0]).abs() < 1e-13 && (p[1] - q[1]).abs() < 1e-13);
            }
        }
    }
}

#[test]
fn scaling_identity_area_and_round_trip() {
    let g = initial_geom();
    let same = g.apply_scaling(1.0).unwrap();
    assert_eq!(same.rotor.surface.points, g.rotor.surface.points);
    assert_eq!(same.stator.surface.points, g.stator.surface.points);
    let big = g.apply_scaling(2.0).unwrap();
    for (a, b) in g.blocks().zip(big.blocks()) {
        let (a0, a1) = (a.1.patch.area(), b.1.patch.area());
        assert!((a1 - 4.0 * a0).abs() / a1 < 1e-12);
    }
    let back = g.apply_scaling(0.5).unwrap().apply_scaling(2.0).unwrap();
    for (p, q) in back.stator.surface.points.iter().zip(&g.stator.surface.points) {
        assert!((p[0] - q[0]).abs() < 1e-13 && (p[1] - q[1]).abs() < 1e-13);
    }
    assert!(g.apply_scaling(0.0).is_err());
}

#[test]
fn cheap_areas_match_built_geometry() {
    let x = DesignVector::initial();
    let g = initial_geom();
    let a = g.areas();
    let b = material_areas(&x, &consts());
    for grp in [CostGroup::Iron, CostGroup::Copper, CostGroup::Magnet, CostGroup::Air] {
        assert!((a.get(grp) - b.get(grp)).abs() < 1e-15, "{grp:?}");
    }
    // sector annulus from shaft to stator outer radius
    let c = consts();
    let total = a.iron + a.copper + a.magnet + a.air;
    let exact = 0.5 * c.sector_angle() * (c.r_stator_outer.powi(2) - c.r_shaft.powi(2));
    assert!((total - exact).abs() / exact < 1e-12, "{total} vs {exact}");
}

#[test]
fn initial_design_is_feasible() {
    let r = feasibility(&DesignVector::initial(), &consts());
    assert!(r.feasible(0.0), "{:?}", r.values);
}

#[test]
fn bridge_clearance_closed_form() {
    let c = consts();
    let mut x = DesignVector::initial();
    let y_out = c.r_rotor - x.mag();
    let r = c.r_rotor - c.bridge_width - c.bridge_min;
    x.0[MW] = 2.0 * ((r * r - y_out * y_out).sqrt() - c.pocket_width);
    let g = constraint_values(&x, &c);
    assert!(g[0].abs() < 1e-10);
}

#[test]
fn infeasible_design_names_the_clearance() {
    let mut x = DesignVector::initial();
    x.0[MH] = 0.012;
    x.0[design::MAG] = 0.015;
    let e = build_geometry(&x, &consts(), &Discretization::default()).unwrap_err();
    assert!(matches!(e, GeometryError::Infeasible { name: "rim", .. }), "{e}");
}

fn fd_check_feasibility(x: &DesignVector) {
    let c = consts();
    let r = feasibility(x, &c);
    let h = 1e-7;
    for i in 0..N_VARS {
        let mut xp = *x;
        let mut xm = *x;
        xp.0[i] += h;
        xm.0[i] -= h;
        let (gp, gm) = (constraint_values(&xp, &c), constraint_values(&xm, &c));
        for j in 0..N_CONSTRAINTS {
            let fd = (gp[j] - gm[j]) / (2.0 * h);
            let an = r.gradient[j][i];
            let err = (fd - an).abs() / an.abs().max(1e-2);
            assert!(err < 1e-6, "g{j} x{i}: {an} vs {fd}");
        }
    }
}

#[test]
fn feasibility_gradient_matches_fd() {
    fd_check_feasibility(&DesignVector::initial());
    let mut rng = Lcg(99);
    for _ in 0..50 {
        fd_check_feasibility(&random_feasible(&mut rng));
    }
}

#[test]
fn other_degrees_build() {
    for degree in [1, 3] {
        let d = Discretization { degree, refinement: 1, harmonics: 4 };
        let g = build_geometry(&DesignVector::initial(), &consts(), &d).unwrap();
        assert_eq!(g.rotor.surface.ku.degree(), degree);
        let a = g.rotor.surface.area();
        let b = g.apply_scaling(1.0).unwrap().rotor.surface.area();
        assert_eq!(a, b);
    }
}

#[test]
fn export_lists_all_blocks() {
    let g = initial_geom();
    let t = control_points_text(&g);
    assert_eq!(t.matches("copper_slot").count(), 6);
    assert!(t.contains("[rotor]") && t.contains("[stator]"));
    let svg = svg_render(&[(&g, "#000")]);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn feasible_designs_have_positive_jacobians(seed in any::<u64>()) {
        let x = random_feasible(&mut Lcg(seed));
        let d = Discretization { degree: 2, refinement: 1, harmonics: 4 };
        let g = build_geometry(&x, &consts(), &d);
        prop_assert!(g.is_ok(), "{:?}", g.err());
        let g = g.unwrap();
        for sd in g.subdomains() {
            for b in &sd.blocks {
                prop_assert!(b.patch.check_jacobian(4).is_ok());
            }
        }
    }
}

#[test]
fn skipped_blocks_do_not_change_area_derivatives() {
    let c = MachineConstants::default();
    let x = DesignVector::initial();
    for i in crate::design::MAG..crate::design::N_VARS {
        let full = material_areas(&x.seed(i), &c);
        let fast = material_area_derivatives(&x, i, &c);
        for (a, b) in [(full.iron, fast.iron), (full.copper, fast.copper), (full.magnet, fast.magnet), (full.slot, fast.slot)] {
            assert!((a.eps - b).abs() <= 1e-12 * a.eps.abs().max(1e-9), "{i}: {} vs {b}", a.eps);
        }
    }
}
