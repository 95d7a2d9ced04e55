use super::*;
use crate::design::{MAG, MH, MW, ROT0, SD1, STA0, SW2};
use crate::geometry::{material_areas, Discretization};
use crate::model::OperatingSet;
use crate::solver::{angle_grid_deg, solve_state};

fn coarse() -> Model {
    Model {
        disc: Discretization { degree: 2, refinement: 1, harmonics: 6 },
        ops: OperatingSet { current_levels: vec![0.0, 1.0], betas: angle_grid_deg(2.0, 4) },
        ..Model::default()
    }
}

fn tight() -> NewtonOptions {
    NewtonOptions { rel_tol: 1e-13, abs_tol: 0.0, ..NewtonOptions::default() }
}

#[test]
fn adjoint_equation_is_satisfied() {
    let m = coarse();
    let sys = m.system(&DesignVector::initial()).unwrap();
    let op = OperatingPoint { current_scale: 1.0, beta: 0.05, phi0: 0.2 };
    let s = solve_state(&sys, &op, m.j_amp(), None, &m.newton).unwrap();
    let a = adjoint_state(&sys, &s).unwrap();
    assert!(a.residual < 1e-10, "{}", a.residual);
}

#[test]
fn unconverged_state_is_refused() {
    let m = coarse();
    let sys = m.system(&DesignVector::initial()).unwrap();
    let op = OperatingPoint { current_scale: 1.0, beta: 0.0, phi0: 0.0 };
    let mut s = solve_state(&sys, &op, m.j_amp(), None, &m.newton).unwrap();
    s.residual_norm = 2.0 * s.tolerance;
    assert!(matches!(adjoint_state(&sys, &s), Err(SolverError::NotConverged(_))));
}

#[test]
fn shape_derivative_matches_reassembly() {
    let m = coarse();
    let x = DesignVector::initial();
    let bounds = Bounds::reference(&m.machine);
    let sys = m.system(&x).unwrap();
    let op = OperatingPoint { current_scale: 1.0, beta: 0.07, phi0: 0.3 };
    let s = solve_state(&sys, &op, m.j_amp(), None, &m.newton).unwrap();
    for var in [MAG, MH, MW, SD1, SW2, ROT0 + 1, STA0 + 2] {
        let dir = ShapeDirection::new(&m, &sys, &x, var).unwrap();
        assert!(dir.moving_elements() > 0);
        let an = dir.residual_derivative(&sys, &s.z, s.j_amp, &op);
        let h = 1e-6 * bounds.width(var);
        let f = |sign: f64| {
            let mut xs = x;
            xs.0[var] += sign * h;
            let ss = m.system(&xs).unwrap();
            ss.residual(&s.z, op.beta, &ss.rhs(m.j_amp(), &op))
        };
        let (fp, fm) = (f(1.0), f(-1.0));
        let scale = an.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let err = an
            .iter()
            .zip(fp.iter().zip(&fm))
            .fold(0.0f64, |a, (d, (p, q))| a.max((d - (p - q) / (2.0 * h)).abs()));
        assert!(err <= 1e-6 * scale, "{}: {err:e} vs {scale:e}", NAMES[var]);
    }
}

#[test]
fn scale_variables_follow_closed_form() {
    let m = coarse();
    let x = DesignVector::initial();
    let e = m.evaluate(&x).unwrap();
    let g = adjoint_gradient(&m, &e, &[L, KR]).unwrap();
    let c = e.components;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    assert!(rel(g.t_mean[L], c.t_mean / x.l()) < 1e-12);
    assert!(rel(g.t_mean[KR], 2.0 * c.t_mean / x.kr()) < 1e-12);
    assert!(rel(g.cost[L], c.cost / x.l()) < 1e-12);
    assert!(rel(g.cost[KR], 2.0 * c.cost / x.kr()) < 1e-12);
    assert!(rel(g.joule[L], c.joule / x.l()) < 1e-12);
    assert!(rel(g.joule[KR], 2.0 * c.joule / x.kr()) < 1e-12);
    for (lvl, dts) in e.levels.iter().zip(&g.torques) {
        for (&(_, t), d) in lvl.stats.torques.iter().zip(dts) {
            assert!((d[L] - t / x.l()).abs() <= 1e-12 * t.abs());
            assert!((d[KR] - 2.0 * t / x.kr()).abs() <= 1e-12 * t.abs());
        }
    }
}

#[test]
fn magnet_width_cost_derivative() {
    // ∂M/∂MW: magnet strip L kR² ρ c MH, minus the iron it displaces,
    // plus the pockets that move outward (no cost).
    let m = coarse();
    let x = DesignVector::initial();
    let e = m.evaluate(&x).unwrap();
    let g = adjoint_gradient(&m, &e, &[MW]).unwrap();
    let h = 1e-6 * Bounds::reference(&m.machine).width(MW);
    let cost = |s: f64| {
        let mut xs = x;
        xs.0[MW] += s * h;
        crate::scaling::cost_from_areas(&material_areas(&xs, &m.machine), xs.l(), xs.kr(), &m.materials).total
    };
    let fd = (cost(1.0) - cost(-1.0)) / (2.0 * h);
    assert!((g.cost[MW] - fd).abs() < 1e-6 * fd.abs(), "{} {fd}", g.cost[MW]);
    let mt = &m.materials.magnet;
    let strip = x.l() * mt.density * mt.unit_cost * x.mh();
    assert!(g.cost[MW] < strip && g.cost[MW] > 0.0);
}

#[test]
fn adjoint_matches_finite_differences_on_coarse_model() {
    let m = coarse();
    let x = DesignVector::initial();
    let b = Bounds::reference(&m.machine);
    let vars = [PHI0, MAG, MW, SW2, ROT0 + 2, STA0 + 1];
    let r = gradient_check(&m, &x, &b, &vars, 1e-6, &tight()).unwrap();
    for e in &r.entries {
        assert!(e.pass, "{} d/d{}: adjoint {} fd {} rel {:e}", e.output.name(), e.name(), e.adjoint, e.fd, e.rel_error);
    }
    let sorted = r.sorted(Output::FOpt);
    assert!(sorted.windows(2).all(|w| w[0].rel_error >= w[1].rel_error));
}

#[test]
fn quadratic_differences_are_exact() {
    let f = |x: f64| Ok::<_, ()>(3.0 * x * x - 2.0 * x + 1.0);
    let rows = fd_table(f, 0.7, 6.0 * 0.7 - 2.0, &[1e-1, 1e-2, 1e-3]).unwrap();
    assert!(rows.iter().all(|r| r.error < 1e-12), "{rows:?}");
}

#[test]
fn differences_converge_at_second_order() {
    let f = |x: f64| Ok::<_, ()>(x.sin());
    let rows = fd_table(f, 0.4, 0.4f64.cos(), &[1e-2, 5e-3, 2.5e-3]).unwrap();
    for w in rows.windows(2) {
        let ratio = w[0].error / w[1].error;
        assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
    }
}

#[test]
fn comparison_rule() {
    let c = compare(Output::FOpt, MW, 1.0, 1.0 + 1e-6, 1.0);
    assert!(c.pass);
    assert!(!compare(Output::FOpt, MW, 1.0, -1.0, 1.0).pass);
    assert!(compare(Output::Cost, PHI0, 0.0, 1e-10, 1.0).pass);
    assert!(!compare(Output::Cost, PHI0, 0.0, 1e-6, 1.0).pass);
}

#[test]
fn gradient_cost_barely_grows_with_variables() {
    let m = Model::default();
    let e = m.evaluate(&DesignVector::initial()).unwrap();
    let all: Vec<usize> = (0..N_VARS).collect();
    let time = |vars: &[usize]| {
        let t = std::time::Instant::now();
        adjoint_gradient(&m, &e, vars).unwrap();
        t.elapsed().as_secs_f64()
    };
    // interleaved, best of three, so that load from other tests hits both
    let (mut one, mut every) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..3 {
        one = one.min(time(&[MW]));
        every = every.min(time(&all));
    }
    assert!(every < 2.0 * one, "22 variables {every:.3}s vs 1 variable {one:.3}s");
}
