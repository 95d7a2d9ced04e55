use super::*;
use crate::design::{self, MachineConstants};
use crate::geometry::Discretization;
use crate::model::OperatingSet;
use crate::solver::angle_grid_deg;

fn coarse(weights: Weights) -> Model {
    Model {
        disc: Discretization { degree: 2, refinement: 1, harmonics: 6 },
        ops: OperatingSet { current_levels: vec![0.0, 1.0], betas: angle_grid_deg(2.0, 3) },
        weights,
        ..Model::default()
    }
}

fn bounds() -> Bounds {
    Bounds::reference(&MachineConstants::default())
}

fn short(iters: usize) -> AlOptions {
    AlOptions { max_iters: iters, ..AlOptions::default() }
}

#[test]
fn problem_gradients_match_differences_in_box_units() {
    let m = coarse(Weights::default());
    let b = bounds();
    let x0 = DesignVector::initial();
    let f_ref = 2.0;
    let mut p = DesignProblem::new(&m, b.clone(), f_ref);
    let z0 = b.normalize(&x0).to_vec();
    let (gf, gc) = p.gradients(&z0).unwrap();
    let h = 1e-6;
    for i in [design::PHI0, design::KR, design::MW, design::SW2] {
        let mut zp = z0.clone();
        let mut zm = z0.clone();
        zp[i] += h;
        zm[i] -= h;
        let (fp, cp) = p.values(&zp).unwrap();
        let (fm, cm) = p.values(&zm).unwrap();
        let dfd = (fp - fm) / (2.0 * h);
        assert!((dfd - gf[i]).abs() < 1e-5 * (1.0 + gf[i].abs()), "f {i}: {dfd} vs {}", gf[i]);
        let dc = (cp[0] - cm[0]) / (2.0 * h);
        assert!((dc - gc[0][i]).abs() < 1e-5 * (1.0 + gc[0][i].abs()), "c0 {i}: {dc} vs {}", gc[0][i]);
    }
    let (f, c) = p.values(&z0).unwrap();
    let e = m.evaluate(&x0).unwrap().components;
    assert!((f - e.f_opt / f_ref).abs() < 1e-12);
    assert!((c[0] - (1.0 - e.t_mean / m.t_target)).abs() < 1e-12);
    assert!(c[1..].iter().all(|&v| v < 0.0));
}

#[test]
fn infeasible_or_invalid_starts_are_refused() {
    let m = coarse(Weights::default());
    let b = bounds();
    let mut x = DesignVector::initial();
    x.0[design::MW] = 30e-3;
    assert!(matches!(optimize(&m, &b, &x, &short(1)), Err(OptimizeError::InfeasibleStart(_))));
    let neg = coarse(Weights { m1: -1.0, ..Weights::default() });
    assert!(matches!(
        optimize(&neg, &b, &DesignVector::initial(), &short(1)),
        Err(OptimizeError::NegativeWeight)
    ));
    let mut bad = b.clone();
    bad.lo[design::L] = 1.0;
    assert!(matches!(
        optimize(&m, &bad, &DesignVector::initial(), &short(1)),
        Err(OptimizeError::BadBounds(0))
    ));
}

#[test]
fn zero_iterations_return_the_start() {
    let m = coarse(Weights::default());
    let x0 = DesignVector::initial();
    let r = optimize(&m, &bounds(), &x0, &short(0)).unwrap();
    assert_eq!(r.x, x0);
    assert_eq!(r.components, r.initial);
    assert_eq!(r.trace.len(), 1);
}

#[test]
fn optimization_improves_and_respects_constraints() {
    let m = coarse(Weights::default());
    let b = bounds();
    let r = optimize(&m, &b, &DesignVector::initial(), &short(6)).unwrap();
    assert!(r.components.f_opt < r.initial.f_opt);
    assert!(b.contains(&r.x));
    assert!(feasibility(&r.x, &m.machine).feasible(0.0));
    for w in r.trace.windows(2) {
        assert_eq!(w[1].iter, w[0].iter + 1);
    }
    let last = r.trace.last().unwrap();
    assert_eq!(last.components, r.components);
}

#[test]
fn scaling_all_weights_leaves_the_path_unchanged() {
    let b = bounds();
    let x0 = DesignVector::initial();
    let a = optimize(&coarse(Weights::default()), &b, &x0, &short(3)).unwrap();
    let s = optimize(&coarse(Weights::default().scaled(7.0)), &b, &x0, &short(3)).unwrap();
    for i in 0..N_VARS {
        assert!((a.x.0[i] - s.x.0[i]).abs() <= 1e-9 * b.width(i), "{}", design::NAMES[i]);
    }
    assert!((s.components.f_opt / a.components.f_opt - 7.0).abs() < 1e-9);
}

#[test]
fn cost_only_weights_end_on_active_constraints() {
    let m = coarse(Weights { m1: 1.0, m2: 0.0, m3: 0.0 });
    let b = bounds();
    let r = optimize(&m, &b, &DesignVector::initial(), &short(8)).unwrap();
    let (rows, vars) = r.active_set(&b, 1e-6);
    assert!(!rows.is_empty() || !vars.is_empty());
    // the radial scale carries the steepest cost gradient in box units
    assert!(vars.contains(&design::KR), "{vars:?}");
    assert!(r.x.l() < DesignVector::initial().l());
    assert!(r.components.cost < r.initial.cost);
}

#[test]
fn comparison_rows_and_percentages() {
    let m = coarse(Weights::default());
    let e0 = m.evaluate(&DesignVector::initial()).unwrap();
    let mut x = DesignVector::initial();
    x.0[design::L] = 80e-3;
    let e1 = m.evaluate(&x).unwrap();
    let rows = comparison(&e0, &e1);
    assert_eq!(rows.len(), 8);
    let t = rows.iter().find(|r| r.name == "mean_torque").unwrap();
    // torque is linear in the stack length: 100 mm → 80 mm
    assert!((t.change_percent() + 20.0).abs() < 1e-9);
    let c = rows.iter().find(|r| r.name == "cost_total").unwrap();
    assert!((c.change_percent() + 20.0).abs() < 1e-9);
    assert_eq!(ReportRow { name: "z", initial: 0.0, optimized: 0.0 }.change_percent(), 0.0);
}

#[test]
fn complementarity_of_a_manual_optimum() {
    let o = Optimum {
        x: DesignVector::initial(),
        initial: coarse_components(1.0, 1.0, 1.0),
        components: coarse_components(1.0, 1.0, 1.0),
        status: Status::Converged,
        kkt: 0.0,
        multipliers: vec![0.5, 0.0, 0.0],
        constraints: vec![-1e-9, -2.0, 0.0],
        trace: vec![],
        evaluations: 1,
    };
    assert!((o.complementarity() - 5e-10).abs() < 1e-20);
    let (rows, _) = o.active_set(&bounds(), 1e-6);
    assert_eq!(rows, vec![0, 2]);
}

fn coarse_components(cost: f64, ripple: f64, joule: f64) -> Components {
    Components { f_opt: cost + ripple + joule, cost, ripple, joule, t_mean: 2.0 }
}

#[test]
fn pareto_filter_matches_brute_force() {
    // synthetic trade-off with a few dominated points and a failure
    let grid: Vec<Weights> = (0..12)
        .map(|k| Weights { m1: (k % 4) as f64, m2: (k / 4) as f64, m3: 1.0 })
        .collect();
    let run = |w: Weights| {
        if w.m1 == 3.0 && w.m2 == 2.0 {
            return Err(OptimizeError::NegativeWeight);
        }
        let a = 1.0 / (1.0 + w.m1);
        let b = 1.0 / (1.0 + w.m2);
        let j = if w.m1 == 1.0 { 5.0 } else { 1.0 };
        Ok((DesignVector::initial(), coarse_components(a, b, j)))
    };
    let pts = pareto_sweep(&grid, run);
    assert_eq!(pts.len(), grid.len());
    assert!(pts[11].result.is_err() && !pts[11].dominated);
    let ok: Vec<Components> = pts.iter().filter_map(|p| p.result.as_ref().ok().map(|r| r.1)).collect();
    for p in &pts {
        if let Ok((_, c)) = &p.result {
            let brute = ok.iter().any(|o| {
                let le = o.cost <= c.cost && o.ripple <= c.ripple && o.joule <= c.joule;
                le && (o.cost, o.ripple, o.joule) != (c.cost, c.ripple, c.joule)
            });
            assert_eq!(p.dominated, brute, "{:?}", p.weights);
        }
    }
    assert!(pts.iter().any(|p| p.dominated));
    assert!(pts.iter().any(|p| p.result.is_ok() && !p.dominated));
}
