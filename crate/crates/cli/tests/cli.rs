use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pmsm_iga::io::Table;

const COARSE: &str = "\
[discretization]
degree = 2
refinement = 1
harmonics = 6
";

fn pmsm(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_pmsm"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn table(dir: &Path, name: &str) -> Table {
    Table::parse(&fs::read_to_string(dir.join("out").join(name)).unwrap()).unwrap()
}

fn summary(dir: &Path, key: &str) -> f64 {
    let t = table(dir, "solve_summary.csv");
    let r = t.rows.iter().position(|r| r[0] == key).unwrap();
    t.value(r, "value").unwrap()
}

fn out_file(dir: &Path, name: &str) -> PathBuf {
    dir.join("out").join(name)
}

#[test]
fn solve_exports_a_saturated_field() {
    let d = tempfile::tempdir().unwrap();
    let o = pmsm(d.path(), "", &["solve", "--beta", "0", "--current-scale", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["field_rotor.vtk", "field_stator.vtk", "solve_summary.csv"] {
        assert!(out_file(d.path(), f).exists(), "{f}");
    }
    let stator = summary(d.path(), "b_max_stator_iron_T");
    let rotor = summary(d.path(), "b_max_rotor_iron_T");
    assert!((1.5..=2.3).contains(&stator), "stator {stator}");
    assert!(rotor >= 1.5, "rotor {rotor}");
    assert_eq!(summary(d.path(), "dofs"), 4452.0);
    assert!(summary(d.path(), "newton_iterations") <= 15.0);
    assert!(summary(d.path(), "torque_Nm") > 0.0);
}

#[test]
fn solve_is_reproducible() {
    let d = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for _ in 0..2 {
        assert_eq!(code(&pmsm(d.path(), COARSE, &["solve", "--beta", "4"])), 0);
        runs.push(
            ["field_rotor.vtk", "field_stator.vtk", "solve_summary.csv"].map(|f| fs::read(out_file(d.path(), f)).unwrap()),
        );
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn no_magnets_and_no_current_give_zero_field() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!("{COARSE}[materials]\nmagnets = false\n");
    let o = pmsm(d.path(), &cfg, &["solve", "--current-scale", "0"]);
    assert_eq!(code(&o), 0);
    assert_eq!(summary(d.path(), "b_max_T"), 0.0);
    assert_eq!(summary(d.path(), "torque_Nm"), 0.0);
}

#[test]
fn sweep_writes_one_profile_per_level_and_consistent_statistics() {
    let d = tempfile::tempdir().unwrap();
    let o = pmsm(d.path(), COARSE, &["sweep"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = table(d.path(), "sweep_summary.csv");
    assert_eq!(s.rows.len(), 3);
    for (k, cs) in [0.0, 0.5, 1.0].into_iter().enumerate() {
        let t = table(d.path(), &format!("sweep_{k}_J{cs}.csv"));
        assert_eq!(t.rows.len(), 10);
        assert_eq!(t.value(9, "beta_deg"), Some(18.0));
        let tq: Vec<f64> = (0..10).map(|r| t.value(r, "torque_Nm").unwrap()).collect();
        let mean = tq.iter().sum::<f64>() / 10.0;
        let std = (tq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 10.0).sqrt();
        let (m, sd) = (s.value(k, "mean_Nm").unwrap(), s.value(k, "std_Nm").unwrap());
        assert!((mean - m).abs() <= 1e-12 * m.abs().max(1.0), "{mean} {m}");
        assert!((std - sd).abs() <= 1e-12 * sd.abs().max(1.0), "{std} {sd}");
    }
}

#[test]
fn empty_angle_list_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let o = pmsm(d.path(), &format!("{COARSE}[operating]\nbeta_deg = []\n"), &["sweep"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn config_errors_exit_with_two() {
    let d = tempfile::tempdir().unwrap();
    let o = pmsm(d.path(), "[machine]\nunknown_key = 1\n", &["solve"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown_key"));
    let o = pmsm(d.path(), "", &["scale", "--kr", "-1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn ripple_map_shape_and_identity_comparison() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!(
        "{COARSE}[operating]\nbeta_deg = [0.0, 4.0, 8.0]\ncurrent_levels = [0.0, 1.0]\n\
         [ripple_map]\nphi0_deg = [-20.0, -10.0, 0.0, 10.0, 20.0]\ncurrent_levels = [0.2, 0.4, 0.6, 0.8, 1.0]\n"
    );
    // the design file for the comparison comes from a zero-iteration optimization
    let o = pmsm(d.path(), &format!("{cfg}[optimizer]\nmax_iters = 0\n"), &["optimize"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let x0 = out_file(d.path(), "x_initial.csv");
    let o = pmsm(d.path(), &cfg, &["ripple-map", "--baseline", x0.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = table(d.path(), "ripple_map.csv");
    assert_eq!(m.rows.len(), 5);
    assert_eq!(m.columns.len(), 6);
    assert_eq!(m.value(0, "phi0_deg"), Some(-20.0));
    assert_eq!(m.columns[5].parse::<f64>().unwrap(), 1.0);
    let c = table(d.path(), "ripple_map_change.csv");
    for r in 0..5 {
        for col in &c.columns[1..] {
            assert_eq!(c.value(r, col), Some(0.0));
        }
    }
}

#[test]
fn zero_iteration_report_has_no_change() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!("{COARSE}[operating]\nbeta_deg = [0.0, 6.0]\n[optimizer]\nmax_iters = 0\n");
    assert_eq!(code(&pmsm(d.path(), &cfg, &["optimize"])), 0);
    let r = table(d.path(), "report.csv");
    let names: Vec<&str> = r.rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(
        names,
        ["f_opt", "cost_iron", "cost_copper", "cost_magnet", "cost_total", "torque_ripple", "power_loss", "mean_torque"]
    );
    for k in 0..r.rows.len() {
        assert_eq!(r.value(k, "change_percent"), Some(0.0));
        assert_eq!(r.value(k, "initial"), r.value(k, "optimized"));
    }
    assert_eq!(fs::read(out_file(d.path(), "x_opt.csv")).unwrap(), fs::read(out_file(d.path(), "x_initial.csv")).unwrap());
}

#[test]
fn two_starts_both_end_feasible() {
    // the torque row is only enforced as the multipliers settle, so the runs
    // need room to get there
    let base = format!("{COARSE}[operating]\nbeta_deg = [0.0, 6.0]\n[optimizer]\nmax_iters = 40\n");
    let second = "[design]\nx0 = [110.0, 5.0, 1.2, 7.5, 6.0, 17.0, 130.0, 1.2, 3.5, 2.0, 1.0, 8.0, \
                  0.05, -0.05, 0.0, 0.05, 0.0, 0.0, 0.0, -0.05, 0.0, 0.0]\n";
    for cfg in [base.clone(), format!("{base}{second}")] {
        let d = tempfile::tempdir().unwrap();
        let o = pmsm(d.path(), &cfg, &["optimize"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let r = table(d.path(), "report.csv");
        let t = r.rows.iter().position(|r| r[0] == "mean_torque").unwrap();
        let torque = r.value(t, "optimized").unwrap();
        assert!(torque >= 1.5 * (1.0 - 1e-3), "mean torque {torque}");
        let g = table(d.path(), "constraints.csv");
        assert!(g.rows.iter().filter(|row| row[0] != "torque").all(|row| row[1].parse::<f64>().unwrap() <= 0.0));
        let f = r.rows.iter().position(|r| r[0] == "f_opt").unwrap();
        assert!(r.value(f, "optimized").unwrap() <= r.value(f, "initial").unwrap());
        let tr = table(d.path(), "trace.csv");
        assert!(tr.rows.len() >= 2);
    }
}

fn gradcheck_config() -> String {
    format!(
        "{COARSE}[operating]\nbeta_deg = [0.0, 6.0]\n[gradcheck]\nvariables = [\"phi0\", \"kR\", \"MW\", \"SW2\"]\n"
    )
}

#[test]
fn gradcheck_passes_and_is_sorted() {
    let d = tempfile::tempdir().unwrap();
    let o = pmsm(d.path(), &gradcheck_config(), &["gradcheck"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = table(d.path(), "gradcheck.csv");
    assert_eq!(t.rows.len(), 20);
    let errs: Vec<f64> = (0..t.rows.len()).map(|r| t.value(r, "rel_error").unwrap()).collect();
    assert!(errs.windows(2).all(|w| w[0] >= w[1]));
    assert!(t.rows.iter().all(|r| r[5] == "true"));
}

#[test]
fn injected_sign_bug_fails_naming_the_variable() {
    let d = tempfile::tempdir().unwrap();
    let o = pmsm(d.path(), &gradcheck_config(), &["gradcheck", "--inject-sign-bug", "MW"]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("/MW"), "{err}");
    assert!(!err.contains("/SW2"), "{err}");
    let t = table(d.path(), "gradcheck.csv");
    assert_eq!(t.rows[0][1], "MW");
    assert_eq!(t.rows[0][5], "false");
}

#[test]
fn geometry_and_scale_artifacts() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&pmsm(d.path(), COARSE, &["geometry"])), 0);
    let svg = fs::read_to_string(out_file(d.path(), "geometry.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(fs::read_to_string(out_file(d.path(), "control_points.txt")).unwrap().contains("pole_pairs 3"));
    let g = table(d.path(), "constraints.csv");
    assert!((0..g.rows.len()).all(|r| g.value(r, "g_m").unwrap() <= 0.0));

    assert_eq!(code(&pmsm(d.path(), "", &["scale", "--kr", "2", "--l-ratio", "3"])), 0);
    let s = table(d.path(), "scale.csv");
    let factor = |q: &str| s.value(s.rows.iter().position(|r| r[0] == q).unwrap(), "factor").unwrap();
    assert_eq!(factor("torque"), 12.0);
    assert_eq!(factor("current_density"), 0.5);
    assert_eq!(factor("B"), 1.0);
}

#[test]
fn outputs_carry_the_config_hash() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&pmsm(d.path(), COARSE, &["geometry"])), 0);
    let first = fs::read_to_string(out_file(d.path(), "constraints.csv")).unwrap();
    let line = first.lines().next().unwrap().to_string();
    assert!(line.starts_with("# pmsm-iga ") && line.contains("config="));
    assert_eq!(code(&pmsm(d.path(), &format!("{COARSE}[objective]\nm1 = 0.1\n"), &["geometry"])), 0);
    let second = fs::read_to_string(out_file(d.path(), "constraints.csv")).unwrap();
    assert_ne!(second.lines().next().unwrap(), line);
}
