//! `pmsm`: simulate, sweep, check gradients and optimize the PMSM sector model.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pmsm_iga::assembly::OperatingPoint;
use pmsm_iga::design::{self, Bounds, DesignVector, N_VARS};
use pmsm_iga::geometry::{build_geometry, control_points_text, feasibility, svg_render, G_NAMES};
use pmsm_iga::io::{num, sample_field, structured_grid_vtk, variable_index, Provenance, RunConfig, Table};
use pmsm_iga::model::{percent_change, Model};
use pmsm_iga::optimizer::{comparison, constraint_name, optimize};
use pmsm_iga::scaling::{scale_quantity, QuantityKind};
use pmsm_iga::sensitivity::{compare, gradient_check, Output};
use pmsm_iga::solver::{solve_state, torque};

#[derive(Parser)]
#[command(name = "pmsm", version, about = "Isogeometric PMSM sector simulation and design optimization")]
struct Cli {
    /// TOML run configuration (defaults when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Design CSV (as written by `optimize`) instead of the configured start.
    #[arg(long, global = true)]
    design: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// One operating point: field export and torque.
    Solve {
        /// Mechanical rotor angle [deg].
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        current_scale: f64,
    },
    /// Torque profiles over the configured angles, one CSV per current level.
    Sweep,
    /// Torque ripple over phase offset and current.
    RippleMap {
        /// Reference design; the map then holds the percentage change.
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
    /// Weighted-sum optimization from the configured start.
    Optimize,
    /// Adjoint gradients against central differences.
    Gradcheck {
        /// Flip the sign of one variable's adjoint derivative (harness check).
        #[arg(long, value_name = "VAR")]
        inject_sign_bug: Option<String>,
    },
    /// SVG render and control-point listing of the design.
    Geometry,
    /// Scale quantities with the radial factor and length ratio.
    Scale {
        #[arg(long)]
        kr: f64,
        #[arg(long, default_value_t = 1.0)]
        l_ratio: f64,
    },
}

enum Failure {
    Verification(String),
    Config(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Verification(_) => 1,
            Self::Config(_) => 2,
            Self::Solver(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Verification(m) | Self::Config(m) | Self::Solver(m) => m,
        }
    }
}

type Res<T> = Result<T, Failure>;

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn solver_err(e: impl std::fmt::Display) -> Failure {
    Failure::Solver(e.to_string())
}

struct Ctx {
    cfg: RunConfig,
    model: Model,
    bounds: Bounds,
    x: DesignVector,
    out: PathBuf,
    prov: Provenance,
}

impl Ctx {
    fn load(cli: &Cli) -> Res<Self> {
        let (cfg, base) = match &cli.config {
            Some(p) => {
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (RunConfig::load(p).map_err(config_err)?, base)
            }
            None => (RunConfig::default(), PathBuf::new()),
        };
        let model = cfg.model(&base).map_err(config_err)?;
        let bounds = cfg.bounds(&model.machine).map_err(config_err)?;
        let x = match &cli.design {
            Some(p) => read_design(p)?,
            None => cfg.initial_design().map_err(config_err)?,
        };
        let out = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
        fs::create_dir_all(&out).map_err(|e| config_err(format!("cannot create {}: {e}", out.display())))?;
        let prov = Provenance::new(cfg.hash());
        Ok(Self { cfg, model, bounds, x, out, prov })
    }

    fn write_table(&self, name: &str, t: &Table) -> Res<()> {
        self.write_text(name, &t.to_csv(&self.prov))
    }

    fn write_text(&self, name: &str, text: &str) -> Res<()> {
        let p = self.out.join(name);
        fs::write(&p, text).map_err(|e| solver_err(format!("cannot write {}: {e}", p.display())))
    }
}

fn design_table(x: &DesignVector) -> Table {
    let mut t = Table::new(&["name", "value", "unit"]);
    for (i, v) in x.to_display().iter().enumerate() {
        t.push(vec![design::NAMES[i].into(), num(*v), design::DISPLAY_UNITS[i].into()]);
    }
    t
}

fn read_design(path: &Path) -> Res<DesignVector> {
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let t = Table::parse(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let mut disp = [f64::NAN; N_VARS];
    for r in 0..t.rows.len() {
        let name = &t.rows[r][t.column("name").ok_or_else(|| config_err("design file lacks a name column"))?];
        let i = variable_index(name).ok_or_else(|| config_err(format!("unknown design variable {name:?}")))?;
        disp[i] = t.value(r, "value").ok_or_else(|| config_err(format!("bad value for {name}")))?;
    }
    if let Some(i) = disp.iter().position(|v| !v.is_finite()) {
        return Err(config_err(format!("design file lacks {}", design::NAMES[i])));
    }
    Ok(DesignVector::from_display(&disp))
}

fn cmd_solve(ctx: &Ctx, beta_deg: f64, current_scale: f64) -> Res<()> {
    let m = &ctx.model;
    let sys = m.system(&ctx.x).map_err(solver_err)?;
    let op = OperatingPoint { current_scale, beta: beta_deg.to_radians(), phi0: ctx.x.phi0() };
    let s = solve_state(&sys, &op, m.j_amp(), None, &m.newton).map_err(solver_err)?;
    let t = torque(&sys, &s, ctx.x.l(), ctx.x.kr());
    let grids = sample_field(&sys, &s.z, op.beta, ctx.cfg.output.field_samples);
    let mut b_iron = [0.0f64; 2];
    let mut b_max = 0.0f64;
    for (k, g) in grids.iter().enumerate() {
        for p in &g.samples {
            b_max = b_max.max(p.b_abs());
            if p.is_iron() {
                b_iron[k] = b_iron[k].max(p.b_abs());
            }
        }
        let side = format!("{:?}", g.side).to_lowercase();
        let title = format!("{} {} config={} side={side}", ctx.prov.tool, ctx.prov.version, ctx.prov.config_hash);
        ctx.write_text(&format!("field_{side}.vtk"), &structured_grid_vtk(g, &title))?;
    }
    let mut t_sum = Table::new(&["quantity", "value"]);
    for (k, v) in [
        ("beta_deg", beta_deg),
        ("current_scale", current_scale),
        ("dofs", sys.n_total() as f64),
        ("newton_iterations", s.newton_iters as f64),
        ("residual", s.residual_norm),
        ("torque_Nm", t),
        ("b_max_T", b_max),
        ("b_max_rotor_iron_T", b_iron[0]),
        ("b_max_stator_iron_T", b_iron[1]),
    ] {
        t_sum.push(vec![k.into(), num(v)]);
    }
    ctx.write_table("solve_summary.csv", &t_sum)?;
    println!("dofs {}  newton iterations {}  residual {:.3e}", sys.n_total(), s.newton_iters, s.residual_norm);
    println!("torque {t:.6} N·m  max |B| {b_max:.4} T (rotor iron {:.4} T, stator iron {:.4} T)", b_iron[0], b_iron[1]);
    Ok(())
}

fn level_tag(k: usize, cs: f64) -> String {
    format!("sweep_{k}_J{cs}.csv")
}

fn cmd_sweep(ctx: &Ctx) -> Res<()> {
    let e = ctx.model.evaluate(&ctx.x).map_err(solver_err)?;
    let mut summary = Table::new(&["current_scale", "mean_Nm", "std_Nm"]);
    for (k, l) in e.levels.iter().enumerate() {
        let mut t = Table::new(&["beta_deg", "current_scale", "torque_Nm"]);
        for &(b, tq) in &l.stats.torques {
            t.push_nums(&[b.to_degrees(), l.current_scale, tq]);
        }
        ctx.write_table(&level_tag(k, l.current_scale), &t)?;
        summary.push_nums(&[l.current_scale, l.stats.mean, l.stats.std]);
        println!("J = {:.3}·J0  mean {:.6} N·m  std {:.6} N·m", l.current_scale, l.stats.mean, l.stats.std);
    }
    ctx.write_table("sweep_summary.csv", &summary)?;
    Ok(())
}

fn map_table(phis: &[f64], levels: &[f64], values: &[Vec<f64>]) -> Table {
    let mut cols = vec!["phi0_deg".to_string()];
    cols.extend(levels.iter().map(|c| num(*c)));
    let mut t = Table { columns: cols, rows: Vec::new() };
    for (p, row) in phis.iter().zip(values) {
        let mut r = vec![num(*p)];
        r.extend(row.iter().map(|v| num(*v)));
        t.push(r);
    }
    t
}

fn cmd_ripple_map(ctx: &Ctx, baseline: Option<&Path>) -> Res<()> {
    let rm = &ctx.cfg.ripple_map;
    if rm.phi0_deg.is_empty() || rm.current_levels.is_empty() {
        return Err(config_err("ripple_map needs nonempty phi0_deg and current_levels"));
    }
    let phis: Vec<f64> = rm.phi0_deg.iter().map(|d| d.to_radians()).collect();
    let map = ctx.model.ripple_map(&ctx.x, &phis, &rm.current_levels).map_err(solver_err)?;
    ctx.write_table("ripple_map.csv", &map_table(&rm.phi0_deg, &rm.current_levels, &map))?;
    if let Some(b) = baseline {
        let xb = read_design(b)?;
        let base = ctx.model.ripple_map(&xb, &phis, &rm.current_levels).map_err(solver_err)?;
        ctx.write_table("ripple_map_baseline.csv", &map_table(&rm.phi0_deg, &rm.current_levels, &base))?;
        let change = percent_change(&base, &map);
        ctx.write_table("ripple_map_change.csv", &map_table(&rm.phi0_deg, &rm.current_levels, &change))?;
    }
    println!("{} × {} ripple map written", rm.phi0_deg.len(), rm.current_levels.len());
    Ok(())
}

fn cmd_optimize(ctx: &Ctx) -> Res<()> {
    let m = &ctx.model;
    let r = optimize(m, &ctx.bounds, &ctx.x, &ctx.cfg.optimizer).map_err(|e| match e {
        pmsm_iga::error::OptimizeError::Solver(s) => solver_err(s),
        other => config_err(other),
    })?;
    let mut cols = vec![
        "iter", "outer", "f_opt", "cost", "torque_ripple", "power_loss", "mean_torque", "violation", "merit",
        "step", "proj_grad",
    ];
    cols.extend(design::NAMES);
    let mut trace = Table::new(&cols);
    for row in &r.trace {
        let c = row.components;
        let mut v = vec![
            row.iter as f64,
            row.outer as f64,
            c.f_opt,
            c.cost,
            c.ripple,
            c.joule,
            c.t_mean,
            row.violation,
            row.merit,
            row.step_norm,
            row.proj_grad,
        ];
        v.extend(row.x.to_display());
        trace.push_nums(&v);
    }
    ctx.write_table("trace.csv", &trace)?;
    ctx.write_table("x_opt.csv", &design_table(&r.x))?;
    ctx.write_table("x_initial.csv", &design_table(&ctx.x))?;

    let e0 = m.evaluate(&ctx.x).map_err(solver_err)?;
    let e1 = m.evaluate(&r.x).map_err(solver_err)?;
    let mut report = Table::new(&["quantity", "initial", "optimized", "change_percent"]);
    println!("{:<16}{:>16}{:>16}{:>12}", "", "initial", "optimized", "change");
    for row in comparison(&e0, &e1) {
        report.push(vec![row.name.into(), num(row.initial), num(row.optimized), num(row.change_percent())]);
        println!("{:<16}{:>16.6}{:>16.6}{:>11.2}%", row.name, row.initial, row.optimized, row.change_percent());
    }
    ctx.write_table("report.csv", &report)?;

    let mut cons = Table::new(&["constraint", "value", "multiplier"]);
    for (j, (c, mu)) in r.constraints.iter().zip(&r.multipliers).enumerate() {
        cons.push(vec![constraint_name(j).into(), num(*c), num(*mu)]);
    }
    ctx.write_table("constraints.csv", &cons)?;
    let g = feasibility(&r.x, &m.machine);
    println!(
        "status {:?}  iterations {}  evaluations {}  kkt {:.3e}  complementarity {:.3e}  max g {:.3e} m",
        r.status,
        r.trace.len() - 1,
        r.evaluations,
        r.kkt,
        r.complementarity(),
        g.max_violation()
    );
    Ok(())
}

fn cmd_gradcheck(ctx: &Ctx, inject: Option<&str>) -> Res<()> {
    let vars = ctx.cfg.gradcheck_variables().map_err(config_err)?;
    let flip = match inject {
        Some(n) => Some(variable_index(n).ok_or_else(|| config_err(format!("unknown design variable {n:?}")))?),
        None => None,
    };
    let newton = pmsm_iga::solver::NewtonOptions {
        rel_tol: ctx.cfg.gradcheck.newton_rel_tol,
        abs_tol: 0.0,
        ..ctx.model.newton.clone()
    };
    let mut rep = gradient_check(&ctx.model, &ctx.x, &ctx.bounds, &vars, ctx.cfg.gradcheck.rel_step, &newton)
        .map_err(solver_err)?;
    if let Some(i) = flip {
        for e in rep.entries.iter_mut().filter(|e| e.var == i) {
            *e = compare(e.output, i, -e.adjoint, e.fd, ctx.bounds.width(i));
        }
    }
    let mut entries: Vec<_> = rep.entries.iter().collect();
    entries.sort_by(|a, b| b.rel_error.total_cmp(&a.rel_error).then((a.output as u8).cmp(&(b.output as u8))).then(a.var.cmp(&b.var)));
    let mut t = Table::new(&["output", "variable", "adjoint", "fd", "rel_error", "pass"]);
    for e in &entries {
        t.push(vec![
            e.output.name().into(),
            e.name().into(),
            num(e.adjoint),
            num(e.fd),
            num(e.rel_error),
            e.pass.to_string(),
        ]);
    }
    ctx.write_table("gradcheck.csv", &t)?;
    let failed: Vec<String> = entries.iter().filter(|e| !e.pass).map(|e| format!("{}/{}", e.output.name(), e.name())).collect();
    let worst = entries.iter().find(|e| e.output == Output::FOpt).map_or(0.0, |e| e.rel_error);
    println!("{} entries, worst f_opt relative error {worst:.3e}", entries.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("gradient check failed for {}", failed.join(", "))))
    }
}

fn cmd_geometry(ctx: &Ctx) -> Res<()> {
    let g = build_geometry(&ctx.x, &ctx.model.machine, &ctx.model.disc).map_err(solver_err)?;
    ctx.write_text("geometry.svg", &svg_render(&[(&g, "design")]))?;
    ctx.write_text("control_points.txt", &control_points_text(&g))?;
    let f = feasibility(&ctx.x, &ctx.model.machine);
    let mut t = Table::new(&["constraint", "g_m"]);
    for (n, v) in G_NAMES.iter().zip(f.values) {
        t.push(vec![n.to_string(), num(v)]);
    }
    ctx.write_table("constraints.csv", &t)?;
    println!("{} control points, max g {:.3e} m", g.control_point_count(), f.max_violation());
    Ok(())
}

fn cmd_scale(ctx: &Ctx, kr: f64, l_ratio: f64) -> Res<()> {
    if !(kr > 0.0 && l_ratio > 0.0) {
        return Err(config_err("kr and l_ratio must be positive"));
    }
    let mut t = Table::new(&["quantity", "kr_exponent", "length_exponent", "factor"]);
    for q in QuantityKind::ALL {
        let (a, b) = q.exponents();
        let f = scale_quantity(1.0, q, kr, l_ratio);
        t.push(vec![q.name().into(), a.to_string(), b.to_string(), num(f)]);
        println!("{:<6} k_R^{a:<3} L^{b:<2} ×{f:.6}", q.name());
    }
    ctx.write_table("scale.csv", &t)
}

fn run(cli: &Cli) -> Res<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().map_err(config_err)?;
    }
    let ctx = Ctx::load(cli)?;
    match &cli.cmd {
        Cmd::Solve { beta, current_scale } => cmd_solve(&ctx, *beta, *current_scale),
        Cmd::Sweep => cmd_sweep(&ctx),
        Cmd::RippleMap { baseline } => cmd_ripple_map(&ctx, baseline.as_deref()),
        Cmd::Optimize => cmd_optimize(&ctx),
        Cmd::Gradcheck { inject_sign_bug } => cmd_gradcheck(&ctx, inject_sign_bug.as_deref()),
        Cmd::Geometry => cmd_geometry(&ctx),
        Cmd::Scale { kr, l_ratio } => cmd_scale(&ctx, *kr, *l_ratio),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
