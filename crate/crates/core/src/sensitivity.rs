//! Adjoint gradients of the objective components and a finite-difference
//! harness to check them.
//!
//! For the sector functional `τ(z, x)` with `F(z, x) = 0`,
//!
//! ```text
//! dτ/dx_i = ∂τ/∂x_i − γᵀ ∂F/∂x_i,   Jᵀ γ = ∂τ/∂z,
//! ```
//!
//! with `J` the Newton Jacobian at the converged state. `∂F/∂x_i` for
//! shape variables comes from re-running the element kernels on a
//! [`Dual`]-valued geometry seeded in direction `i`; `φ0` only moves the
//! current load. `L` and `k_R` never enter the field problem and use the
//! closed-form scale derivatives.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use crate::assembly::{
    coupling_rows, element_residual, matvec_t, phase_current_density, phys_qp, rotation_matrix, AssembledSystem,
    OperatingPoint, PhysQp, Source,
};
use crate::design::{is_geometric, Bounds, DesignVector, KR, L, N_VARS, NAMES, PHI0};
use crate::error::{GeometryError, SolverError};
use crate::geometry::{material_area_derivatives, seeded_geometry, Side};
use crate::materials::MaterialTag;
use crate::model::{Components, Evaluation, Model};
use crate::scalar::Dual;
use crate::scaling::cost_density;
use crate::solver::{torque_factor, NewtonOptions, SolutionState};

/// Adjoint vector of the torque functional at one operating point.
#[derive(Clone, Debug)]
pub struct AdjointState {
    pub gamma: Vec<f64>,
    /// `‖Jᵀγ − ∂τ/∂z‖ / ‖∂τ/∂z‖`.
    pub residual: f64,
}

/// Solve `Jᵀ γ = ∂τ/∂z` at a converged state.
pub fn adjoint_state(sys: &AssembledSystem, s: &SolutionState) -> Result<AdjointState, SolverError> {
    if !(s.residual_norm <= s.tolerance) {
        return Err(SolverError::NotConverged(s.residual_norm));
    }
    let (vals, _) = sys.jacobian(&s.z, s.beta(), &sys.rhs(s.j_amp, &s.op))?;
    let rhs = sys.torque_functional_gradient(&s.z, s.beta());
    let gamma = sys.pattern().factor(&vals)?.solve(&rhs)?;
    let jt = matvec_t(&sys.pattern().matrix(&vals), &gamma);
    let num: f64 = jt.iter().zip(&rhs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let den: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let residual = if den > 0.0 { num / den } else { num };
    Ok(AdjointState { gamma, residual })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn element_source(sys: &AssembledSystem, tag: MaterialTag, j_amp: f64, op: &OperatingPoint) -> Source {
    match tag {
        MaterialTag::Magnet => {
            let m = &sys.materials.magnet;
            match m.remanence_2d() {
                Ok(br) => {
                    let (nu, _) = m.reluctivity(0.0);
                    Source::Magnet([nu * br[0], nu * br[1]])
                }
                Err(_) => Source::None,
            }
        }
        MaterialTag::Copper { phase, sign, .. } => {
            Source::Current(sign as f64 * phase_current_density(j_amp, sys.pole_pairs(), op, phase))
        }
        _ => Source::None,
    }
}

/// Derivative of the assembled operator along one shape variable.
pub struct ShapeDirection {
    pub var: usize,
    /// Elements whose control points move, with dual quadrature data.
    elems: Vec<(usize, Vec<PhysQp<Dual>>)>,
    dg_rotor: Vec<(usize, Vec<f64>)>,
    dg_stator: Vec<(usize, Vec<f64>)>,
}

impl ShapeDirection {
    pub fn new(model: &Model, sys: &AssembledSystem, x: &DesignVector, var: usize) -> Result<Self, GeometryError> {
        let g = seeded_geometry(x, var, &model.machine, &model.disc)?;
        let elems = sys
            .elements
            .par_iter()
            .enumerate()
            .filter_map(|(k, e)| {
                let surf = match e.side {
                    Side::Rotor => &g.rotor.surface,
                    Side::Stator => &g.stator.surface,
                };
                let moves = e.cps.iter().any(|&c| {
                    let p = surf.points[c];
                    p[0].eps != 0.0 || p[1].eps != 0.0 || surf.weights[c].eps != 0.0
                });
                moves.then(|| (k, e.qps.iter().map(|q| phys_qp(surf, q)).collect()))
            })
            .collect();
        let eps_rows = |rows: Vec<(usize, Vec<Dual>)>| -> Vec<(usize, Vec<f64>)> {
            rows.into_iter().map(|(d, r)| (d, r.iter().map(|v| v.eps).collect())).collect()
        };
        Ok(Self {
            var,
            elems,
            dg_rotor: eps_rows(coupling_rows(&g.rotor, &sys.dofs, &sys.harmonics)),
            dg_stator: eps_rows(coupling_rows(&g.stator, &sys.dofs, &sys.harmonics)),
        })
    }

    pub fn moving_elements(&self) -> usize {
        self.elems.len()
    }

    fn element_eps(&self, sys: &AssembledSystem, k: usize, phys: &[PhysQp<Dual>], z: &[f64], j_amp: f64, op: &OperatingPoint) -> Vec<f64> {
        let e = &sys.elements[k];
        let src = element_source(sys, e.tag, j_amp, op);
        element_residual(phys, &e.gather(z), sys.materials.get(e.tag), src)
            .into_iter()
            .map(|v| v.eps)
            .collect()
    }

    /// `∂F/∂x_i` at a fixed state `z`.
    pub fn residual_derivative(&self, sys: &AssembledSystem, z: &[f64], j_amp: f64, op: &OperatingPoint) -> Vec<f64> {
        let mut out = vec![0.0; sys.n_total()];
        for (k, phys) in &self.elems {
            let r = self.element_eps(sys, *k, phys, z, j_amp, op);
            for (d, v) in sys.elements[*k].dofs.iter().zip(r) {
                if let Some((i, s)) = d {
                    out[*i] += s * v;
                }
            }
        }
        let l0 = sys.dofs.n_field();
        let (r, _) = rotation_matrix(op.beta, &sys.harmonics);
        let lam = &z[l0..];
        let mut rl = vec![0.0; lam.len()];
        crate::assembly::apply_block(&r, lam, &mut rl);
        for (d, g) in &self.dg_rotor {
            out[*d] -= dot(g, lam);
            for (m, gm) in g.iter().enumerate() {
                out[l0 + m] -= gm * z[*d];
            }
        }
        let mut acc = vec![0.0; lam.len()];
        for (d, g) in &self.dg_stator {
            out[*d] += dot(g, &rl);
            for (a, gm) in acc.iter_mut().zip(g) {
                *a += gm * z[*d];
            }
        }
        let mut rta = vec![0.0; lam.len()];
        crate::assembly::apply_block_t(&r, &acc, &mut rta);
        for (m, v) in rta.into_iter().enumerate() {
            out[l0 + m] += v;
        }
        out
    }

    /// `dτ/dx_i` for each state given its adjoint.
    pub fn torque_derivatives(&self, sys: &AssembledSystem, states: &[&SolutionState], adj: &[&AdjointState]) -> Vec<f64> {
        let per_elem: Vec<Vec<f64>> = self
            .elems
            .par_iter()
            .map(|(k, phys)| {
                let e = &sys.elements[*k];
                states
                    .iter()
                    .zip(adj)
                    .map(|(s, a)| {
                        let r = self.element_eps(sys, *k, phys, &s.z, s.j_amp, &s.op);
                        dot(&e.gather(&a.gamma), &r)
                    })
                    .collect()
            })
            .collect();
        let l0 = sys.dofs.n_field();
        states
            .iter()
            .zip(adj)
            .enumerate()
            .map(|(j, (s, a))| {
                let mut gf: f64 = per_elem.iter().map(|v| v[j]).sum();
                let (r, rp) = rotation_matrix(s.beta(), &sys.harmonics);
                let (lam, glam) = (&s.z[l0..], &a.gamma[l0..]);
                let n = lam.len();
                let (mut rl, mut rg, mut rpl) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
                crate::assembly::apply_block(&r, lam, &mut rl);
                crate::assembly::apply_block(&r, glam, &mut rg);
                crate::assembly::apply_block(&rp, lam, &mut rpl);
                for (d, g) in &self.dg_rotor {
                    gf -= a.gamma[*d] * dot(g, lam) + s.z[*d] * dot(g, glam);
                }
                let mut explicit = 0.0;
                for (d, g) in &self.dg_stator {
                    gf += a.gamma[*d] * dot(g, &rl) + s.z[*d] * dot(g, &rg);
                    explicit -= s.z[*d] * dot(g, &rpl);
                }
                explicit - gf
            })
            .collect()
    }
}

/// Objective components and their gradients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Output {
    FOpt,
    Cost,
    Ripple,
    Joule,
    TMean,
}

impl Output {
    pub const ALL: [Output; 5] = [Self::FOpt, Self::Cost, Self::Ripple, Self::Joule, Self::TMean];

    pub fn name(self) -> &'static str {
        match self {
            Self::FOpt => "f_opt",
            Self::Cost => "M",
            Self::Ripple => "T_hat",
            Self::Joule => "P_J",
            Self::TMean => "T_mean",
        }
    }

    pub fn value(self, c: &Components) -> f64 {
        match self {
            Self::FOpt => c.f_opt,
            Self::Cost => c.cost,
            Self::Ripple => c.ripple,
            Self::Joule => c.joule,
            Self::TMean => c.t_mean,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub f_opt: [f64; N_VARS],
    pub cost: [f64; N_VARS],
    pub ripple: [f64; N_VARS],
    pub joule: [f64; N_VARS],
    pub t_mean: [f64; N_VARS],
    /// `dT/dx` per current level and angle.
    pub torques: Vec<Vec<[f64; N_VARS]>>,
}

impl Gradient {
    pub fn get(&self, o: Output) -> &[f64; N_VARS] {
        match o {
            Output::FOpt => &self.f_opt,
            Output::Cost => &self.cost,
            Output::Ripple => &self.ripple,
            Output::Joule => &self.joule,
            Output::TMean => &self.t_mean,
        }
    }
}

/// Adjoint gradient of all outputs for the variables in `vars`; other
/// entries are zero.
pub fn adjoint_gradient(model: &Model, eval: &Evaluation, vars: &[usize]) -> Result<Gradient, SolverError> {
    let sys = &eval.system;
    let x = &eval.x;
    let states: Vec<&SolutionState> = eval.states().collect();
    let needs_field = vars.iter().any(|&i| i == PHI0 || is_geometric(i));
    let adj: Vec<AdjointState> = if needs_field {
        states.par_iter().map(|s| adjoint_state(sys, s)).collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };
    let adj_ref: Vec<&AdjointState> = adj.iter().collect();

    let mut dtau = vec![[0.0; N_VARS]; states.len()];
    for &i in vars {
        if i == PHI0 {
            let d: Vec<f64> = states
                .par_iter()
                .zip(&adj_ref)
                .map(|(s, a)| {
                    let op = OperatingPoint { phi0: s.op.phi0 + FRAC_PI_2, ..s.op };
                    dot(&a.gamma, &sys.current_load(s.j_amp, &op))
                })
                .collect();
            for (k, v) in d.into_iter().enumerate() {
                dtau[k][i] = v;
            }
        } else if is_geometric(i) {
            let dir = ShapeDirection::new(model, sys, x, i)?;
            for (k, v) in dir.torque_derivatives(sys, &states, &adj_ref).into_iter().enumerate() {
                dtau[k][i] = v;
            }
        }
    }

    let kappa = torque_factor(sys, x.l(), x.kr());
    let mut torques = Vec::with_capacity(eval.levels.len());
    let mut ripple = [0.0; N_VARS];
    let mut t_mean = [0.0; N_VARS];
    let mut k = 0;
    for lvl in &eval.levels {
        let n = lvl.stats.torques.len() as f64;
        let mut dts = Vec::with_capacity(lvl.states.len());
        for &(_, t) in &lvl.stats.torques {
            let mut dt = [0.0; N_VARS];
            for &i in vars {
                dt[i] = match i {
                    L => t / x.l(),
                    KR => 2.0 * t / x.kr(),
                    _ => kappa * dtau[k][i],
                };
            }
            dts.push(dt);
            k += 1;
        }
        let (mean, std) = (lvl.stats.mean, lvl.stats.std);
        let mut dmean = [0.0; N_VARS];
        let mut dstd = [0.0; N_VARS];
        for &i in vars {
            dmean[i] = dts.iter().map(|d| d[i]).sum::<f64>() / n;
            if std > 0.0 {
                dstd[i] = lvl.stats.torques.iter().zip(&dts).map(|(&(_, t), d)| (t - mean) * d[i]).sum::<f64>()
                    / (n * std);
            }
        }
        for &i in vars {
            ripple[i] += dstd[i];
        }
        if (lvl.current_scale - model.torque_level).abs() < 1e-12 {
            t_mean = dmean;
        }
        torques.push(dts);
    }

    let mut cost = [0.0; N_VARS];
    let mut joule = [0.0; N_VARS];
    let (m, pj) = (eval.cost.total, eval.joule.per_slot);
    let s = x.l() * x.kr() * x.kr();
    for &i in vars {
        match i {
            L => {
                cost[i] = m / x.l();
                joule[i] = pj / x.l();
            }
            KR => {
                cost[i] = 2.0 * m / x.kr();
                joule[i] = 2.0 * pj / x.kr();
            }
            _ if is_geometric(i) => {
                let a = material_area_derivatives(x, i, &model.machine);
                cost[i] = s * cost_density(&a, &model.materials).iter().sum::<f64>();
                joule[i] = model.joule.loss_constant() * s * a.slot;
            }
            _ => {}
        }
    }
    let w = &model.weights;
    let mut f_opt = [0.0; N_VARS];
    for &i in vars {
        f_opt[i] = w.combine(cost[i], ripple[i], joule[i]);
    }
    Ok(Gradient { f_opt, cost, ripple, joule, t_mean, torques })
}

/// Central difference `(f(x+h) − f(x−h)) / 2h`.
pub fn central_difference<E>(mut f: impl FnMut(f64) -> Result<f64, E>, x: f64, h: f64) -> Result<f64, E> {
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

/// One row of a step-size study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdRow {
    pub h: f64,
    pub fd: f64,
    pub error: f64,
}

/// Central differences of `f` at `x` for each step, against `exact`.
pub fn fd_table<E>(mut f: impl FnMut(f64) -> Result<f64, E>, x: f64, exact: f64, steps: &[f64]) -> Result<Vec<FdRow>, E> {
    steps
        .iter()
        .map(|&h| {
            let fd = central_difference(&mut f, x, h)?;
            Ok(FdRow { h, fd, error: (fd - exact).abs() })
        })
        .collect()
}

/// Steps `rel · (hi − lo)` per variable.
pub fn default_steps(bounds: &Bounds, rel: f64) -> [f64; N_VARS] {
    std::array::from_fn(|i| rel * bounds.width(i))
}

/// Central-difference gradient of all outputs; each side is a full
/// evaluation with `newton`.
pub fn fd_gradient(
    model: &Model,
    x: &DesignVector,
    vars: &[usize],
    steps: &[f64; N_VARS],
    newton: &NewtonOptions,
) -> Result<[[f64; N_VARS]; 5], SolverError> {
    let cols: Vec<(usize, [f64; 5])> = vars
        .par_iter()
        .map(|&i| {
            let side = |sign: f64| -> Result<Components, SolverError> {
                let mut xs = *x;
                xs.0[i] += sign * steps[i];
                Ok(model.evaluate_with(&xs, newton)?.components)
            };
            let (p, m) = (side(1.0)?, side(-1.0)?);
            let d = Output::ALL.map(|o| (o.value(&p) - o.value(&m)) / (2.0 * steps[i]));
            Ok((i, d))
        })
        .collect::<Result<_, SolverError>>()?;
    let mut out = [[0.0; N_VARS]; 5];
    for (i, d) in cols {
        for (o, v) in d.into_iter().enumerate() {
            out[o][i] = v;
        }
    }
    Ok(out)
}

/// Adjoint vs finite-difference entry; derivatives are compared per unit
/// of the variable's bound width.
#[derive(Clone, Debug, PartialEq)]
pub struct FdEntry {
    pub output: Output,
    pub var: usize,
    pub adjoint: f64,
    pub fd: f64,
    pub rel_error: f64,
    pub pass: bool,
}

impl FdEntry {
    pub fn name(&self) -> &'static str {
        NAMES[self.var]
    }
}

pub const REL_TOL: f64 = 1e-4;
pub const ABS_TOL: f64 = 1e-8;
const SMALL: f64 = 1e-4;

pub fn compare(output: Output, var: usize, adjoint: f64, fd: f64, width: f64) -> FdEntry {
    let (a, f) = (adjoint * width, fd * width);
    let mag = a.abs().max(f.abs());
    let diff = (a - f).abs();
    let rel_error = if mag > 0.0 { diff / mag } else { 0.0 };
    let pass = rel_error < REL_TOL || (mag < SMALL && diff < ABS_TOL);
    FdEntry { output, var, adjoint, fd, rel_error, pass }
}

#[derive(Clone, Debug)]
pub struct GradientReport {
    pub components: Components,
    pub adjoint: Gradient,
    pub entries: Vec<FdEntry>,
}

impl GradientReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    /// Entries of one output, worst first.
    pub fn sorted(&self, output: Output) -> Vec<&FdEntry> {
        let mut v: Vec<&FdEntry> = self.entries.iter().filter(|e| e.output == output).collect();
        v.sort_by(|a, b| b.rel_error.total_cmp(&a.rel_error).then(a.var.cmp(&b.var)));
        v
    }
}

/// Full check: evaluation, adjoint gradient and central differences.
pub fn gradient_check(
    model: &Model,
    x: &DesignVector,
    bounds: &Bounds,
    vars: &[usize],
    rel_step: f64,
    newton: &NewtonOptions,
) -> Result<GradientReport, SolverError> {
    let eval = model.evaluate_with(x, newton)?;
    let adjoint = adjoint_gradient(model, &eval, vars)?;
    let fd = fd_gradient(model, x, vars, &default_steps(bounds, rel_step), newton)?;
    let mut entries = Vec::new();
    for (o, out) in Output::ALL.into_iter().enumerate() {
        for &i in vars {
            entries.push(compare(out, i, adjoint.get(out)[i], fd[o][i], bounds.width(i)));
        }
    }
    Ok(GradientReport { components: eval.components, adjoint, entries })
}

#[cfg(test)]
mod tests;
