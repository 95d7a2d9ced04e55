//! Weighted-sum design optimization with a mean-torque target and
//! geometric feasibility, over box-normalized design variables.

mod al;

pub use al::{
    projected_gradient_norm, AlOptions, AugmentedLagrangian, Iterate, NlpError, NlpProblem, NlpResult, NlpSolver,
    Status,
};

use crate::design::{Bounds, DesignVector, N_VARS};
use crate::error::{OptimizeError, SolverError};
use crate::geometry::{feasibility, G_NAMES, N_CONSTRAINTS};
use crate::model::{Components, Evaluation, Model, Weights};
use crate::sensitivity::adjoint_gradient;

/// Constraint rows: mean torque first, then the geometric clearances.
pub const N_ROWS: usize = 1 + N_CONSTRAINTS;

pub fn constraint_name(j: usize) -> &'static str {
    if j == 0 {
        "torque"
    } else {
        G_NAMES[j - 1]
    }
}

/// Geometric clearances enter the merit in millimetres.
const G_SCALE: f64 = 1e3;

/// [`Model`] seen as an [`NlpProblem`] on the unit box.
///
/// `f = f_opt / f_ref`, `c_0 = 1 − T̄/T_target`, `c_j = g_j · 1000`.
pub struct DesignProblem<'a> {
    pub model: &'a Model,
    pub bounds: Bounds,
    f_ref: f64,
    last: Option<(Vec<f64>, Evaluation)>,
    /// Components of every successful evaluation, in call order.
    pub log: Vec<(Vec<f64>, Components)>,
    pub failures: Vec<(Vec<f64>, SolverError)>,
}

impl<'a> DesignProblem<'a> {
    pub fn new(model: &'a Model, bounds: Bounds, f_ref: f64) -> Self {
        Self { model, bounds, f_ref, last: None, log: Vec::new(), failures: Vec::new() }
    }

    /// Design vector for `z`, clipped so bounds hold exactly.
    pub fn design(&self, z: &[f64]) -> DesignVector {
        let mut x = self.bounds.denormalize(z);
        self.bounds.clip(&mut x);
        x
    }

    fn evaluation(&mut self, z: &[f64]) -> Option<&Evaluation> {
        if self.last.as_ref().is_some_and(|(zl, _)| zl == z) {
            return self.last.as_ref().map(|(_, e)| e);
        }
        match self.model.evaluate(&self.design(z)) {
            Ok(e) => {
                self.log.push((z.to_vec(), e.components));
                self.last = Some((z.to_vec(), e));
                self.last.as_ref().map(|(_, e)| e)
            }
            Err(err) => {
                self.failures.push((z.to_vec(), err));
                None
            }
        }
    }

    pub fn components(&self, z: &[f64]) -> Option<Components> {
        self.log.iter().rev().find(|(zl, _)| zl == z).map(|(_, c)| *c)
    }
}

impl NlpProblem for DesignProblem<'_> {
    fn dim(&self) -> usize {
        N_VARS
    }

    fn n_constraints(&self) -> usize {
        N_ROWS
    }

    /// Geometric clearances; the model refuses designs past them.
    fn hard_rows(&self) -> Vec<bool> {
        (0..N_ROWS).map(|j| j > 0).collect()
    }

    fn values(&mut self, z: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (f_ref, t_target) = (self.f_ref, self.model.t_target);
        let x = self.design(z);
        let g = feasibility(&x, &self.model.machine).values;
        let c = self.evaluation(z)?.components;
        let mut rows = Vec::with_capacity(N_ROWS);
        rows.push(1.0 - c.t_mean / t_target);
        rows.extend(g.iter().map(|v| v * G_SCALE));
        Some((c.f_opt / f_ref, rows))
    }

    fn gradients(&mut self, z: &[f64]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
        let x = self.design(z);
        let fg = feasibility(&x, &self.model.machine);
        let all: Vec<usize> = (0..N_VARS).collect();
        let model = self.model;
        let (f_ref, t_target) = (self.f_ref, model.t_target);
        let eval = self.evaluation(z)?;
        let grad = match adjoint_gradient(model, eval, &all) {
            Ok(g) => g,
            Err(err) => {
                self.failures.push((z.to_vec(), err));
                return None;
            }
        };
        let w: Vec<f64> = (0..N_VARS).map(|i| self.bounds.width(i)).collect();
        let gf = (0..N_VARS).map(|i| grad.f_opt[i] * w[i] / f_ref).collect();
        let mut gc = Vec::with_capacity(N_ROWS);
        gc.push((0..N_VARS).map(|i| -grad.t_mean[i] * w[i] / t_target).collect());
        for row in &fg.gradient {
            gc.push((0..N_VARS).map(|i| row[i] * w[i] * G_SCALE).collect());
        }
        Some((gf, gc))
    }
}

/// One accepted iterate in physical terms.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub outer: usize,
    pub x: DesignVector,
    pub components: Components,
    /// Largest scaled constraint value (0 when feasible).
    pub violation: f64,
    pub merit: f64,
    pub step_norm: f64,
    pub proj_grad: f64,
}

#[derive(Clone, Debug)]
pub struct Optimum {
    pub x: DesignVector,
    pub initial: Components,
    pub components: Components,
    pub status: Status,
    pub kkt: f64,
    /// Final multipliers per constraint row.
    pub multipliers: Vec<f64>,
    /// Final scaled constraint values per row.
    pub constraints: Vec<f64>,
    pub trace: Vec<TraceRow>,
    pub evaluations: usize,
}

impl Optimum {
    /// Rows with `c_j ≥ −tol` or a positive multiplier, and variables at a bound.
    pub fn active_set(&self, bounds: &Bounds, tol: f64) -> (Vec<usize>, Vec<usize>) {
        let rows = (0..self.constraints.len())
            .filter(|&j| self.constraints[j] >= -tol || self.multipliers[j] > 0.0)
            .collect();
        let vars = (0..N_VARS)
            .filter(|&i| self.x.0[i] <= bounds.lo[i] || self.x.0[i] >= bounds.hi[i])
            .filter(|&i| bounds.width(i) > 0.0)
            .collect();
        (rows, vars)
    }

    /// `max_j |μ_j · c_j|` over the constraint rows.
    pub fn complementarity(&self) -> f64 {
        self.multipliers.iter().zip(&self.constraints).map(|(m, c)| (m * c).abs()).fold(0.0, f64::max)
    }
}

/// Run the weighted-sum optimization from `x0`.
pub fn optimize(model: &Model, bounds: &Bounds, x0: &DesignVector, opts: &AlOptions) -> Result<Optimum, OptimizeError> {
    if !model.weights.is_valid() {
        return Err(OptimizeError::NegativeWeight);
    }
    if let Some(i) = (0..N_VARS).find(|&i| !(bounds.lo[i] <= bounds.hi[i])) {
        return Err(OptimizeError::BadBounds(i));
    }
    if let Some(i) = bounds.first_violation(x0) {
        return Err(OptimizeError::InfeasibleStart(format!("{} outside its bounds", crate::design::NAMES[i])));
    }
    let fr = feasibility(x0, &model.machine);
    if !fr.feasible(0.0) {
        let j = (0..N_CONSTRAINTS).max_by(|&a, &b| fr.values[a].total_cmp(&fr.values[b])).unwrap_or(0);
        return Err(OptimizeError::InfeasibleStart(format!("constraint {} violated", G_NAMES[j])));
    }
    let initial = model.evaluate(x0)?.components;
    let f_ref = initial.f_opt.abs().max(1e-12);
    // box widths of zero (fixed variables) normalize to z = 0
    let z0: Vec<f64> = (0..N_VARS)
        .map(|i| if bounds.width(i) > 0.0 { (x0.0[i] - bounds.lo[i]) / bounds.width(i) } else { 0.0 })
        .collect();
    let mut problem = DesignProblem::new(model, bounds.clone(), f_ref);
    let solver = AugmentedLagrangian::new(opts.clone());
    let r = solver
        .solve(&mut problem, &z0)
        .map_err(|e| OptimizeError::InfeasibleStart(e.to_string()))?;
    let trace = r
        .trace
        .iter()
        .map(|it| TraceRow {
            iter: it.iter,
            outer: it.outer,
            x: problem.design(&it.z),
            components: problem.components(&it.z).unwrap_or(initial),
            violation: it.max_violation(),
            merit: it.merit,
            step_norm: it.step_norm,
            proj_grad: it.proj_grad,
        })
        .collect::<Vec<_>>();
    let x = if r.z == z0 { *x0 } else { problem.design(&r.z) };
    let components = problem.components(&r.z).unwrap_or(initial);
    Ok(Optimum {
        x,
        initial,
        components,
        status: r.status,
        kkt: r.kkt,
        multipliers: r.multipliers,
        constraints: r.c,
        trace,
        evaluations: r.evaluations,
    })
}

/// Rows of the initial/optimized comparison table.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub name: &'static str,
    pub initial: f64,
    pub optimized: f64,
}

impl ReportRow {
    /// Percentage change; 0 when both values are zero.
    pub fn change_percent(&self) -> f64 {
        if self.initial == self.optimized {
            0.0
        } else {
            100.0 * (self.optimized - self.initial) / self.initial.abs()
        }
    }
}

/// `f_opt`, cost split by material, ripple, loss and mean torque.
pub fn comparison(initial: &Evaluation, optimized: &Evaluation) -> Vec<ReportRow> {
    let row = |name, f: &dyn Fn(&Evaluation) -> f64| ReportRow { name, initial: f(initial), optimized: f(optimized) };
    vec![
        row("f_opt", &|e| e.components.f_opt),
        row("cost_iron", &|e| e.cost.iron),
        row("cost_copper", &|e| e.cost.copper),
        row("cost_magnet", &|e| e.cost.magnet),
        row("cost_total", &|e| e.cost.total),
        row("torque_ripple", &|e| e.components.ripple),
        row("power_loss", &|e| e.components.joule),
        row("mean_torque", &|e| e.components.t_mean),
    ]
}

/// One run of a weight sweep.
#[derive(Debug)]
pub struct ParetoPoint {
    pub weights: Weights,
    pub result: Result<(DesignVector, Components), OptimizeError>,
    pub dominated: bool,
}

/// `a` is no worse than `b` in cost, ripple and loss and better in one.
pub fn dominates(a: &Components, b: &Components) -> bool {
    let (pa, pb) = ([a.cost, a.ripple, a.joule], [b.cost, b.ripple, b.joule]);
    pa.iter().zip(&pb).all(|(x, y)| x <= y) && pa.iter().zip(&pb).any(|(x, y)| x < y)
}

/// Independent runs per weight triple; failures stay in their slot.
pub fn pareto_sweep(
    grid: &[Weights],
    mut run: impl FnMut(Weights) -> Result<(DesignVector, Components), OptimizeError>,
) -> Vec<ParetoPoint> {
    let mut pts: Vec<ParetoPoint> =
        grid.iter().map(|&w| ParetoPoint { weights: w, result: run(w), dominated: false }).collect();
    let comps: Vec<Option<Components>> = pts.iter().map(|p| p.result.as_ref().ok().map(|r| r.1)).collect();
    for (i, p) in pts.iter_mut().enumerate() {
        if let Some(ci) = &comps[i] {
            p.dominated = comps.iter().flatten().any(|cj| dominates(cj, ci));
        }
    }
    pts
}

#[cfg(test)]
mod tests;
