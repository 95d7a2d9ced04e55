//! Augmented Lagrangian outer loop with projected L-BFGS inner solves on
//! the unit box.
//!
//! Merit for constraints `c(z) ≤ 0`, multipliers `μ ≥ 0` and penalty `ρ`:
//!
//! ```text
//! Φ(z) = f(z) + 1/(2ρ) Σ_j ( max(0, μ_j + ρ c_j(z))² − μ_j² )
//! ```
//!
//! After each inner solve `μ ← max(0, μ + ρ c)`, and `ρ` grows by
//! `growth` when the violation did not drop by a quarter.
//!
//! Rows flagged by [`NlpProblem::hard_rows`] stay out of `Φ`. They are
//! kept satisfied at every iterate: search directions are projected onto
//! the tangent cone of the nearly active ones and steps stop at the
//! linearized boundary of the rest. Their multipliers are least-squares
//! estimates over the active set.

use std::collections::VecDeque;

use faer::linalg::solvers::Solve;
use faer::Mat;
use serde::{Deserialize, Serialize};

/// Smooth problem on `[0, 1]^n` with inequality constraints `c(z) ≤ 0`.
pub trait NlpProblem {
    fn dim(&self) -> usize;
    fn n_constraints(&self) -> usize;
    /// `(f, c)`, or `None` when the model cannot be evaluated at `z`.
    fn values(&mut self, z: &[f64]) -> Option<(f64, Vec<f64>)>;
    /// `(∇f, ∇c_j)` at a point where [`Self::values`] succeeded.
    fn gradients(&mut self, z: &[f64]) -> Option<(Vec<f64>, Vec<Vec<f64>>)>;
    /// Rows that must hold at every iterate (the start included), e.g.
    /// cheap geometric limits beyond which the model cannot be evaluated.
    fn hard_rows(&self) -> Vec<bool> {
        vec![false; self.n_constraints()]
    }
}

/// Anything that can solve an [`NlpProblem`]; the seam for external solvers.
pub trait NlpSolver {
    fn solve(&self, problem: &mut dyn NlpProblem, z0: &[f64]) -> Result<NlpResult, NlpError>;
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum NlpError {
    #[error("starting point cannot be evaluated")]
    StartNotEvaluable,
    #[error("starting point has dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("starting point violates hard constraint {0}")]
    HardViolated(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlOptions {
    /// Projected-gradient tolerance on the Lagrangian (∞-norm, unit box).
    pub tol_opt: f64,
    /// Allowed constraint violation.
    pub tol_con: f64,
    /// Accepted inner iterations over all outer steps.
    pub max_iters: usize,
    pub max_outer: usize,
    pub penalty0: f64,
    pub growth: f64,
    pub memory: usize,
    pub max_backtracks: usize,
    /// Largest ∞-norm step on the unit box.
    pub max_step: f64,
    /// Hard rows with `c ≥ −active_tol` count as active.
    pub active_tol: f64,
}

impl Default for AlOptions {
    fn default() -> Self {
        Self {
            tol_opt: 1e-5,
            tol_con: 1e-6,
            max_iters: 120,
            max_outer: 20,
            penalty0: 1.0,
            growth: 10.0,
            memory: 8,
            max_backtracks: 20,
            max_step: 0.2,
            active_tol: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Converged,
    MaxIterations,
    /// Backtracking along steepest descent failed in an outer iteration
    /// that accepted no step; best point returned.
    LineSearch,
}

/// One accepted iterate (iteration 0 is the start).
#[derive(Clone, Debug, PartialEq)]
pub struct Iterate {
    pub iter: usize,
    pub outer: usize,
    pub z: Vec<f64>,
    pub f: f64,
    pub c: Vec<f64>,
    /// Merit under the multipliers and penalty of `outer`.
    pub merit: f64,
    pub penalty: f64,
    pub step_norm: f64,
    pub proj_grad: f64,
}

impl Iterate {
    pub fn max_violation(&self) -> f64 {
        self.c.iter().fold(0.0f64, |m, &v| m.max(v))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NlpResult {
    pub z: Vec<f64>,
    pub f: f64,
    pub c: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub status: Status,
    /// Projected gradient of the Lagrangian at `z`.
    pub kkt: f64,
    pub trace: Vec<Iterate>,
    pub evaluations: usize,
}

/// The default solver.
#[derive(Clone, Debug, Default)]
pub struct AugmentedLagrangian {
    pub options: AlOptions,
}

struct Point {
    z: Vec<f64>,
    f: f64,
    c: Vec<f64>,
    gf: Vec<f64>,
    gc: Vec<Vec<f64>>,
}

fn merit(f: f64, c: &[f64], mu: &[f64], rho: f64, hard: &[bool]) -> f64 {
    f + c
        .iter()
        .zip(mu)
        .zip(hard)
        .filter(|(_, &h)| !h)
        .map(|((&cj, &mj), _)| ((mj + rho * cj).max(0.0).powi(2) - mj * mj) / (2.0 * rho))
        .sum::<f64>()
}

fn merit_grad(p: &Point, mu: &[f64], rho: f64, hard: &[bool]) -> Vec<f64> {
    let mut g = p.gf.clone();
    for (((&cj, &mj), gc), &h) in p.c.iter().zip(mu).zip(&p.gc).zip(hard) {
        let w = (mj + rho * cj).max(0.0);
        if w != 0.0 && !h {
            for (gi, v) in g.iter_mut().zip(gc) {
                *gi += w * v;
            }
        }
    }
    g
}

fn lagrangian_grad(p: &Point, mu: &[f64]) -> Vec<f64> {
    let mut g = p.gf.clone();
    for (&mj, gc) in mu.iter().zip(&p.gc) {
        if mj != 0.0 {
            for (gi, v) in g.iter_mut().zip(gc) {
                *gi += mj * v;
            }
        }
    }
    g
}

/// `‖P(z − g) − z‖∞` on the unit box.
pub fn projected_gradient_norm(z: &[f64], g: &[f64]) -> f64 {
    z.iter().zip(g).fold(0.0f64, |m, (&zi, &gi)| m.max(((zi - gi).clamp(0.0, 1.0) - zi).abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Box-free variables and nearly active hard rows at a point.
struct Active {
    free: Vec<bool>,
    rows: Vec<usize>,
}

impl Active {
    fn at(z: &[f64], g: &[f64], c: &[f64], hard: &[bool], tol: f64) -> Self {
        let free = z.iter().zip(g).map(|(&zi, &gi)| !((zi <= 0.0 && gi > 0.0) || (zi >= 1.0 && gi < 0.0))).collect();
        let rows = (0..c.len()).filter(|&j| hard[j] && c[j] >= -tol).collect();
        Self { free, rows }
    }

    fn mask(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.free).map(|(x, &f)| if f { *x } else { 0.0 }).collect()
    }

    /// Projects `v` onto the free variables and then onto the tangent cone
    /// of the active rows, growing the working set greedily from the rows
    /// `v` would violate. Returns the direction and the working set.
    fn project(&self, v: &[f64], gc: &[Vec<f64>]) -> (Vec<f64>, Vec<usize>) {
        let v = self.mask(v);
        let mut work: Vec<usize> = Vec::new();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut d = v.clone();
        loop {
            let next = self.rows.iter().copied().filter(|j| !work.contains(j)).find(|&j| {
                let a = self.mask(&gc[j]);
                dot(&a, &d) > 1e-14 * dot(&a, &a).sqrt() * dot(&d, &d).sqrt()
            });
            let Some(j) = next else { break };
            work.push(j);
            let mut q = self.mask(&gc[j]);
            for b in &basis {
                let r = dot(b, &q);
                q.iter_mut().zip(b).for_each(|(qi, bi)| *qi -= r * bi);
            }
            let nq = dot(&q, &q).sqrt();
            if nq > 1e-12 * dot(&gc[j], &gc[j]).sqrt() {
                basis.push(q.iter().map(|x| x / nq).collect());
            }
            d = v.clone();
            for b in &basis {
                let r = dot(b, &d);
                d.iter_mut().zip(b).for_each(|(di, bi)| *di -= r * bi);
            }
        }
        (d, work)
    }

    /// Least-squares `μ ≥ 0` for the rows in `work` from
    /// `g + Σ μ_j ∇c_j ≈ 0` over the free variables.
    fn multipliers(&self, g: &[f64], gc: &[Vec<f64>], work: &[usize]) -> Vec<(usize, f64)> {
        if work.is_empty() {
            return Vec::new();
        }
        let a: Vec<Vec<f64>> = work.iter().map(|&j| self.mask(&gc[j])).collect();
        let k = work.len();
        let gram = Mat::from_fn(k, k, |r, s| dot(&a[r], &a[s]) + if r == s { 1e-14 * dot(&a[r], &a[r]) } else { 0.0 });
        let rhs = Mat::from_fn(k, 1, |r, _| -dot(&a[r], &self.mask(g)));
        let mu = gram.partial_piv_lu().solve(&rhs);
        work.iter().enumerate().map(|(r, &j)| (j, mu[(r, 0)].max(0.0))).collect()
    }

    /// `‖P(z + d) − z‖∞` with `d` the projected steepest descent.
    fn stationarity(&self, z: &[f64], g: &[f64], gc: &[Vec<f64>]) -> f64 {
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        let (d, _) = self.project(&neg, gc);
        z.iter().zip(&d).fold(0.0f64, |m, (&zi, &di)| m.max(((zi + di).clamp(0.0, 1.0) - zi).abs()))
    }
}

/// Largest step along `d` keeping the linearized inactive hard rows ≤ 0.
fn ratio_limit(p: &Point, d: &[f64], hard: &[bool], active: &[usize]) -> f64 {
    (0..p.c.len())
        .filter(|j| hard[*j] && !active.contains(j))
        .filter_map(|j| {
            let slope = dot(&p.gc[j], d);
            (slope > 0.0).then(|| (-p.c[j]).max(0.0) / slope)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Two-loop recursion restricted to the free variables.
fn lbfgs_direction(g: &[f64], free: &[bool], mem: &VecDeque<(Vec<f64>, Vec<f64>)>) -> Vec<f64> {
    let mask = |v: &[f64]| -> Vec<f64> { v.iter().zip(free).map(|(x, &f)| if f { *x } else { 0.0 }).collect() };
    let mut q = mask(g);
    let pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = mem
        .iter()
        .filter_map(|(s, y)| {
            let (s, y) = (mask(s), mask(y));
            let sy = dot(&s, &y);
            (sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt()).then(|| (s, y, 1.0 / sy))
        })
        .collect();
    let mut alpha = vec![0.0; pairs.len()];
    for (k, (s, y, r)) in pairs.iter().enumerate().rev() {
        alpha[k] = r * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= alpha[k] * yi;
        }
    }
    if let Some((s, y, _)) = pairs.last() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for (k, (s, y, r)) in pairs.iter().enumerate() {
        let b = r * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (alpha[k] - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

impl AugmentedLagrangian {
    pub fn new(options: AlOptions) -> Self {
        Self { options }
    }

    fn point(problem: &mut dyn NlpProblem, z: Vec<f64>, evals: &mut usize) -> Option<Point> {
        *evals += 1;
        let (f, c) = problem.values(&z)?;
        let (gf, gc) = problem.gradients(&z)?;
        Some(Point { z, f, c, gf, gc })
    }
}

impl NlpSolver for AugmentedLagrangian {
    fn solve(&self, problem: &mut dyn NlpProblem, z0: &[f64]) -> Result<NlpResult, NlpError> {
        let o = &self.options;
        let n = problem.dim();
        if z0.len() != n {
            return Err(NlpError::Dimension { expected: n, got: z0.len() });
        }
        let mut evals = 0;
        let z0: Vec<f64> = z0.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let mut p = Self::point(problem, z0, &mut evals).ok_or(NlpError::StartNotEvaluable)?;
        let m = problem.n_constraints();
        let hard = problem.hard_rows();
        if let Some(j) = (0..m).find(|&j| hard[j] && p.c[j] > o.active_tol) {
            return Err(NlpError::HardViolated(j));
        }
        let mut mu = vec![0.0; m];
        let mut rho = o.penalty0;
        let mut trace = Vec::new();
        let mut iters = 0;
        let mut status = Status::MaxIterations;
        let mut prev_viol = f64::INFINITY;
        let viol = |c: &[f64]| c.iter().zip(&hard).filter(|(_, &h)| !h).fold(0.0f64, |a, (&v, _)| a.max(v));
        let active = |p: &Point, g: &[f64]| Active::at(&p.z, g, &p.c, &hard, o.active_tol);
        let steepest_dir = |act: &Active, g: &[f64], gc: &[Vec<f64>]| {
            let neg: Vec<f64> = g.iter().map(|v| -v).collect();
            act.project(&neg, gc).0
        };

        let mut g = merit_grad(&p, &mu, rho, &hard);
        trace.push(Iterate {
            iter: 0,
            outer: 0,
            z: p.z.clone(),
            f: p.f,
            c: p.c.clone(),
            merit: merit(p.f, &p.c, &mu, rho, &hard),
            penalty: rho,
            step_norm: 0.0,
            proj_grad: active(&p, &g).stationarity(&p.z, &g, &p.gc),
        });

        'outer: for outer in 0..o.max_outer {
            let mut mem: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
            g = merit_grad(&p, &mu, rho, &hard);
            let mut phi = merit(p.f, &p.c, &mu, rho, &hard);
            // inner tolerance tightens with the outer loop
            let inner_tol = o.tol_opt.max(0.1f64.powi(outer as i32 + 1));
            let mut last_rows: Vec<usize> = Vec::new();
            let (mut stalled, mut moved) = (false, false);
            loop {
                let act = active(&p, &g);
                if act.stationarity(&p.z, &g, &p.gc) <= inner_tol {
                    break;
                }
                if iters >= o.max_iters {
                    break 'outer;
                }
                // curvature pairs from before an active-set change mislead
                if act.rows != last_rows {
                    mem.clear();
                    last_rows = act.rows.clone();
                }
                let mut steepest = mem.is_empty();
                let mut d = if steepest {
                    steepest_dir(&act, &g, &p.gc)
                } else {
                    act.project(&lbfgs_direction(&g, &act.free, &mem), &p.gc).0
                };
                let accepted = loop {
                    if dot(&d, &g) >= 0.0 {
                        d = steepest_dir(&act, &g, &p.gc);
                        steepest = true;
                    }
                    let dmax = inf_norm(&d);
                    let cap = if dmax > o.max_step { o.max_step / dmax } else { 1.0 };
                    let mut alpha = cap.min(ratio_limit(&p, &d, &hard, &act.rows));
                    let mut found = None;
                    for _ in 0..o.max_backtracks {
                        let zt: Vec<f64> = p.z.iter().zip(&d).map(|(zi, di)| (zi + alpha * di).clamp(0.0, 1.0)).collect();
                        let s: Vec<f64> = zt.iter().zip(&p.z).map(|(a, b)| a - b).collect();
                        if s.iter().all(|v| *v == 0.0) {
                            break;
                        }
                        evals += 1;
                        if let Some((ft, ct)) = problem.values(&zt) {
                            let phit = merit(ft, &ct, &mu, rho, &hard);
                            let hard_ok = (0..m).all(|j| !hard[j] || ct[j] <= o.active_tol);
                            if hard_ok && phit.is_finite() && phit <= phi + 1e-4 * dot(&g, &s) {
                                found = Some(zt);
                                break;
                            }
                        }
                        alpha *= 0.5;
                    }
                    match found {
                        Some(zt) => break Some(zt),
                        None if !steepest => {
                            mem.clear();
                            d = steepest_dir(&act, &g, &p.gc);
                            steepest = true;
                        }
                        None => break None,
                    }
                };
                // the inner solve ends here; updated multipliers may still move
                let Some(zt) = accepted else {
                    stalled = true;
                    break;
                };
                let Some(pt) = Self::point(problem, zt, &mut evals) else {
                    status = Status::LineSearch;
                    break 'outer;
                };
                let gt = merit_grad(&pt, &mu, rho, &hard);
                let s: Vec<f64> = pt.z.iter().zip(&p.z).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
                if dot(&s, &y) > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
                    mem.push_back((s.clone(), y));
                    if mem.len() > o.memory {
                        mem.pop_front();
                    }
                }
                iters += 1;
                moved = true;
                phi = merit(pt.f, &pt.c, &mu, rho, &hard);
                p = pt;
                g = gt;
                trace.push(Iterate {
                    iter: iters,
                    outer,
                    z: p.z.clone(),
                    f: p.f,
                    c: p.c.clone(),
                    merit: phi,
                    penalty: rho,
                    step_norm: inf_norm(&s),
                    proj_grad: active(&p, &g).stationarity(&p.z, &g, &p.gc),
                });
            }
            for ((mj, &cj), &h) in mu.iter_mut().zip(&p.c).zip(&hard) {
                if !h {
                    *mj = (*mj + rho * cj).max(0.0);
                }
            }
            let kkt = self.hard_multipliers(&p, &mut mu, &hard);
            let v = viol(&p.c);
            if v <= o.tol_con && kkt <= o.tol_opt {
                status = Status::Converged;
                break;
            }
            if stalled && !moved {
                status = Status::LineSearch;
                break;
            }
            if v > o.tol_con && v > 0.25 * prev_viol {
                rho *= o.growth;
            }
            prev_viol = v;
        }
        let kkt = self.hard_multipliers(&p, &mut mu, &hard);
        Ok(NlpResult { z: p.z, f: p.f, c: p.c, multipliers: mu, status, kkt, trace, evaluations: evals })
    }
}

impl AugmentedLagrangian {
    /// Refreshes the hard-row multipliers at `p` and returns the projected
    /// gradient of the full Lagrangian.
    fn hard_multipliers(&self, p: &Point, mu: &mut [f64], hard: &[bool]) -> f64 {
        for (mj, &h) in mu.iter_mut().zip(hard) {
            if h {
                *mj = 0.0;
            }
        }
        let gl = lagrangian_grad(p, mu);
        let act = Active::at(&p.z, &gl, &p.c, hard, self.options.active_tol);
        let neg: Vec<f64> = gl.iter().map(|v| -v).collect();
        let (_, work) = act.project(&neg, &p.gc);
        for (j, v) in act.multipliers(&gl, &p.gc, &work) {
            mu[j] = v;
        }
        projected_gradient_norm(&p.z, &lagrangian_grad(p, mu))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `Σ (z_i − c_i)²` subject to `a·z ≤ b`.
    struct Quadratic {
        c: Vec<f64>,
        a: Vec<f64>,
        b: f64,
    }

    impl NlpProblem for Quadratic {
        fn dim(&self) -> usize {
            self.c.len()
        }
        fn n_constraints(&self) -> usize {
            1
        }
        fn values(&mut self, z: &[f64]) -> Option<(f64, Vec<f64>)> {
            let f = z.iter().zip(&self.c).map(|(x, c)| (x - c) * (x - c)).sum();
            Some((f, vec![dot(&self.a, z) - self.b]))
        }
        fn gradients(&mut self, z: &[f64]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
            Some((z.iter().zip(&self.c).map(|(x, c)| 2.0 * (x - c)).collect(), vec![self.a.clone()]))
        }
    }

    fn tight() -> AugmentedLagrangian {
        AugmentedLagrangian::new(AlOptions { tol_opt: 1e-10, tol_con: 1e-10, max_iters: 500, ..AlOptions::default() })
    }

    #[test]
    fn recovers_closed_form_kkt_point() {
        // projection of (0.8, 0.9, 1.3) onto {z0 + z1 ≤ 1} ∩ [0,1]³:
        // z = (0.45, 0.55, 1), μ = 0.7
        let mut q = Quadratic { c: vec![0.8, 0.9, 1.3], a: vec![1.0, 1.0, 0.0], b: 1.0 };
        let r = tight().solve(&mut q, &[0.1, 0.1, 0.1]).unwrap();
        assert_eq!(r.status, Status::Converged);
        for (z, e) in r.z.iter().zip([0.45, 0.55, 1.0]) {
            assert!((z - e).abs() < 1e-8, "{:?}", r.z);
        }
        assert!((r.multipliers[0] - 0.7).abs() < 1e-6, "{:?}", r.multipliers);
    }

    #[test]
    fn inactive_constraint_has_zero_multiplier() {
        let mut q = Quadratic { c: vec![0.2, 0.3], a: vec![1.0, 1.0], b: 1.0 };
        let r = tight().solve(&mut q, &[0.9, 0.0]).unwrap();
        assert!((r.z[0] - 0.2).abs() < 1e-8 && (r.z[1] - 0.3).abs() < 1e-8);
        assert_eq!(r.multipliers[0], 0.0);
    }

    #[test]
    fn iterates_stay_in_box_and_merit_is_monotone() {
        let mut q = Quadratic { c: vec![1.7, -0.4, 0.5, 0.9], a: vec![1.0, 0.0, 1.0, 1.0], b: 1.2 };
        let r = tight().solve(&mut q, &[0.5; 4]).unwrap();
        for it in &r.trace {
            assert!(it.z.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        for w in r.trace.windows(2) {
            if w[0].outer == w[1].outer && w[1].iter > 0 && w[0].iter > 0 {
                assert!(w[1].merit <= w[0].merit, "{} > {}", w[1].merit, w[0].merit);
            }
        }
    }

    #[test]
    fn failed_evaluations_are_rejected_steps() {
        struct Walled(Quadratic);
        impl NlpProblem for Walled {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn n_constraints(&self) -> usize {
                1
            }
            fn values(&mut self, z: &[f64]) -> Option<(f64, Vec<f64>)> {
                (z[0] <= 0.6).then(|| self.0.values(z)).flatten()
            }
            fn gradients(&mut self, z: &[f64]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
                self.0.gradients(z)
            }
        }
        let mut w = Walled(Quadratic { c: vec![0.9, 0.1], a: vec![0.0, 1.0], b: 1.0 });
        let r = AugmentedLagrangian::default().solve(&mut w, &[0.0, 0.0]).unwrap();
        assert!(r.z[0] <= 0.6 && r.f < 0.81);
        assert!(matches!(
            AugmentedLagrangian::default().solve(&mut w, &[0.9, 0.0]),
            Err(NlpError::StartNotEvaluable)
        ));
    }

    /// [`Quadratic`] whose constraint is hard and whose model fails past it.
    struct Hard(Quadratic);

    impl NlpProblem for Hard {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn n_constraints(&self) -> usize {
            1
        }
        fn values(&mut self, z: &[f64]) -> Option<(f64, Vec<f64>)> {
            self.0.values(z).filter(|(_, c)| c[0] <= 1e-12)
        }
        fn gradients(&mut self, z: &[f64]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
            self.0.gradients(z)
        }
        fn hard_rows(&self) -> Vec<bool> {
            vec![true]
        }
    }

    #[test]
    fn hard_row_is_never_crossed_and_reaches_the_kkt_point() {
        let mut q = Hard(Quadratic { c: vec![0.8, 0.9, 1.3], a: vec![1.0, 1.0, 0.0], b: 1.0 });
        let r = tight().solve(&mut q, &[0.1, 0.1, 0.1]).unwrap();
        assert_eq!(r.status, Status::Converged);
        for (z, e) in r.z.iter().zip([0.45, 0.55, 1.0]) {
            assert!((z - e).abs() < 1e-8, "{:?}", r.z);
        }
        assert!((r.multipliers[0] - 0.7).abs() < 1e-6, "{:?}", r.multipliers);
        assert!(r.trace.iter().all(|it| it.c[0] <= 1e-8));
    }

    #[test]
    fn hard_row_violated_at_start_is_refused() {
        struct Evaluable(Quadratic);
        impl NlpProblem for Evaluable {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn n_constraints(&self) -> usize {
                1
            }
            fn values(&mut self, z: &[f64]) -> Option<(f64, Vec<f64>)> {
                self.0.values(z)
            }
            fn gradients(&mut self, z: &[f64]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
                self.0.gradients(z)
            }
            fn hard_rows(&self) -> Vec<bool> {
                vec![true]
            }
        }
        let mut q = Evaluable(Quadratic { c: vec![0.5, 0.5], a: vec![1.0, 1.0], b: 1.0 });
        let e = AugmentedLagrangian::default().solve(&mut q, &[0.9, 0.9]);
        assert_eq!(e, Err(NlpError::HardViolated(0)));
    }

    #[test]
    fn runs_are_deterministic() {
        let run = || {
            let mut q = Quadratic { c: vec![0.8, 0.9, 0.3], a: vec![1.0, 1.0, 0.0], b: 1.0 };
            AugmentedLagrangian::default().solve(&mut q, &[0.3, 0.2, 0.9]).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn zero_iterations_return_start() {
        let mut q = Quadratic { c: vec![0.8, 0.9], a: vec![1.0, 1.0], b: 1.0 };
        let s = AugmentedLagrangian::new(AlOptions { max_iters: 0, ..AlOptions::default() });
        let r = s.solve(&mut q, &[0.25, 0.5]).unwrap();
        assert_eq!(r.z, vec![0.25, 0.5]);
        assert_eq!(r.trace.len(), 1);
    }
}
