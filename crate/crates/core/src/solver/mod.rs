//! Damped Newton solve of the coupled system, torque and torque sweeps.

use serde::{Deserialize, Serialize};

use crate::assembly::{AssembledSystem, Factorization, OperatingPoint};
use crate::error::SolverError;

mod maxwell;

pub use maxwell::{maxwell_functional, MaxwellTorque};

/// Newton settings. Convergence when `‖F‖ ≤ rel_tol·‖b‖ + abs_tol`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iters: usize,
    /// Backtracking factor.
    pub armijo: f64,
    pub min_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-8, abs_tol: 1e-12, max_iters: 50, armijo: 0.5, min_step: 1e-4 }
    }
}

/// Converged state `z = [u_rt | u_st | λ]` of one operating point.
#[derive(Clone, Debug)]
pub struct SolutionState {
    pub z: Vec<f64>,
    pub op: OperatingPoint,
    /// Current-density amplitude assembled on the unit-scale section.
    pub j_amp: f64,
    pub residual_norm: f64,
    pub tolerance: f64,
    pub newton_iters: usize,
    pub history: Vec<f64>,
    n_rotor: usize,
    n_field: usize,
}

impl SolutionState {
    pub fn u_rt(&self) -> &[f64] {
        &self.z[..self.n_rotor]
    }

    pub fn u_st(&self) -> &[f64] {
        &self.z[self.n_rotor..self.n_field]
    }

    pub fn lambda(&self) -> &[f64] {
        &self.z[self.n_field..]
    }

    pub fn beta(&self) -> f64 {
        self.op.beta
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solve `F(z) = 0` at `op`, optionally warm-started.
pub fn solve_state(
    sys: &AssembledSystem,
    op: &OperatingPoint,
    j_amp: f64,
    init: Option<&SolutionState>,
    opts: &NewtonOptions,
) -> Result<SolutionState, SolverError> {
    let n = sys.n_total();
    let rhs = sys.rhs(j_amp, op);
    let tol = opts.rel_tol * norm(&rhs) + opts.abs_tol;
    let mut z = match init {
        Some(s) if s.z.len() == n => s.z.clone(),
        _ => vec![0.0; n],
    };
    let mut f = sys.residual(&z, op.beta, &rhs);
    let mut r = norm(&f);
    let mut history = vec![r];
    let mut iters = 0;
    while r > tol {
        if iters == opts.max_iters || !r.is_finite() {
            return Err(SolverError::Diverged { iters, history });
        }
        let (vals, _) = sys.jacobian(&z, op.beta, &rhs)?;
        let lu = sys.pattern().factor(&vals)?;
        let dz = lu.solve(&f)?;
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = z.iter().zip(&dz).map(|(a, d)| a - alpha * d).collect();
            let ft = sys.residual(&trial, op.beta, &rhs);
            let rt = norm(&ft);
            if rt <= (1.0 - 1e-4 * alpha) * r || alpha * opts.armijo < opts.min_step {
                z = trial;
                f = ft;
                r = rt;
                break;
            }
            alpha *= opts.armijo;
        }
        iters += 1;
        history.push(r);
    }
    Ok(SolutionState {
        z,
        op: *op,
        j_amp,
        residual_norm: r,
        tolerance: tol,
        newton_iters: iters,
        history,
        n_rotor: sys.dofs.n_rotor,
        n_field: sys.dofs.n_field(),
    })
}

/// Recompute `‖F(z)‖` from scratch.
pub fn residual_norm(sys: &AssembledSystem, s: &SolutionState) -> f64 {
    norm(&sys.residual(&s.z, s.op.beta, &sys.rhs(s.j_amp, &s.op)))
}

/// Factorized Newton Jacobian at a converged state.
pub fn factor_at(sys: &AssembledSystem, s: &SolutionState) -> Result<Factorization, SolverError> {
    let (vals, _) = sys.jacobian(&s.z, s.op.beta, &sys.rhs(s.j_amp, &s.op))?;
    sys.pattern().factor(&vals)
}

/// Full-machine torque [N·m]: the sector functional times `L kR² · 2p`.
pub fn torque(sys: &AssembledSystem, s: &SolutionState, length: f64, k_r: f64) -> f64 {
    torque_factor(sys, length, k_r) * sys.torque_functional(&s.z, s.op.beta)
}

/// `L kR² · 2p`.
pub fn torque_factor(sys: &AssembledSystem, length: f64, k_r: f64) -> f64 {
    length * k_r * k_r * 2.0 * sys.pole_pairs() as f64
}

/// Mean and population standard deviation of a torque profile.
#[derive(Clone, Debug, PartialEq)]
pub struct TorqueStats {
    /// `(β [rad], T [N·m])`.
    pub torques: Vec<(f64, f64)>,
    pub mean: f64,
    pub std: f64,
}

impl TorqueStats {
    pub fn from_torques(torques: Vec<(f64, f64)>) -> Result<Self, SolverError> {
        if torques.is_empty() {
            return Err(SolverError::NoAngles);
        }
        let n = torques.len() as f64;
        let mean = torques.iter().map(|t| t.1).sum::<f64>() / n;
        let var = torques.iter().map(|t| (t.1 - mean).powi(2)).sum::<f64>() / n;
        Ok(Self { torques, mean, std: var.sqrt() })
    }
}

/// Solve every angle in order, warm-starting from the previous one.
#[allow(clippy::too_many_arguments)]
pub fn torque_sweep(
    sys: &AssembledSystem,
    betas: &[f64],
    current_scale: f64,
    phi0: f64,
    j_amp: f64,
    length: f64,
    k_r: f64,
    opts: &NewtonOptions,
) -> Result<(TorqueStats, Vec<SolutionState>), SolverError> {
    if betas.is_empty() {
        return Err(SolverError::NoAngles);
    }
    let mut states: Vec<SolutionState> = Vec::with_capacity(betas.len());
    let mut torques = Vec::with_capacity(betas.len());
    for &beta in betas {
        let op = OperatingPoint { current_scale, beta, phi0 };
        let s = solve_state(sys, &op, j_amp, states.last(), opts).map_err(|e| SolverError::AtOperatingPoint {
            beta_deg: beta.to_degrees(),
            current_scale,
            source: Box::new(e),
        })?;
        torques.push((beta, torque(sys, &s, length, k_r)));
        states.push(s);
    }
    Ok((TorqueStats::from_torques(torques)?, states))
}

/// Mechanical angle grid `{0, step, ..., (n−1)·step}` degrees, in radians.
pub fn angle_grid_deg(step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| (k as f64 * step).to_radians()).collect()
}
