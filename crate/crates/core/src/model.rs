//! One design evaluated over the whole operating set: torque profiles,
//! material cost, Joule loss and the weighted objective.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::AssembledSystem;
use crate::design::{DesignVector, MachineConstants};
use crate::error::SolverError;
use crate::geometry::{build_geometry, material_areas, Areas, Discretization};
use crate::materials::{m27, MaterialTable};
use crate::scaling::{cost_from_areas, joule_loss, JouleConfig, JouleLoss, MaterialCost};
use crate::solver::{angle_grid_deg, torque_sweep, NewtonOptions, SolutionState, TorqueStats};

/// Current levels (multiples of `J0`) times rotor angles.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatingSet {
    pub current_levels: Vec<f64>,
    /// Mechanical angles [rad].
    pub betas: Vec<f64>,
}

impl Default for OperatingSet {
    fn default() -> Self {
        Self { current_levels: vec![0.0, 0.5, 1.0], betas: angle_grid_deg(2.0, 10) }
    }
}

impl OperatingSet {
    pub fn len(&self) -> usize {
        self.current_levels.len() * self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Weights `(m₁, m₂, m₃)` of cost, summed ripple and Joule loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self { m1: 0.05, m2: 10.0, m3: 4.0 }
    }
}

impl Weights {
    /// `m₁ M + m₂ T̂ + m₃ P_J`.
    pub fn combine(&self, cost: f64, ripple: f64, joule: f64) -> f64 {
        self.m1 * cost + self.m2 * ripple + self.m3 * joule
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { m1: s * self.m1, m2: s * self.m2, m3: s * self.m3 }
    }

    pub fn is_valid(&self) -> bool {
        [self.m1, self.m2, self.m3].iter().all(|w| *w >= 0.0 && w.is_finite())
    }
}

/// Everything needed to turn a design vector into objective values.
#[derive(Clone, Debug)]
pub struct Model {
    pub machine: MachineConstants,
    pub disc: Discretization,
    pub materials: MaterialTable,
    pub joule: JouleConfig,
    pub newton: NewtonOptions,
    pub ops: OperatingSet,
    pub weights: Weights,
    /// Required mean torque [N·m].
    pub t_target: f64,
    /// Current level at which the mean-torque constraint applies.
    pub torque_level: f64,
}

impl Default for Model {
    fn default() -> Self {
        Self {
            machine: MachineConstants::default(),
            disc: Discretization::default(),
            materials: MaterialTable::with_iron(std::sync::Arc::new(m27())),
            joule: JouleConfig::default(),
            newton: NewtonOptions::default(),
            ops: OperatingSet::default(),
            weights: Weights::default(),
            t_target: 1.5,
            torque_level: 1.0,
        }
    }
}

/// Torque profile of one current level.
#[derive(Clone, Debug)]
pub struct LevelResult {
    pub current_scale: f64,
    pub stats: TorqueStats,
    pub states: Vec<SolutionState>,
}

/// Scalar outputs of one evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Components {
    pub f_opt: f64,
    pub cost: f64,
    /// Standard deviations summed over the current levels.
    pub ripple: f64,
    /// Joule loss of one slot.
    pub joule: f64,
    /// Mean torque at the constrained level.
    pub t_mean: f64,
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub x: DesignVector,
    pub system: AssembledSystem,
    pub levels: Vec<LevelResult>,
    pub areas: Areas<f64>,
    pub cost: MaterialCost,
    pub joule: JouleLoss,
    pub components: Components,
}

impl Evaluation {
    pub fn level(&self, current_scale: f64) -> Option<&LevelResult> {
        self.levels.iter().find(|l| (l.current_scale - current_scale).abs() < 1e-12)
    }

    pub fn states(&self) -> impl Iterator<Item = &SolutionState> {
        self.levels.iter().flat_map(|l| &l.states)
    }
}

impl Model {
    pub fn validate(&self) -> Result<(), String> {
        self.machine.validate()?;
        self.disc.validate()?;
        if self.ops.current_levels.is_empty() || self.ops.betas.is_empty() {
            return Err("operating set needs at least one current level and one angle".into());
        }
        if !self.ops.current_levels.iter().any(|c| (c - self.torque_level).abs() < 1e-12) {
            return Err(format!("torque_level {} is not one of the current levels", self.torque_level));
        }
        if !self.weights.is_valid() {
            return Err("weights must be finite and nonnegative".into());
        }
        Ok(())
    }

    /// Geometry and assembled system at unit radial scale.
    pub fn system(&self, x: &DesignVector) -> Result<AssembledSystem, SolverError> {
        let g = build_geometry(x, &self.machine, &self.disc)?;
        Ok(AssembledSystem::new(g, self.materials.clone(), self.disc.harmonics)?)
    }

    /// Current-density amplitude on the unit-scale section.
    pub fn j_amp(&self) -> f64 {
        self.joule.j0
    }

    pub fn evaluate(&self, x: &DesignVector) -> Result<Evaluation, SolverError> {
        self.evaluate_with(x, &self.newton)
    }

    pub fn evaluate_with(&self, x: &DesignVector, newton: &NewtonOptions) -> Result<Evaluation, SolverError> {
        let system = self.system(x)?;
        let levels = self
            .ops
            .current_levels
            .par_iter()
            .map(|&cs| {
                let (stats, states) = torque_sweep(
                    &system,
                    &self.ops.betas,
                    cs,
                    x.phi0(),
                    self.j_amp(),
                    x.l(),
                    x.kr(),
                    newton,
                )?;
                Ok(LevelResult { current_scale: cs, stats, states })
            })
            .collect::<Result<Vec<_>, SolverError>>()?;
        let areas = material_areas(x, &self.machine);
        let cost = cost_from_areas(&areas, x.l(), x.kr(), &self.materials);
        let joule = joule_loss(areas.slot, x.l(), x.kr(), self.machine.slots_per_sector, &self.joule);
        let ripple: f64 = levels.iter().map(|l| l.stats.std).sum();
        let t_mean = levels
            .iter()
            .find(|l| (l.current_scale - self.torque_level).abs() < 1e-12)
            .map_or(f64::NAN, |l| l.stats.mean);
        let components = Components {
            f_opt: self.weights.combine(cost.total, ripple, joule.per_slot),
            cost: cost.total,
            ripple,
            joule: joule.per_slot,
            t_mean,
        };
        Ok(Evaluation { x: *x, system, levels, areas, cost, joule, components })
    }

    /// Torque standard deviation over the angle grid for every phase
    /// offset (rows, radians) and current level (columns).
    pub fn ripple_map(&self, x: &DesignVector, phi0s: &[f64], levels: &[f64]) -> Result<Vec<Vec<f64>>, SolverError> {
        if phi0s.is_empty() || levels.is_empty() {
            return Err(SolverError::NoAngles);
        }
        let system = self.system(x)?;
        let cells: Vec<(f64, f64)> = phi0s.iter().flat_map(|&p| levels.iter().map(move |&c| (p, c))).collect();
        let stds = cells
            .par_iter()
            .map(|&(phi0, cs)| {
                let (stats, _) = torque_sweep(
                    &system,
                    &self.ops.betas,
                    cs,
                    phi0,
                    self.j_amp(),
                    x.l(),
                    x.kr(),
                    &self.newton,
                )?;
                Ok(stats.std)
            })
            .collect::<Result<Vec<f64>, SolverError>>()?;
        Ok(stds.chunks(levels.len()).map(<[f64]>::to_vec).collect())
    }
}

/// Percentage change of `after` relative to `before`, cell by cell; 0 where
/// both vanish.
pub fn percent_change(before: &[Vec<f64>], after: &[Vec<f64>]) -> Vec<Vec<f64>> {
    before
        .iter()
        .zip(after)
        .map(|(b, a)| {
            b.iter().zip(a).map(|(b, a)| if a == b { 0.0 } else { 100.0 * (a - b) / b.abs() }).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_objective_closes() {
        let f = Weights::default().combine(11.1506, 0.129, 0.0520);
        assert!((f - 2.0555).abs() < 1e-4, "{f}");
    }

    #[test]
    fn zero_weights_and_linearity() {
        let w = Weights { m1: 0.0, m2: 0.0, m3: 0.0 };
        assert_eq!(w.combine(3.0, 2.0, 1.0), 0.0);
        let w = Weights::default();
        let d = Weights { m1: 2.0 * w.m1, ..w };
        let (m, r, p) = (11.0, 0.2, 0.05);
        assert!((d.combine(m, r, p) - w.combine(m, r, p) - w.m1 * m).abs() < 1e-14);
        assert!(!Weights { m1: -1.0, ..w }.is_valid());
    }

    #[test]
    fn default_operating_set() {
        let o = OperatingSet::default();
        assert_eq!(o.len(), 30);
        assert!((o.betas[9] - 18f64.to_radians()).abs() < 1e-15);
    }

    #[test]
    fn torque_level_must_be_simulated() {
        let m = Model { torque_level: 0.7, ..Model::default() };
        assert!(m.validate().is_err());
        assert!(Model::default().validate().is_ok());
    }

    #[test]
    fn coarse_evaluation_is_consistent() {
        let m = Model {
            disc: Discretization { degree: 2, refinement: 1, harmonics: 6 },
            ops: OperatingSet { current_levels: vec![0.0, 1.0], betas: angle_grid_deg(2.0, 3) },
            ..Model::default()
        };
        let e = m.evaluate(&DesignVector::initial()).unwrap();
        assert_eq!(e.levels.len(), 2);
        assert_eq!(e.states().count(), 6);
        let c = e.components;
        assert_eq!(c.ripple, e.levels[0].stats.std + e.levels[1].stats.std);
        assert_eq!(c.t_mean, e.levels[1].stats.mean);
        assert!(c.t_mean > m.t_target);
        assert_eq!(c.f_opt, m.weights.combine(c.cost, c.ripple, c.joule));

        let x = DesignVector::initial();
        let map = m.ripple_map(&x, &[x.phi0(), 0.2], &[0.0, 1.0]).unwrap();
        assert_eq!((map.len(), map[0].len()), (2, 2));
        assert_eq!(map[0][0], e.levels[0].stats.std);
        assert_eq!(map[0][1], e.levels[1].stats.std);
        // cogging does not depend on the phase offset
        assert!((map[1][0] - map[0][0]).abs() < 1e-12 * map[0][0].max(1e-300));
        assert!(percent_change(&map, &map).iter().flatten().all(|&v| v == 0.0));
        assert!(m.ripple_map(&x, &[], &[1.0]).is_err());
    }

    #[test]
    fn percent_change_cells() {
        let p = percent_change(&[vec![2.0, 0.0]], &[vec![1.0, 0.0]]);
        assert_eq!(p, vec![vec![-50.0, 0.0]]);
    }
}
