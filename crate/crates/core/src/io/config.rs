//! TOML run configuration. Lengths in mm, angles in degrees, current
//! density in A/mm²; everything is converted to SI on load.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::design::{self, Bounds, DesignVector, MachineConstants, N_VARS};
use crate::error::ConfigError;
use crate::geometry::Discretization;
use crate::materials::{m27, BhCurve, Material, MaterialTable, Reluctivity, NU0};
use crate::model::{Model, OperatingSet, Weights};
use crate::optimizer::AlOptions;
use crate::scaling::JouleConfig;
use crate::solver::NewtonOptions;

const MM: f64 = 1e-3;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub machine: MachineSection,
    pub materials: MaterialsSection,
    pub discretization: DiscretizationSection,
    pub operating: OperatingSection,
    pub objective: ObjectiveSection,
    pub joule: JouleSection,
    pub newton: NewtonOptions,
    pub design: DesignSection,
    pub optimizer: AlOptions,
    pub ripple_map: RippleMapSection,
    pub gradcheck: GradcheckSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MachineSection {
    pub pole_pairs: usize,
    pub slots_per_sector: usize,
    pub r_shaft: f64,
    pub r_rotor: f64,
    pub airgap: f64,
    pub r_stator_outer: f64,
    pub pocket_width: f64,
    pub bridge_width: f64,
    pub bridge_min: f64,
    pub rim_min: f64,
    pub rib_min: f64,
    pub slot_depth_min: f64,
    pub tooth_min: f64,
    pub yoke_min: f64,
    pub offset_clearance_frac: f64,
    pub offset_bound_frac: f64,
    /// Slot phases such as `"+A"`, `"-B"`, in angular order.
    pub slot_pattern: Vec<String>,
}

impl Default for MachineSection {
    fn default() -> Self {
        Self::from_constants(&MachineConstants::default())
    }
}

impl MachineSection {
    fn from_constants(c: &MachineConstants) -> Self {
        let mm = |v: f64| v / MM;
        Self {
            pole_pairs: c.pole_pairs,
            slots_per_sector: c.slots_per_sector,
            r_shaft: mm(c.r_shaft),
            r_rotor: mm(c.r_rotor),
            airgap: mm(c.airgap),
            r_stator_outer: mm(c.r_stator_outer),
            pocket_width: mm(c.pocket_width),
            bridge_width: mm(c.bridge_width),
            bridge_min: mm(c.bridge_min),
            rim_min: mm(c.rim_min),
            rib_min: mm(c.rib_min),
            slot_depth_min: mm(c.slot_depth_min),
            tooth_min: mm(c.tooth_min),
            yoke_min: mm(c.yoke_min),
            offset_clearance_frac: c.offset_clearance_frac,
            offset_bound_frac: c.offset_bound_frac,
            slot_pattern: c.slot_pattern.iter().map(|&(k, s)| slot_label(k, s)).collect(),
        }
    }

    pub fn constants(&self) -> Result<MachineConstants, ConfigError> {
        let slot_pattern = self.slot_pattern.iter().map(|s| parse_slot(s)).collect::<Result<Vec<_>, _>>()?;
        let c = MachineConstants {
            pole_pairs: self.pole_pairs,
            slots_per_sector: self.slots_per_sector,
            r_shaft: self.r_shaft * MM,
            r_rotor: self.r_rotor * MM,
            airgap: self.airgap * MM,
            r_stator_outer: self.r_stator_outer * MM,
            pocket_width: self.pocket_width * MM,
            bridge_width: self.bridge_width * MM,
            bridge_min: self.bridge_min * MM,
            rim_min: self.rim_min * MM,
            rib_min: self.rib_min * MM,
            slot_depth_min: self.slot_depth_min * MM,
            tooth_min: self.tooth_min * MM,
            yoke_min: self.yoke_min * MM,
            offset_clearance_frac: self.offset_clearance_frac,
            offset_bound_frac: self.offset_bound_frac,
            slot_pattern,
        };
        c.validate().map_err(ConfigError::Invalid)?;
        Ok(c)
    }
}

fn slot_label(phase: u8, sign: i8) -> String {
    let s = if sign > 0 { '+' } else { '-' };
    format!("{s}{}", (b'A' + phase) as char)
}

fn parse_slot(s: &str) -> Result<(u8, i8), ConfigError> {
    let bad = || ConfigError::Invalid(format!("slot phase {s:?} is not one of +A, -A, +B, -B, +C, -C"));
    let mut ch = s.chars();
    let sign = match ch.next() {
        Some('+') => 1,
        Some('-') => -1,
        _ => return Err(bad()),
    };
    let phase = match (ch.next(), ch.next()) {
        (Some(c @ 'A'..='C'), None) => c as u8 - b'A',
        _ => return Err(bad()),
    };
    Ok((phase, sign))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialsSection {
    /// Two-column H [A/m], B [T] file; the bundled M27 curve when absent.
    pub bh_file: Option<PathBuf>,
    /// Constant iron permeability instead of the BH curve.
    pub iron_mu_r: Option<f64>,
    /// Switch the magnets off (zero remanence).
    pub magnets: bool,
    pub br: f64,
    pub magnet_mu_r: f64,
    pub density_iron: f64,
    pub density_copper: f64,
    pub density_magnet: f64,
    pub cost_iron: f64,
    pub cost_copper: f64,
    pub cost_magnet: f64,
}

impl Default for MaterialsSection {
    fn default() -> Self {
        let t = MaterialTable::with_iron(Arc::new(m27()));
        let (br, _) = t.magnet.remanence.unwrap_or((0.0, 0.0));
        let mu_r = match t.magnet.kind {
            Reluctivity::Linear(nu) => NU0 / nu,
            Reluctivity::Nonlinear(_) => 1.0,
        };
        Self {
            bh_file: None,
            iron_mu_r: None,
            magnets: true,
            br,
            magnet_mu_r: mu_r,
            density_iron: t.iron.density,
            density_copper: t.copper.density,
            density_magnet: t.magnet.density,
            cost_iron: t.iron.unit_cost,
            cost_copper: t.copper.unit_cost,
            cost_magnet: t.magnet.unit_cost,
        }
    }
}

impl MaterialsSection {
    /// Relative BH paths resolve against `base` (the config's directory).
    pub fn table(&self, base: &Path) -> Result<MaterialTable, ConfigError> {
        let curve = match &self.bh_file {
            Some(p) => BhCurve::load(base.join(p))?,
            None => m27(),
        };
        let mut t = MaterialTable::with_iron(Arc::new(curve));
        if let Some(mu) = self.iron_mu_r {
            if !(mu > 0.0) {
                return Err(ConfigError::Invalid("iron_mu_r must be positive".into()));
            }
            t.iron.kind = Reluctivity::Linear(NU0 / mu);
        }
        if !(self.magnet_mu_r > 0.0) {
            return Err(ConfigError::Invalid("magnet_mu_r must be positive".into()));
        }
        let alpha = t.magnet.remanence.map_or(std::f64::consts::FRAC_PI_2, |r| r.1);
        let br = if self.magnets { self.br } else { 0.0 };
        t.magnet = Material {
            kind: Reluctivity::Linear(NU0 / self.magnet_mu_r),
            remanence: Some((br, alpha)),
            ..t.magnet
        };
        (t.iron.density, t.copper.density, t.magnet.density) =
            (self.density_iron, self.density_copper, self.density_magnet);
        (t.iron.unit_cost, t.copper.unit_cost, t.magnet.unit_cost) =
            (self.cost_iron, self.cost_copper, self.cost_magnet);
        Ok(t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationSection {
    pub degree: usize,
    pub refinement: usize,
    pub harmonics: usize,
}

impl Default for DiscretizationSection {
    fn default() -> Self {
        let d = Discretization::default();
        Self { degree: d.degree, refinement: d.refinement, harmonics: d.harmonics }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatingSection {
    /// Multiples of `J0`.
    pub current_levels: Vec<f64>,
    /// Mechanical rotor angles [deg].
    pub beta_deg: Vec<f64>,
    /// Level at which the mean-torque constraint applies.
    pub torque_level: f64,
}

impl Default for OperatingSection {
    fn default() -> Self {
        let o = OperatingSet::default();
        Self {
            current_levels: o.current_levels,
            beta_deg: o.betas.iter().map(|b| round_deg(b.to_degrees())).collect(),
            torque_level: 1.0,
        }
    }
}

/// Round-trip the default grid to exact decimal degrees.
fn round_deg(d: f64) -> f64 {
    (d * 1e9).round() / 1e9
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectiveSection {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    /// Required mean torque [N·m].
    pub t_target: f64,
}

impl Default for ObjectiveSection {
    fn default() -> Self {
        let w = Weights::default();
        Self { m1: w.m1, m2: w.m2, m3: w.m3, t_target: Model::default().t_target }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JouleSection {
    /// Peak current density [A/mm²].
    pub j0: f64,
    pub sigma_cu: f64,
    pub fill: f64,
}

impl Default for JouleSection {
    fn default() -> Self {
        let j = JouleConfig::default();
        Self { j0: j.j0 / 1e6, sigma_cu: j.sigma_cu, fill: j.fill }
    }
}

/// Design point and bounds in display units (mm, deg, 1), ordered as
/// `L, phi0, kR, MAG, MH, MW, SD1, SR1, SW1, SW2, SW3, SW4, rot0..4, sta0..4`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignSection {
    pub x0: Option<Vec<f64>>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RippleMapSection {
    pub phi0_deg: Vec<f64>,
    pub current_levels: Vec<f64>,
}

impl Default for RippleMapSection {
    fn default() -> Self {
        Self { phi0_deg: vec![-20.0, -10.0, 0.0, 10.0, 20.0], current_levels: vec![0.25, 0.5, 0.75, 1.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradcheckSection {
    /// Central-difference step as a fraction of each bound width.
    pub rel_step: f64,
    /// Variable names; all 22 when empty.
    pub variables: Vec<String>,
    /// Newton tolerance for the perturbed solves.
    pub newton_rel_tol: f64,
}

impl Default for GradcheckSection {
    fn default() -> Self {
        Self { rel_step: 1e-6, variables: Vec::new(), newton_rel_tol: 1e-13 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Field samples per element edge in the VTK export.
    pub field_samples: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), field_samples: 4 }
    }
}

fn vector(v: &[f64], what: &str) -> Result<DesignVector, ConfigError> {
    let arr: [f64; N_VARS] = v
        .try_into()
        .map_err(|_| ConfigError::Invalid(format!("{what} needs {N_VARS} values, got {}", v.len())))?;
    if arr.iter().any(|x| !x.is_finite()) {
        return Err(ConfigError::Invalid(format!("{what} has non-finite entries")));
    }
    Ok(DesignVector::from_display(&arr))
}

/// Variable index by name (`L`, `phi0`, …, `sta4`).
pub fn variable_index(name: &str) -> Option<usize> {
    design::NAMES.iter().position(|n| *n == name)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    /// Canonical TOML; formatting and key order of the input do not matter.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Build and validate the model; relative paths resolve against `base`.
    pub fn model(&self, base: &Path) -> Result<Model, ConfigError> {
        let machine = self.machine.constants()?;
        let d = &self.discretization;
        let disc = Discretization { degree: d.degree, refinement: d.refinement, harmonics: d.harmonics };
        let o = &self.operating;
        if o.beta_deg.iter().chain(&o.current_levels).any(|v| !v.is_finite()) {
            return Err(ConfigError::Invalid("operating points must be finite".into()));
        }
        let j = &self.joule;
        if !(j.j0 >= 0.0 && j.sigma_cu > 0.0 && j.fill > 0.0 && j.fill <= 1.0) {
            return Err(ConfigError::Invalid("joule: need j0 ≥ 0, sigma_cu > 0, 0 < fill ≤ 1".into()));
        }
        let n = &self.newton;
        if !(n.rel_tol >= 0.0 && n.abs_tol >= 0.0 && n.armijo > 0.0 && n.armijo < 1.0 && n.min_step > 0.0) {
            return Err(ConfigError::Invalid("newton options out of range".into()));
        }
        if !(self.objective.t_target.is_finite()) {
            return Err(ConfigError::Invalid("t_target must be finite".into()));
        }
        let model = Model {
            machine,
            disc,
            materials: self.materials.table(base)?,
            joule: JouleConfig { j0: j.j0 * 1e6, sigma_cu: j.sigma_cu, fill: j.fill },
            newton: self.newton.clone(),
            ops: OperatingSet {
                current_levels: o.current_levels.clone(),
                betas: o.beta_deg.iter().map(|d| d.to_radians()).collect(),
            },
            weights: Weights { m1: self.objective.m1, m2: self.objective.m2, m3: self.objective.m3 },
            t_target: self.objective.t_target,
            torque_level: o.torque_level,
        };
        model.validate().map_err(ConfigError::Invalid)?;
        Ok(model)
    }

    pub fn initial_design(&self) -> Result<DesignVector, ConfigError> {
        self.design.x0.as_deref().map_or(Ok(DesignVector::initial()), |v| vector(v, "design.x0"))
    }

    pub fn bounds(&self, machine: &MachineConstants) -> Result<Bounds, ConfigError> {
        let mut b = Bounds::reference(machine);
        if let Some(lo) = &self.design.lower {
            b.lo = vector(lo, "design.lower")?.0;
        }
        if let Some(hi) = &self.design.upper {
            b.hi = vector(hi, "design.upper")?.0;
        }
        if let Some(i) = (0..N_VARS).find(|&i| !(b.lo[i] <= b.hi[i])) {
            return Err(ConfigError::Invalid(format!("bounds of {} are empty", design::NAMES[i])));
        }
        Ok(b)
    }

    pub fn gradcheck_variables(&self) -> Result<Vec<usize>, ConfigError> {
        if self.gradcheck.variables.is_empty() {
            return Ok((0..N_VARS).collect());
        }
        self.gradcheck
            .variables
            .iter()
            .map(|n| variable_index(n).ok_or_else(|| ConfigError::Invalid(format!("unknown design variable {n:?}"))))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_default_model() {
        let c = RunConfig::parse("").unwrap();
        let m = c.model(Path::new(".")).unwrap();
        let d = Model::default();
        assert_eq!(m.machine, d.machine);
        assert_eq!(m.disc, d.disc);
        assert_eq!(m.joule, d.joule);
        assert_eq!(m.weights, d.weights);
        assert_eq!(m.ops.current_levels, d.ops.current_levels);
        for (a, b) in m.ops.betas.iter().zip(&d.ops.betas) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(c.initial_design().unwrap(), DesignVector::initial());
        assert_eq!(c.bounds(&m.machine).unwrap(), Bounds::reference(&m.machine));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::parse("[machine]\nwobble = 1\n"), Err(ConfigError::Parse(_))));
        assert!(matches!(RunConfig::parse("[nonsense]\n"), Err(ConfigError::Parse(_))));
        assert!(RunConfig::parse("[objective]\nm1 = 0.1\n").is_ok());
    }

    #[test]
    fn units_convert_to_si() {
        let c = RunConfig::parse("[machine]\nr_rotor = 40.0\n[joule]\nj0 = 2.0\n[operating]\nbeta_deg = [0, 90]\n")
            .unwrap();
        let m = c.model(Path::new(".")).unwrap();
        assert!((m.machine.r_rotor - 0.040).abs() < 1e-15);
        assert_eq!(m.joule.j0, 2.0e6);
        assert!((m.ops.betas[1] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for bad in [
            "[machine]\nslot_pattern = [\"+A\", \"+D\", \"-B\", \"-B\", \"+C\", \"+C\"]\n",
            "[machine]\nr_rotor = 10.0\n",
            "[operating]\ncurrent_levels = [0.0, 0.5]\n",
            "[design]\nx0 = [1.0, 2.0]\n",
            "[materials]\nmagnet_mu_r = 0.0\n",
            "[joule]\nfill = 1.5\n",
        ] {
            let c = RunConfig::parse(bad).unwrap();
            let r = c.model(Path::new(".")).and_then(|_| c.initial_design());
            assert!(matches!(r, Err(ConfigError::Invalid(_))), "{bad}: {r:?}");
        }
    }

    #[test]
    fn slot_labels_round_trip() {
        for k in 0..3 {
            for s in [-1, 1] {
                assert_eq!(parse_slot(&slot_label(k, s)).unwrap(), (k, s));
            }
        }
        assert!(parse_slot("A").is_err() && parse_slot("+AB").is_err());
    }

    #[test]
    fn hash_ignores_formatting_but_not_values() {
        let a = RunConfig::parse("[objective]\nm1 = 0.05\nm2 = 10.0\n").unwrap();
        let b = RunConfig::parse("[objective]\n  m2 = 10.0   # ripple\nm1 = 5e-2\n").unwrap();
        let c = RunConfig::parse("[objective]\nm1 = 0.06\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
        assert_eq!(RunConfig::parse(&a.to_toml()).unwrap(), a);
    }

    #[test]
    fn magnet_switch_zeroes_remanence() {
        let c = RunConfig::parse("[materials]\nmagnets = false\niron_mu_r = 1000.0\n").unwrap();
        let t = c.materials.table(Path::new(".")).unwrap();
        assert_eq!(t.magnet.remanence.unwrap().0, 0.0);
        assert!(t.is_linear());
    }

    #[test]
    fn gradcheck_variables_by_name() {
        let c = RunConfig::parse("[gradcheck]\nvariables = [\"MW\", \"sta3\"]\n").unwrap();
        assert_eq!(c.gradcheck_variables().unwrap(), vec![design::MW, design::STA0 + 3]);
        let bad = RunConfig::parse("[gradcheck]\nvariables = [\"XX\"]\n").unwrap();
        assert!(bad.gradcheck_variables().is_err());
    }
}
