//! Radial/axial scaling laws, material cost and Joule loss.
//!
//! The field problem is always solved on the unit-scale cross-section;
//! `k_R` and `L` enter the quantities below in closed form.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ScalingError;
use crate::geometry::Areas;
use crate::materials::{CostGroup, MaterialTable};
use crate::scalar::Scalar;

/// Rows of the scaling table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuantityKind {
    FluxDensity,
    FieldStrength,
    Area,
    Current,
    CurrentDensity,
    Torque,
    Cost,
}

impl QuantityKind {
    pub const ALL: [QuantityKind; 7] = [
        Self::FluxDensity,
        Self::FieldStrength,
        Self::Area,
        Self::Current,
        Self::CurrentDensity,
        Self::Torque,
        Self::Cost,
    ];

    /// Exponents `(a, b)` in `q ∝ k_R^a L^b`.
    pub fn exponents(self) -> (i32, i32) {
        match self {
            Self::FluxDensity | Self::FieldStrength => (0, 0),
            Self::Area => (2, 0),
            Self::Current => (1, 0),
            Self::CurrentDensity => (-1, 0),
            Self::Torque | Self::Cost => (2, 1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::FluxDensity => "B",
            Self::FieldStrength => "H",
            Self::Area => "area",
            Self::Current => "current",
            Self::CurrentDensity => "current_density",
            Self::Torque => "torque",
            Self::Cost => "cost",
        }
    }
}

impl FromStr for QuantityKind {
    type Err = ScalingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ScalingError::UnknownKind(s.to_string()))
    }
}

/// Scale `q` by `k_R^a · L_ratio^b` for its kind.
pub fn scale_quantity(q: f64, kind: QuantityKind, k_r: f64, l_ratio: f64) -> f64 {
    let (a, b) = kind.exponents();
    q * k_r.powi(a) * l_ratio.powi(b)
}

/// Material cost split by group, with closed-form partials.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialCost {
    pub iron: f64,
    pub copper: f64,
    pub magnet: f64,
    pub total: f64,
    /// `∂M/∂A_i` per listed material, in input order.
    pub d_area: Vec<(String, f64)>,
    pub d_length: f64,
    pub d_kr: f64,
}

/// `M = L k_R² Σ ρ_i A_i c_i` for areas keyed by material name
/// (`iron`, `copper`, `magnet`, `air`).
pub fn material_cost(
    areas: &[(&str, f64)],
    length: f64,
    k_r: f64,
    table: &MaterialTable,
) -> Result<MaterialCost, ScalingError> {
    let s = length * k_r * k_r;
    let mut out = MaterialCost {
        iron: 0.0,
        copper: 0.0,
        magnet: 0.0,
        total: 0.0,
        d_area: Vec::with_capacity(areas.len()),
        d_length: 0.0,
        d_kr: 0.0,
    };
    for &(name, a) in areas {
        if a < 0.0 {
            return Err(ScalingError::Negative("area"));
        }
        let group = [CostGroup::Iron, CostGroup::Copper, CostGroup::Magnet, CostGroup::Air]
            .into_iter()
            .find(|&g| table.group(g).name == name)
            .ok_or_else(|| ScalingError::UnknownMaterial(name.to_string()))?;
        let m = table.group(group);
        let unit = m.density * m.unit_cost;
        let v = s * unit * a;
        match group {
            CostGroup::Iron => out.iron += v,
            CostGroup::Copper => out.copper += v,
            CostGroup::Magnet => out.magnet += v,
            CostGroup::Air => {}
        }
        out.total += v;
        out.d_area.push((name.to_string(), s * unit));
    }
    out.d_length = out.total / length;
    out.d_kr = 2.0 * out.total / k_r;
    Ok(out)
}

/// `Σ ρ_i A_i c_i` over the cost groups, generic so that area
/// derivatives come from a dual-valued geometry.
pub fn cost_density<T: Scalar>(areas: &Areas<T>, table: &MaterialTable) -> [T; 3] {
    let w = |g: CostGroup| {
        let m = table.group(g);
        areas.get(g) * T::cst(m.density * m.unit_cost)
    };
    [w(CostGroup::Iron), w(CostGroup::Copper), w(CostGroup::Magnet)]
}

/// Cost model of one design from unit-scale areas.
pub fn cost_from_areas(areas: &Areas<f64>, length: f64, k_r: f64, table: &MaterialTable) -> MaterialCost {
    let list = [
        (table.iron.name.as_str(), areas.iron),
        (table.copper.name.as_str(), areas.copper),
        (table.magnet.name.as_str(), areas.magnet),
    ];
    material_cost(&list, length, k_r, table).expect("table names resolve")
}

/// Current density, conductivity and fill factor of the winding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JouleConfig {
    /// Peak current density `J0` [A/m²].
    pub j0: f64,
    /// Copper conductivity [S/m].
    pub sigma_cu: f64,
    pub fill: f64,
}

impl Default for JouleConfig {
    fn default() -> Self {
        Self { j0: 3.2e6, sigma_cu: 5.77e7, fill: 0.6 }
    }
}

impl JouleConfig {
    /// `C = J0² / (σ k_fill)` [W/m³].
    pub fn loss_constant(&self) -> f64 {
        self.j0 * self.j0 / (self.sigma_cu * self.fill)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JouleLoss {
    /// Loss of one slot, `C A_slot L` [W].
    pub per_slot: f64,
    pub total: f64,
    pub d_length: f64,
    pub d_kr: f64,
}

/// Joule loss for a unit-scale slot area `a_slot`; the physical slot area
/// is `k_R² a_slot`.
pub fn joule_loss(a_slot: f64, length: f64, k_r: f64, slots: usize, cfg: &JouleConfig) -> JouleLoss {
    let per_slot = cfg.loss_constant() * a_slot * k_r * k_r * length;
    JouleLoss {
        per_slot,
        total: per_slot * slots as f64,
        d_length: per_slot / length,
        d_kr: 2.0 * per_slot / k_r,
    }
}
