//! The 22 design variables, their bounds and the fixed machine constants.
//!
//! Values are stored in SI units (m, rad). Display units (mm, degrees)
//! are used only at the config/IO boundary via [`DISPLAY_SCALE`].

use serde::{Deserialize, Serialize};

use crate::scalar::{Dual, Scalar};

pub const N_VARS: usize = 22;
pub const N_OFFSETS: usize = 5;

pub const L: usize = 0;
pub const PHI0: usize = 1;
pub const KR: usize = 2;
pub const MAG: usize = 3;
pub const MH: usize = 4;
pub const MW: usize = 5;
pub const SD1: usize = 6;
pub const SR1: usize = 7;
pub const SW1: usize = 8;
pub const SW2: usize = 9;
pub const SW3: usize = 10;
pub const SW4: usize = 11;
pub const ROT0: usize = 12;
pub const STA0: usize = 17;

pub const NAMES: [&str; N_VARS] = [
    "L", "phi0", "kR", "MAG", "MH", "MW", "SD1", "SR1", "SW1", "SW2", "SW3", "SW4", "rot0", "rot1",
    "rot2", "rot3", "rot4", "sta0", "sta1", "sta2", "sta3", "sta4",
];

const MM: f64 = 1e-3;
const DEG: f64 = std::f64::consts::PI / 180.0;

/// Multiply a display value (mm, deg, 1) by this to get SI.
pub const DISPLAY_SCALE: [f64; N_VARS] = [
    MM, DEG, 1.0, MM, MM, MM, MM, MM, MM, MM, MM, MM, MM, MM, MM, MM, MM, MM, MM, MM, MM, MM,
];

pub const DISPLAY_UNITS: [&str; N_VARS] = [
    "mm", "deg", "1", "mm", "mm", "mm", "mm", "mm", "mm", "mm", "mm", "mm", "mm", "mm", "mm", "mm",
    "mm", "mm", "mm", "mm", "mm", "mm",
];

/// Variables that only enter through closed-form scaling or the excitation.
pub fn is_geometric(i: usize) -> bool {
    i >= MAG
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesignVector<T = f64>(pub [T; N_VARS]);

impl<T: Scalar> DesignVector<T> {
    pub fn l(&self) -> T {
        self.0[L]
    }
    pub fn phi0(&self) -> T {
        self.0[PHI0]
    }
    pub fn kr(&self) -> T {
        self.0[KR]
    }
    pub fn mag(&self) -> T {
        self.0[MAG]
    }
    pub fn mh(&self) -> T {
        self.0[MH]
    }
    pub fn mw(&self) -> T {
        self.0[MW]
    }
    pub fn sd1(&self) -> T {
        self.0[SD1]
    }
    pub fn sr1(&self) -> T {
        self.0[SR1]
    }
    pub fn sw1(&self) -> T {
        self.0[SW1]
    }
    pub fn sw2(&self) -> T {
        self.0[SW2]
    }
    pub fn sw3(&self) -> T {
        self.0[SW3]
    }
    pub fn sw4(&self) -> T {
        self.0[SW4]
    }
    pub fn rotor_offset(&self, k: usize) -> T {
        self.0[ROT0 + k]
    }
    pub fn stator_offset(&self, k: usize) -> T {
        self.0[STA0 + k]
    }
}

impl DesignVector<f64> {
    /// Initial design of the reference motor, offsets zero.
    pub fn initial() -> Self {
        let disp = [
            100.0, 0.0, 1.0, 7.0, 7.0, 19.0, 135.0, 1.0, 4.0, 2.3, 1.0, 8.25, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        ];
        Self::from_display(&disp)
    }

    pub fn from_display(v: &[f64; N_VARS]) -> Self {
        let mut x = [0.0; N_VARS];
        for i in 0..N_VARS {
            x[i] = v[i] * DISPLAY_SCALE[i];
        }
        Self(x)
    }

    pub fn to_display(&self) -> [f64; N_VARS] {
        let mut v = [0.0; N_VARS];
        for i in 0..N_VARS {
            v[i] = self.0[i] / DISPLAY_SCALE[i];
        }
        v
    }

    pub fn lift<T: Scalar>(&self) -> DesignVector<T> {
        DesignVector(self.0.map(T::cst))
    }

    /// Dual copy seeded in direction `k`.
    pub fn seed(&self, k: usize) -> DesignVector<Dual> {
        let mut d = self.0.map(Dual::constant);
        d[k] = Dual::variable(self.0[k]);
        DesignVector(d)
    }
}

/// Box bounds on the design vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    pub lo: [f64; N_VARS],
    pub hi: [f64; N_VARS],
}

impl Bounds {
    /// Parameter ranges of the reference study; offsets get
    /// `±offset_bound_frac · airgap`.
    pub fn reference(c: &MachineConstants) -> Self {
        let lo_d = [
            80.0, -20.0, 0.5, 6.0, 2.0, 10.0, 90.0, 0.5, 2.0, 1.0, 0.5, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0, 0.0,
        ];
        let hi_d = [
            120.0, 20.0, 2.0, 15.0, 12.0, 25.0, 160.0, 2.0, 6.0, 4.0, 1.5, 20.0, 0.0, 0.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        ];
        let mut lo = DesignVector::from_display(&lo_d).0;
        let mut hi = DesignVector::from_display(&hi_d).0;
        let ob = c.offset_bound_frac * c.airgap;
        for k in 0..2 * N_OFFSETS {
            lo[ROT0 + k] = -ob;
            hi[ROT0 + k] = ob;
        }
        Self { lo, hi }
    }

    pub fn contains(&self, x: &DesignVector) -> bool {
        (0..N_VARS).all(|i| x.0[i] >= self.lo[i] && x.0[i] <= self.hi[i])
    }

    pub fn first_violation(&self, x: &DesignVector) -> Option<usize> {
        (0..N_VARS).find(|&i| !(x.0[i] >= self.lo[i] && x.0[i] <= self.hi[i]))
    }

    pub fn clip(&self, x: &mut DesignVector) {
        for i in 0..N_VARS {
            x.0[i] = x.0[i].clamp(self.lo[i], self.hi[i]);
        }
    }

    /// Map to `[0, 1]` per variable.
    pub fn normalize(&self, x: &DesignVector) -> [f64; N_VARS] {
        let mut z = [0.0; N_VARS];
        for i in 0..N_VARS {
            z[i] = (x.0[i] - self.lo[i]) / (self.hi[i] - self.lo[i]);
        }
        z
    }

    pub fn denormalize(&self, z: &[f64]) -> DesignVector {
        let mut x = [0.0; N_VARS];
        for i in 0..N_VARS {
            x[i] = self.lo[i] + z[i] * (self.hi[i] - self.lo[i]);
        }
        DesignVector(x)
    }

    pub fn width(&self, i: usize) -> f64 {
        self.hi[i] - self.lo[i]
    }
}

/// Dimensions that are not design variables. Lengths in metres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MachineConstants {
    pub pole_pairs: usize,
    pub slots_per_sector: usize,
    pub r_shaft: f64,
    pub r_rotor: f64,
    pub airgap: f64,
    pub r_stator_outer: f64,
    /// Tangential width of the air pockets at the magnet ends.
    pub pocket_width: f64,
    /// Iron bridge between the air pockets and the rotor surface.
    pub bridge_width: f64,
    /// Minimum radial extent of the air pocket above the magnet corner.
    pub bridge_min: f64,
    pub rim_min: f64,
    pub rib_min: f64,
    pub slot_depth_min: f64,
    pub tooth_min: f64,
    pub yoke_min: f64,
    /// Minimum clearance of a deformed surface from the coupling circle,
    /// as a fraction of the air gap.
    pub offset_clearance_frac: f64,
    pub offset_bound_frac: f64,
    /// `(phase, sign)` per slot, ordered by increasing angle.
    pub slot_pattern: Vec<(u8, i8)>,
}

impl Default for MachineConstants {
    fn default() -> Self {
        Self {
            pole_pairs: 3,
            slots_per_sector: 6,
            r_shaft: 16.0 * MM,
            r_rotor: 39.5 * MM,
            airgap: 1.0 * MM,
            r_stator_outer: 85.0 * MM,
            pocket_width: 1.5 * MM,
            bridge_width: 1.0 * MM,
            bridge_min: 0.5 * MM,
            rim_min: 2.0 * MM,
            rib_min: 1.0 * MM,
            slot_depth_min: 2.0 * MM,
            tooth_min: 1.0 * MM,
            yoke_min: 3.0 * MM,
            offset_clearance_frac: 0.25,
            offset_bound_frac: 0.3,
            slot_pattern: vec![(0, 1), (0, 1), (1, -1), (1, -1), (2, 1), (2, 1)],
        }
    }
}

impl MachineConstants {
    /// Radius of the coupling circle, mid air gap.
    pub fn r_coupling(&self) -> f64 {
        self.r_rotor + 0.5 * self.airgap
    }

    /// Stator bore radius.
    pub fn r_bore(&self) -> f64 {
        self.r_rotor + self.airgap
    }

    /// Mechanical sector angle (one pole).
    pub fn sector_angle(&self) -> f64 {
        std::f64::consts::PI / self.pole_pairs as f64
    }

    pub fn slot_pitch(&self) -> f64 {
        self.sector_angle() / self.slots_per_sector as f64
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.pole_pairs == 0 || self.slots_per_sector == 0 {
            return Err("pole_pairs and slots_per_sector must be positive".into());
        }
        if self.slot_pattern.len() != self.slots_per_sector {
            return Err(format!(
                "slot_pattern has {} entries, expected {}",
                self.slot_pattern.len(),
                self.slots_per_sector
            ));
        }
        if self.slot_pattern.iter().any(|&(k, s)| k > 2 || s.abs() != 1) {
            return Err("slot_pattern entries must be (phase 0..2, sign ±1)".into());
        }
        let radii = [self.r_shaft, self.r_rotor, self.r_bore(), self.r_stator_outer];
        if !(radii[0] > 0.0 && radii.windows(2).all(|w| w[1] > w[0])) {
            return Err("radii must satisfy 0 < shaft < rotor < bore < stator outer".into());
        }
        if !(self.bridge_width > 0.0 && self.bridge_width < self.r_rotor - self.r_shaft) {
            return Err("bridge_width must be positive and inside the rotor".into());
        }
        if !(0.0..0.5).contains(&self.offset_clearance_frac) || self.offset_bound_frac < 0.0 {
            return Err("offset fractions out of range".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_matches_reference_table() {
        let x = DesignVector::initial();
        assert_eq!(x.0.len(), 22);
        assert!((x.mw() - 0.019).abs() < 1e-15);
        assert!((x.mh() - 0.007).abs() < 1e-15);
        assert!((x.sd1() - 0.135).abs() < 1e-15);
        assert!(Bounds::reference(&MachineConstants::default()).contains(&x));
    }

    #[test]
    fn normalization_round_trip() {
        let b = Bounds::reference(&MachineConstants::default());
        let x = DesignVector::initial();
        let z = b.normalize(&x);
        let y = b.denormalize(&z);
        for i in 0..N_VARS {
            assert!((x.0[i] - y.0[i]).abs() < 1e-15);
        }
        let d = DesignVector::from_display(&x.to_display());
        for i in 0..N_VARS {
            assert!((x.0[i] - d.0[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn default_constants_valid() {
        assert!(MachineConstants::default().validate().is_ok());
    }
}
