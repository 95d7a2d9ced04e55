//! Material database: saturable iron from a BH curve, linear media,
//! permanent-magnet remanence, densities and unit costs.

use std::path::Path;
use std::sync::Arc;

use crate::error::MaterialError;
use crate::scalar::Scalar;

/// Vacuum permeability [H/m].
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;
/// Vacuum reluctivity [A/(T·m)].
pub const NU0: f64 = 1.0 / MU0;

/// Reluctivity `ν(B²) = H/B` of a magnetization curve, interpolated by a
/// monotone cubic in `B²` and continued with vacuum slope past the last
/// sample (`B = μ0·H + const`).
#[derive(Clone, Debug)]
pub struct BhCurve {
    b: Vec<f64>,
    h: Vec<f64>,
    s: Vec<f64>,
    nu: Vec<f64>,
    slope: Vec<f64>,
    // H_N − B_N/μ0, the offset of the vacuum-slope continuation
    tail: f64,
}

impl BhCurve {
    /// Build from `(B [T], H [A/m])` samples. `(0, 0)` must be the first sample.
    pub fn from_samples(samples: &[(f64, f64)]) -> Result<Self, MaterialError> {
        if samples.len() < 4 {
            return Err(MaterialError::TooFew(samples.len()));
        }
        for (i, &(b, h)) in samples.iter().enumerate() {
            if !(b.is_finite() && h.is_finite()) || b < 0.0 || h < 0.0 {
                return Err(MaterialError::Ingest { row: i, msg: "negative or non-finite value".into() });
            }
        }
        if samples[0] != (0.0, 0.0) {
            return Err(MaterialError::Ingest { row: 0, msg: "curve must start at (0, 0)".into() });
        }
        for i in 1..samples.len() {
            if samples[i].0 <= samples[i - 1].0 || samples[i].1 <= samples[i - 1].1 {
                return Err(MaterialError::Ingest {
                    row: i,
                    msg: "B and H must be strictly increasing".into(),
                });
            }
        }
        let b: Vec<f64> = samples.iter().map(|p| p.0).collect();
        let h: Vec<f64> = samples.iter().map(|p| p.1).collect();
        let s: Vec<f64> = b.iter().map(|x| x * x).collect();
        let mut nu: Vec<f64> = b.iter().zip(&h).skip(1).map(|(b, h)| h / b).collect();
        nu.insert(0, nu[0]);
        let n = s.len();
        let tail = h[n - 1] - b[n - 1] / MU0;

        // Fritsch–Carlson slopes
        let sec: Vec<f64> = (0..n - 1).map(|i| (nu[i + 1] - nu[i]) / (s[i + 1] - s[i])).collect();
        let mut m = vec![0.0; n];
        m[0] = sec[0];
        for i in 1..n - 1 {
            m[i] = if sec[i - 1] * sec[i] <= 0.0 { 0.0 } else { 0.5 * (sec[i - 1] + sec[i]) };
        }
        let end = -0.5 * tail / s[n - 1].powf(1.5);
        m[n - 1] = if end * sec[n - 2] > 0.0 { end } else { 0.0 };
        for i in 0..n - 1 {
            if sec[i] == 0.0 {
                m[i] = 0.0;
                m[i + 1] = 0.0;
                continue;
            }
            let a = m[i] / sec[i];
            let c = m[i + 1] / sec[i];
            if a < 0.0 {
                m[i] = 0.0;
            }
            if c < 0.0 {
                m[i + 1] = 0.0;
            }
            let r = a * a + c * c;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                m[i] = t * a * sec[i];
                m[i + 1] = t * c * sec[i];
            }
        }
        Ok(Self { b, h, s, nu, slope: m, tail })
    }

    /// Parse a two-column text file. `#` starts a comment; a line
    /// `order: BH` or `order: HB` declares the column order (default BH).
    pub fn parse(text: &str) -> Result<Self, MaterialError> {
        let mut bh_order = true;
        let mut samples = Vec::new();
        let mut lines = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("order:") {
                bh_order = match rest.trim() {
                    "BH" => true,
                    "HB" => false,
                    other => {
                        return Err(MaterialError::Ingest {
                            row: lineno + 1,
                            msg: format!("unknown column order {other}"),
                        })
                    }
                };
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|c| !c.is_empty()).collect();
            if cols.len() != 2 {
                return Err(MaterialError::Ingest { row: lineno + 1, msg: "expected two columns".into() });
            }
            let parse = |c: &str| {
                c.parse::<f64>()
                    .map_err(|e| MaterialError::Ingest { row: lineno + 1, msg: e.to_string() })
            };
            let (x, y) = (parse(cols[0])?, parse(cols[1])?);
            samples.push(if bh_order { (x, y) } else { (y, x) });
            lines.push(lineno + 1);
        }
        // report file line numbers rather than sample indices
        Self::from_samples(&samples).map_err(|e| match e {
            MaterialError::Ingest { row, msg } => MaterialError::Ingest { row: lines[row], msg },
            other => other,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MaterialError> {
        let p = path.as_ref();
        let text = std::fs::read_to_string(p)
            .map_err(|e| MaterialError::Io { path: p.display().to_string(), msg: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.b.iter().copied().zip(self.h.iter().copied())
    }

    /// `(ν, dν/dB²)` at `B² = s ≥ 0`.
    pub fn nu<T: Scalar>(&self, s: T) -> (T, T) {
        let n = self.s.len();
        let sr = s.re().max(0.0);
        if sr >= self.s[n - 1] {
            let root = s.sqrt();
            let tail = T::cst(self.tail);
            return (T::cst(NU0) + tail / root, -T::cst(0.5) * tail / (root * s));
        }
        let i = match self.s.partition_point(|&x| x <= sr) {
            0 => 0,
            k => (k - 1).min(n - 2),
        };
        let hgt = self.s[i + 1] - self.s[i];
        let t = (s - T::cst(self.s[i])) / T::cst(hgt);
        let (y0, y1) = (T::cst(self.nu[i]), T::cst(self.nu[i + 1]));
        let (m0, m1) = (T::cst(self.slope[i] * hgt), T::cst(self.slope[i + 1] * hgt));
        let t2 = t * t;
        let t3 = t2 * t;
        let two = T::cst(2.0);
        let three = T::cst(3.0);
        let h00 = two * t3 - three * t2 + T::one();
        let h10 = t3 - two * t2 + t;
        let h01 = three * t2 - two * t3;
        let h11 = t3 - t2;
        let v = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        let six = T::cst(6.0);
        let four = T::cst(4.0);
        let dt = (six * t2 - six * t) * y0
            + (three * t2 - four * t + T::one()) * m0
            + (six * t - six * t2) * y1
            + (three * t2 - two * t) * m1;
        (v, dt / T::cst(hgt))
    }
}

/// Constitutive law of a medium.
#[derive(Clone, Debug)]
pub enum Reluctivity {
    Linear(f64),
    Nonlinear(Arc<BhCurve>),
}

#[derive(Clone, Debug)]
pub struct Material {
    pub name: String,
    pub kind: Reluctivity,
    /// `(B_r [T], α [rad])`; the magnetization direction is `(cos α, sin α)`.
    pub remanence: Option<(f64, f64)>,
    pub density: f64,
    pub unit_cost: f64,
}

impl Material {
    pub fn linear(name: &str, mu_r: f64, density: f64, unit_cost: f64) -> Self {
        Self {
            name: name.into(),
            kind: Reluctivity::Linear(NU0 / mu_r),
            remanence: None,
            density,
            unit_cost,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, Reluctivity::Linear(_))
    }

    /// `(ν, dν/dB²)`.
    pub fn reluctivity<T: Scalar>(&self, b2: T) -> (T, T) {
        match &self.kind {
            Reluctivity::Linear(nu) => (T::cst(*nu), T::zero()),
            Reluctivity::Nonlinear(c) => c.nu(b2),
        }
    }

    /// `B_r·(−sin α, cos α)`.
    pub fn remanence_2d(&self) -> Result<[f64; 2], MaterialError> {
        let (br, alpha) = self.remanence.ok_or_else(|| MaterialError::NotMagnet(self.name.clone()))?;
        Ok(remanence_vector(br, alpha))
    }
}

pub fn remanence_vector(br: f64, alpha: f64) -> [f64; 2] {
    [-br * alpha.sin(), br * alpha.cos()]
}

/// Region tag carried by every block of the geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MaterialTag {
    IronRotor,
    IronStator,
    Magnet,
    /// Slot conductor: `phase` 0..3, `sign` ±1, `slot` index within the sector.
    Copper { phase: u8, sign: i8, slot: u8 },
    AirGap,
    AirPocket,
}

/// Cost groups of the material-cost model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CostGroup {
    Iron,
    Copper,
    Magnet,
    Air,
}

impl MaterialTag {
    pub fn group(self) -> CostGroup {
        match self {
            Self::IronRotor | Self::IronStator => CostGroup::Iron,
            Self::Copper { .. } => CostGroup::Copper,
            Self::Magnet => CostGroup::Magnet,
            Self::AirGap | Self::AirPocket => CostGroup::Air,
        }
    }
}

/// The four media of the machine.
#[derive(Clone, Debug)]
pub struct MaterialTable {
    pub iron: Material,
    pub copper: Material,
    pub magnet: Material,
    pub air: Material,
}

impl MaterialTable {
    pub fn get(&self, tag: MaterialTag) -> &Material {
        match tag.group() {
            CostGroup::Iron => &self.iron,
            CostGroup::Copper => &self.copper,
            CostGroup::Magnet => &self.magnet,
            CostGroup::Air => &self.air,
        }
    }

    pub fn group(&self, g: CostGroup) -> &Material {
        match g {
            CostGroup::Iron => &self.iron,
            CostGroup::Copper => &self.copper,
            CostGroup::Magnet => &self.magnet,
            CostGroup::Air => &self.air,
        }
    }

    /// Default table: given iron curve, NdFeB-like magnet (B_r = 1 T, μ_r = 1.05).
    pub fn with_iron(curve: Arc<BhCurve>) -> Self {
        Self {
            iron: Material {
                name: "iron".into(),
                kind: Reluctivity::Nonlinear(curve),
                remanence: None,
                density: 7700.0,
                unit_cost: 2.0,
            },
            copper: Material::linear("copper", 1.0, 8960.0, 10.0),
            magnet: Material {
                name: "magnet".into(),
                kind: Reluctivity::Linear(NU0 / 1.05),
                remanence: Some((1.0, std::f64::consts::FRAC_PI_2)),
                density: 7500.0,
                unit_cost: 50.0,
            },
            air: Material::linear("air", 1.0, 0.0, 0.0),
        }
    }

    /// Everything linear (iron replaced by a constant permeability).
    pub fn all_linear(mu_r_iron: f64) -> Self {
        let mut t = Self::with_iron(Arc::new(m27()));
        t.iron.kind = Reluctivity::Linear(NU0 / mu_r_iron);
        t
    }

    pub fn is_linear(&self) -> bool {
        self.iron.is_linear() && self.copper.is_linear() && self.magnet.is_linear() && self.air.is_linear()
    }
}

/// Bundled M330-50A (M27) magnetization curve.
pub fn m27() -> BhCurve {
    BhCurve::parse(M27_TEXT).expect("bundled curve is valid")
}

pub const M27_TEXT: &str = include_str!("../fixtures/m27.bh");

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn linear_file() -> BhCurve {
        // μ_r = 1000 sampled at four collinear points
        let mut t = String::from("# linear\norder: HB\n");
        for k in 0..4 {
            let h = 1000.0 * k as f64;
            t += &format!("{h} {}\n", 1000.0 * MU0 * h);
        }
        BhCurve::parse(&t).unwrap()
    }

    #[test]
    fn linear_file_gives_constant_reluctivity() {
        let c = linear_file();
        let nu = 1.0 / (1000.0 * MU0);
        assert!((nu - 795.7747154594767).abs() < 1e-9);
        let bmax = 3000.0 * 1000.0 * MU0;
        for k in 0..=50 {
            let s = (bmax * k as f64 / 50.0).powi(2);
            let (v, _) = c.nu(s);
            assert!((v - nu).abs() / nu < 1e-9, "s={s} v={v}");
        }
    }

    #[test]
    fn m27_reproduces_samples() {
        let c = m27();
        for (b, h) in c.samples().skip(1) {
            let (v, _) = c.nu(b * b);
            assert!((v - h / b).abs() / (h / b) < 1e-6);
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let c = m27();
        let mut seed = 7u64;
        for _ in 0..100 {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            let s = 6.0 * ((seed >> 11) as f64 / (1u64 << 53) as f64) + 1e-3;
            let h = 1e-6 * s.max(1e-2);
            let (_, d) = c.nu(s);
            let fd = (c.nu(s + h).0 - c.nu(s - h).0) / (2.0 * h);
            let scale = d.abs().max(1.0);
            assert!((d - fd).abs() / scale < 1e-6, "s={s} d={d} fd={fd}");
        }
    }

    #[test]
    fn saturation_extrapolation() {
        let c = m27();
        let (bl, hl) = c.samples().last().unwrap();
        let b = 2.2;
        let expect = (hl + (b - bl) / MU0) / b;
        let (v, _) = c.nu(b * b);
        assert!((v - expect).abs() / expect < 0.1);
    }

    #[test]
    fn linear_media() {
        let air = Material::linear("air", 1.0, 0.0, 0.0);
        let (v, d) = air.reluctivity(0.7f64);
        assert!((v - 7.957747e5).abs() < 1.0);
        assert_eq!(d, 0.0);
        let mag = Material::linear("mag", 1.05, 7500.0, 50.0);
        assert!((mag.reluctivity(3.0f64).0 - 1.0 / (1.05 * MU0)).abs() < 1e-9);
        assert!(air.remanence_2d().is_err());
    }

    #[test]
    fn remanence_examples() {
        let r = remanence_vector(1.0, 0.0);
        assert!(r[0].abs() < 1e-16 && (r[1] - 1.0).abs() < 1e-16);
        let r = remanence_vector(1.0, std::f64::consts::FRAC_PI_2);
        assert!((r[0] + 1.0).abs() < 1e-16 && r[1].abs() < 1e-16);
    }

    #[test]
    fn rejects_bad_data() {
        assert!(matches!(BhCurve::parse("0 0\n1 10\n"), Err(MaterialError::TooFew(2))));
        let e = BhCurve::parse("0 0\n0.5 10\n0.4 20\n1 30\n").unwrap_err();
        assert!(matches!(e, MaterialError::Ingest { row: 3, .. }), "{e:?}");
        assert!(BhCurve::parse("0 0\n-0.5 10\n0.6 20\n1 30\n").is_err());
        assert!(BhCurve::parse("order: XY\n0 0\n").is_err());
    }

    #[test]
    fn magnetization_curve_is_monotone() {
        let c = m27();
        let mut last = 0.0;
        for k in 0..=3000 {
            let b = 2.45 * k as f64 / 3000.0;
            let h = c.nu(b * b).0 * b;
            assert!(h >= last - 1e-9, "H decreased at B={b}");
            last = h;
        }
    }

    proptest! {
        #[test]
        fn interpolant_stays_between_neighbours(t in 0.0f64..1.0, i in 1usize..24) {
            let c = m27();
            let s = c.s[i] + t * (c.s[i + 1] - c.s[i]);
            let v = c.nu(s).0;
            let lo = c.nu[i].min(c.nu[i + 1]);
            let hi = c.nu[i].max(c.nu[i + 1]);
            prop_assert!(v >= lo * (1.0 - 1e-12) && v <= hi * (1.0 + 1e-12));
            prop_assert!(v > 0.0);
        }

        #[test]
        fn remanence_has_unit_direction(alpha in -10.0f64..10.0, br in 0.1f64..2.0) {
            let r = remanence_vector(br, alpha);
            prop_assert!(((r[0] * r[0] + r[1] * r[1]).sqrt() - br).abs() < 1e-14);
        }
    }
}
