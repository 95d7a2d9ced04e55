//! Maxwell-stress torque on the air-gap rows, independent of the
//! multipliers.
//!
//! With `σ = ν0 (B⊗B − ½|B|² I)` and `t = (−y, x)`, the field `σ t` is
//! divergence-free in air, so for any weight `w` that is 0 on the inner
//! and 1 on the outer boundary of an air band,
//! `T = ∫ ∇w · σ t dA`. The weight is the radial spline parameter of the
//! band, which keeps the integrand smooth on every element.

use crate::assembly::AssembledSystem;
use crate::geometry::Side;
use crate::materials::{MaterialTag, NU0};

/// Sector torque per unit length from each side of the coupling circle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxwellTorque {
    pub rotor: f64,
    pub stator: f64,
}

impl MaxwellTorque {
    pub fn mean(&self) -> f64 {
        0.5 * (self.rotor + self.stator)
    }
}

/// Band integrals over the rotor and stator air-gap rows for state `z`.
pub fn maxwell_functional(sys: &AssembledSystem, z: &[f64]) -> MaxwellTorque {
    let mut out = MaxwellTorque { rotor: 0.0, stator: 0.0 };
    for (e, ph) in sys.elements.iter().zip(&sys.phys) {
        if e.tag != MaterialTag::AirGap {
            continue;
        }
        let s = match e.side {
            Side::Rotor => &sys.geometry.rotor.surface,
            Side::Stator => &sys.geometry.stator.surface,
        };
        let coef = e.gather(z);
        let mut acc = 0.0;
        for (q, p) in e.qps.iter().zip(ph) {
            let (_, j) = s.rational(&q.basis).map(&s.points);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            // blocks have unit parametric height, so w = v − v_inner
            let gw = [-j[1][0] / det, j[0][0] / det];
            let mut ga = [0.0; 2];
            for (c, g) in coef.iter().zip(&p.grad) {
                ga[0] += c * g[0];
                ga[1] += c * g[1];
            }
            let b = [ga[1], -ga[0]];
            let t = [-p.x[1], p.x[0]];
            let bt = b[0] * t[0] + b[1] * t[1];
            let half_b2 = 0.5 * (b[0] * b[0] + b[1] * b[1]);
            let f = [NU0 * (b[0] * bt - half_b2 * t[0]), NU0 * (b[1] * bt - half_b2 * t[1])];
            acc += (gw[0] * f[0] + gw[1] * f[1]) * p.dx;
        }
        match e.side {
            Side::Rotor => out.rotor += acc,
            Side::Stator => out.stator += acc,
        }
    }
    out
}
