//! Plain-text control-point dump and SVG rendering of the block layout.

use std::fmt::Write;

use super::{MachinePatchwork, Side, Subdomain};
use crate::materials::MaterialTag;

fn tag_name(t: MaterialTag) -> String {
    match t {
        MaterialTag::IronRotor => "iron_rotor".into(),
        MaterialTag::IronStator => "iron_stator".into(),
        MaterialTag::Magnet => "magnet".into(),
        MaterialTag::Copper { phase, sign, slot } => {
            format!("copper_slot(phase={phase},sign={sign:+},k={slot})")
        }
        MaterialTag::AirGap => "air_gap".into(),
        MaterialTag::AirPocket => "air_pocket".into(),
    }
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Rotor => "rotor",
        Side::Stator => "stator",
    }
}

fn write_subdomain(out: &mut String, s: &Subdomain<f64>) {
    let sf = &s.surface;
    let _ = writeln!(out, "[{}]", side_name(s.side));
    let _ = writeln!(out, "degree {} {}", sf.ku.degree(), sf.kv.degree());
    let knots = |k: &[f64]| k.iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "knots_u {}", knots(sf.ku.knots()));
    let _ = writeln!(out, "knots_v {}", knots(sf.kv.knots()));
    let _ = writeln!(out, "control_points {} {}", sf.nu(), sf.nv());
    for j in 0..sf.nv() {
        for i in 0..sf.nu() {
            let k = sf.index(i, j);
            let p = sf.points[k];
            let _ = writeln!(out, "{i} {j} {:.17e} {:.17e} {:.17e}", p[0], p[1], sf.weights[k]);
        }
    }
    let _ = writeln!(out, "blocks {} {}", s.ncols, s.nrows);
    for b in &s.blocks {
        let _ = writeln!(
            out,
            "{} {} u=[{},{}] v=[{},{}] {}",
            b.col,
            b.row,
            b.col,
            b.col + 1,
            b.row,
            b.row + 1,
            tag_name(b.tag)
        );
    }
}

/// Control points (metres), knot vectors and block connectivity. Blocks
/// sharing a parameter line share the control points on it.
pub fn control_points_text(g: &MachinePatchwork<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "pole_pairs {}", g.pole_pairs);
    let _ = writeln!(out, "sector_angle_deg {:.17e}", g.sector_angle.to_degrees());
    let _ = writeln!(out, "coupling_radius {:.17e}", g.r_coupling);
    write_subdomain(&mut out, &g.rotor);
    write_subdomain(&mut out, &g.stator);
    out
}

fn fill(t: MaterialTag) -> &'static str {
    match t {
        MaterialTag::IronRotor | MaterialTag::IronStator => "#c8c8c8",
        MaterialTag::Magnet => "#5cb85c",
        MaterialTag::Copper { phase: 0, .. } => "#d9534f",
        MaterialTag::Copper { phase: 1, .. } => "#f0ad4e",
        MaterialTag::Copper { .. } => "#5bc0de",
        MaterialTag::AirGap | MaterialTag::AirPocket => "#ffffff",
    }
}

/// SVG of one or more geometries overlaid (block outlines, coloured by
/// material for the first one; control points as dots). Coordinates in mm.
pub fn svg_render(layers: &[(&MachinePatchwork<f64>, &str)]) -> String {
    const N: usize = 16;
    let mut out = String::new();
    out.push_str(
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="-50 -90 100 85" width="1000" height="850">"#,
    );
    out.push('\n');
    for (li, (g, stroke)) in layers.iter().enumerate() {
        for s in g.subdomains() {
            for b in &s.blocks {
                let mut d = String::new();
                let edges: [(f64, f64, f64, f64); 4] =
                    [(0., 0., 1., 0.), (1., 0., 1., 1.), (1., 1., 0., 1.), (0., 1., 0., 0.)];
                for (ei, (u0, v0, u1, v1)) in edges.iter().enumerate() {
                    for k in 0..=N {
                        if ei > 0 && k == 0 {
                            continue;
                        }
                        let t = k as f64 / N as f64;
                        let p = b.patch.eval(u0 + t * (u1 - u0), v0 + t * (v1 - v0)).unwrap();
                        let cmd = if ei == 0 && k == 0 { 'M' } else { 'L' };
                        let _ = write!(d, "{cmd}{:.4},{:.4} ", p[0] * 1e3, -p[1] * 1e3);
                    }
                }
                let fill = if li == 0 { fill(b.tag) } else { "none" };
                let _ = writeln!(
                    out,
                    r#"<path d="{d}Z" fill="{fill}" stroke="{stroke}" stroke-width="0.08"/>"#
                );
            }
            for p in &s.surface.points {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.4}" cy="{:.4}" r="0.12" fill="{stroke}"/>"#,
                    p[0] * 1e3,
                    -p[1] * 1e3
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}
