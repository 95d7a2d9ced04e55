use std::fmt::Write;

use crate::assembly::AssembledSystem;
use crate::geometry::Side;
use crate::materials::{CostGroup, MaterialTag};

/// Field values at one parametric sample, in the stator frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub x: [f64; 2],
    pub a_z: f64,
    pub b: [f64; 2],
    pub tag: MaterialTag,
}

impl FieldSample {
    pub fn b_abs(&self) -> f64 {
        self.b[0].hypot(self.b[1])
    }

    pub fn is_iron(&self) -> bool {
        self.tag.group() == CostGroup::Iron
    }
}

/// Samples of one subdomain on an `nu × nv` grid, `u` fastest.
#[derive(Clone, Debug)]
pub struct FieldGrid {
    pub side: Side,
    pub nu: usize,
    pub nv: usize,
    pub samples: Vec<FieldSample>,
}

fn grid(spans: &[(usize, f64, f64)], per: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(spans.len() * per + 1);
    for &(_, a, b) in spans {
        g.extend((0..per).map(|k| a + (b - a) * k as f64 / per as f64));
    }
    if let Some(&(_, _, b)) = spans.last() {
        g.push(b);
    }
    g
}

fn rotate(p: [f64; 2], c: f64, s: f64) -> [f64; 2] {
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

/// Sample `A_z` and `B` with `per` intervals per element edge. Rotor data
/// are rotated by `beta` into the stator frame.
pub fn sample_field(sys: &AssembledSystem, z: &[f64], beta: f64, per: usize) -> Vec<FieldGrid> {
    let per = per.max(1);
    sys.geometry
        .subdomains()
        .into_iter()
        .map(|sd| {
            let s = &sd.surface;
            let (us, vs) = (grid(&s.ku.spans(), per), grid(&s.kv.spans(), per));
            let (c, sn) = match sd.side {
                Side::Rotor => (beta.cos(), beta.sin()),
                Side::Stator => (1.0, 0.0),
            };
            let mut samples = Vec::with_capacity(us.len() * vs.len());
            for &v in &vs {
                for &u in &us {
                    let x = s.eval(u, v).expect("sample inside the parameter domain");
                    samples.push(FieldSample {
                        x: rotate(x, c, sn),
                        a_z: sys.potential(sd.side, z, u, v),
                        b: rotate(sys.flux_density(sd.side, z, u, v), c, sn),
                        tag: sd.block_at(u, v).tag,
                    });
                }
            }
            FieldGrid { side: sd.side, nu: us.len(), nv: vs.len(), samples }
        })
        .collect()
}

/// Legacy-format VTK structured grid with point data `A_z` and `B_abs`
/// and the vector `B`.
pub fn structured_grid_vtk(g: &FieldGrid, title: &str) -> String {
    let n = g.samples.len();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET STRUCTURED_GRID");
    let _ = writeln!(s, "DIMENSIONS {} {} 1\nPOINTS {n} double", g.nu, g.nv);
    for p in &g.samples {
        let _ = writeln!(s, "{:.16e} {:.16e} 0", p.x[0], p.x[1]);
    }
    let _ = writeln!(s, "POINT_DATA {n}\nSCALARS A_z double 1\nLOOKUP_TABLE default");
    for p in &g.samples {
        let _ = writeln!(s, "{:.16e}", p.a_z);
    }
    let _ = writeln!(s, "SCALARS B_abs double 1\nLOOKUP_TABLE default");
    for p in &g.samples {
        let _ = writeln!(s, "{:.16e}", p.b_abs());
    }
    let _ = writeln!(s, "VECTORS B double");
    for p in &g.samples {
        let _ = writeln!(s, "{:.16e} {:.16e} 0", p.b[0], p.b[1]);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_both_ends() {
        let g = grid(&[(2, 0.0, 1.0), (3, 1.0, 3.0)], 2);
        assert_eq!(g, vec![0.0, 0.5, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn vtk_layout() {
        let p = FieldSample { x: [1.0, 0.0], a_z: 0.5, b: [3.0, 4.0], tag: MaterialTag::IronStator };
        let g = FieldGrid { side: Side::Stator, nu: 2, nv: 1, samples: vec![p, p] };
        let s = structured_grid_vtk(&g, "t");
        assert!(s.contains("DIMENSIONS 2 1 1"));
        assert!(s.contains("POINTS 2 double"));
        assert!(s.contains("POINT_DATA 2"));
        assert_eq!(s.matches("5.0000000000000000e0").count(), 2);
        assert!(p.is_iron());
    }
}
