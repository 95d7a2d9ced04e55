//! Sector geometry of the machine built from a design vector.
//!
//! Each subdomain (rotor, stator) is a single tensor-product NURBS patch
//! whose parameter domain `[0, ncols] × [0, nrows]` is split by
//! `C⁰` knots into blocks; every block carries one material tag. Block
//! `(c, r)` occupies `[c, c+1] × [r, r+1]`. The `u` direction runs
//! clockwise (from the left cut at `90° + 30°` to the right cut at
//! `90° − 30°` for `p = 3`) and `v` runs radially outward, so Jacobians
//! are positive.
//!
//! Anchor construction, rotor (pole axis on `+y`, rotor frame):
//! * magnet rectangle `|x| ≤ MW/2`, `y_in ≤ y ≤ y_out` with
//!   `y_out = R_r − MAG` (MAG is the depth of the magnet's outer face below
//!   the rotor surface) and `y_in = y_out − MH`;
//! * air pockets `MW/2 ≤ |x| ≤ MW/2 + w_p` in the same band, continued
//!   radially outward up to the barrier line;
//! * barrier line: the rotor surface scaled by `(R_r − t_b)/R_r` over the
//!   three middle columns (so the iron bridge above each pocket has
//!   thickness `≈ t_b`), straight to the cut outside them, meeting the cut
//!   halfway between `y = y_out` and the rotor surface;
//! * column lines vertical inside the band, radial outside it;
//! * rows: shaft arc, `y = y_in`, `y = y_out`, barrier line, rotor
//!   surface, coupling circle.
//!
//! Stator, slot-local frame `(t, h)` with the slot axis on `+h`:
//! * `B± = (±SW2/2, √(R_b² − SW2²/4))` on the bore,
//! * `L± = (±SW2/2, R_b + SW3)` top of the opening (tooth-tip height SW3),
//! * `W± = (±SW1/2, R_b + SW3 + SR1)` top of the wedge,
//! * `D± = (±SW4/2, SD1/2)` flat slot bottom,
//! * tooth-centre lines radial; rows: coupling circle, bore, `L`, `W`,
//!   `D` levels, outer stator circle.
//!
//! Surface offsets move control points radially. Rotor surface control
//! points are numbered `0..=10` from the left cut (even = block corners,
//! odd = arc midpoints); offset `k` acts on points `k+1` and `9−k`.
//! Stator offsets act on the bore-arc midpoints of the half-tooth columns
//! `(2, 15)`, `(3, 14)`, `(5, 12)`, `(6, 11)`, `(8, 9)`.

mod export;

pub use export::{control_points_text, svg_render};

use serde::{Deserialize, Serialize};

use crate::design::{self, DesignVector, MachineConstants, N_OFFSETS, N_VARS};
use crate::error::GeometryError;
use crate::materials::{CostGroup, MaterialTag};
use crate::scalar::{Dual, Scalar};
use crate::spline::{
    arc_bezier, coons_quadratic, line_bezier, HPoint, KnotVector, SplineSurface,
};

type P<T> = [T; 2];

/// Spline degree, uniform refinement and harmonic count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    pub degree: usize,
    pub refinement: usize,
    pub harmonics: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Self { degree: 2, refinement: 3, harmonics: 10 }
    }
}

impl Discretization {
    pub fn validate(&self) -> Result<(), String> {
        if !(1..=4).contains(&self.degree) {
            return Err(format!("degree {} outside 1..=4", self.degree));
        }
        if self.refinement == 0 {
            return Err("refinement must be at least 1".into());
        }
        if self.harmonics == 0 {
            return Err("harmonic count must be positive".into());
        }
        Ok(())
    }
}

const ROTOR_COLS: [usize; 5] = [3, 1, 8, 1, 3];
const ROTOR_ROWS: [usize; 5] = [3, 2, 2, 1, 1];
const STATOR_COLS: [usize; 3] = [1, 1, 1];
const STATOR_ROWS: [usize; 5] = [2, 1, 1, 4, 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Rotor,
    Stator,
}

/// One material block: its own Bézier patch plus position in the grid.
#[derive(Clone, Debug)]
pub struct Block<T> {
    pub col: usize,
    pub row: usize,
    pub tag: MaterialTag,
    pub patch: SplineSurface<T>,
}

#[derive(Clone, Debug)]
pub struct Subdomain<T> {
    pub side: Side,
    pub surface: SplineSurface<T>,
    pub blocks: Vec<Block<T>>,
    pub ncols: usize,
    pub nrows: usize,
    pub elems_u: Vec<usize>,
    pub elems_v: Vec<usize>,
}

impl<T: Scalar> Subdomain<T> {
    /// Block containing the parametric point (use element midpoints).
    pub fn block_at(&self, u: f64, v: f64) -> &Block<T> {
        let c = (u.floor() as usize).min(self.ncols - 1);
        let r = (v.floor() as usize).min(self.nrows - 1);
        &self.blocks[c + self.ncols * r]
    }
}

/// The sector model: rotor (in rotor coordinates) and stator.
#[derive(Clone, Debug)]
pub struct MachinePatchwork<T = f64> {
    pub rotor: Subdomain<T>,
    pub stator: Subdomain<T>,
    pub pole_pairs: usize,
    pub sector_angle: f64,
    pub r_coupling: T,
    /// Magnetization angle of the magnet in rotor coordinates.
    pub magnet_alpha: f64,
    pub slots: usize,
}

impl<T: Scalar> MachinePatchwork<T> {
    pub fn subdomains(&self) -> [&Subdomain<T>; 2] {
        [&self.rotor, &self.stator]
    }

    pub fn control_point_count(&self) -> usize {
        self.rotor.surface.points.len() + self.stator.surface.points.len()
    }

    pub fn blocks(&self) -> impl Iterator<Item = (Side, &Block<T>)> {
        self.rotor
            .blocks
            .iter()
            .map(|b| (Side::Rotor, b))
            .chain(self.stator.blocks.iter().map(|b| (Side::Stator, b)))
    }

    /// Cross-section area of one cost group, from the block patches.
    pub fn patch_area(&self, group: CostGroup) -> T {
        let mut a = T::zero();
        for (_, b) in self.blocks() {
            if b.tag.group() == group {
                a += b.patch.area_with(10, 2);
            }
        }
        a
    }

    pub fn areas(&self) -> Areas<T> {
        let mut out = Areas::default();
        for (_, b) in self.blocks() {
            let a = b.patch.area_with(10, 2);
            match b.tag.group() {
                CostGroup::Iron => out.iron += a,
                CostGroup::Copper => out.copper += a,
                CostGroup::Magnet => out.magnet += a,
                CostGroup::Air => out.air += a,
            }
        }
        out.slot = out.copper / T::cst(self.slots as f64);
        out
    }

    /// Scale every control point by `k_r` about the axis.
    pub fn apply_scaling(&self, k_r: T) -> Result<Self, GeometryError> {
        if !(k_r.re() > 0.0) {
            return Err(GeometryError::BadScale(k_r.re()));
        }
        let scale_sub = |s: &Subdomain<T>| Subdomain {
            side: s.side,
            surface: s.surface.scaled(k_r),
            blocks: s
                .blocks
                .iter()
                .map(|b| Block { col: b.col, row: b.row, tag: b.tag, patch: b.patch.scaled(k_r) })
                .collect(),
            ncols: s.ncols,
            nrows: s.nrows,
            elems_u: s.elems_u.clone(),
            elems_v: s.elems_v.clone(),
        };
        Ok(Self {
            rotor: scale_sub(&self.rotor),
            stator: scale_sub(&self.stator),
            pole_pairs: self.pole_pairs,
            sector_angle: self.sector_angle,
            r_coupling: self.r_coupling * k_r,
            magnet_alpha: self.magnet_alpha,
            slots: self.slots,
        })
    }
}

/// Areas per cost group [m²]; `slot` is the copper area of one slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Areas<T> {
    pub iron: T,
    pub copper: T,
    pub magnet: T,
    pub air: T,
    pub slot: T,
}

impl<T: Scalar> Default for Areas<T> {
    fn default() -> Self {
        Self { iron: T::zero(), copper: T::zero(), magnet: T::zero(), air: T::zero(), slot: T::zero() }
    }
}

impl<T: Scalar> Areas<T> {
    pub fn get(&self, g: CostGroup) -> T {
        match g {
            CostGroup::Iron => self.iron,
            CostGroup::Copper => self.copper,
            CostGroup::Magnet => self.magnet,
            CostGroup::Air => self.air,
        }
    }
}

/// Nodes, edges and tags of one subdomain before refinement.
struct BlockGrid<T> {
    ncols: usize,
    nrows: usize,
    /// `horiz[r][c]`: edge along `u` on row line `r`, column `c`.
    horiz: Vec<Vec<[HPoint<T>; 3]>>,
    /// `vert[c][r]`: edge along `v` on column line `c`, row `r`.
    vert: Vec<Vec<[HPoint<T>; 3]>>,
    tags: Vec<MaterialTag>,
    elems_u: Vec<usize>,
    elems_v: Vec<usize>,
}

fn polar<T: Scalar>(r: T, th: T) -> P<T> {
    [r * th.cos(), r * th.sin()]
}

fn norm<T: Scalar>(p: P<T>) -> T {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}

fn to_radius<T: Scalar>(p: P<T>, r: T) -> P<T> {
    let n = norm(p);
    [p[0] * r / n, p[1] * r / n]
}

/// Arc about the origin with its middle control point pushed radially by `delta`.
fn offset_arc<T: Scalar>(a: P<T>, b: P<T>, delta: T) -> [HPoint<T>; 3] {
    let mut h = arc_bezier(a, b);
    let w = h[1][2];
    let m = [h[1][0] / w, h[1][1] / w];
    let n = norm(m);
    let m2 = [m[0] + delta * m[0] / n, m[1] + delta * m[1] / n];
    h[1] = [m2[0] * w, m2[1] * w, w];
    h
}

fn rotor_grid<T: Scalar>(x: &DesignVector<T>, c: &MachineConstants, refine: usize) -> BlockGrid<T> {
    let half = T::cst(0.5);
    let phi_s = T::cst(0.5 * c.sector_angle());
    let pi2 = T::FRAC_PI_2();
    let r_sh = T::cst(c.r_shaft);
    let r_r = T::cst(c.r_rotor);
    let r_c = T::cst(c.r_coupling());
    let a = x.mw() * half;
    let e = a + T::cst(c.pocket_width);
    let y_out = r_r - x.mag();
    let y_in = y_out - x.mh();
    let tan_s = phi_s.tan();
    let xs = [-e, -a, a, e];

    let ncols = 5;
    let nrows = 5;
    let shrink = (r_r - T::cst(c.bridge_width)) / r_r;
    // surface node offsets per column line, and arc-mid offset per column
    let dz = T::zero();
    let node_off = [dz, x.rotor_offset(1), x.rotor_offset(3), x.rotor_offset(3), x.rotor_offset(1), dz];
    let mid_off = [
        x.rotor_offset(0),
        x.rotor_offset(2),
        x.rotor_offset(4),
        x.rotor_offset(2),
        x.rotor_offset(0),
    ];

    let mut nodes = vec![vec![[T::zero(); 2]; nrows + 1]; ncols + 1];
    for (ci, col) in nodes.iter_mut().enumerate() {
        let (p_in, p_out) = match ci {
            0 => ([-y_in * tan_s, y_in], [-y_out * tan_s, y_out]),
            5 => ([y_in * tan_s, y_in], [y_out * tan_s, y_out]),
            _ => ([xs[ci - 1], y_in], [xs[ci - 1], y_out]),
        };
        let th_out = match ci {
            0 => pi2 + phi_s,
            5 => pi2 - phi_s,
            _ => p_out[1].atan2(p_out[0]),
        };
        col[0] = to_radius(p_in, r_sh);
        col[1] = p_in;
        col[2] = p_out;
        col[3] = match ci {
            0 | 5 => polar((norm(p_out) + r_r) * half, th_out),
            _ => polar((r_r + node_off[ci]) * shrink, th_out),
        };
        col[4] = polar(r_r + node_off[ci], th_out);
        col[5] = polar(r_c, th_out);
    }
    let surface_edge = |ci: usize| {
        let (p, q) = (nodes[ci][4], nodes[ci + 1][4]);
        // arc through the unmoved nodes, then move its control points
        let mut h = offset_arc(to_radius(p, r_r), to_radius(q, r_r), mid_off[ci]);
        h[0] = [p[0], p[1], T::one()];
        h[2] = [q[0], q[1], T::one()];
        h
    };

    let mut horiz = Vec::with_capacity(nrows + 1);
    for r in 0..=nrows {
        let mut row = Vec::with_capacity(ncols);
        for ci in 0..ncols {
            let (p, q) = (nodes[ci][r], nodes[ci + 1][r]);
            row.push(match (r, ci) {
                (0 | 5, _) => arc_bezier(p, q),
                (4, _) => surface_edge(ci),
                (3, 1..=3) => surface_edge(ci).map(|h| [h[0] * shrink, h[1] * shrink, h[2]]),
                _ => line_bezier(p, q),
            });
        }
        horiz.push(row);
    }
    let vert = (0..=ncols)
        .map(|ci| (0..nrows).map(|r| line_bezier(nodes[ci][r], nodes[ci][r + 1])).collect())
        .collect();

    use MaterialTag::*;
    let mut tags = Vec::with_capacity(ncols * nrows);
    for r in 0..nrows {
        for ci in 0..ncols {
            tags.push(match (r, ci) {
                (1 | 2, 1) | (1 | 2, 3) => AirPocket,
                (1, 2) => Magnet,
                (4, _) => AirGap,
                _ => IronRotor,
            });
        }
    }
    BlockGrid {
        ncols,
        nrows,
        horiz,
        vert,
        tags,
        elems_u: ROTOR_COLS.iter().map(|n| n * refine).collect(),
        elems_v: ROTOR_ROWS.iter().map(|n| n * refine).collect(),
    }
}

fn stator_offset_group(col: usize, ncols: usize) -> Option<usize> {
    // mirror pairs (c, ncols-1-c) over the half-tooth columns next to the
    // five inner teeth of the sector
    let c = col.min(ncols - 1 - col);
    match c {
        2 => Some(0),
        3 => Some(1),
        5 => Some(2),
        6 => Some(3),
        8 => Some(4),
        _ => None,
    }
}

fn stator_grid<T: Scalar>(x: &DesignVector<T>, c: &MachineConstants, refine: usize) -> BlockGrid<T> {
    let half = T::cst(0.5);
    let ns = c.slots_per_sector;
    let tau = T::cst(c.slot_pitch());
    let r_c = T::cst(c.r_coupling());
    let r_b = T::cst(c.r_bore());
    let r_so = T::cst(c.r_stator_outer);
    let pi2 = T::FRAC_PI_2();
    let phi_s = T::cst(0.5 * c.sector_angle());

    let h_l = r_b + x.sw3();
    let h_w = h_l + x.sr1();
    let h_d = x.sd1() * half;
    let b_h = (r_b * r_b - x.sw2() * x.sw2() * half * half).sqrt();
    // slot-local points, t > 0 toward the right (clockwise)
    let sides = |s: T| -> [P<T>; 4] {
        [
            [s * x.sw2() * half, b_h],
            [s * x.sw2() * half, h_l],
            [s * x.sw1() * half, h_w],
            [s * x.sw4() * half, h_d],
        ]
    };
    let r_levels = [
        r_b,
        norm([x.sw2() * half, h_l]),
        norm([x.sw1() * half, h_w]),
        norm([x.sw4() * half, h_d]),
    ];

    let ncols = 3 * ns;
    let nrows = 5;
    // slot j from the left cut; centre angle decreasing with j
    let center = |j: usize| pi2 + phi_s - tau * T::cst(j as f64 + 0.5);
    let to_global = |p: P<T>, th: T| -> P<T> {
        let (s, co) = (th - pi2).sin_cos();
        [co * p[0] - s * p[1], s * p[0] + co * p[1]]
    };

    let mut nodes = vec![vec![[T::zero(); 2]; nrows + 1]; ncols + 1];
    for (ci, col) in nodes.iter_mut().enumerate() {
        match ci % 3 {
            0 => {
                // tooth-centre line (or a cut)
                let th = pi2 + phi_s - tau * T::cst((ci / 3) as f64);
                col[0] = polar(r_c, th);
                for k in 0..4 {
                    col[k + 1] = polar(r_levels[k], th);
                }
                col[5] = polar(r_so, th);
            }
            m => {
                let j = ci / 3;
                // t increases to the right, so the left side has t < 0
                let s = if m == 1 { -T::one() } else { T::one() };
                let th = center(j);
                let pts = sides(s).map(|p| to_global(p, th));
                col[0] = to_radius(pts[0], r_c);
                col[1..5].copy_from_slice(&pts);
                col[5] = to_radius(pts[3], r_so);
            }
        }
    }

    let mut horiz = Vec::with_capacity(nrows + 1);
    for r in 0..=nrows {
        let mut row = Vec::with_capacity(ncols);
        for ci in 0..ncols {
            let (p, q) = (nodes[ci][r], nodes[ci + 1][r]);
            row.push(match r {
                0 | 5 => arc_bezier(p, q),
                1 => match stator_offset_group(ci, ncols) {
                    Some(g) if ci % 3 != 1 => offset_arc(p, q, x.stator_offset(g)),
                    _ => arc_bezier(p, q),
                },
                _ => line_bezier(p, q),
            });
        }
        horiz.push(row);
    }
    let vert = (0..=ncols)
        .map(|ci| (0..nrows).map(|r| line_bezier(nodes[ci][r], nodes[ci][r + 1])).collect())
        .collect();

    use MaterialTag::*;
    let mut tags = Vec::with_capacity(ncols * nrows);
    for r in 0..nrows {
        for ci in 0..ncols {
            let j = ci / 3;
            let opening = ci % 3 == 1;
            tags.push(match r {
                0 => AirGap,
                1 | 2 if opening => AirPocket,
                3 if opening => {
                    // pattern is listed by increasing angle, slots here by decreasing angle
                    let (phase, sign) = c.slot_pattern[ns - 1 - j];
                    Copper { phase, sign, slot: j as u8 }
                }
                _ => IronStator,
            });
        }
    }
    BlockGrid {
        ncols,
        nrows,
        horiz,
        vert,
        tags,
        elems_u: (0..ns).flat_map(|_| STATOR_COLS).map(|n| n * refine).collect(),
        elems_v: STATOR_ROWS.iter().map(|n| n * refine).collect(),
    }
}

impl<T: Scalar> BlockGrid<T> {
    fn blocks(&self) -> Vec<Block<T>> {
        let mut out = Vec::with_capacity(self.ncols * self.nrows);
        for r in 0..self.nrows {
            for c in 0..self.ncols {
                let net = coons_quadratic(
                    &self.horiz[r][c],
                    &self.horiz[r + 1][c],
                    &self.vert[c][r],
                    &self.vert[c + 1][r],
                );
                let kv = KnotVector::bezier_segments(2, 1);
                let patch = SplineSurface::from_homogeneous(kv.clone(), kv, &net)
                    .expect("Coons net of positive weights");
                out.push(Block { col: c, row: r, tag: self.tags[c + self.ncols * r], patch });
            }
        }
        out
    }

    /// Coarse piecewise-Bézier net of the whole subdomain.
    fn coarse(&self, blocks: &[Block<T>]) -> SplineSurface<T> {
        let nu = 2 * self.ncols + 1;
        let nv = 2 * self.nrows + 1;
        let mut net = vec![[T::zero(); 3]; nu * nv];
        for b in blocks {
            let h = b.patch.homogeneous();
            for bj in 0..3 {
                for bi in 0..3 {
                    net[(2 * b.col + bi) + nu * (2 * b.row + bj)] = h[bi + 3 * bj];
                }
            }
        }
        SplineSurface::from_homogeneous(
            KnotVector::bezier_segments(2, self.ncols),
            KnotVector::bezier_segments(2, self.nrows),
            &net,
        )
        .expect("coarse net")
    }
}

fn interior_knots(elems: &[usize]) -> Vec<f64> {
    let mut out = Vec::new();
    for (c, &n) in elems.iter().enumerate() {
        for k in 1..n {
            out.push(c as f64 + k as f64 / n as f64);
        }
    }
    out
}

fn refine_surface<T: Scalar>(
    coarse: &SplineSurface<T>,
    elems_u: &[usize],
    elems_v: &[usize],
    degree: usize,
) -> Result<SplineSurface<T>, crate::error::SplineError> {
    let mut s = coarse.clone();
    for _ in 2..degree {
        s = s.elevate_u()?.elevate_v()?;
    }
    s = s.insert_u(&interior_knots(elems_u)).insert_v(&interior_knots(elems_v));
    if degree >= 2 {
        return Ok(s);
    }
    // degree 1: interpolate the exact map at the breakpoints
    let brk = |kv: &KnotVector| {
        let mut b: Vec<f64> = kv.knots().to_vec();
        b.dedup();
        b
    };
    let (bu, bv) = (brk(&s.ku), brk(&s.kv));
    let mk = |b: &[f64]| {
        let mut k = vec![b[0]];
        k.extend_from_slice(b);
        k.push(*b.last().unwrap());
        KnotVector::new(1, k)
    };
    let mut pts = Vec::with_capacity(bu.len() * bv.len());
    for &v in &bv {
        for &u in &bu {
            pts.push(s.eval(u, v)?);
        }
    }
    let n = pts.len();
    SplineSurface::new(mk(&bu)?, mk(&bv)?, pts, vec![T::one(); n])
}

fn subdomain<T: Scalar>(
    side: Side,
    grid: BlockGrid<T>,
    degree: usize,
    check: bool,
) -> Result<Subdomain<T>, GeometryError> {
    let blocks = grid.blocks();
    let coarse = grid.coarse(&blocks);
    let name = match side {
        Side::Rotor => "rotor",
        Side::Stator => "stator",
    };
    let surface = refine_surface(&coarse, &grid.elems_u, &grid.elems_v, degree)
        .map_err(|e| GeometryError::Patch { block: name.into(), source: e })?;
    if check {
        surface
            .check_jacobian(degree + 1)
            .map_err(|e| GeometryError::Patch { block: name.into(), source: e })?;
    }
    Ok(Subdomain {
        side,
        surface,
        blocks,
        ncols: grid.ncols,
        nrows: grid.nrows,
        elems_u: grid.elems_u,
        elems_v: grid.elems_v,
    })
}

/// Build the sector geometry at unit radial scale.
///
/// `L`, `φ0` and `k_R` do not enter the cross-section; radial scaling is
/// applied separately with [`MachinePatchwork::apply_scaling`].
pub fn build_geometry<T: Scalar>(
    x: &DesignVector<T>,
    c: &MachineConstants,
    d: &Discretization,
) -> Result<MachinePatchwork<T>, GeometryError> {
    build(x, c, d, true)
}

/// [`build_geometry`] seeded in direction `var`, without the Jacobian
/// check (the primal part is the checked `f64` geometry).
pub fn seeded_geometry(
    x: &DesignVector,
    var: usize,
    c: &MachineConstants,
    d: &Discretization,
) -> Result<MachinePatchwork<Dual>, GeometryError> {
    build(&x.seed(var), c, d, false)
}

fn build<T: Scalar>(
    x: &DesignVector<T>,
    c: &MachineConstants,
    d: &Discretization,
    check: bool,
) -> Result<MachinePatchwork<T>, GeometryError> {
    c.validate().map_err(GeometryError::Invalid)?;
    d.validate().map_err(GeometryError::Invalid)?;
    let g = constraint_values(&DesignVector(x.0.map(|v| v.re())), c);
    if let Some((k, &v)) = g.iter().enumerate().find(|(_, &v)| v > 1e-12) {
        return Err(GeometryError::Infeasible { name: G_NAMES[k], amount: v });
    }
    let rotor = subdomain(Side::Rotor, rotor_grid(x, c, d.refinement), d.degree, check)?;
    let stator = subdomain(Side::Stator, stator_grid(x, c, d.refinement), d.degree, check)?;
    Ok(MachinePatchwork {
        rotor,
        stator,
        pole_pairs: c.pole_pairs,
        sector_angle: c.sector_angle(),
        r_coupling: T::cst(c.r_coupling()),
        magnet_alpha: std::f64::consts::FRAC_PI_2,
        slots: c.slots_per_sector,
    })
}

/// Material areas straight from the coarse blocks (no refinement); the
/// cheap path for cost sensitivities.
pub fn material_areas<T: Scalar>(x: &DesignVector<T>, c: &MachineConstants) -> Areas<T> {
    let mut out = Areas::default();
    for grid in [rotor_grid(x, c, 1), stator_grid(x, c, 1)] {
        for b in grid.blocks() {
            let a = b.patch.area_with(10, 2);
            match b.tag.group() {
                CostGroup::Iron => out.iron += a,
                CostGroup::Copper => out.copper += a,
                CostGroup::Magnet => out.magnet += a,
                CostGroup::Air => out.air += a,
            }
        }
    }
    out.slot = out.copper / T::cst(c.slots_per_sector as f64);
    out
}

/// `∂/∂x_var` of [`material_areas`]; blocks that do not move are skipped.
pub fn material_area_derivatives(x: &DesignVector, var: usize, c: &MachineConstants) -> Areas<f64> {
    let xd = x.seed(var);
    let mut out = Areas::default();
    for grid in [rotor_grid(&xd, c, 1), stator_grid(&xd, c, 1)] {
        for b in grid.blocks() {
            let p = &b.patch;
            let moves = p.points.iter().any(|q| q[0].eps != 0.0 || q[1].eps != 0.0)
                || p.weights.iter().any(|w| w.eps != 0.0);
            if !moves {
                continue;
            }
            let a = p.area_with(10, 2).eps;
            match b.tag.group() {
                CostGroup::Iron => out.iron += a,
                CostGroup::Copper => out.copper += a,
                CostGroup::Magnet => out.magnet += a,
                CostGroup::Air => out.air += a,
            }
        }
    }
    out.slot = out.copper / c.slots_per_sector as f64;
    out
}

pub const N_CONSTRAINTS: usize = 10 + 2 * N_OFFSETS;

pub const G_NAMES: [&str; N_CONSTRAINTS] = [
    "bridge",
    "rim",
    "magnet_band_at_cut",
    "rib",
    "lip_vs_opening",
    "opening_vs_slot",
    "slot_depth",
    "tooth_at_wedge",
    "tooth_at_bottom",
    "yoke",
    "rotor_offset0",
    "rotor_offset1",
    "rotor_offset2",
    "rotor_offset3",
    "rotor_offset4",
    "stator_offset0",
    "stator_offset1",
    "stator_offset2",
    "stator_offset3",
    "stator_offset4",
];

/// Signed clearances `g(x)`; `g ≤ 0` is feasible. Units: metres.
pub fn constraint_values<T: Scalar>(x: &DesignVector<T>, c: &MachineConstants) -> [T; N_CONSTRAINTS] {
    let half = T::cst(0.5);
    let phi_s = T::cst(0.5 * c.sector_angle());
    let half_tau = T::cst(0.5 * c.slot_pitch());
    let r_r = T::cst(c.r_rotor);
    let r_b = T::cst(c.r_bore());
    let e = x.mw() * half + T::cst(c.pocket_width);
    let y_out = r_r - x.mag();
    let y_in = y_out - x.mh();
    let h_w = r_b + x.sw3() + x.sr1();
    let h_d = x.sd1() * half;
    let tooth = |h: T, w: T| T::cst(0.5 * c.tooth_min) - (h * half_tau.sin() - w * half * half_tau.cos());
    let slack = T::cst(c.airgap * (0.5 - c.offset_clearance_frac));

    let mut g = [T::zero(); N_CONSTRAINTS];
    let shrink = T::cst((c.r_rotor - c.bridge_width) / c.r_rotor);
    g[0] = T::cst(c.bridge_min) - ((r_r + x.rotor_offset(1)) * shrink - norm([e, y_out]));
    g[1] = T::cst(c.r_shaft + c.rim_min) - y_in;
    g[2] = y_out / phi_s.cos() - (r_r - T::cst(c.bridge_min));
    g[3] = T::cst(c.rib_min) - (y_in * phi_s.sin() - e * phi_s.cos());
    g[4] = x.sw3() - x.sw2();
    g[5] = x.sw2() - x.sw1();
    g[6] = h_w + T::cst(c.slot_depth_min) - h_d;
    g[7] = tooth(h_w, x.sw1());
    g[8] = tooth(h_d, x.sw4());
    g[9] = (h_d * h_d + x.sw4() * x.sw4() * half * half).sqrt() + T::cst(c.yoke_min)
        - T::cst(c.r_stator_outer);
    for k in 0..N_OFFSETS {
        g[10 + k] = x.rotor_offset(k) - slack;
        g[15 + k] = -x.stator_offset(k) - slack;
    }
    g
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityReport {
    pub values: [f64; N_CONSTRAINTS],
    /// `gradient[j][i] = ∂g_j/∂x_i`.
    pub gradient: [[f64; N_VARS]; N_CONSTRAINTS],
}

impl FeasibilityReport {
    pub fn feasible(&self, tol: f64) -> bool {
        self.values.iter().all(|&v| v <= tol)
    }

    pub fn max_violation(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }
}

/// `g(x)` with its forward-mode gradient.
pub fn feasibility(x: &DesignVector, c: &MachineConstants) -> FeasibilityReport {
    let values = constraint_values(x, c);
    let mut gradient = [[0.0; N_VARS]; N_CONSTRAINTS];
    for i in design::MAG..N_VARS {
        let gd = constraint_values(&x.seed(i), c);
        for j in 0..N_CONSTRAINTS {
            gradient[j][i] = gd[j].eps;
        }
    }
    FeasibilityReport { values, gradient }
}

#[cfg(test)]
mod tests;
