//! Saddle-point system of the coupled rotor/stator problem.
//!
//! Unknowns are ordered `[u_rotor | u_stator | λ]`. The residual is
//!
//! ```text
//! F_r = K_r(u_r) u_r − b_r − G_r λ
//! F_s = K_s(u_s) u_s − b_s + G_s R(β) λ
//! F_λ = −G_rᵀ u_r + R(β)ᵀ G_sᵀ u_s
//! ```
//!
//! and its Newton Jacobian is symmetric. The rotor is kept in its own
//! frame, so `β` enters only through `R(β)`.

mod coupling;
mod kernel;
mod linalg;

pub use coupling::{coupling_rows, harmonic_set, rotation_matrix, trace_integrals};
pub use kernel::{element_residual, element_tangent, phys_qp, PhysQp, QuadPoint, Source};
pub use linalg::{matrix_market, matvec, matvec_t, Factorization, SparsePattern};

pub(crate) use coupling::{apply_block, apply_block_t};

use rayon::prelude::*;

use crate::error::AssemblyError;
use crate::geometry::{MachinePatchwork, Side, Subdomain};
use crate::materials::{MaterialTable, MaterialTag};
use crate::scalar::Scalar;
use crate::spline::{gauss_rule, TensorBasis};

/// Excitation state of one solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatingPoint {
    /// Multiplier on `J0`, in `[0, 1]` for the reference study.
    pub current_scale: f64,
    /// Mechanical rotor angle [rad].
    pub beta: f64,
    /// Electrical phase offset [rad].
    pub phi0: f64,
}

/// Current density of phase `k` at amplitude `j_amp` [A/m²].
pub fn phase_current_density(j_amp: f64, pole_pairs: usize, op: &OperatingPoint, phase: u8) -> f64 {
    let arg = pole_pairs as f64 * op.beta
        + op.phi0
        + 2.0 * std::f64::consts::PI * phase as f64 / 3.0;
    j_amp * op.current_scale * arg.sin()
}

/// Control point → global DoF with sign. Rotor shaft and stator outer
/// boundary are Dirichlet; the right cut is the left cut with sign −1.
#[derive(Clone, Debug)]
pub struct DofMap {
    pub n_rotor: usize,
    pub n_stator: usize,
    pub n_mult: usize,
    rotor: Vec<Option<(usize, f64)>>,
    stator: Vec<Option<(usize, f64)>>,
}

impl DofMap {
    pub fn new<T: Scalar>(g: &MachinePatchwork<T>, n_harmonics: usize) -> Self {
        let map = |sd: &Subdomain<T>, offset: usize| {
            let (nu, nv) = (sd.surface.nu(), sd.surface.nv());
            let dirichlet_row = match sd.side {
                Side::Rotor => 0,
                Side::Stator => nv - 1,
            };
            let first_free = usize::from(sd.side == Side::Rotor);
            let mut out = vec![None; nu * nv];
            for j in 0..nv {
                if j == dirichlet_row {
                    continue;
                }
                for i in 0..nu {
                    let (ii, sign) = if i == nu - 1 { (0, -1.0) } else { (i, 1.0) };
                    out[i + nu * j] = Some((offset + ii + (nu - 1) * (j - first_free), sign));
                }
            }
            (out, (nu - 1) * (nv - 1))
        };
        let (rotor, n_rotor) = map(&g.rotor, 0);
        let (stator, n_stator) = map(&g.stator, n_rotor);
        Self { n_rotor, n_stator, n_mult: 2 * n_harmonics, rotor, stator }
    }

    pub fn n_field(&self) -> usize {
        self.n_rotor + self.n_stator
    }

    pub fn n_total(&self) -> usize {
        self.n_field() + self.n_mult
    }

    pub fn dof(&self, side: Side, cp: usize) -> Option<(usize, f64)> {
        match side {
            Side::Rotor => self.rotor[cp],
            Side::Stator => self.stator[cp],
        }
    }
}

/// One knot-span element with its quadrature data.
#[derive(Clone, Debug)]
pub struct Element {
    pub side: Side,
    pub tag: MaterialTag,
    /// Control-point indices, in local basis order.
    pub cps: Vec<usize>,
    pub dofs: Vec<Option<(usize, f64)>>,
    pub qps: Vec<QuadPoint>,
}

impl Element {
    pub fn gather(&self, z: &[f64]) -> Vec<f64> {
        self.dofs.iter().map(|d| d.map_or(0.0, |(k, s)| s * z[k])).collect()
    }
}

fn build_elements<T: Scalar>(sd: &Subdomain<T>, dofs: &DofMap) -> Vec<Element> {
    let s = &sd.surface;
    let nq = s.ku.degree().max(s.kv.degree()) + 1;
    let rule = gauss_rule(nq).expect("degree ≤ 9");
    let mut out = Vec::new();
    for (sv, c, d) in s.kv.spans() {
        for (su, a, b) in s.ku.spans() {
            let tag = sd.block_at(0.5 * (a + b), 0.5 * (c + d)).tag;
            let mut qps = Vec::with_capacity(nq * nq);
            for (v, wv) in rule.mapped(c, d) {
                for (u, wu) in rule.mapped(a, b) {
                    qps.push(QuadPoint { basis: TensorBasis::at_span(&s.ku, &s.kv, su, sv, u, v), w: wu * wv });
                }
            }
            let cps = s.rational(&qps[0].basis).idx;
            let el_dofs = cps.iter().map(|&cp| dofs.dof(sd.side, cp)).collect();
            out.push(Element { side: sd.side, tag, cps, dofs: el_dofs, qps });
        }
    }
    out
}

/// Signed sparse vector `(dof, value)`.
pub type SparseVec = Vec<(usize, f64)>;

/// `∫ N` over one slot, to be multiplied by the slot current density.
#[derive(Clone, Debug)]
pub struct SlotLoad {
    pub phase: u8,
    pub sign: i8,
    pub slot: u8,
    pub q: SparseVec,
}

/// Everything that does not change between Newton steps or angles.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub geometry: MachinePatchwork<f64>,
    pub materials: MaterialTable,
    pub dofs: DofMap,
    pub elements: Vec<Element>,
    pub phys: Vec<Vec<PhysQp<f64>>>,
    pub harmonics: Vec<usize>,
    pub g_rotor: Vec<(usize, Vec<f64>)>,
    pub g_stator: Vec<(usize, Vec<f64>)>,
    /// Magnet load over all field DoFs.
    pub b_magnet: Vec<f64>,
    pub slot_loads: Vec<SlotLoad>,
    pattern: SparsePattern,
}

fn scatter(out: &mut [f64], dofs: &[Option<(usize, f64)>], local: &[f64]) {
    for (d, v) in dofs.iter().zip(local) {
        if let Some((k, s)) = d {
            out[*k] += s * v;
        }
    }
}

impl AssembledSystem {
    pub fn new(
        geometry: MachinePatchwork<f64>,
        materials: MaterialTable,
        n_harmonics: usize,
    ) -> Result<Self, AssemblyError> {
        if n_harmonics == 0 {
            return Err(AssemblyError::NoHarmonics);
        }
        let harmonics = harmonic_set(geometry.pole_pairs, n_harmonics);
        let dofs = DofMap::new(&geometry, n_harmonics);
        let mut elements = build_elements(&geometry.rotor, &dofs);
        elements.extend(build_elements(&geometry.stator, &dofs));
        let phys: Vec<Vec<PhysQp<f64>>> = elements
            .par_iter()
            .map(|e| {
                let s = match e.side {
                    Side::Rotor => &geometry.rotor.surface,
                    Side::Stator => &geometry.stator.surface,
                };
                e.qps.iter().map(|q| phys_qp(s, q)).collect()
            })
            .collect();

        let edge_radius = |sd: &Subdomain<f64>, v: f64| {
            let p = sd.surface.eval(0.0, v).expect("in range");
            (p[0] * p[0] + p[1] * p[1]).sqrt()
        };
        let mismatch = (edge_radius(&geometry.rotor, geometry.rotor.surface.kv.range().1)
            - edge_radius(&geometry.stator, 0.0))
        .abs();
        if mismatch > 1e-9 * geometry.r_coupling {
            return Err(AssemblyError::CouplingMismatch(mismatch));
        }

        let g_rotor = coupling_rows(&geometry.rotor, &dofs, &harmonics);
        let g_stator = coupling_rows(&geometry.stator, &dofs, &harmonics);

        let n = dofs.n_field();
        let mut b_magnet = vec![0.0; n];
        let mut slots: Vec<(u8, i8, u8, Vec<f64>)> = Vec::new();
        for (e, ph) in elements.iter().zip(&phys) {
            match e.tag {
                MaterialTag::Magnet => {
                    let m = &materials.magnet;
                    let br = m.remanence_2d().map_err(|err| {
                        AssemblyError::Geometry(crate::error::GeometryError::Invalid(err.to_string()))
                    })?;
                    let (nu, _) = m.reluctivity(0.0);
                    let zero = vec![0.0; e.cps.len()];
                    let r = element_residual(ph, &zero, m, Source::Magnet([nu * br[0], nu * br[1]]));
                    let neg: Vec<f64> = r.iter().map(|v| -v).collect();
                    scatter(&mut b_magnet, &e.dofs, &neg);
                }
                MaterialTag::Copper { phase, sign, slot } => {
                    let pos = match slots.iter().position(|s| s.2 == slot) {
                        Some(p) => p,
                        None => {
                            slots.push((phase, sign, slot, vec![0.0; n]));
                            slots.len() - 1
                        }
                    };
                    let mut local = vec![0.0; e.cps.len()];
                    for q in ph {
                        for (l, v) in local.iter_mut().zip(&q.val) {
                            *l += v * q.dx;
                        }
                    }
                    scatter(&mut slots[pos].3, &e.dofs, &local);
                }
                _ => {}
            }
        }
        slots.sort_by_key(|s| s.2);
        let slot_loads = slots
            .into_iter()
            .map(|(phase, sign, slot, dense)| SlotLoad {
                phase,
                sign,
                slot,
                q: dense.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect(),
            })
            .collect();

        let pattern = Self::build_pattern(&elements, &dofs, &g_rotor, &g_stator);
        Ok(Self {
            geometry,
            materials,
            dofs,
            elements,
            phys,
            harmonics,
            g_rotor,
            g_stator,
            b_magnet,
            slot_loads,
            pattern,
        })
    }

    fn build_pattern(
        elements: &[Element],
        dofs: &DofMap,
        g_rotor: &[(usize, Vec<f64>)],
        g_stator: &[(usize, Vec<f64>)],
    ) -> SparsePattern {
        let mut pairs = Vec::new();
        for e in elements {
            for da in &e.dofs {
                for db in &e.dofs {
                    if let (Some((a, _)), Some((b, _))) = (da, db) {
                        pairs.push((*a, *b));
                    }
                }
            }
        }
        let l0 = dofs.n_field();
        for (d, _) in g_rotor.iter().chain(g_stator) {
            for m in 0..dofs.n_mult {
                pairs.push((*d, l0 + m));
                pairs.push((l0 + m, *d));
            }
        }
        SparsePattern::new(dofs.n_total(), &pairs)
    }

    pub fn pattern(&self) -> &SparsePattern {
        &self.pattern
    }

    pub fn n_total(&self) -> usize {
        self.dofs.n_total()
    }

    pub fn pole_pairs(&self) -> usize {
        self.geometry.pole_pairs
    }

    /// Current density per slot (sorted by slot index) at amplitude `j_amp`.
    pub fn slot_current_densities(&self, j_amp: f64, op: &OperatingPoint) -> Vec<f64> {
        self.slot_loads
            .iter()
            .map(|s| s.sign as f64 * phase_current_density(j_amp, self.pole_pairs(), op, s.phase))
            .collect()
    }

    /// Full right-hand side (zero in the multiplier block).
    pub fn rhs(&self, j_amp: f64, op: &OperatingPoint) -> Vec<f64> {
        let mut b = vec![0.0; self.n_total()];
        b[..self.dofs.n_field()].copy_from_slice(&self.b_magnet);
        self.add_current_load(&mut b, j_amp, op);
        b
    }

    /// Current part of the load only.
    pub fn current_load(&self, j_amp: f64, op: &OperatingPoint) -> Vec<f64> {
        let mut b = vec![0.0; self.n_total()];
        self.add_current_load(&mut b, j_amp, op);
        b
    }

    fn add_current_load(&self, b: &mut [f64], j_amp: f64, op: &OperatingPoint) {
        for (s, j) in self.slot_loads.iter().zip(self.slot_current_densities(j_amp, op)) {
            if j == 0.0 {
                continue;
            }
            for &(k, v) in &s.q {
                b[k] += j * v;
            }
        }
    }

    fn stator_side_rotated(&self, beta: f64) -> Vec<(usize, Vec<f64>)> {
        let (r, _) = rotation_matrix(beta, &self.harmonics);
        self.g_stator.iter().map(|(d, g)| (*d, row_times_block(g, &r))).collect()
    }

    /// Coupling contributions added to `f` for state `z`.
    fn add_coupling(&self, z: &[f64], beta: f64, f: &mut [f64]) {
        let l0 = self.dofs.n_field();
        let lam = &z[l0..];
        for (d, g) in &self.g_rotor {
            let gl: f64 = g.iter().zip(lam).map(|(a, b)| a * b).sum();
            f[*d] -= gl;
            for (m, gm) in g.iter().enumerate() {
                f[l0 + m] -= gm * z[*d];
            }
        }
        for (d, g) in self.stator_side_rotated(beta) {
            let gl: f64 = g.iter().zip(lam).map(|(a, b)| a * b).sum();
            f[d] += gl;
            for (m, gm) in g.iter().enumerate() {
                f[l0 + m] += gm * z[d];
            }
        }
    }

    /// `F(z) = internal(z) + coupling(z) − rhs`.
    pub fn residual(&self, z: &[f64], beta: f64, rhs: &[f64]) -> Vec<f64> {
        let locals: Vec<Vec<f64>> = self
            .elements
            .par_iter()
            .zip(&self.phys)
            .map(|(e, ph)| element_residual(ph, &e.gather(z), self.materials.get(e.tag), Source::None))
            .collect();
        let mut f = vec![0.0; self.n_total()];
        for (e, r) in self.elements.iter().zip(&locals) {
            scatter(&mut f, &e.dofs, r);
        }
        self.add_coupling(z, beta, &mut f);
        for (fi, bi) in f.iter_mut().zip(rhs) {
            *fi -= bi;
        }
        f
    }

    /// Jacobian triplet values (pattern order) and the residual at `z`.
    pub fn jacobian(&self, z: &[f64], beta: f64, rhs: &[f64]) -> Result<(Vec<f64>, Vec<f64>), AssemblyError> {
        let locals: Vec<(Vec<f64>, Vec<f64>)> = self
            .elements
            .par_iter()
            .zip(&self.phys)
            .map(|(e, ph)| element_tangent(ph, &e.gather(z), self.materials.get(e.tag)))
            .collect();
        let mut vals = Vec::with_capacity(self.pattern.n_triplets());
        let mut f = vec![0.0; self.n_total()];
        for (idx, (e, (ke, re))) in self.elements.iter().zip(&locals).enumerate() {
            if ke.iter().chain(re).any(|v| !v.is_finite()) {
                let block = match e.side {
                    Side::Rotor => "rotor",
                    Side::Stator => "stator",
                };
                return Err(AssemblyError::NonFinite { block, element: idx });
            }
            let n = e.dofs.len();
            for (a, da) in e.dofs.iter().enumerate() {
                for (b, db) in e.dofs.iter().enumerate() {
                    if let (Some((_, sa)), Some((_, sb))) = (da, db) {
                        vals.push(sa * sb * ke[a * n + b]);
                    }
                }
            }
            scatter(&mut f, &e.dofs, re);
        }
        for (_, g) in &self.g_rotor {
            for gm in g {
                vals.push(-gm);
                vals.push(-gm);
            }
        }
        for (_, g) in self.stator_side_rotated(beta) {
            for gm in g {
                vals.push(gm);
                vals.push(gm);
            }
        }
        debug_assert_eq!(vals.len(), self.pattern.n_triplets());
        self.add_coupling(z, beta, &mut f);
        for (fi, bi) in f.iter_mut().zip(rhs) {
            *fi -= bi;
        }
        Ok((vals, f))
    }

    /// Sector torque functional `−u_sᵀ G_s R'(β) λ` (no length, scale or
    /// pole factors).
    pub fn torque_functional(&self, z: &[f64], beta: f64) -> f64 {
        let l0 = self.dofs.n_field();
        let (_, rp) = rotation_matrix(beta, &self.harmonics);
        let mut rl = vec![0.0; self.dofs.n_mult];
        apply_block(&rp, &z[l0..], &mut rl);
        -self
            .g_stator
            .iter()
            .map(|(d, g)| z[*d] * g.iter().zip(&rl).map(|(a, b)| a * b).sum::<f64>())
            .sum::<f64>()
    }

    /// Gradient of [`Self::torque_functional`] with respect to `z`.
    pub fn torque_functional_gradient(&self, z: &[f64], beta: f64) -> Vec<f64> {
        let l0 = self.dofs.n_field();
        let (_, rp) = rotation_matrix(beta, &self.harmonics);
        let mut out = vec![0.0; self.n_total()];
        let mut rl = vec![0.0; self.dofs.n_mult];
        apply_block(&rp, &z[l0..], &mut rl);
        let mut gtu = vec![0.0; self.dofs.n_mult];
        for (d, g) in &self.g_stator {
            out[*d] = -g.iter().zip(&rl).map(|(a, b)| a * b).sum::<f64>();
            for (acc, gm) in gtu.iter_mut().zip(g) {
                *acc += gm * z[*d];
            }
        }
        let mut rtg = vec![0.0; self.dofs.n_mult];
        apply_block_t(&rp, &gtu, &mut rtg);
        for (m, v) in rtg.into_iter().enumerate() {
            out[l0 + m] = -v;
        }
        out
    }

    /// Magnetic flux density `(B_x, B_y)` at a parametric point, in the
    /// subdomain's own frame.
    pub fn flux_density(&self, side: Side, z: &[f64], u: f64, v: f64) -> [f64; 2] {
        let sd = match side {
            Side::Rotor => &self.geometry.rotor,
            Side::Stator => &self.geometry.stator,
        };
        let s = &sd.surface;
        let tb = TensorBasis::at(&s.ku, &s.kv, u, v).expect("in range");
        let q = phys_qp(s, &QuadPoint { basis: tb.clone(), w: 1.0 });
        let rb = s.rational(&tb);
        let mut g = [0.0; 2];
        for (k, cp) in rb.idx.iter().enumerate() {
            if let Some((d, sg)) = self.dofs.dof(side, *cp) {
                g[0] += sg * z[d] * q.grad[k][0];
                g[1] += sg * z[d] * q.grad[k][1];
            }
        }
        [g[1], -g[0]]
    }

    /// Vector potential at a parametric point.
    pub fn potential(&self, side: Side, z: &[f64], u: f64, v: f64) -> f64 {
        let s = match side {
            Side::Rotor => &self.geometry.rotor.surface,
            Side::Stator => &self.geometry.stator.surface,
        };
        let tb = TensorBasis::at(&s.ku, &s.kv, u, v).expect("in range");
        let rb = s.rational(&tb);
        rb.idx
            .iter()
            .zip(&rb.r)
            .filter_map(|(cp, r)| self.dofs.dof(side, *cp).map(|(d, sg)| sg * z[d] * r))
            .sum()
    }
}

/// Row vector times a block-diagonal `2 × 2` matrix: `(gᵀ M)`.
fn row_times_block(g: &[f64], m: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; g.len()];
    apply_block_t(m, g, &mut out);
    out
}
