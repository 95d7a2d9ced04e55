//! Harmonic mortar coupling on the air-gap circle and the rotation matrix.

use std::collections::BTreeMap;

use crate::geometry::{Side, Subdomain};
use crate::scalar::Scalar;
use crate::spline::{gauss_rule, TensorBasis};

use super::DofMap;

/// Spatial harmonic orders admissible under antiperiodicity: odd
/// multiples of the pole-pair count.
pub fn harmonic_set(pole_pairs: usize, count: usize) -> Vec<usize> {
    (0..count).map(|k| (2 * k + 1) * pole_pairs).collect()
}

const TRACE_GAUSS: usize = 10;

/// Per control point on the coupling edge (indexed by `i`), the integrals
/// `∫ N_i cos(nθ) dΓ` and `∫ N_i sin(nθ) dΓ`, interleaved as
/// `[c_0, s_0, c_1, s_1, ...]`. `θ` is the polar angle in the subdomain's
/// own frame.
pub fn trace_integrals<T: Scalar>(sd: &Subdomain<T>, harmonics: &[usize]) -> Vec<Vec<T>> {
    let s = &sd.surface;
    let (v_edge, sv, j_edge) = match sd.side {
        Side::Rotor => {
            let (_, hi) = s.kv.range();
            (hi, s.kv.find_span(hi), s.nv() - 1)
        }
        Side::Stator => {
            let (lo, _) = s.kv.range();
            (lo, s.kv.find_span(lo), 0)
        }
    };
    let nh = harmonics.len();
    let mut out = vec![vec![T::zero(); 2 * nh]; s.nu()];
    let rule = gauss_rule(TRACE_GAUSS).expect("rule exists");
    for (su, a, b) in s.ku.spans() {
        for (u, w) in rule.mapped(a, b) {
            let tb = TensorBasis::at_span(&s.ku, &s.kv, su, sv, u, v_edge);
            let rb = s.rational(&tb);
            let (x, jac) = rb.map(&s.points);
            let dl = (jac[0][0] * jac[0][0] + jac[1][0] * jac[1][0]).sqrt() * T::cst(w);
            let theta = x[1].atan2(x[0]);
            let trig: Vec<(T, T)> = harmonics
                .iter()
                .map(|&n| {
                    let (sn, cs) = (T::cst(n as f64) * theta).sin_cos();
                    (cs * dl, sn * dl)
                })
                .collect();
            for (k, &gi) in rb.idx.iter().enumerate() {
                let (i, j) = (gi % s.nu(), gi / s.nu());
                if j != j_edge {
                    continue;
                }
                let nk = rb.r[k];
                if nk.re() == 0.0 && nk.eps() == 0.0 {
                    continue;
                }
                let row = &mut out[i];
                for (h, &(c, sn)) in trig.iter().enumerate() {
                    row[2 * h] += nk * c;
                    row[2 * h + 1] += nk * sn;
                }
            }
        }
    }
    out
}

/// Coupling matrix rows keyed by global DoF, after signed identification
/// of the antiperiodic cut and removal of Dirichlet points.
pub fn coupling_rows<T: Scalar>(sd: &Subdomain<T>, dofs: &DofMap, harmonics: &[usize]) -> Vec<(usize, Vec<T>)> {
    let s = &sd.surface;
    let j_edge = match sd.side {
        Side::Rotor => s.nv() - 1,
        Side::Stator => 0,
    };
    let raw = trace_integrals(sd, harmonics);
    let mut rows: BTreeMap<usize, Vec<T>> = BTreeMap::new();
    for (i, r) in raw.into_iter().enumerate() {
        if let Some((d, sign)) = dofs.dof(sd.side, s.index(i, j_edge)) {
            let e = rows.entry(d).or_insert_with(|| vec![T::zero(); r.len()]);
            for (acc, v) in e.iter_mut().zip(r) {
                *acc += v * T::cst(sign);
            }
        }
    }
    rows.into_iter().collect()
}

/// Block-diagonal rotation `R(β)` and `R'(β)`, each `2N_h × 2N_h`
/// row-major. Maps rotor-frame multiplier coefficients to the stator frame.
pub fn rotation_matrix(beta: f64, harmonics: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let m = 2 * harmonics.len();
    let mut r = vec![0.0; m * m];
    let mut rp = vec![0.0; m * m];
    for (h, &n) in harmonics.iter().enumerate() {
        let nf = n as f64;
        let (s, c) = (nf * beta).sin_cos();
        let k = 2 * h;
        r[k * m + k] = c;
        r[k * m + k + 1] = -s;
        r[(k + 1) * m + k] = s;
        r[(k + 1) * m + k + 1] = c;
        rp[k * m + k] = -nf * s;
        rp[k * m + k + 1] = -nf * c;
        rp[(k + 1) * m + k] = nf * c;
        rp[(k + 1) * m + k + 1] = -nf * s;
    }
    (r, rp)
}

/// Apply a block-diagonal `2 × 2` matrix stored dense row-major.
pub(crate) fn apply_block(m: &[f64], x: &[f64], y: &mut [f64]) {
    let n = x.len();
    for k in (0..n).step_by(2) {
        y[k] = m[k * n + k] * x[k] + m[k * n + k + 1] * x[k + 1];
        y[k + 1] = m[(k + 1) * n + k] * x[k] + m[(k + 1) * n + k + 1] * x[k + 1];
    }
}

/// `y = Mᵀ x` for a block-diagonal `2 × 2` matrix.
pub(crate) fn apply_block_t(m: &[f64], x: &[f64], y: &mut [f64]) {
    let n = x.len();
    for k in (0..n).step_by(2) {
        y[k] = m[k * n + k] * x[k] + m[(k + 1) * n + k] * x[k + 1];
        y[k + 1] = m[k * n + k + 1] * x[k] + m[(k + 1) * n + k + 1] * x[k + 1];
    }
}
