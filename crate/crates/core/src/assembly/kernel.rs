//! Element kernels, generic over the scalar so that the same code yields
//! values (`f64`) and shape derivatives (`Dual`).

use crate::materials::Material;
use crate::scalar::Scalar;
use crate::spline::{SplineSurface, TensorBasis};

/// Quadrature point in parameter space with its B-spline data.
#[derive(Clone, Debug)]
pub struct QuadPoint {
    pub basis: TensorBasis,
    /// Parametric quadrature weight.
    pub w: f64,
}

/// Basis values and physical gradients at one quadrature point.
#[derive(Clone, Debug)]
pub struct PhysQp<T> {
    pub val: Vec<T>,
    pub grad: Vec<[T; 2]>,
    /// `w · det J`.
    pub dx: T,
    pub x: [T; 2],
}

pub fn phys_qp<T: Scalar>(surf: &SplineSurface<T>, qp: &QuadPoint) -> PhysQp<T> {
    let rb = surf.rational(&qp.basis);
    let (x, j) = rb.map(&surf.points);
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let inv = T::one() / det;
    let grad = rb
        .ru
        .iter()
        .zip(&rb.rv)
        .map(|(&nu, &nv)| [(j[1][1] * nu - j[1][0] * nv) * inv, (j[0][0] * nv - j[0][1] * nu) * inv])
        .collect();
    PhysQp { val: rb.r, grad, dx: det * T::cst(qp.w), x }
}

/// Volume source of an element.
#[derive(Clone, Copy, Debug)]
pub enum Source {
    None,
    /// `ν_m · B_r^⊥`, paired with `∇N`.
    Magnet([f64; 2]),
    /// Current density [A/m²], paired with `N`.
    Current(f64),
}

/// `∫ ν(|∇A|²) ∇A·∇N_a − source_a` for local coefficients `coef`.
pub fn element_residual<T: Scalar>(phys: &[PhysQp<T>], coef: &[f64], mat: &Material, src: Source) -> Vec<T> {
    let n = coef.len();
    let mut r = vec![T::zero(); n];
    for q in phys {
        let mut ga = [T::zero(); 2];
        for a in 0..n {
            let c = T::cst(coef[a]);
            ga[0] += c * q.grad[a][0];
            ga[1] += c * q.grad[a][1];
        }
        let (nu, _) = mat.reluctivity(ga[0] * ga[0] + ga[1] * ga[1]);
        for a in 0..n {
            let mut v = nu * (ga[0] * q.grad[a][0] + ga[1] * q.grad[a][1]);
            match src {
                Source::None => {}
                Source::Magnet(m) => v -= T::cst(m[0]) * q.grad[a][0] + T::cst(m[1]) * q.grad[a][1],
                Source::Current(j) => v -= T::cst(j) * q.val[a],
            }
            r[a] += v * q.dx;
        }
    }
    r
}

/// Newton tangent and internal residual (no source) of an element,
/// `ke` row-major `n × n`.
pub fn element_tangent(phys: &[PhysQp<f64>], coef: &[f64], mat: &Material) -> (Vec<f64>, Vec<f64>) {
    let n = coef.len();
    let mut ke = vec![0.0; n * n];
    let mut re = vec![0.0; n];
    let linear = mat.is_linear();
    for q in phys {
        let mut ga = [0.0; 2];
        for a in 0..n {
            ga[0] += coef[a] * q.grad[a][0];
            ga[1] += coef[a] * q.grad[a][1];
        }
        let (nu, dnu) = mat.reluctivity(ga[0] * ga[0] + ga[1] * ga[1]);
        let proj: Vec<f64> = q.grad.iter().map(|g| ga[0] * g[0] + ga[1] * g[1]).collect();
        let two_dnu = 2.0 * dnu;
        for a in 0..n {
            re[a] += nu * proj[a] * q.dx;
            let ga_ = q.grad[a];
            let row = &mut ke[a * n..(a + 1) * n];
            for b in 0..n {
                let mut v = nu * (ga_[0] * q.grad[b][0] + ga_[1] * q.grad[b][1]);
                if !linear {
                    v += two_dnu * proj[a] * proj[b];
                }
                row[b] += v * q.dx;
            }
        }
    }
    (ke, re)
}
