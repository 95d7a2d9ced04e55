//! B-spline / NURBS substrate: knot vectors, basis evaluation with
//! derivatives, tensor-product rational surfaces, knot refinement and
//! Gauss–Legendre quadrature.

use crate::error::SplineError;
use crate::scalar::Scalar;

/// Open (clamped) knot vector of a given degree.
#[derive(Clone, Debug, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

impl KnotVector {
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self, SplineError> {
        if knots.len() < 2 * (degree + 1) {
            return Err(SplineError::InvalidKnots(format!(
                "{} knots cannot carry degree {degree}",
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(SplineError::InvalidKnots("non-finite knot".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(SplineError::InvalidKnots("knots must be non-decreasing".into()));
        }
        let n = knots.len();
        let clamped = knots[..=degree].iter().all(|&k| k == knots[0])
            && knots[n - degree - 1..].iter().all(|&k| k == knots[n - 1]);
        if !clamped {
            return Err(SplineError::InvalidKnots(
                "end knots must be repeated degree+1 times".into(),
            ));
        }
        if knots[n - 1] <= knots[0] {
            return Err(SplineError::InvalidKnots("empty parameter range".into()));
        }
        // interior multiplicity beyond `degree` would disconnect the basis
        let mut run = 1;
        for w in knots[degree + 1..n - degree - 1].windows(2) {
            run = if w[0] == w[1] { run + 1 } else { 1 };
            if run > degree {
                return Err(SplineError::InvalidKnots(
                    "interior knot multiplicity exceeds degree".into(),
                ));
            }
        }
        Ok(Self { degree, knots })
    }

    /// Piecewise-Bézier knot vector over `segments` unit spans: interior
    /// breakpoints `1, 2, …` carry multiplicity `degree`.
    pub fn bezier_segments(degree: usize, segments: usize) -> Self {
        let mut knots = vec![0.0; degree + 1];
        for s in 1..segments {
            knots.extend(std::iter::repeat_n(s as f64, degree));
        }
        knots.extend(std::iter::repeat_n(segments as f64, degree + 1));
        Self { degree, knots }
    }

    pub fn open_uniform(degree: usize, elements: usize) -> Self {
        let mut knots = vec![0.0; degree + 1];
        for e in 1..elements {
            knots.push(e as f64 / elements as f64);
        }
        knots.extend(std::iter::repeat_n(1.0, degree + 1));
        Self { degree, knots }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn n_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn range(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// Non-empty knot spans as `(span index, left knot, right knot)`.
    pub fn spans(&self) -> Vec<(usize, f64, f64)> {
        let p = self.degree;
        (p..self.n_basis())
            .filter(|&i| self.knots[i + 1] > self.knots[i])
            .map(|i| (i, self.knots[i], self.knots[i + 1]))
            .collect()
    }

    /// Span index `i` with `knots[i] <= u < knots[i+1]` (the last span is closed).
    pub fn find_span(&self, u: f64) -> usize {
        let n = self.n_basis() - 1;
        let p = self.degree;
        if u >= self.knots[n + 1] {
            // last non-empty span
            let mut i = n;
            while self.knots[i] == self.knots[i + 1] {
                i -= 1;
            }
            return i;
        }
        if u <= self.knots[p] {
            return p;
        }
        let (mut lo, mut hi) = (p, n + 1);
        let mut mid = (lo + hi) / 2;
        while u < self.knots[mid] || u >= self.knots[mid + 1] {
            if u < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
            mid = (lo + hi) / 2;
        }
        mid
    }

    /// Values and derivatives of the `degree+1` basis functions that are
    /// nonzero at `u`.
    pub fn eval_basis(&self, u: f64, der_order: usize) -> Result<BasisValues, SplineError> {
        let (a, b) = self.range();
        if !(a..=b).contains(&u) || u.is_nan() {
            return Err(SplineError::OutOfDomain { u, lo: a, hi: b });
        }
        let span = self.find_span(u);
        Ok(BasisValues {
            first: span - self.degree,
            ders: self.basis_ders_at_span(span, u, der_order),
        })
    }

    /// Cox–de Boor derivatives `ders[k][j]` (k-th derivative of basis
    /// `span-degree+j`) for a known span.
    pub fn basis_ders_at_span(&self, span: usize, u: f64, n: usize) -> Vec<Vec<f64>> {
        let p = self.degree;
        let kn = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = u - kn[span + 1 - j];
            right[j] = kn[span + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut ders = vec![vec![0.0; p + 1]; n + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let nmax = n.min(p);
        let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=nmax {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut fac = p as f64;
        for (k, row) in ders.iter_mut().enumerate().take(nmax + 1).skip(1) {
            for v in row.iter_mut() {
                *v *= fac;
            }
            fac *= (p - k) as f64;
        }
        ders
    }
}

/// Nonzero basis functions at one parameter.
#[derive(Clone, Debug)]
pub struct BasisValues {
    /// Global index of the first nonzero basis function.
    pub first: usize,
    /// `ders[k][j]`: k-th derivative of basis `first + j`.
    pub ders: Vec<Vec<f64>>,
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }
}

pub fn gauss_rule(n: usize) -> Result<QuadratureRule, SplineError> {
    if !(1..=10).contains(&n) {
        return Err(SplineError::QuadratureOrder(n));
    }
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton on P_n starting from the Chebyshev-like guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            x = 0.0;
            dp = 1.0;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points[i] = -x;
        points[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
    Ok(QuadratureRule { points, weights })
}

/// Homogeneous control point `(w·x, w·y, w)`.
pub type HPoint<T> = [T; 3];

pub fn to_homogeneous<T: Scalar>(p: [T; 2], w: T) -> HPoint<T> {
    [p[0] * w, p[1] * w, w]
}

pub fn from_homogeneous<T: Scalar>(h: HPoint<T>) -> ([T; 2], T) {
    ([h[0] / h[2], h[1] / h[2]], h[2])
}

fn hlerp<T: Scalar>(a: &HPoint<T>, b: &HPoint<T>, alpha: f64) -> HPoint<T> {
    let al = T::cst(alpha);
    let be = T::cst(1.0 - alpha);
    [al * a[0] + be * b[0], al * a[1] + be * b[1], al * a[2] + be * b[2]]
}

/// Insert one knot into a curve given by homogeneous control points.
pub fn insert_knot<T: Scalar>(
    kv: &KnotVector,
    pts: &[HPoint<T>],
    u: f64,
) -> (KnotVector, Vec<HPoint<T>>) {
    let p = kv.degree;
    let k = kv.find_span(u);
    let s = kv.knots.iter().filter(|&&x| x == u).count();
    let mut out = Vec::with_capacity(pts.len() + 1);
    for i in 0..=pts.len() {
        if i + p <= k {
            out.push(pts[i]);
        } else if i + s <= k {
            let alpha = (u - kv.knots[i]) / (kv.knots[i + p] - kv.knots[i]);
            out.push(hlerp(&pts[i], &pts[i - 1], alpha));
        } else {
            out.push(pts[i - 1]);
        }
    }
    let mut knots = kv.knots.clone();
    knots.insert(k + 1, u);
    (KnotVector { degree: p, knots }, out)
}

/// Raise the degree of a piecewise-Bézier curve by one.
pub fn elevate_bezier_curve<T: Scalar>(
    kv: &KnotVector,
    pts: &[HPoint<T>],
) -> Result<(KnotVector, Vec<HPoint<T>>), SplineError> {
    let p = kv.degree;
    if p == 0 || (pts.len() - 1) % p != 0 {
        return Err(SplineError::InvalidKnots("curve is not piecewise Bézier".into()));
    }
    let segs = (pts.len() - 1) / p;
    if *kv != KnotVector::bezier_segments(p, segs) {
        return Err(SplineError::InvalidKnots("curve is not piecewise Bézier".into()));
    }
    let q = p + 1;
    let mut out = Vec::with_capacity(segs * q + 1);
    for s in 0..segs {
        let seg = &pts[s * p..=s * p + p];
        if s == 0 {
            out.push(seg[0]);
        }
        for i in 1..=q {
            if i == q {
                out.push(seg[p]);
            } else {
                let a = i as f64 / q as f64;
                out.push(hlerp(&seg[i - 1], &seg[i], a));
            }
        }
    }
    Ok((KnotVector::bezier_segments(q, segs), out))
}

/// Tensor-product NURBS surface. Control point `(i, j)` is stored at
/// `i + nu·j`, `i` running along the first (u) direction.
#[derive(Clone, Debug)]
pub struct SplineSurface<T> {
    pub ku: KnotVector,
    pub kv: KnotVector,
    pub points: Vec<[T; 2]>,
    pub weights: Vec<T>,
}

impl<T: Scalar> SplineSurface<T> {
    pub fn new(
        ku: KnotVector,
        kv: KnotVector,
        points: Vec<[T; 2]>,
        weights: Vec<T>,
    ) -> Result<Self, SplineError> {
        let (nu, nv) = (ku.n_basis(), kv.n_basis());
        if points.len() != nu * nv || weights.len() != nu * nv {
            return Err(SplineError::NetMismatch {
                expected: nu * nv,
                got: points.len().min(weights.len()),
            });
        }
        if weights.iter().any(|w| !(w.re() > 0.0)) {
            return Err(SplineError::NonPositiveWeight);
        }
        Ok(Self { ku, kv, points, weights })
    }

    /// Build from a homogeneous net.
    pub fn from_homogeneous(
        ku: KnotVector,
        kv: KnotVector,
        net: &[HPoint<T>],
    ) -> Result<Self, SplineError> {
        let (points, weights): (Vec<_>, Vec<_>) = net.iter().map(|h| from_homogeneous(*h)).unzip();
        Self::new(ku, kv, points, weights)
    }

    pub fn homogeneous(&self) -> Vec<HPoint<T>> {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| to_homogeneous(*p, w))
            .collect()
    }

    pub fn nu(&self) -> usize {
        self.ku.n_basis()
    }

    pub fn nv(&self) -> usize {
        self.kv.n_basis()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.nu() * j
    }

    /// Rational basis at a point from precomputed B-spline data.
    pub fn rational(&self, b: &TensorBasis) -> RationalBasis<T> {
        let n = b.n.len();
        let mut idx = Vec::with_capacity(n);
        let mut wn = Vec::with_capacity(n);
        let (mut w, mut wu, mut wv) = (T::zero(), T::zero(), T::zero());
        for k in 0..n {
            let (a, c) = (k % b.nloc_u, k / b.nloc_u);
            let gi = self.index(b.first_u + a, b.first_v + c);
            idx.push(gi);
            let wk = self.weights[gi];
            wn.push(wk);
            w += wk * T::cst(b.n[k]);
            wu += wk * T::cst(b.du[k]);
            wv += wk * T::cst(b.dv[k]);
        }
        let inv = T::one() / w;
        let mut r = Vec::with_capacity(n);
        let mut ru = Vec::with_capacity(n);
        let mut rv = Vec::with_capacity(n);
        for k in 0..n {
            let rk = wn[k] * T::cst(b.n[k]) * inv;
            r.push(rk);
            ru.push((wn[k] * T::cst(b.du[k]) - rk * wu) * inv);
            rv.push((wn[k] * T::cst(b.dv[k]) - rk * wv) * inv);
        }
        RationalBasis { idx, r, ru, rv }
    }

    /// Point and Jacobian `jac[a][b] = ∂x_a/∂ξ_b`.
    pub fn eval_with_jacobian(&self, u: f64, v: f64) -> Result<([T; 2], [[T; 2]; 2]), SplineError> {
        let b = TensorBasis::at(&self.ku, &self.kv, u, v)?;
        let rb = self.rational(&b);
        Ok(rb.map(&self.points))
    }

    pub fn eval(&self, u: f64, v: f64) -> Result<[T; 2], SplineError> {
        Ok(self.eval_with_jacobian(u, v)?.0)
    }

    /// Refine the u direction by inserting the given knots.
    pub fn insert_u(&self, new: &[f64]) -> Self {
        let (nu, nv) = (self.nu(), self.nv());
        let h = self.homogeneous();
        let mut ku = self.ku.clone();
        let mut rows: Vec<Vec<HPoint<T>>> =
            (0..nv).map(|j| h[j * nu..(j + 1) * nu].to_vec()).collect();
        for &u in new {
            let mut kout = ku.clone();
            for row in rows.iter_mut() {
                let (k2, r2) = insert_knot(&ku, row, u);
                *row = r2;
                kout = k2;
            }
            ku = kout;
        }
        let net: Vec<_> = rows.into_iter().flatten().collect();
        Self::from_homogeneous(ku, self.kv.clone(), &net).expect("refinement keeps weights positive")
    }

    /// Refine the v direction by inserting the given knots.
    pub fn insert_v(&self, new: &[f64]) -> Self {
        self.transposed().insert_u(new).transposed()
    }

    pub fn transposed(&self) -> Self {
        let (nu, nv) = (self.nu(), self.nv());
        let mut points = Vec::with_capacity(nu * nv);
        let mut weights = Vec::with_capacity(nu * nv);
        for i in 0..nu {
            for j in 0..nv {
                points.push(self.points[i + nu * j]);
                weights.push(self.weights[i + nu * j]);
            }
        }
        Self { ku: self.kv.clone(), kv: self.ku.clone(), points, weights }
    }

    /// Degree elevation of a piecewise-Bézier surface in u.
    pub fn elevate_u(&self) -> Result<Self, SplineError> {
        let (nu, nv) = (self.nu(), self.nv());
        let h = self.homogeneous();
        let mut ku = self.ku.clone();
        let mut net = Vec::new();
        for j in 0..nv {
            let (k2, row) = elevate_bezier_curve(&self.ku, &h[j * nu..(j + 1) * nu])?;
            ku = k2;
            net.extend(row);
        }
        Self::from_homogeneous(ku, self.kv.clone(), &net)
    }

    pub fn elevate_v(&self) -> Result<Self, SplineError> {
        Ok(self.transposed().elevate_u()?.transposed())
    }

    /// Uniformly scale all control points about the origin.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            ku: self.ku.clone(),
            kv: self.kv.clone(),
            points: self.points.iter().map(|p| [p[0] * factor, p[1] * factor]).collect(),
            weights: self.weights.clone(),
        }
    }

    /// Area by Gauss quadrature of `|det J|`. Rational maps are not
    /// polynomial, so the default splits each element into 4×4 cells with
    /// 10 points per direction.
    pub fn area(&self) -> T {
        self.area_with(10, 4)
    }

    pub fn area_with(&self, n_gauss: usize, sub: usize) -> T {
        let rule = gauss_rule(n_gauss).unwrap();
        let mut cells = Vec::new();
        for (su, a0, a1) in self.ku.spans() {
            for (sv, b0, b1) in self.kv.spans() {
                for i in 0..sub {
                    for j in 0..sub {
                        let du = (a1 - a0) / sub as f64;
                        let dv = (b1 - b0) / sub as f64;
                        let (u0, v0) = (a0 + du * i as f64, b0 + dv * j as f64);
                        cells.push((su, sv, u0, u0 + du, v0, v0 + dv));
                    }
                }
            }
        }
        let mut total = T::zero();
        for (su, sv, a0, a1, b0, b1) in cells {
            {
                for (u, wu) in rule.mapped(a0, a1) {
                    for (v, wv) in rule.mapped(b0, b1) {
                        let b = TensorBasis::at_span(&self.ku, &self.kv, su, sv, u, v);
                        let (_, j) = self.rational(&b).map(&self.points);
                        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                        total += det.abs() * T::cst(wu * wv);
                    }
                }
            }
        }
        total
    }

    /// Smallest Jacobian determinant over all quadrature points, as an
    /// error when it is not strictly positive.
    pub fn check_jacobian(&self, n_gauss: usize) -> Result<f64, SplineError> {
        let rule = gauss_rule(n_gauss)?;
        let mut min_det = f64::INFINITY;
        for (su, a0, a1) in self.ku.spans() {
            for (sv, b0, b1) in self.kv.spans() {
                for (u, _) in rule.mapped(a0, a1) {
                    for (v, _) in rule.mapped(b0, b1) {
                        let b = TensorBasis::at_span(&self.ku, &self.kv, su, sv, u, v);
                        let (_, j) = self.rational(&b).map(&self.points);
                        let det = (j[0][0] * j[1][1] - j[0][1] * j[1][0]).re();
                        if !(det > 0.0) {
                            return Err(SplineError::DegenerateJacobian { u, v, det });
                        }
                        min_det = min_det.min(det);
                    }
                }
            }
        }
        Ok(min_det)
    }
}

/// Tensor-product B-spline values and first derivatives at one point.
#[derive(Clone, Debug)]
pub struct TensorBasis {
    pub first_u: usize,
    pub first_v: usize,
    pub nloc_u: usize,
    pub n: Vec<f64>,
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
}

impl TensorBasis {
    pub fn at(ku: &KnotVector, kv: &KnotVector, u: f64, v: f64) -> Result<Self, SplineError> {
        let (a, b) = ku.range();
        if !(a..=b).contains(&u) || u.is_nan() {
            return Err(SplineError::OutOfDomain { u, lo: a, hi: b });
        }
        let (c, d) = kv.range();
        if !(c..=d).contains(&v) || v.is_nan() {
            return Err(SplineError::OutOfDomain { u: v, lo: c, hi: d });
        }
        Ok(Self::at_span(ku, kv, ku.find_span(u), kv.find_span(v), u, v))
    }

    pub fn at_span(ku: &KnotVector, kv: &KnotVector, su: usize, sv: usize, u: f64, v: f64) -> Self {
        let bu = ku.basis_ders_at_span(su, u, 1);
        let bv = kv.basis_ders_at_span(sv, v, 1);
        let (pu, pv) = (ku.degree() + 1, kv.degree() + 1);
        let mut n = Vec::with_capacity(pu * pv);
        let mut du = Vec::with_capacity(pu * pv);
        let mut dv = Vec::with_capacity(pu * pv);
        for c in 0..pv {
            for a in 0..pu {
                n.push(bu[0][a] * bv[0][c]);
                du.push(bu[1][a] * bv[0][c]);
                dv.push(bu[0][a] * bv[1][c]);
            }
        }
        Self {
            first_u: su - ku.degree(),
            first_v: sv - kv.degree(),
            nloc_u: pu,
            n,
            du,
            dv,
        }
    }
}

/// Rational basis functions with parametric derivatives.
#[derive(Clone, Debug)]
pub struct RationalBasis<T> {
    pub idx: Vec<usize>,
    pub r: Vec<T>,
    pub ru: Vec<T>,
    pub rv: Vec<T>,
}

impl<T: Scalar> RationalBasis<T> {
    /// Map control points: returns the point and its parametric Jacobian.
    pub fn map(&self, points: &[[T; 2]]) -> ([T; 2], [[T; 2]; 2]) {
        let mut x = [T::zero(); 2];
        let mut j = [[T::zero(); 2]; 2];
        for (k, &gi) in self.idx.iter().enumerate() {
            let p = points[gi];
            for a in 0..2 {
                x[a] += self.r[k] * p[a];
                j[a][0] += self.ru[k] * p[a];
                j[a][1] += self.rv[k] * p[a];
            }
        }
        (x, j)
    }
}

/// Rational quadratic Bézier control polygon `(points, weights)` of a
/// circular arc about the origin from `a` to `b` (both on the same circle).
pub fn arc_bezier<T: Scalar>(a: [T; 2], b: [T; 2]) -> [HPoint<T>; 3] {
    let r = (a[0] * a[0] + a[1] * a[1]).sqrt();
    let ta = a[1].atan2(a[0]);
    let mut tb = b[1].atan2(b[0]);
    let pi = T::PI();
    let two = T::cst(2.0);
    while (tb - ta).re() > pi.re() {
        tb -= two * pi;
    }
    while (tb - ta).re() < -pi.re() {
        tb += two * pi;
    }
    let half = (tb - ta) / two;
    let w = half.cos();
    let mid = ta + half;
    let rm = r / w;
    [
        to_homogeneous(a, T::one()),
        to_homogeneous([rm * mid.cos(), rm * mid.sin()], w),
        to_homogeneous(b, T::one()),
    ]
}

/// Straight segment as a quadratic Bézier.
pub fn line_bezier<T: Scalar>(a: [T; 2], b: [T; 2]) -> [HPoint<T>; 3] {
    let half = T::cst(0.5);
    [
        to_homogeneous(a, T::one()),
        to_homogeneous([(a[0] + b[0]) * half, (a[1] + b[1]) * half], T::one()),
        to_homogeneous(b, T::one()),
    ]
}

/// Biquadratic Coons patch (homogeneous) from four quadratic boundary
/// curves: `bottom(u)`, `top(u)`, `left(v)`, `right(v)`. Returns the 3×3
/// net with index `a + 3·b`.
pub fn coons_quadratic<T: Scalar>(
    bottom: &[HPoint<T>; 3],
    top: &[HPoint<T>; 3],
    left: &[HPoint<T>; 3],
    right: &[HPoint<T>; 3],
) -> [HPoint<T>; 9] {
    let half = T::cst(0.5);
    let quarter = T::cst(0.25);
    let mut net = [[T::zero(); 3]; 9];
    for a in 0..3 {
        net[a] = bottom[a];
        net[a + 6] = top[a];
    }
    net[3] = left[1];
    net[5] = right[1];
    for c in 0..3 {
        net[4][c] = half * (bottom[1][c] + top[1][c]) + half * (left[1][c] + right[1][c])
            - quarter * (bottom[0][c] + bottom[2][c] + top[0][c] + top[2][c]);
    }
    net
}
