//! Scalar abstraction for the geometry and element kernels.
//!
//! Everything that maps design parameters to control points, basis
//! functions, reluctivities and element residuals is written against
//! [`Scalar`]. Plain `f64`/`f32` give values; [`Dual`] carries one
//! directional derivative alongside the value, which is how the shape
//! sensitivities of the assembled residual are obtained.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};

/// Real scalar used by the generic numerical kernels.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + fmt::Debug
    + Send
    + Sync
    + 'static
{
    /// Lift a constant.
    fn cst(v: f64) -> Self;
    /// Primal (value) part as `f64`.
    fn re(self) -> f64;
    /// Derivative part; zero for plain floats.
    fn eps(self) -> f64 {
        0.0
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    #[inline]
    fn cst(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn re(self) -> f64 {
        self as f64
    }
}

/// First-order forward-mode dual number `re + eps·ε`, `ε² = 0`.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    #[inline]
    pub const fn new(re: f64, eps: f64) -> Self {
        Self { re, eps }
    }
    #[inline]
    pub const fn constant(re: f64) -> Self {
        Self { re, eps: 0.0 }
    }
    #[inline]
    pub const fn variable(re: f64) -> Self {
        Self { re, eps: 1.0 }
    }
    /// Chain rule: value `f`, derivative `df` of the primal function.
    #[inline]
    fn chain(self, f: f64, df: f64) -> Self {
        Self { re: f, eps: df * self.eps }
    }
}

impl Scalar for Dual {
    #[inline]
    fn cst(v: f64) -> Self {
        Dual::constant(v)
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn eps(self) -> f64 {
        self.eps
    }
}

impl fmt::Debug for Dual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}+{:?}ε", self.re, self.eps)
    }
}

impl fmt::Display for Dual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}ε", self.re, self.eps)
    }
}

impl PartialOrd for Dual {
    #[inline]
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.re.partial_cmp(&other.re)
    }
}

impl Neg for Dual {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.re, -self.eps)
    }
}

impl Add for Dual {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.eps + o.eps)
    }
}

impl Sub for Dual {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.eps - o.eps)
    }
}

impl Mul for Dual {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re, self.eps * o.re + self.re * o.eps)
    }
}

impl Div for Dual {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.re;
        Self::new(self.re * inv, (self.eps * o.re - self.re * o.eps) * inv * inv)
    }
}

impl Rem for Dual {
    type Output = Self;
    #[inline]
    fn rem(self, o: Self) -> Self {
        // x mod y = x - y·trunc(x/y); trunc is piecewise constant
        let q = (self.re / o.re).trunc();
        Self::new(self.re % o.re, self.eps - q * o.eps)
    }
}

impl AddAssign for Dual {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}
impl SubAssign for Dual {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}
impl MulAssign for Dual {
    #[inline]
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}
impl DivAssign for Dual {
    #[inline]
    fn div_assign(&mut self, o: Self) {
        *self = *self / o;
    }
}

impl Sum for Dual {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Dual::zero(), |a, b| a + b)
    }
}

impl Zero for Dual {
    #[inline]
    fn zero() -> Self {
        Self::constant(0.0)
    }
    #[inline]
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.eps == 0.0
    }
}

impl One for Dual {
    #[inline]
    fn one() -> Self {
        Self::constant(1.0)
    }
}

impl Num for Dual {
    type FromStrRadixErr = <f64 as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(Dual::constant)
    }
}

impl ToPrimitive for Dual {
    fn to_i64(&self) -> Option<i64> {
        self.re.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.re.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.re)
    }
}

impl NumCast for Dual {
    fn from<N: ToPrimitive>(n: N) -> Option<Self> {
        n.to_f64().map(Dual::constant)
    }
}

impl FromPrimitive for Dual {
    fn from_i64(n: i64) -> Option<Self> {
        Some(Dual::constant(n as f64))
    }
    fn from_u64(n: u64) -> Option<Self> {
        Some(Dual::constant(n as f64))
    }
    fn from_f64(n: f64) -> Option<Self> {
        Some(Dual::constant(n))
    }
}

impl FloatConst for Dual {
    fn E() -> Self {
        Dual::constant(f64::E())
    }
    fn FRAC_1_PI() -> Self {
        Dual::constant(f64::FRAC_1_PI())
    }
    fn FRAC_1_SQRT_2() -> Self {
        Dual::constant(f64::FRAC_1_SQRT_2())
    }
    fn FRAC_2_PI() -> Self {
        Dual::constant(f64::FRAC_2_PI())
    }
    fn FRAC_2_SQRT_PI() -> Self {
        Dual::constant(f64::FRAC_2_SQRT_PI())
    }
    fn FRAC_PI_2() -> Self {
        Dual::constant(f64::FRAC_PI_2())
    }
    fn FRAC_PI_3() -> Self {
        Dual::constant(f64::FRAC_PI_3())
    }
    fn FRAC_PI_4() -> Self {
        Dual::constant(f64::FRAC_PI_4())
    }
    fn FRAC_PI_6() -> Self {
        Dual::constant(f64::FRAC_PI_6())
    }
    fn FRAC_PI_8() -> Self {
        Dual::constant(f64::FRAC_PI_8())
    }
    fn LN_10() -> Self {
        Dual::constant(f64::LN_10())
    }
    fn LN_2() -> Self {
        Dual::constant(f64::LN_2())
    }
    fn LOG10_E() -> Self {
        Dual::constant(f64::LOG10_E())
    }
    fn LOG2_E() -> Self {
        Dual::constant(f64::LOG2_E())
    }
    fn PI() -> Self {
        Dual::constant(f64::PI())
    }
    fn SQRT_2() -> Self {
        Dual::constant(f64::SQRT_2())
    }
}

impl Float for Dual {
    fn nan() -> Self {
        Dual::constant(f64::NAN)
    }
    fn infinity() -> Self {
        Dual::constant(f64::INFINITY)
    }
    fn neg_infinity() -> Self {
        Dual::constant(f64::NEG_INFINITY)
    }
    fn neg_zero() -> Self {
        Dual::constant(-0.0)
    }
    fn min_value() -> Self {
        Dual::constant(f64::MIN)
    }
    fn min_positive_value() -> Self {
        Dual::constant(f64::MIN_POSITIVE)
    }
    fn max_value() -> Self {
        Dual::constant(f64::MAX)
    }
    fn is_nan(self) -> bool {
        self.re.is_nan() || self.eps.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.re.is_infinite() || self.eps.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.eps.is_finite()
    }
    fn is_normal(self) -> bool {
        self.re.is_normal()
    }
    fn classify(self) -> FpCategory {
        self.re.classify()
    }
    fn floor(self) -> Self {
        Dual::constant(self.re.floor())
    }
    fn ceil(self) -> Self {
        Dual::constant(self.re.ceil())
    }
    fn round(self) -> Self {
        Dual::constant(self.re.round())
    }
    fn trunc(self) -> Self {
        Dual::constant(self.re.trunc())
    }
    fn fract(self) -> Self {
        Dual::new(self.re.fract(), self.eps)
    }
    fn abs(self) -> Self {
        if self.re < 0.0 {
            -self
        } else {
            self
        }
    }
    fn signum(self) -> Self {
        Dual::constant(self.re.signum())
    }
    fn is_sign_positive(self) -> bool {
        self.re.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.re.is_sign_negative()
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        let r = 1.0 / self.re;
        self.chain(r, -r * r)
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Dual::one();
        }
        let p = self.re.powi(n - 1);
        self.chain(p * self.re, n as f64 * p)
    }
    fn powf(self, n: Self) -> Self {
        if n.eps == 0.0 {
            let p = self.re.powf(n.re - 1.0);
            return self.chain(p * self.re, n.re * p);
        }
        (n * self.ln()).exp()
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        let d = if s > 0.0 { 0.5 / s } else { 0.0 };
        self.chain(s, d)
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn exp2(self) -> Self {
        let e = self.re.exp2();
        self.chain(e, e * std::f64::consts::LN_2)
    }
    fn ln(self) -> Self {
        self.chain(self.re.ln(), 1.0 / self.re)
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        self.chain(self.re.log2(), 1.0 / (self.re * std::f64::consts::LN_2))
    }
    fn log10(self) -> Self {
        self.chain(self.re.log10(), 1.0 / (self.re * std::f64::consts::LN_10))
    }
    fn max(self, o: Self) -> Self {
        if o.re > self.re {
            o
        } else {
            self
        }
    }
    fn min(self, o: Self) -> Self {
        if o.re < self.re {
            o
        } else {
            self
        }
    }
    fn abs_sub(self, o: Self) -> Self {
        if self.re > o.re {
            self - o
        } else {
            Dual::zero()
        }
    }
    fn cbrt(self) -> Self {
        let c = self.re.cbrt();
        let d = if c != 0.0 { 1.0 / (3.0 * c * c) } else { 0.0 };
        self.chain(c, d)
    }
    fn hypot(self, o: Self) -> Self {
        (self * self + o * o).sqrt()
    }
    fn sin(self) -> Self {
        let (s, c) = self.re.sin_cos();
        self.chain(s, c)
    }
    fn cos(self) -> Self {
        let (s, c) = self.re.sin_cos();
        self.chain(c, -s)
    }
    fn tan(self) -> Self {
        let t = self.re.tan();
        self.chain(t, 1.0 + t * t)
    }
    fn asin(self) -> Self {
        self.chain(self.re.asin(), 1.0 / (1.0 - self.re * self.re).sqrt())
    }
    fn acos(self) -> Self {
        self.chain(self.re.acos(), -1.0 / (1.0 - self.re * self.re).sqrt())
    }
    fn atan(self) -> Self {
        self.chain(self.re.atan(), 1.0 / (1.0 + self.re * self.re))
    }
    fn atan2(self, x: Self) -> Self {
        let r2 = self.re * self.re + x.re * x.re;
        Dual::new(
            self.re.atan2(x.re),
            (x.re * self.eps - self.re * x.eps) / r2,
        )
    }
    fn sin_cos(self) -> (Self, Self) {
        let (s, c) = self.re.sin_cos();
        (self.chain(s, c), self.chain(c, -s))
    }
    fn exp_m1(self) -> Self {
        self.chain(self.re.exp_m1(), self.re.exp())
    }
    fn ln_1p(self) -> Self {
        self.chain(self.re.ln_1p(), 1.0 / (1.0 + self.re))
    }
    fn sinh(self) -> Self {
        self.chain(self.re.sinh(), self.re.cosh())
    }
    fn cosh(self) -> Self {
        self.chain(self.re.cosh(), self.re.sinh())
    }
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        self.chain(t, 1.0 - t * t)
    }
    fn asinh(self) -> Self {
        self.chain(self.re.asinh(), 1.0 / (self.re * self.re + 1.0).sqrt())
    }
    fn acosh(self) -> Self {
        self.chain(self.re.acosh(), 1.0 / (self.re * self.re - 1.0).sqrt())
    }
    fn atanh(self) -> Self {
        self.chain(self.re.atanh(), 1.0 / (1.0 - self.re * self.re))
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        self.re.integer_decode()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64) -> f64 {
        let h = 1e-6 * x.abs().max(1.0);
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn elementary_derivatives_match_finite_differences() {
        let x = 0.37;
        let cases: Vec<(&str, fn(Dual) -> Dual, fn(f64) -> f64)> = vec![
            ("sin", |d| d.sin(), f64::sin),
            ("cos", |d| d.cos(), f64::cos),
            ("tan", |d| d.tan(), f64::tan),
            ("sqrt", |d| d.sqrt(), f64::sqrt),
            ("exp", |d| d.exp(), f64::exp),
            ("ln", |d| d.ln(), f64::ln),
            ("asin", |d| d.asin(), f64::asin),
            ("acos", |d| d.acos(), f64::acos),
            ("atan", |d| d.atan(), f64::atan),
            ("recip", |d| d.recip(), |v| 1.0 / v),
            ("powi3", |d| d.powi(3), |v| v.powi(3)),
            ("powf", |d| d.powf(Dual::constant(2.5)), |v| v.powf(2.5)),
            ("cbrt", |d| d.cbrt(), f64::cbrt),
            ("tanh", |d| d.tanh(), f64::tanh),
        ];
        for (name, fd_dual, f) in cases {
            let d = fd_dual(Dual::variable(x));
            assert!((d.re - f(x)).abs() < 1e-15, "{name}");
            assert!((d.eps - fd(f, x)).abs() < 1e-8, "{name}: {} vs {}", d.eps, fd(f, x));
        }
    }

    #[test]
    fn atan2_derivative() {
        let (y, x) = (0.3, -0.8);
        let d = Dual::variable(y).atan2(Dual::constant(x));
        assert!((d.eps - fd(|v| v.atan2(x), y)).abs() < 1e-8);
        let d = Dual::constant(y).atan2(Dual::variable(x));
        assert!((d.eps - fd(|v| y.atan2(v), x)).abs() < 1e-8);
    }

    #[test]
    fn arithmetic_rules() {
        let a = Dual::new(2.0, 1.0);
        let b = Dual::new(3.0, -0.5);
        assert_eq!((a * b).eps, 1.0 * 3.0 + 2.0 * -0.5);
        assert!(((a / b).eps - (1.0 * 3.0 - 2.0 * -0.5) / 9.0).abs() < 1e-15);
        assert_eq!((a - b).eps, 1.5);
        assert_eq!((-a).eps, -1.0);
    }
}
