//! Real quaternions `w + x e1 + y e2 + z e3` and slice-wise scalar functions.
//!
//! Every quaternion lies in a complex plane `C_I = span{1, I}` for some unit
//! `I` with `I^2 = -1`. Functions built from the logarithm act inside that
//! plane, so their values commute with the argument.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A quaternion with `f64` components along `1, e1, e2, e3`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 4]> for Quaternion {
    fn from(c: [f64; 4]) -> Self {
        Quaternion::new(c[0], c[1], c[2], c[3])
    }
}

impl From<Quaternion> for [f64; 4] {
    fn from(q: Quaternion) -> Self {
        [q.w, q.x, q.y, q.z]
    }
}

impl From<f64> for Quaternion {
    fn from(r: f64) -> Self {
        Quaternion::real(r)
    }
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const E1: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const E2: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const E3: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub const fn real(r: f64) -> Self {
        Quaternion::new(r, 0.0, 0.0, 0.0)
    }

    /// Real part `w`.
    pub fn re(&self) -> f64 {
        self.w
    }

    /// Purely imaginary part `x e1 + y e2 + z e3`.
    pub fn imag(&self) -> Quaternion {
        Quaternion::new(0.0, self.x, self.y, self.z)
    }

    pub fn conj(&self) -> Quaternion {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    /// Modulus, computed without intermediate overflow or underflow.
    pub fn norm(&self) -> f64 {
        self.w.hypot(self.imag_norm())
    }

    /// Modulus of the imaginary part.
    pub fn imag_norm(&self) -> f64 {
        self.x.hypot(self.y).hypot(self.z)
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Multiplicative inverse `conj(q)/|q|^2`; infinite components for `q = 0`.
    pub fn inv(&self) -> Quaternion {
        let m = self
            .w
            .abs()
            .max(self.x.abs())
            .max(self.y.abs())
            .max(self.z.abs());
        if !(m > 0.0 && m.is_finite()) {
            return self.conj() / self.norm_sqr();
        }
        // Power-of-two rescale: exact, and keeps |q|^2 in range.
        let down = 2f64.powi(-(m.log2().round() as i32));
        let p = *self * down;
        p.conj() * (down / p.norm_sqr())
    }

    /// Integer power by repeated squaring; `n >= 0`.
    pub fn powi(&self, n: u32) -> Quaternion {
        let mut result = Quaternion::ONE;
        let mut base = *self;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result *= base;
            }
            base = base * base;
            e >>= 1;
        }
        result
    }

    /// Largest absolute component difference.
    pub fn max_abs_diff(&self, other: &Quaternion) -> f64 {
        (self.w - other.w)
            .abs()
            .max((self.x - other.x).abs())
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }

    /// `exp(w + I r) = e^w (cos r + I sin r)`.
    pub fn exp(&self) -> Quaternion {
        let r = self.imag_norm();
        let ew = self.w.exp();
        if r == 0.0 {
            return Quaternion::real(ew);
        }
        let k = ew * r.sin() / r;
        Quaternion::new(ew * r.cos(), k * self.x, k * self.y, k * self.z)
    }

    /// Decomposition `q = s0 + I s1`; see [`slice_of`].
    pub fn slice(&self) -> (f64, f64, ImaginaryUnit) {
        slice_of(*self)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:+}*e1 {:+}*e2 {:+}*e3",
            self.w, self.x, self.y, self.z
        )
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    // Hamilton product with e1e2 = e3, e2e3 = e1, e3e1 = e2.
    fn mul(self, o: Quaternion) -> Quaternion {
        Quaternion::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, r: f64) -> Quaternion {
        Quaternion::new(self.w * r, self.x * r, self.y * r, self.z * r)
    }
}

impl Mul<Quaternion> for f64 {
    type Output = Quaternion;
    fn mul(self, q: Quaternion) -> Quaternion {
        q * self
    }
}

impl Div<f64> for Quaternion {
    type Output = Quaternion;
    fn div(self, r: f64) -> Quaternion {
        Quaternion::new(self.w / r, self.x / r, self.y / r, self.z / r)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, o: Quaternion) {
        *self = *self + o;
    }
}

impl SubAssign for Quaternion {
    fn sub_assign(&mut self, o: Quaternion) {
        *self = *self - o;
    }
}

impl MulAssign for Quaternion {
    fn mul_assign(&mut self, o: Quaternion) {
        *self = *self * o;
    }
}

impl MulAssign<f64> for Quaternion {
    fn mul_assign(&mut self, r: f64) {
        *self = *self * r;
    }
}

/// A purely imaginary unit quaternion, the complex unit of a slice `C_I`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct ImaginaryUnit(Quaternion);

impl ImaginaryUnit {
    pub const E1: ImaginaryUnit = ImaginaryUnit(Quaternion::E1);
    pub const E2: ImaginaryUnit = ImaginaryUnit(Quaternion::E2);
    pub const E3: ImaginaryUnit = ImaginaryUnit(Quaternion::E3);

    /// Accepts `q` only if `Re(q) = 0` and `|q| = 1` within `1e-12`.
    pub fn new(q: Quaternion) -> Result<Self> {
        if q.is_finite() && q.w.abs() <= 1e-12 && (q.norm() - 1.0).abs() <= 1e-12 {
            Ok(ImaginaryUnit(Quaternion::new(0.0, q.x, q.y, q.z)))
        } else {
            Err(Error::Domain(format!("{q} is not an imaginary unit")))
        }
    }

    /// Normalizes the direction `(x, y, z)`.
    pub fn from_direction(x: f64, y: f64, z: f64) -> Result<Self> {
        let r = (x * x + y * y + z * z).sqrt();
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::Domain(format!(
                "direction ({x}, {y}, {z}) cannot be normalized"
            )));
        }
        Ok(ImaginaryUnit(Quaternion::new(0.0, x / r, y / r, z / r)))
    }

    pub fn as_quaternion(&self) -> Quaternion {
        self.0
    }

    pub fn neg(&self) -> ImaginaryUnit {
        ImaginaryUnit(-self.0)
    }

    /// The point `a + I b` of the slice.
    pub fn point(&self, a: f64, b: f64) -> Quaternion {
        Quaternion::new(a, b * self.0.x, b * self.0.y, b * self.0.z)
    }

    /// Embeds a complex number into `C_I` with `i -> I`.
    pub fn lift(&self, z: Complex64) -> Quaternion {
        self.point(z.re, z.im)
    }

    /// Inverse of [`lift`](Self::lift) for quaternions known to lie in `C_I`.
    pub fn project(&self, q: Quaternion) -> Complex64 {
        let i = self.0;
        Complex64::new(q.w, q.x * i.x + q.y * i.y + q.z * i.z)
    }
}

impl TryFrom<[f64; 3]> for ImaginaryUnit {
    type Error = Error;
    fn try_from(d: [f64; 3]) -> Result<Self> {
        ImaginaryUnit::from_direction(d[0], d[1], d[2])
    }
}

impl From<ImaginaryUnit> for [f64; 3] {
    fn from(u: ImaginaryUnit) -> Self {
        [u.0.x, u.0.y, u.0.z]
    }
}

/// Splits `q = s0 + I s1` with `s1 >= 0`; real inputs get `I = e1`.
pub fn slice_of(q: Quaternion) -> (f64, f64, ImaginaryUnit) {
    let s1 = q.imag_norm();
    if s1 == 0.0 {
        return (q.w, 0.0, ImaginaryUnit::E1);
    }
    let unit = ImaginaryUnit(Quaternion::new(0.0, q.x / s1, q.y / s1, q.z / s1));
    (q.w, s1, unit)
}

/// Argument in `[0, pi]`, with `q = |q| e^{arg(q) I_q}`.
pub fn arg(q: Quaternion) -> Result<f64> {
    let r = q.norm();
    if !(r > 0.0) {
        return Err(Error::Domain("argument of zero".into()));
    }
    Ok((q.w / r).clamp(-1.0, 1.0).acos())
}

/// True on the exclusion band `s1 <= 1e-12(1+|s|)`, `s0 < 0`, and at zero.
pub fn on_negative_axis(q: Quaternion) -> bool {
    let r = q.norm();
    r == 0.0 || (q.w < 0.0 && q.imag_norm() <= 1e-12 * (1.0 + r))
}

/// Principal logarithm `ln|s| + I_s arccos(s0/|s|)`.
pub fn qlog(q: Quaternion) -> Result<Quaternion> {
    if !q.is_finite() || on_negative_axis(q) {
        return Err(Error::Domain(format!(
            "logarithm undefined on the closed negative axis: {q}"
        )));
    }
    let r = q.norm();
    let (_, _, unit) = slice_of(q);
    let angle = (q.w / r).clamp(-1.0, 1.0).acos();
    Ok(unit.point(r.ln(), angle))
}

/// Real power `q^alpha = exp(alpha log q)`.
pub fn qpow(q: Quaternion, alpha: f64) -> Result<Quaternion> {
    Ok((qlog(q)? * alpha).exp())
}

/// Sphere distance `max{2|s0 - p0|, ||p|^2 - |s|^2|}`.
pub fn ds_metric(s: Quaternion, p: Quaternion) -> f64 {
    (2.0 * (s.w - p.w).abs()).max((p.norm_sqr() - s.norm_sqr()).abs())
}

/// Binomial coefficient as a float; exact for the small orders used here.
pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    let mut c = 1.0;
    for j in 0..k {
        c = c * f64::from(n - j) / f64::from(j + 1);
    }
    c
}
