//! Scalar slice Cauchy kernels, their powers, and the representation formula.
//!
//! For `x` off the sphere `[s]` the left kernel is
//! `S_L^{-1}(s,x) = -(x^2 - 2Re(s)x + |s|^2)^{-1}(x - conj(s))` and the right
//! kernel places the inverted factor on the other side. Both reduce to
//! `(s - x)^{-1}` when `s` and `x` commute.

use crate::error::{Error, Result};
use crate::quaternion::{binomial, ImaginaryUnit, Quaternion};

/// `x^2 - 2Re(s)x + |s|^2`, guarded by the sphere tolerance `1e-10(1+|s|)^2`.
fn sphere_factor(s: Quaternion, x: Quaternion) -> Result<Quaternion> {
    let q = x * x - x * (2.0 * s.w) + Quaternion::real(s.norm_sqr());
    let scale = 1.0 + s.norm();
    let modulus = q.norm();
    if !(modulus >= 1e-10 * scale * scale) {
        return Err(Error::SingularKernel {
            denominator: modulus,
        });
    }
    Ok(q)
}

/// Left kernel `S_L^{-1}(s, x)`, left slice hyperholomorphic in `x`.
pub fn cauchy_left(s: Quaternion, x: Quaternion) -> Result<Quaternion> {
    let q = sphere_factor(s, x)?;
    Ok(-(q.inv() * (x - s.conj())))
}

/// Right kernel `S_R^{-1}(s, x) = -(x - conj(s))(x^2 - 2Re(s)x + |s|^2)^{-1}`.
pub fn cauchy_right(s: Quaternion, x: Quaternion) -> Result<Quaternion> {
    let q = sphere_factor(s, x)?;
    Ok(-((x - s.conj()) * q.inv()))
}

/// `sum_k C(n,k) (-x)^k conj(s)^{n-k}` with the `x` powers on the left.
fn binomial_sum(n: u32, s: Quaternion, x: Quaternion, x_first: bool) -> Quaternion {
    let sb = s.conj();
    let mut acc = Quaternion::ZERO;
    for k in 0..=n {
        let xk = (-x).powi(k);
        let sk = sb.powi(n - k);
        let term = if x_first { xk * sk } else { sk * xk };
        acc += term * binomial(n, k);
    }
    acc
}

/// Left kernel power `S_L^{-n}(s,x) = Q^{-n} sum_k C(n,k)(-x)^k conj(s)^{n-k}`.
pub fn cauchy_left_pow(n: u32, s: Quaternion, x: Quaternion) -> Result<Quaternion> {
    if n == 0 {
        return Err(Error::Domain("kernel power requires n >= 1".into()));
    }
    let q = sphere_factor(s, x)?;
    Ok(q.inv().powi(n) * binomial_sum(n, s, x, true))
}

/// Right kernel power `S_R^{-n}(s,x) = sum_k C(n,k) conj(s)^{n-k}(-x)^k Q^{-n}`.
pub fn cauchy_right_pow(n: u32, s: Quaternion, x: Quaternion) -> Result<Quaternion> {
    if n == 0 {
        return Err(Error::Domain("kernel power requires n >= 1".into()));
    }
    let q = sphere_factor(s, x)?;
    Ok(binomial_sum(n, s, x, false) * q.inv().powi(n))
}

/// Extends values of a left slice function from `C_I` to an arbitrary `x`.
///
/// `f_i = f(x_I)` and `f_i_conj = f(conj(x_I))` where `x_I = x0 + I x1`.
/// Returns `f_i` (resp. `f_i_conj`) unchanged when `x` lies in `C_I` with
/// unit `I` (resp. `-I`).
pub fn represent(
    f_i: Quaternion,
    f_i_conj: Quaternion,
    unit: ImaginaryUnit,
    x: Quaternion,
) -> Quaternion {
    let (_, x1, ix) = x.slice();
    if x1 == 0.0 {
        return f_i;
    }
    // Units from different normalizations can differ in the last bits.
    let same = |a: ImaginaryUnit, b: ImaginaryUnit| {
        a.as_quaternion().max_abs_diff(&b.as_quaternion()) <= 4.0 * f64::EPSILON
    };
    if same(ix, unit) {
        return f_i;
    }
    if same(ix, unit.neg()) {
        return f_i_conj;
    }
    let prod = ix.as_quaternion() * unit.as_quaternion();
    let minus = (Quaternion::ONE - prod) * 0.5;
    let plus = (Quaternion::ONE + prod) * 0.5;
    minus * f_i + plus * f_i_conj
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(w: f64, x: f64, y: f64, z: f64) -> Quaternion {
        Quaternion::new(w, x, y, z)
    }

    #[test]
    fn commuting_case() {
        let two = Quaternion::real(2.0);
        assert_eq!(cauchy_left(two, Quaternion::ONE).unwrap(), Quaternion::ONE);
        assert_eq!(cauchy_right(two, Quaternion::ONE).unwrap(), Quaternion::ONE);
        assert_eq!(
            cauchy_left_pow(1, two, Quaternion::ONE).unwrap(),
            Quaternion::ONE
        );
        assert_eq!(
            cauchy_left_pow(2, two, Quaternion::ONE).unwrap(),
            Quaternion::ONE
        );
    }

    #[test]
    fn noncommuting_left_value() {
        // Q = (2e2)^2 + 1 = -3, x - conj(s) = e1 + 2e2.
        let v = cauchy_left(Quaternion::E1, Quaternion::E2 * 2.0).unwrap();
        let expected = q(0.0, 1.0, 2.0, 0.0) / 3.0;
        assert!(v.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn right_is_minus_swapped_left() {
        let s = Quaternion::E1;
        let x = Quaternion::E2 * 2.0;
        let r = cauchy_right(s, x).unwrap();
        let l = cauchy_left(x, s).unwrap();
        assert!(r.max_abs_diff(&(-l)) < 1e-13);
    }

    #[test]
    fn sphere_points_are_singular() {
        assert!(matches!(
            cauchy_left(Quaternion::E1, Quaternion::E2),
            Err(Error::SingularKernel { .. })
        ));
        assert!(cauchy_right(Quaternion::real(3.0), Quaternion::real(3.0)).is_err());
        assert!(cauchy_left_pow(0, Quaternion::E1, Quaternion::ONE).is_err());
    }

    #[test]
    fn second_power_is_slice_derivative() {
        let s = Quaternion::E1;
        let x = Quaternion::E2 * 2.0;
        let h = 1e-5;
        let plus = cauchy_left(s + Quaternion::real(h), x).unwrap();
        let minus = cauchy_left(s - Quaternion::real(h), x).unwrap();
        let derivative = (plus - minus) / (2.0 * h);
        // d/ds0 S^{-1} = -S^{-2}
        let p2 = cauchy_left_pow(2, s, x).unwrap();
        assert!((derivative + p2).norm() <= 1e-6 * p2.norm());
        let plus = cauchy_right(s + Quaternion::real(h), x).unwrap();
        let minus = cauchy_right(s - Quaternion::real(h), x).unwrap();
        let derivative = (plus - minus) / (2.0 * h);
        let p2 = cauchy_right_pow(2, s, x).unwrap();
        assert!((derivative + p2).norm() <= 1e-6 * p2.norm());
    }

    #[test]
    fn represent_examples() {
        let e1 = ImaginaryUnit::E1;
        // identity function
        let x_target = q(1.0, 0.0, 2.0, 0.0);
        let v = represent(q(1.0, 2.0, 0.0, 0.0), q(1.0, -2.0, 0.0, 0.0), e1, x_target);
        assert!(v.max_abs_diff(&x_target) < 1e-15);
        // constants
        let c = q(0.5, -1.0, 2.0, 3.0);
        let v = represent(c, c, e1, q(0.2, 0.1, -0.4, 0.9));
        assert!(v.max_abs_diff(&c) < 1e-15);
        // x^2 at 1 + e3 from the e1 slice
        let xi = q(1.0, 1.0, 0.0, 0.0);
        let target = q(1.0, 0.0, 0.0, 1.0);
        let v = represent(xi * xi, xi.conj() * xi.conj(), e1, target);
        assert!(v.max_abs_diff(&(target * target)) < 1e-15);
    }

    #[test]
    fn represent_is_exact_on_its_own_slice() {
        let unit = ImaginaryUnit::from_direction(0.3, -0.4, 1.2).unwrap();
        let fi = q(0.7, 0.1, -0.2, 0.3);
        let fc = q(-1.0, 2.0, 0.5, 0.0);
        assert_eq!(represent(fi, fc, unit, unit.point(0.4, 2.0)), fi);
        assert_eq!(represent(fi, fc, unit, unit.point(0.4, -2.0)), fc);
    }
}
