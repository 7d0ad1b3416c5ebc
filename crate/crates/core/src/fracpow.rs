//! Negative and positive fractional powers of sectorial quaternionic matrices,
//! and the S-functional calculus for intrinsic functions.
//!
//! Integer exponents are plain inverse powers. For non-integer `alpha` with
//! `n = floor(alpha)` the ray representation
//!
//! `T^{-alpha} = (-1)^{n+1} sin(alpha pi)/pi * n!/((n-alpha)...(1-alpha))
//!               * int_0^inf t^{n-alpha} S_R^{-(n+1)}(-t,T) dt`
//!
//! is used. The part of the ray beyond a radius `R` is taken from the same
//! integral for the identity, which is known in closed form, and the
//! difference is bounded by `K R^{-1-alpha}/(1+alpha)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::represent;
use crate::matrix::QMatrix;
use crate::quadrature::{
    integrate_contour, integrate_ray_with_tail, AnalyticTail, ContourPath, KernelSide, PathPiece,
    QuadratureConfig, QuadratureReport, MAX_RADIUS,
};
use crate::quaternion::{qpow, ImaginaryUnit, Quaternion};
use crate::spectral::{
    default_grid, sector_estimate_with, Resolvent, SectorEstimate, SpectralReport,
};

/// A matrix together with the quadrature metadata that produced it.
pub type PowerReport = QuadratureReport<QMatrix>;

/// Rounding allowance `64 eps max(scale, 1)` added to quadrature-based tolerances.
pub fn rounding_floor(scale: f64) -> f64 {
    64.0 * f64::EPSILON * scale.max(1.0)
}

pub(crate) fn exact(value: QMatrix) -> PowerReport {
    QuadratureReport {
        value,
        error_estimate: 0.0,
        evaluations: 0,
        converged: true,
    }
}

pub(crate) fn check_exponent(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "exponent must be positive and finite, got {alpha}"
        )))
    }
}

/// `Some(k)` when `alpha` is within `1e-12 max(1, alpha)` of the integer `k >= 1`.
pub fn integer_exponent(alpha: f64) -> Option<u32> {
    let k = alpha.round();
    if k >= 1.0 && k <= u32::MAX as f64 && (alpha - k).abs() <= 1e-12 * alpha.max(1.0) {
        Some(k as u32)
    } else {
        None
    }
}

/// Sector data on the default grid, failing for non-sectorial operators.
pub(crate) fn sectorial(res: &Resolvent, nmax: u32) -> Result<SectorEstimate> {
    sector_estimate_with(res, &default_grid(), nmax.max(1))
}

/// `(-1)^{n+1} sin(alpha pi)/pi * n!/((n-alpha)...(1-alpha))`.
fn ray_prefactor(n: u32, alpha: f64) -> f64 {
    let mut c = (alpha * PI).sin() / PI;
    for j in 1..=n {
        c *= j as f64 / (j as f64 - alpha);
    }
    if n.is_multiple_of(2) {
        -c
    } else {
        c
    }
}

/// `int_R^inf t^{n-alpha} (-t-1)^{-(n+1)} dt` from the binomial series in `1/t`.
fn reference_ray_tail(n: u32, alpha: f64, radius: f64) -> f64 {
    let mut sum = 0.0;
    let mut coeff = 1.0;
    let mut power = radius.powf(-alpha);
    for k in 0..10_000u32 {
        let term = coeff * power / (alpha + k as f64);
        let signed = if k % 2 == 0 { term } else { -term };
        sum += signed;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
        coeff *= (n + k + 1) as f64 / (k + 1) as f64;
        power /= radius;
    }
    if n.is_multiple_of(2) {
        -sum
    } else {
        sum
    }
}

/// Radius at which `k R^{-p}/p` falls below a tenth of `abs_tol`, at least `floor`.
fn tail_radius(k: f64, p: f64, floor: f64, cfg: &QuadratureConfig) -> f64 {
    if let Some(r) = cfg.truncation_radius {
        return r.max(floor);
    }
    if !(k > 0.0) {
        return floor.max(10.0);
    }
    (k / (p * 0.1 * cfg.abs_tol))
        .powf(1.0 / p)
        .clamp(floor.max(10.0), MAX_RADIUS)
}

/// `T^{-alpha}` by the ray representation, or the inverse power for integer `alpha`.
pub fn frac_power_neg(t: &QMatrix, alpha: f64, cfg: &QuadratureConfig) -> Result<PowerReport> {
    check_exponent(alpha)?;
    let res = Resolvent::new(t)?;
    let est = sectorial(&res, alpha.floor() as u32 + 1)?;
    frac_power_neg_with(&res, &est, alpha, cfg)
}

pub(crate) fn frac_power_neg_with(
    res: &Resolvent,
    est: &SectorEstimate,
    alpha: f64,
    cfg: &QuadratureConfig,
) -> Result<PowerReport> {
    let t = res.operator();
    if let Some(k) = integer_exponent(alpha) {
        return Ok(exact(t.inverse()?.powi(k)));
    }
    let n = alpha.floor() as u32;
    let prefactor = ray_prefactor(n, alpha);
    let dim = t.n();
    let id = QMatrix::identity(dim);
    // |(-t-T)^{-(n+1)} - (-t-1)^{-(n+1)}| <= K (1+t)^{-(n+2)}
    let k = (n + 1) as f64 * (t - &id).opnorm() * est.m.max(1.0).powi(n as i32 + 1);
    let k_scaled = prefactor.abs() * k;
    let radius = tail_radius(k_scaled, 1.0 + alpha, 10.0, cfg);
    let tail = AnalyticTail {
        radius,
        value: id.scale(prefactor * reference_ray_tail(n, alpha, radius)),
        remainder: k_scaled * radius.powf(-1.0 - alpha) / (1.0 + alpha),
    };
    let e = n as f64 - alpha;
    integrate_ray_with_tail(
        |s: f64| {
            let r = res.classical(-s)?.powi(n + 1);
            Ok(r.scale(prefactor * s.powf(e)))
        },
        e,
        &tail,
        cfg,
    )
}

/// Admissible keyhole parameters: rays strictly inside `(theta_min, pi)`,
/// arc radius strictly below `radius_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KeyholeWindow {
    pub theta_min: f64,
    pub theta_max: f64,
    pub radius_max: f64,
}

impl KeyholeWindow {
    pub fn from_estimate(est: &SectorEstimate) -> Self {
        KeyholeWindow {
            theta_min: est.theta0,
            theta_max: PI,
            radius_max: est.a0,
        }
    }

    /// Angle on the default keyhole, `(theta_min + pi)/2`.
    pub fn default_theta(&self) -> f64 {
        0.5 * (self.theta_min + self.theta_max)
    }

    /// Inner radius on the default keyhole, `radius_max / 2`.
    pub fn default_radius(&self) -> f64 {
        0.5 * self.radius_max
    }

    pub fn width(&self) -> f64 {
        self.theta_max - self.theta_min
    }
}

/// Keyhole `(theta, a)` if the path has the shape produced by [`ContourPath::keyhole`].
pub fn keyhole_shape(path: &ContourPath) -> Option<(f64, f64)> {
    match path.pieces.as_slice() {
        [PathPiece::Ray {
            angle: t1,
            inner: a1,
            outer: None,
            outward: false,
            ..
        }, PathPiece::Arc {
            center,
            radius,
            from,
            to,
        }, PathPiece::Ray {
            angle: t2,
            inner: a2,
            outer: None,
            outward: true,
            ..
        }] => {
            let theta = *t1;
            let a = *a1;
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + x.abs());
            let ok = theta > 0.0
                && theta < PI
                && *center == 0.0
                && close(*t2, -theta)
                && close(*from, theta)
                && close(*to, -theta)
                && close(*a2, a)
                && close(*radius, a);
            ok.then_some((theta, a))
        }
        _ => None,
    }
}

/// Spectrum lies strictly to the left of the keyhole: outside the disc of
/// radius `a` and at argument below `theta`.
fn keyhole_encloses(spectrum: &SpectralReport, theta: f64, a: f64) -> Result<()> {
    for sphere in &spectrum.spheres {
        if !(sphere.modulus() > a && sphere.arg() < theta) {
            return Err(Error::InvalidPath(format!(
                "spectral sphere ({}, {}) is not enclosed by the keyhole (theta {theta}, radius {a})",
                sphere.s0, sphere.s1
            )));
        }
    }
    Ok(())
}

fn trace_avoids_spectrum(res: &Resolvent, path: &ContourPath) -> Result<()> {
    for s in path.sample_points(64) {
        if res.check(s).is_err() {
            return Err(Error::InvalidPath(format!(
                "contour passes through the S-spectrum near {s}"
            )));
        }
    }
    Ok(())
}

/// Checks a keyhole against the sector window and the spectrum.
pub fn check_keyhole(
    res: &Resolvent,
    est: &SectorEstimate,
    path: &ContourPath,
) -> Result<KeyholeWindow> {
    path.validate()?;
    let window = KeyholeWindow::from_estimate(est);
    let (theta, a) = keyhole_shape(path)
        .ok_or_else(|| Error::InvalidPath("fractional powers need a keyhole contour".into()))?;
    if !(theta > window.theta_min && theta < window.theta_max) {
        return Err(Error::InvalidPath(format!(
            "keyhole angle {theta} outside the admissible window ({}, {})",
            window.theta_min, window.theta_max
        )));
    }
    if !(a > 0.0 && a < window.radius_max) {
        return Err(Error::InvalidPath(format!(
            "keyhole radius {a} outside (0, {})",
            window.radius_max
        )));
    }
    keyhole_encloses(res.spectrum(), theta, a)?;
    trace_avoids_spectrum(res, path)?;
    Ok(window)
}

/// Keyhole with the default angle and radius of the window in the given plane.
pub fn default_keyhole(est: &SectorEstimate, plane: ImaginaryUnit, alpha: f64) -> ContourPath {
    let w = KeyholeWindow::from_estimate(est);
    ContourPath::keyhole(plane, w.default_theta(), w.default_radius(), alpha)
}

/// `T^{-alpha}` as a keyhole integral, with the kernel on the chosen side:
/// `Right` gives `(1/2 pi) int s^{-alpha} ds_I S_R^{-1}(s,T)` and `Left` gives
/// `(1/2 pi) int S_L^{-1}(s,T) ds_I s^{-alpha}`.
pub fn frac_power_neg_contour(
    t: &QMatrix,
    alpha: f64,
    path: &ContourPath,
    side: KernelSide,
    cfg: &QuadratureConfig,
) -> Result<PowerReport> {
    check_exponent(alpha)?;
    let res = Resolvent::new(t)?;
    let est = sectorial(&res, 1)?;
    check_keyhole(&res, &est, path)?;
    frac_power_neg_contour_unchecked(&res, alpha, path, side, cfg)
}

pub(crate) fn frac_power_neg_contour_unchecked(
    res: &Resolvent,
    alpha: f64,
    path: &ContourPath,
    side: KernelSide,
    cfg: &QuadratureConfig,
) -> Result<PowerReport> {
    integrate_contour(
        |s, ds| {
            let w = qpow(s, -alpha)? * ds;
            Ok(match side {
                KernelSide::Left => res.left_unchecked(s)?.right_scale(w),
                KernelSide::Right => res.right_unchecked(s)?.left_scale(w),
            })
        },
        path,
        cfg,
    )
}

/// `int_R^inf tau^{-alpha} (c + s tau)/(1 + tau^2) d tau` from the series in `1/tau^2`.
fn reference_halfplane_tail(alpha: f64, c: f64, s: f64, radius: f64) -> f64 {
    let mut sum = 0.0;
    let r2 = radius * radius;
    let mut power = radius.powf(-alpha);
    for k in 0..10_000u32 {
        let k2 = 2.0 * k as f64;
        let term = c * power / radius / (alpha + 1.0 + k2) + s * power / (alpha + k2);
        sum += if k % 2 == 0 { term } else { -term };
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
        power /= r2;
    }
    sum
}

/// `T^{-alpha} = (1/pi) int_0^inf tau^{-alpha} (cos(alpha pi/2) T + sin(alpha pi/2) tau)(T^2 + tau^2)^{-1} d tau`
/// for `alpha` in `(0, 1)` and spectrum in the open right half-space.
pub fn frac_power_halfplane(
    t: &QMatrix,
    alpha: f64,
    cfg: &QuadratureConfig,
) -> Result<PowerReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "half-plane form needs alpha in (0, 1), got {alpha}"
        )));
    }
    let res = Resolvent::new(t)?;
    let spectrum = res.spectrum();
    let margin = 1e-8 * (1.0 + spectrum.max_modulus);
    if !(spectrum.min_real_part() > margin) {
        return Err(Error::Precondition(format!(
            "half-plane form needs the S-spectrum in Re > 0, smallest real part is {}",
            spectrum.min_real_part()
        )));
    }
    let (s, c) = (0.5 * alpha * PI).sin_cos();
    let dim = t.n();
    let id = QMatrix::identity(dim);
    let t2 = t.matmul(t);
    // Valid for tau >= 2 max(||T||, 1) where ||(T^2 + tau^2)^{-1}|| <= (4/3) tau^{-2}.
    let k = 4.0 / 3.0 * (c * (t - &id).opnorm() + (c + s) * (&id - &t2).opnorm()) / PI;
    let floor = 2.0 * t.opnorm().max(1.0);
    let radius = tail_radius(k, 1.0 + alpha, floor, cfg);
    let tail = AnalyticTail {
        radius,
        value: id.scale(reference_halfplane_tail(alpha, c, s, radius) / PI),
        remainder: k * radius.powf(-1.0 - alpha) / (1.0 + alpha),
    };
    let ct = t.scale(c);
    integrate_ray_with_tail(
        |tau: f64| {
            let q = res.q_operator(Quaternion::E1 * tau).inverse()?;
            let num = ct.add_scalar(Quaternion::real(s * tau));
            Ok(num.matmul(&q).scale(tau.powf(-alpha) / PI))
        },
        -alpha,
        &tail,
        cfg,
    )
}

/// `T^{alpha}`: the inverse of `T^{-alpha}` for `alpha < 1`, and
/// `T^{floor(alpha)} T^{alpha - floor(alpha)}` beyond.
pub fn frac_power_pos(t: &QMatrix, alpha: f64, cfg: &QuadratureConfig) -> Result<PowerReport> {
    check_exponent(alpha)?;
    if let Some(k) = integer_exponent(alpha) {
        return Ok(exact(t.powi(k)));
    }
    let whole = alpha.floor() as u32;
    let neg = frac_power_neg(t, alpha - whole as f64, cfg)?;
    let inv = neg.value.inverse()?;
    let inv_norm = inv.opnorm();
    let mut report = QuadratureReport {
        error_estimate: inv_norm * inv_norm * neg.error_estimate,
        value: inv,
        evaluations: neg.evaluations,
        converged: neg.converged,
    };
    if whole > 0 {
        let tk = t.powi(whole);
        report.error_estimate *= tk.opnorm();
        report.value = tk.matmul(&report.value);
    }
    Ok(report)
}

/// A scalar function on `C_{e1}` asserted to be intrinsic, `f(conj z) = conj f(z)`.
pub struct IntrinsicFunction<'a> {
    map: Box<dyn Fn(Complex64) -> Result<Complex64> + 'a>,
    asserted: bool,
}

impl<'a> IntrinsicFunction<'a> {
    /// `asserted` is the caller's claim of intrinsicness (e.g. real coefficients).
    pub fn new(map: impl Fn(Complex64) -> Result<Complex64> + 'a, asserted: bool) -> Self {
        IntrinsicFunction {
            map: Box::new(map),
            asserted,
        }
    }

    pub fn eval_complex(&self, z: Complex64) -> Result<Complex64> {
        (self.map)(z)
    }

    /// Value at an arbitrary quaternion via the representation formula.
    pub fn eval(&self, x: Quaternion) -> Result<Quaternion> {
        let (x0, x1, _) = x.slice();
        let z = Complex64::new(x0, x1);
        let fz = self.eval_complex(z)?;
        let fzc = self.eval_complex(z.conj())?;
        let e1 = ImaginaryUnit::E1;
        Ok(represent(e1.lift(fz), e1.lift(fzc), e1, x))
    }

    /// Rejects unasserted maps and maps failing `f(conj z) = conj f(z)` at the given points.
    pub fn spot_check(&self, points: &[Complex64]) -> Result<()> {
        if !self.asserted {
            return Err(Error::Precondition(
                "function is not asserted to be intrinsic".into(),
            ));
        }
        for &z in points {
            let fz = self.eval_complex(z)?;
            let fzc = self.eval_complex(z.conj())?;
            let defect = (fzc - fz.conj()).norm();
            if !(defect <= 1e-12 * (1.0 + fz.norm())) {
                return Err(Error::Precondition(format!(
                    "f(conj z) differs from conj f(z) by {defect} at z = {z}"
                )));
            }
        }
        Ok(())
    }
}

/// Circle centered at 0 of radius `1.1 maxModulus`, at least `0.1`.
pub fn default_circle(spectrum: &SpectralReport, plane: ImaginaryUnit) -> ContourPath {
    ContourPath::circle(plane, 0.0, (1.1 * spectrum.max_modulus).max(0.1))
}

/// Eight points along the trace, projected to `C_{e1}`, used for the intrinsic spot check.
fn spot_points(path: &ContourPath) -> Vec<Complex64> {
    let pts = path.sample_points(16);
    let step = (pts.len() / 8).max(1);
    pts.iter()
        .step_by(step)
        .take(8)
        .map(|q| {
            let (x0, x1, _) = q.slice();
            // Offset off the real axis so the check is not trivial there.
            Complex64::new(x0, x1 + 1e-3 * (1.0 + x0.abs()))
        })
        .collect()
}

/// `f(T) = (1/2 pi) int_Gamma S_L^{-1}(s,T) ds_I f(s)` for intrinsic `f`.
///
/// `Gamma` is either a full circle around a real center enclosing the spectrum,
/// or a keyhole with the spectrum to its left.
pub fn s_calculus(
    t: &QMatrix,
    f: &IntrinsicFunction<'_>,
    path: &ContourPath,
    cfg: &QuadratureConfig,
) -> Result<PowerReport> {
    path.validate()?;
    let res = Resolvent::new(t)?;
    match (keyhole_shape(path), path.pieces.as_slice()) {
        (Some((theta, a)), _) => keyhole_encloses(res.spectrum(), theta, a)?,
        (
            None,
            [PathPiece::Arc {
                center,
                radius,
                from,
                to,
            }],
        ) if ((to - from) - 2.0 * PI).abs() <= 1e-12 => {
            for sphere in &res.spectrum().spheres {
                let z = Complex64::new(sphere.s0 - center, sphere.s1);
                if !(z.norm() < *radius) {
                    return Err(Error::InvalidPath(format!(
                        "spectral sphere ({}, {}) lies outside the circle",
                        sphere.s0, sphere.s1
                    )));
                }
            }
        }
        _ => {
            return Err(Error::InvalidPath(
                "functional calculus needs a positively oriented circle or a keyhole".into(),
            ))
        }
    }
    trace_avoids_spectrum(&res, path)?;
    f.spot_check(&spot_points(path))?;
    integrate_contour(
        |s, ds| {
            let fs = f.eval(s)?;
            Ok(res.left_unchecked(s)?.right_scale(ds * fs))
        },
        path,
        cfg,
    )
}

/// Residual of the semigroup law `T^{-alpha} T^{-beta} = T^{-alpha-beta}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SemigroupReport {
    pub alpha: f64,
    pub beta: f64,
    pub residual: f64,
    /// `100` times the propagated quadrature estimates plus a rounding floor.
    pub tolerance: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub pass: bool,
}

pub fn verify_semigroup(
    t: &QMatrix,
    alpha: f64,
    beta: f64,
    cfg: &QuadratureConfig,
) -> Result<SemigroupReport> {
    check_exponent(alpha)?;
    check_exponent(beta)?;
    let res = Resolvent::new(t)?;
    let est = sectorial(&res, (alpha + beta).floor() as u32 + 1)?;
    let a = frac_power_neg_with(&res, &est, alpha, cfg)?;
    let b = frac_power_neg_with(&res, &est, beta, cfg)?;
    let c = frac_power_neg_with(&res, &est, alpha + beta, cfg)?;
    let (na, nb) = (a.value.opnorm(), b.value.opnorm());
    let residual = (&a.value.matmul(&b.value) - &c.value).opnorm();
    let budget = nb * a.error_estimate + na * b.error_estimate + c.error_estimate;
    let tolerance = 100.0 * budget + rounding_floor(na * nb + c.value.opnorm());
    Ok(SemigroupReport {
        alpha,
        beta,
        residual,
        tolerance,
        evaluations: a.evaluations + b.evaluations + c.evaluations,
        converged: a.converged && b.converged && c.converged,
        pass: residual <= tolerance,
    })
}
