//! Positive fractional powers through Kato's resolvent formula.
//!
//! `F_alpha(p, T) = sin(alpha pi)/pi * int_0^inf t^alpha (p^2 - 2p t^alpha cos(alpha pi) + t^{2alpha})^{-1}
//! S_R^{-1}(-t, T) dt` is the right S-resolvent of `B_alpha = T^alpha` at `p`.
//! `B_alpha` is recovered from a single real `mu0 < 0` as `mu0 Id - F_alpha(mu0, T)^{-1}`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::checks::PostCheck;
use crate::error::{Error, Result};
use crate::fracpow::{frac_power_neg_with, rounding_floor, sectorial, KeyholeWindow, PowerReport};
use crate::kernel::cauchy_right;
use crate::matrix::QMatrix;
use crate::quadrature::{
    integrate_contour, integrate_ray, ContourPath, QuadratureConfig, QuadratureReport, RayProfile,
};
use crate::quaternion::{arg, qpow, Quaternion};
use crate::spectral::{Resolvent, SectorEstimate};

/// Real points at which `S_R^{-1}(mu, B_alpha) = F_alpha(mu, T)` is re-checked.
pub const CHECK_POINTS: [f64; 5] = [-0.25, -0.5, -1.0, -2.0, -4.0];

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "Kato's formula needs alpha in (0, 1), got {alpha}"
        )))
    }
}

/// `p` must satisfy `arg(p) > max(alpha pi, omega)`.
fn check_angle(p: Quaternion, alpha: f64, est: &SectorEstimate) -> Result<f64> {
    let ap = arg(p)?;
    let bound = (alpha * PI).max(est.omega);
    if ap > bound {
        Ok(ap)
    } else {
        Err(Error::Precondition(format!(
            "arg(p) = {ap} must exceed max(alpha pi, omega) = {bound}"
        )))
    }
}

/// `F_alpha(p, T)` by ray quadrature.
pub fn kato_f(
    p: Quaternion,
    t: &QMatrix,
    alpha: f64,
    cfg: &QuadratureConfig,
) -> Result<PowerReport> {
    check_alpha(alpha)?;
    let res = Resolvent::new(t)?;
    let est = sectorial(&res, 1)?;
    kato_f_with(&res, &est, p, alpha, cfg)
}

pub(crate) fn kato_f_with(
    res: &Resolvent,
    est: &SectorEstimate,
    p: Quaternion,
    alpha: f64,
    cfg: &QuadratureConfig,
) -> Result<PowerReport> {
    check_angle(p, alpha, est)?;
    let (sin_a, cos_a) = (alpha * PI).sin_cos();
    let p2 = p * p;
    integrate_ray(
        |t: f64| {
            let ta = t.powf(alpha);
            let denom = p2 - p * (2.0 * ta * cos_a) + Quaternion::real(ta * ta);
            let w = denom.inv() * (ta * sin_a / PI);
            Ok(res.classical(-t)?.left_scale(w))
        },
        &RayProfile::new(alpha, alpha),
        cfg,
    )
}

/// `F_alpha(p, T) = (1/2 pi) int_Gamma S_R^{-1}(p, s^alpha) ds_I S_R^{-1}(s, T)` on a keyhole
/// in the plane of `p` (in `C_{e1}` for real `p`).
pub fn kato_f_keyhole(
    p: Quaternion,
    t: &QMatrix,
    alpha: f64,
    cfg: &QuadratureConfig,
) -> Result<PowerReport> {
    check_alpha(alpha)?;
    let res = Resolvent::new(t)?;
    let est = sectorial(&res, 1)?;
    let ap = check_angle(p, alpha, &est)?;
    let window = KeyholeWindow::from_estimate(&est);
    let phi0 = 0.5 * ((alpha * PI).max(est.omega) + ap);
    let theta = 0.5 * (phi0.max(window.theta_min) + PI);
    let (_, _, plane) = p.slice();
    let path = ContourPath::keyhole(plane, theta, window.default_radius(), alpha);
    crate::fracpow::check_keyhole(&res, &est, &path)?;
    integrate_contour(
        |s, ds| {
            let k = cauchy_right(p, qpow(s, alpha)?)?;
            Ok(res.right_unchecked(s)?.left_scale(k * ds))
        },
        &path,
        cfg,
    )
}

/// `int_0^inf t^{alpha-1}/(mu^2 - 2 mu t^alpha cos(alpha pi) + t^{2alpha}) dt`, equal to
/// `-pi/(mu sin(alpha pi))` for `mu < 0`.
pub fn kato_scalar_integral(
    mu: f64,
    alpha: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureReport<f64>> {
    check_alpha(alpha)?;
    if !(mu < 0.0) {
        return Err(Error::Domain(format!("needs mu < 0, got {mu}")));
    }
    let c = (alpha * PI).cos();
    integrate_ray(
        |t: f64| {
            let ta = t.powf(alpha);
            Ok(t.powf(alpha - 1.0) / (mu * mu - 2.0 * mu * ta * c + ta * ta))
        },
        &RayProfile::new(alpha - 1.0, alpha),
        cfg,
    )
}

/// `B_alpha = T^alpha` with the post-checks it passed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KatoPower {
    pub matrix: QMatrix,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub omega: f64,
    pub checks: Vec<PostCheck>,
}

/// `B_alpha = mu0 Id - F_alpha(mu0, T)^{-1}`, checked against `F_alpha` at
/// [`CHECK_POINTS`], against the sector of `T`, and against `T^{-alpha}`.
pub fn kato_power(t: &QMatrix, alpha: f64, mu0: f64, cfg: &QuadratureConfig) -> Result<KatoPower> {
    check_alpha(alpha)?;
    if !(mu0 < 0.0 && mu0.is_finite()) {
        return Err(Error::Domain(format!("mu0 must be negative, got {mu0}")));
    }
    let res = Resolvent::new(t)?;
    let est = sectorial(&res, 1)?;
    if !(alpha * est.omega < PI) {
        return Err(Error::Precondition(format!(
            "alpha omega = {} must be below pi",
            alpha * est.omega
        )));
    }
    let dim = t.n();
    let f0 = kato_f_with(&res, &est, Quaternion::real(mu0), alpha, cfg)?;
    let f0_inv = f0.value.inverse()?;
    let f0_inv_norm = f0_inv.opnorm();
    let b = (-&f0_inv).add_scalar(Quaternion::real(mu0));
    let e_b = f0_inv_norm * f0_inv_norm * f0.error_estimate;
    let mut evaluations = f0.evaluations;
    let mut converged = f0.converged;
    let mut checks = Vec::new();

    // (a) resolvent of B at sampled real points, and |mu| ||F(mu)|| <= M
    for &mu in &CHECK_POINTS {
        let fm = kato_f_with(&res, &est, Quaternion::real(mu), alpha, cfg)?;
        evaluations += fm.evaluations;
        converged &= fm.converged;
        let rb = (-&b).add_scalar(Quaternion::real(mu)).inverse()?;
        let rb_norm = rb.opnorm();
        let residual = (&rb - &fm.value).opnorm();
        let tolerance = 100.0 * (fm.error_estimate + rb_norm * rb_norm * e_b)
            + rounding_floor(rb_norm * rb_norm * b.opnorm());
        checks.push(PostCheck::new(
            format!("resolvent at mu = {mu}"),
            residual,
            tolerance,
        ));
        checks.push(PostCheck::new(
            format!("resolvent bound at mu = {mu}"),
            mu.abs() * fm.value.opnorm(),
            est.m * (1.0 + 1e-6) + 100.0 * mu.abs() * fm.error_estimate,
        ));
    }
    for check in &checks {
        check.require()?;
    }

    // (b) sector of B
    let b_res = Resolvent::new(&b)?;
    let b_est = sectorial(&b_res, 1).map_err(|e| Error::Inconsistency {
        check: format!("sector of B: {e}"),
        residual: f64::INFINITY,
        tolerance: 0.0,
    })?;
    let omega_check = PostCheck::new("sector angle", b_est.omega, alpha * est.omega + 1e-3);
    omega_check.require()?;
    checks.push(omega_check);

    // (c) inverse of B against T^{-alpha}
    let b_inv = b.inverse()?;
    let b_inv_norm = b_inv.opnorm();
    let neg = frac_power_neg_with(&res, &est, alpha, cfg)?;
    evaluations += neg.evaluations;
    converged &= neg.converged;
    let residual = (&b_inv - &neg.value).opnorm();
    let tolerance = 100.0 * (b_inv_norm * b_inv_norm * e_b + neg.error_estimate)
        + rounding_floor(b_inv_norm * b_inv_norm * b.opnorm());
    let inverse_check = PostCheck::new("inverse against negative power", residual, tolerance);
    inverse_check.require()?;
    checks.push(inverse_check);

    debug_assert_eq!(b.n(), dim);
    Ok(KatoPower {
        matrix: b,
        error_estimate: e_b,
        evaluations,
        converged,
        omega: b_est.omega,
        checks,
    })
}

/// Residual of `F(mu) - F(lambda) = (lambda - mu) F(mu) F(lambda)` for real `lambda, mu < 0`.
pub fn kato_resolvent_identity(
    t: &QMatrix,
    alpha: f64,
    lambda: f64,
    mu: f64,
    cfg: &QuadratureConfig,
) -> Result<PostCheck> {
    check_alpha(alpha)?;
    let res = Resolvent::new(t)?;
    let est = sectorial(&res, 1)?;
    let fl = kato_f_with(&res, &est, Quaternion::real(lambda), alpha, cfg)?;
    let fm = kato_f_with(&res, &est, Quaternion::real(mu), alpha, cfg)?;
    let (nl, nm) = (fl.value.opnorm(), fm.value.opnorm());
    let lhs = &fm.value - &fl.value;
    let rhs = fm.value.matmul(&fl.value).scale(lambda - mu);
    let residual = (&lhs - &rhs).opnorm();
    let d = (lambda - mu).abs();
    let budget = (1.0 + d * nl) * fm.error_estimate + (1.0 + d * nm) * fl.error_estimate;
    Ok(PostCheck::new(
        format!("Kato resolvent identity at ({lambda}, {mu})"),
        residual,
        100.0 * budget + rounding_floor(nl + nm + d * nl * nm),
    ))
}
