//! Residual checks of the resolvent identities, derivative formulas and
//! norm bounds, plus the seeded suites that run them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fracpow::verify_semigroup;
use crate::kato::{kato_power, kato_resolvent_identity};
use crate::matrix::{vector_norm, QMatrix};
use crate::quadrature::QuadratureConfig;
use crate::quaternion::{ImaginaryUnit, Quaternion};
use crate::random::{self, TestRng};
use crate::spectral::{fibonacci_units, neumann_pseudo_resolvent, sphere_sup_norm, Resolvent};

/// One named residual with its threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PostCheck {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl PostCheck {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        PostCheck {
            name: name.into(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }

    /// Turns a failed check into [`Error::Inconsistency`].
    pub fn require(&self) -> Result<()> {
        if self.pass {
            Ok(())
        } else {
            Err(Error::Inconsistency {
                check: self.name.clone(),
                residual: self.residual,
                tolerance: self.tolerance,
            })
        }
    }
}

/// `S_R^{-1}(s,T) S_L^{-1}(p,T) = {[S_R - S_L] p - conj(s) [S_R - S_L]} (p^2 - 2 s0 p + |s|^2)^{-1}`
/// for `s` not in `[p]`; threshold `1e-9` times the size of the terms.
pub fn resolvent_equation(res: &Resolvent, s: Quaternion, p: Quaternion) -> Result<PostCheck> {
    let sr = res.right(s)?;
    let sl = res.left(p)?;
    let w = (p * p - p * (2.0 * s.w) + Quaternion::real(s.norm_sqr())).inv();
    let d = &sr - &sl;
    let rhs = (&d.right_scale(p) - &d.left_scale(s.conj())).right_scale(w);
    let residual = (&sr.matmul(&sl) - &rhs).opnorm();
    let scale = sr.opnorm() * sl.opnorm() + d.opnorm() * (p.norm() + s.norm()) * w.norm();
    Ok(PostCheck::new(
        "S-resolvent equation",
        residual,
        1e-9 * scale.max(1.0),
    ))
}

/// `T S_L^{-1}(p,T) v = S_L^{-1}(p,T)(p v) - v`.
pub fn left_relation(res: &Resolvent, p: Quaternion, v: &[Quaternion]) -> Result<PostCheck> {
    let sl = res.left(p)?;
    let lhs = res.operator().apply(&sl.apply(v));
    let pv: Vec<Quaternion> = v.iter().map(|&x| p * x).collect();
    let rhs: Vec<Quaternion> = sl.apply(&pv).iter().zip(v).map(|(&a, &b)| a - b).collect();
    let diff: Vec<Quaternion> = lhs.iter().zip(&rhs).map(|(&a, &b)| a - b).collect();
    let scale = (1.0 + res.operator().opnorm()) * sl.opnorm() * (1.0 + p.norm()) * vector_norm(v);
    Ok(PostCheck::new(
        "left resolvent relation",
        vector_norm(&diff),
        1e-10 * scale.max(1.0),
    ))
}

/// `S_R^{-1}(s,T) T v = s S_R^{-1}(s,T) v - v`.
pub fn right_relation(res: &Resolvent, s: Quaternion, v: &[Quaternion]) -> Result<PostCheck> {
    let sr = res.right(s)?;
    let lhs = sr.apply(&res.operator().apply(v));
    let rhs: Vec<Quaternion> = sr
        .apply(v)
        .iter()
        .zip(v)
        .map(|(&a, &b)| s * a - b)
        .collect();
    let diff: Vec<Quaternion> = lhs.iter().zip(&rhs).map(|(&a, &b)| a - b).collect();
    let scale = (1.0 + res.operator().opnorm()) * sr.opnorm() * (1.0 + s.norm()) * vector_norm(v);
    Ok(PostCheck::new(
        "right resolvent relation",
        vector_norm(&diff),
        1e-10 * scale.max(1.0),
    ))
}

/// Relative difference `||fd - exact|| / ||exact||` against `1e-4`.
fn relative(name: String, fd: &QMatrix, exact: &QMatrix) -> PostCheck {
    let denom = exact.opnorm().max(f64::MIN_POSITIVE);
    PostCheck::new(name, (fd - exact).opnorm() / denom, 1e-4)
}

fn central(plus: &QMatrix, minus: &QMatrix, h: f64) -> QMatrix {
    (plus - minus).scale(0.5 / h)
}

/// Central differences of `Q_s^{-1}` and `T Q_s^{-1}` in `s0` and `s1` against the closed forms.
pub fn pseudo_derivatives(res: &Resolvent, s: Quaternion, h: f64) -> Result<Vec<PostCheck>> {
    res.check(s)?;
    let (s0, s1, unit) = s.slice();
    let t = res.operator();
    let q = res.pseudo(s)?;
    let q2 = q.matmul(&q);
    let at = |a: f64, b: f64| res.pseudo(unit.point(a, b));
    let d0 = central(&at(s0 + h, s1)?, &at(s0 - h, s1)?, h);
    let d1 = central(&at(s0, s1 + h)?, &at(s0, s1 - h)?, h);
    let exact0 = t
        .scale(2.0)
        .add_scalar(Quaternion::real(-2.0 * s0))
        .matmul(&q2);
    let exact1 = q2.scale(-2.0 * s1);
    let t2 = t.matmul(t);
    let texact0 = QMatrix::lincomb(2.0, &t2, -2.0 * s0, t).matmul(&q2);
    let texact1 = t.matmul(&q2).scale(-2.0 * s1);
    let mut out = vec![
        relative(format!("d/ds0 Q at {s}"), &d0, &exact0),
        relative(format!("d/ds1 Q at {s}"), &d1, &exact1),
        relative(format!("d/ds0 TQ at {s}"), &t.matmul(&d0), &texact0),
        relative(format!("d/ds1 TQ at {s}"), &t.matmul(&d1), &texact1),
    ];
    if s1 == 0.0 {
        // The s1 derivatives vanish at real points.
        out.retain(|c| !c.name.starts_with("d/ds1"));
    }
    Ok(out)
}

/// `d^n/ds0^n S^{-1}(s,T) = (-1)^n n! S^{-(n+1)}(s,T)` for `n = 1, 2`, both sides.
/// The second derivative is the central difference of `-S^{-2}`: a plain
/// second difference at `h = 1e-5` loses about `eps/h^2` to rounding.
pub fn resolvent_power_derivatives(
    res: &Resolvent,
    s: Quaternion,
    h: f64,
) -> Result<Vec<PostCheck>> {
    res.check(s)?;
    let hq = Quaternion::real(h);
    let mut out = Vec::new();
    type Op = fn(&Resolvent, Quaternion) -> Result<QMatrix>;
    type PowOp = fn(&Resolvent, u32, Quaternion) -> Result<QMatrix>;
    let sides: [(&str, Op, PowOp); 2] = [
        ("left", Resolvent::left, Resolvent::left_pow),
        ("right", Resolvent::right, Resolvent::right_pow),
    ];
    for (side, op, pow) in sides {
        let first = central(&op(res, s + hq)?, &op(res, s - hq)?, h);
        let second = central(&pow(res, 2, s - hq)?, &pow(res, 2, s + hq)?, h);
        out.push(relative(
            format!("{side} first slice derivative at {s}"),
            &first,
            &pow(res, 2, s)?.scale(-1.0),
        ));
        out.push(relative(
            format!("{side} second slice derivative at {s}"),
            &second,
            &pow(res, 3, s)?.scale(2.0),
        ));
    }
    Ok(out)
}

/// `||Q_s^{-1}|| + ||T Q_s^{-1}|| >= 1/d_S(s, spectrum)`.
pub fn pseudo_lower_bound(res: &Resolvent, s: Quaternion) -> Result<PostCheck> {
    let q = res.pseudo(s)?;
    let c = q.opnorm() + res.operator().matmul(&q).opnorm();
    let d = res.spectrum().distance(s);
    Ok(PostCheck::new(
        format!("pseudo-resolvent lower bound at {s}"),
        1.0 / d,
        c * (1.0 + 1e-9),
    ))
}

/// `sqrt(2 ||Q_s^{-1}||) <= ||S_L^{-1}(s,T)|| + ||S_L^{-1}(conj s,T)||`.
pub fn sphere_bound(res: &Resolvent, s: Quaternion) -> Result<PostCheck> {
    let q = res.pseudo(s)?;
    let lhs = (2.0 * q.opnorm()).sqrt();
    let rhs = res.left(s)?.opnorm() + res.left(s.conj())?.opnorm();
    Ok(PostCheck::new(
        format!("sphere bound at {s}"),
        lhs,
        rhs * (1.0 + 1e-9),
    ))
}

/// Neumann partial sums around `p` at `s`: agreement with `Q_s^{-1}` to `1e-9`
/// and term ratios at most `q (1 + 1e-2)`. Requires `s` inside the convergence radius.
pub fn neumann_check(res: &Resolvent, s: Quaternion, p: Quaternion) -> Result<Vec<PostCheck>> {
    let report = neumann_pseudo_resolvent(s, p, res.operator(), 2000)?;
    if !(report.ratio_bound < 1.0) {
        return Err(Error::Precondition(format!(
            "s lies outside the Neumann radius (q = {})",
            report.ratio_bound
        )));
    }
    let exact = res.pseudo(s)?;
    let agreement = report.value.max_abs_diff(&exact) / exact.max_abs().max(1.0);
    let worst_ratio = report.term_ratios.iter().copied().fold(0.0, f64::max);
    Ok(vec![
        PostCheck::new(format!("Neumann sum at {s}"), agreement, 1e-9),
        PostCheck::new(
            format!("Neumann term ratio at {s}"),
            worst_ratio,
            report.ratio_bound * (1.0 + 1e-2),
        ),
    ])
}

/// Point near `p` with `d_S(s, p) = fraction / (||T Q_p^{-1}|| + ||Q_p^{-1}||)`.
pub fn neumann_point(res: &Resolvent, p: Quaternion, fraction: f64) -> Result<Quaternion> {
    let q = res.pseudo(p)?;
    let c = res.operator().matmul(&q).opnorm() + q.opnorm();
    let d = fraction / c;
    // Shifting the real part by d/2 gives d_S = d when |s|^2 changes by at most d.
    let (p0, p1, unit) = p.slice();
    let mut shift = 0.5 * d;
    loop {
        let s = unit.point(p0 + shift, p1);
        if crate::quaternion::ds_metric(s, p) <= d {
            return Ok(s);
        }
        shift *= 0.5;
    }
}

/// Sampled `sup_I ||S_L^{-1}(1/k + I, e1 Id)||` over 32 units for `k = 1..=kmax`.
pub fn norm_explode_sequence(n: usize, kmax: usize) -> Result<Vec<f64>> {
    let res = Resolvent::new(&QMatrix::scalar(n, Quaternion::E1))?;
    let units = fibonacci_units(32);
    (1..=kmax)
        .map(|k| sphere_sup_norm(&res, 1.0 / k as f64, 1.0, &units))
        .collect()
}

/// Whether `values[k-1]` increases strictly for `k > from`.
pub fn increasing_beyond(values: &[f64], from: usize) -> bool {
    values
        .windows(2)
        .skip(from.saturating_sub(1))
        .all(|w| w[1] > w[0])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Resolvent,
    Semigroup,
    Kato,
    Derivatives,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Resolvent,
        Suite::Semigroup,
        Suite::Kato,
        Suite::Derivatives,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Resolvent => "resolvent",
            Suite::Semigroup => "semigroup",
            Suite::Kato => "kato",
            Suite::Derivatives => "derivatives",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SuiteReport {
    pub suite: Suite,
    pub pass: bool,
    pub checks: Vec<PostCheck>,
}

/// Runs one suite on `t` with sample points drawn from `rng`.
pub fn run_suite(
    suite: Suite,
    t: &QMatrix,
    rng: &mut TestRng,
    cfg: &QuadratureConfig,
) -> Result<SuiteReport> {
    let res = Resolvent::new(t)?;
    let scale = 1.0 + res.spectrum().max_modulus;
    let mut checks = Vec::new();
    match suite {
        Suite::Resolvent => {
            let p_margin = 0.1 * scale;
            for _ in 0..8 {
                let s = random::resolvent_point(rng, &res, 2.0 * scale, p_margin);
                let p = random::resolvent_point(rng, &res, 2.0 * scale, p_margin);
                if crate::quaternion::ds_metric(s, p) > 1e-3 * scale {
                    checks.push(resolvent_equation(&res, s, p)?);
                }
                let v = random::vector(rng, t.n());
                checks.push(left_relation(&res, p, &v)?);
                checks.push(right_relation(&res, s, &v)?);
                checks.push(pseudo_lower_bound(&res, s)?);
                checks.push(sphere_bound(&res, s)?);
            }
            for _ in 0..2 {
                let p = random::resolvent_point(rng, &res, 2.0 * scale, p_margin);
                let s = neumann_point(&res, p, 0.5)?;
                checks.extend(neumann_check(&res, s, p)?);
            }
        }
        Suite::Semigroup => {
            for (a, b) in [(0.3, 0.7), (0.25, 0.5)] {
                let r = verify_semigroup(t, a, b, cfg)?;
                checks.push(PostCheck::new(
                    format!("semigroup ({a}, {b})"),
                    r.residual,
                    r.tolerance,
                ));
            }
        }
        Suite::Kato => {
            let b = match kato_power(t, 0.5, -1.0, cfg) {
                Ok(b) => b.checks,
                Err(Error::Inconsistency {
                    check,
                    residual,
                    tolerance,
                }) => vec![PostCheck::new(check, residual, tolerance)],
                Err(e) => return Err(e),
            };
            checks.extend(b);
            for (l, m) in [(-0.5, -1.0), (-1.0, -3.0)] {
                checks.push(kato_resolvent_identity(t, 0.5, l, m, cfg)?);
            }
        }
        Suite::Derivatives => {
            for _ in 0..4 {
                let mut s = random::resolvent_point(rng, &res, 2.0 * scale, 0.2 * scale);
                if s.imag_norm() < 0.1 {
                    s += ImaginaryUnit::E2.as_quaternion() * 0.5;
                    res.check(s)?;
                }
                checks.extend(pseudo_derivatives(&res, s, 1e-5)?);
                checks.extend(resolvent_power_derivatives(&res, s, 1e-5)?);
            }
        }
    }
    Ok(SuiteReport {
        suite,
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}
