//! Adaptive Gauss-Kronrod quadrature for scalar, quaternion and matrix integrands.
//!
//! All integrals are reduced to finite parameter intervals (segments). Panels
//! of every segment share one global error budget; the panel with the largest
//! embedded 7/15-point error estimate is bisected until the summed estimate
//! meets `max(abs_tol, rel_tol * |value|)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::QMatrix;
use crate::quaternion::{ImaginaryUnit, Quaternion};

/// Values that can be integrated: a real vector space with a norm.
pub trait QuadValue: Clone {
    fn zero_like(&self) -> Self;
    /// `self += a x`.
    fn axpy(&mut self, a: f64, x: &Self);
    /// Entrywise max absolute difference.
    fn max_abs_diff(&self, other: &Self) -> f64;
    /// Norm used for the relative tolerance.
    fn magnitude(&self) -> f64;
    fn is_finite_value(&self) -> bool;
}

impl QuadValue for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Quaternion {
    fn zero_like(&self) -> Self {
        Quaternion::ZERO
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += *x * a;
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        Quaternion::max_abs_diff(self, other)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for QMatrix {
    fn zero_like(&self) -> Self {
        QMatrix::zeros(self.n())
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self = QMatrix::lincomb(1.0, self, a, x);
    }
    fn max_abs_diff(&self, other: &Self) -> f64 {
        QMatrix::max_abs_diff(self, other)
    }
    fn magnitude(&self) -> f64 {
        self.opnorm()
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdiv: usize,
    /// Fixed cut-off for infinite ranges; derived from the tail bound when absent.
    pub truncation_radius: Option<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_subdiv: 10_000,
            truncation_radius: None,
        }
    }
}

impl QuadratureConfig {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.max_subdiv > 0
            && self.truncation_radius.is_none_or(|r| r > 1.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "invalid quadrature configuration {self:?}"
            )))
        }
    }

    fn tolerance(&self, magnitude: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * magnitude)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuadratureReport<V> {
    pub value: V,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl<V> QuadratureReport<V> {
    pub fn map<W>(self, f: impl FnOnce(V) -> W) -> QuadratureReport<W> {
        QuadratureReport {
            value: f(self.value),
            error_estimate: self.error_estimate,
            evaluations: self.evaluations,
            converged: self.converged,
        }
    }

    /// Fails with [`Error::Convergence`] when the budget was exhausted.
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::Convergence {
                error_estimate: self.error_estimate,
                evaluations: self.evaluations,
            })
        }
    }
}

// Kronrod abscissae on [0, 1); odd indices are the Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// 15-point Kronrod value and `|K15 - G7|` on `[a, b]` (`b < a` integrates backwards).
fn gauss_kronrod<V: QuadValue>(f: &dyn Fn(f64) -> Result<V>, a: f64, b: f64) -> Result<(V, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = fc.zero_like();
    let mut gauss = fc.zero_like();
    kronrod.axpy(WGK[7], &fc);
    gauss.axpy(WG[3], &fc);
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        kronrod.axpy(WGK[j], &f1);
        kronrod.axpy(WGK[j], &f2);
        if j % 2 == 1 {
            gauss.axpy(WG[j / 2], &f1);
            gauss.axpy(WG[j / 2], &f2);
        }
    }
    let mut k = kronrod.zero_like();
    k.axpy(half, &kronrod);
    let mut g = gauss.zero_like();
    g.axpy(half, &gauss);
    let err = k.max_abs_diff(&g);
    if !k.is_finite_value() || !err.is_finite() {
        return Err(Error::InvalidPath(format!(
            "integrand is not finite on [{a}, {b}]"
        )));
    }
    Ok((k, err))
}

/// Parameter interval with its integrand.
pub(crate) struct Segment<'a, V> {
    pub lo: f64,
    pub hi: f64,
    pub f: Box<dyn Fn(f64) -> Result<V> + 'a>,
}

struct Panel<V> {
    segment: usize,
    a: f64,
    b: f64,
    value: V,
    err: f64,
}

#[derive(PartialEq)]
struct HeapKey {
    err: f64,
    id: usize,
}

impl Eq for HeapKey {}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapKey {
    // Largest error first, earliest panel breaks ties.
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Deterministic pairwise sum.
fn pairwise_sum<V: QuadValue>(items: &[&V]) -> V {
    match items.len() {
        0 => unreachable!("pairwise sum over no panels"),
        1 => items[0].clone(),
        n => {
            let mut left = pairwise_sum(&items[..n / 2]);
            let right = pairwise_sum(&items[n / 2..]);
            left.axpy(1.0, &right);
            left
        }
    }
}

/// Globally adaptive integration over a list of segments.
///
/// `extra` is added to the value (closed-form pieces) and `extra_err` to the
/// error estimate (certified tail bounds).
pub(crate) fn integrate_segments<V: QuadValue>(
    segments: &[Segment<'_, V>],
    extra: Option<&V>,
    extra_err: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureReport<V>> {
    cfg.validate()?;
    let mut panels: Vec<Panel<V>> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for (i, seg) in segments.iter().enumerate() {
        let (value, err) = gauss_kronrod(seg.f.as_ref(), seg.lo, seg.hi)?;
        evaluations += 15;
        heap.push(HeapKey {
            err,
            id: panels.len(),
        });
        panels.push(Panel {
            segment: i,
            a: seg.lo,
            b: seg.hi,
            value,
            err,
        });
    }
    let mut total = panels[0].value.zero_like();
    for p in &panels {
        total.axpy(1.0, &p.value);
    }
    if let Some(e) = extra {
        total.axpy(1.0, e);
    }
    let mut total_err: f64 = panels.iter().map(|p| p.err).sum::<f64>() + extra_err;
    let mut active = panels.len();
    let mut converged = total_err <= cfg.tolerance(total.magnitude());

    while !converged && active < cfg.max_subdiv {
        let Some(key) = heap.pop() else { break };
        let (segment, a, b) = {
            let p = &panels[key.id];
            (p.segment, p.a, p.b)
        };
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= 1e-13 * (a.abs() + b.abs()) || mid == a || mid == b {
            // Unsplittable panel keeps its estimate.
            continue;
        }
        let f = segments[segment].f.as_ref();
        let (v1, e1) = gauss_kronrod(f, a, mid)?;
        let (v2, e2) = gauss_kronrod(f, mid, b)?;
        evaluations += 30;
        let old_err = panels[key.id].err;
        total.axpy(-1.0, &panels[key.id].value);
        total.axpy(1.0, &v1);
        total.axpy(1.0, &v2);
        total_err += e1 + e2 - old_err;
        panels[key.id] = Panel {
            segment,
            a,
            b: mid,
            value: v1,
            err: e1,
        };
        heap.push(HeapKey {
            err: e1,
            id: key.id,
        });
        heap.push(HeapKey {
            err: e2,
            id: panels.len(),
        });
        panels.push(Panel {
            segment,
            a: mid,
            b,
            value: v2,
            err: e2,
        });
        active += 1;
        converged = total_err <= cfg.tolerance(total.magnitude());
    }

    // Exact recomputation in a fixed order: by segment, then position.
    panels.sort_by(|p, q| {
        p.segment
            .cmp(&q.segment)
            .then(p.a.min(p.b).total_cmp(&q.a.min(q.b)))
    });
    let refs: Vec<&V> = panels.iter().map(|p| &p.value).collect();
    let mut value = pairwise_sum(&refs);
    if let Some(e) = extra {
        value.axpy(1.0, e);
    }
    let mut errs: Vec<f64> = panels.iter().map(|p| p.err).collect();
    errs.sort_by(f64::total_cmp);
    let error_estimate = errs.iter().sum::<f64>() + extra_err;
    let converged = error_estimate <= cfg.tolerance(value.magnitude());
    Ok(QuadratureReport {
        value,
        error_estimate,
        evaluations,
        converged,
    })
}

/// Integral over a finite interval `[a, b]`.
pub fn integrate_interval<V: QuadValue>(
    f: impl Fn(f64) -> Result<V>,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureReport<V>> {
    let seg = Segment {
        lo: a,
        hi: b,
        f: Box::new(f),
    };
    integrate_segments(&[seg], None, 0.0, cfg)
}

/// Declared behaviour of a ray integrand `f` on `(0, inf)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayProfile {
    /// `f(t) ~ t^e` as `t -> 0`, with `e > -1`.
    pub endpoint_exponent: f64,
    /// `|f(t)| <= C t^{-1-delta}` as `t -> inf`, with `delta > 0`.
    pub decay_exponent: f64,
    /// The constant `C`; sampled from the integrand when absent.
    pub decay_constant: Option<f64>,
}

impl RayProfile {
    pub fn new(endpoint_exponent: f64, decay_exponent: f64) -> Self {
        RayProfile {
            endpoint_exponent,
            decay_exponent,
            decay_constant: None,
        }
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.decay_constant = Some(c);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.endpoint_exponent > -1.0 && self.decay_exponent > 0.0 {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "ray integrand needs endpoint exponent > -1 and decay exponent > 0, got {self:?}"
            )))
        }
    }
}

/// Closed-form integral of the integrand over `[radius, inf)`.
#[derive(Clone, Debug)]
pub struct AnalyticTail<V> {
    pub radius: f64,
    pub value: V,
    /// Bound on the neglected part of the tail.
    pub remainder: f64,
}

/// Largest radius used for a cut; keeps `|s|^2` representable.
pub const MAX_RADIUS: f64 = 1e150;

/// Estimates `C` in `|f(t)| <= C t^{-1-delta}` from samples at `t = 10^k * scale`.
fn sample_decay_constant<V: QuadValue>(
    f: &dyn Fn(f64) -> Result<V>,
    delta: f64,
    scale: f64,
) -> Result<f64> {
    let mut c: f64 = 0.0;
    for k in 0..8 {
        let t = scale * 10f64.powi(k);
        c = c.max(f(t)?.magnitude() * t.powf(1.0 + delta));
    }
    Ok(2.0 * c)
}

/// Cut radius `R` with `C R^{-delta} / delta <= abs_tol`, capped at [`MAX_RADIUS`].
fn cut_radius(c: f64, delta: f64, cfg: &QuadratureConfig) -> (f64, f64) {
    if let Some(r) = cfg.truncation_radius {
        return (r, c * r.powf(-delta) / delta);
    }
    if c == 0.0 {
        return (10.0, 0.0);
    }
    let r = (c / (delta * cfg.abs_tol))
        .powf(1.0 / delta)
        .clamp(10.0, MAX_RADIUS);
    (r, c * r.powf(-delta) / delta)
}

/// Smallest `t` at which the `(0, 1]` integrand is evaluated.
const SUBSTITUTION_FLOOR: f64 = 1e-280;

/// `(0, 1]` under `t = u^{1/(1+e)}`, which removes a `t^e` endpoint behaviour.
fn unit_segment<'a, V: QuadValue + 'a>(
    f: &'a dyn Fn(f64) -> Result<V>,
    endpoint_exponent: f64,
) -> Segment<'a, V> {
    let p = 1.0 / (1.0 + endpoint_exponent);
    Segment {
        lo: 0.0,
        hi: 1.0,
        f: Box::new(move |u: f64| {
            // jac * t^e == p exactly; below the floor f(t) / t^e is taken as its value at the floor.
            let t = u.powf(p);
            let (t, jac) = if t >= SUBSTITUTION_FLOOR {
                (t, p * u.powf(p - 1.0))
            } else {
                (
                    SUBSTITUTION_FLOOR,
                    p * SUBSTITUTION_FLOOR.powf(-endpoint_exponent),
                )
            };
            let mut v = f(t)?;
            v = {
                let mut out = v.zero_like();
                out.axpy(jac, &v);
                out
            };
            Ok(v)
        }),
    }
}

/// `[from, to]` under `t = e^u`.
fn log_segment<'a, V: QuadValue + 'a>(
    f: &'a dyn Fn(f64) -> Result<V>,
    from: f64,
    to: f64,
) -> Segment<'a, V> {
    Segment {
        lo: from.ln(),
        hi: to.ln(),
        f: Box::new(move |u: f64| {
            let t = u.exp();
            let v = f(t)?;
            let mut out = v.zero_like();
            out.axpy(t, &v);
            Ok(out)
        }),
    }
}

/// `int_0^inf f(t) dt` on `(0, 1]` and `[1, R)`, with the tail beyond `R` cut.
pub fn integrate_ray<V: QuadValue>(
    f: impl Fn(f64) -> Result<V>,
    profile: &RayProfile,
    cfg: &QuadratureConfig,
) -> Result<QuadratureReport<V>> {
    profile.validate()?;
    let f: &dyn Fn(f64) -> Result<V> = &f;
    let c = match profile.decay_constant {
        Some(c) => c,
        None => sample_decay_constant(f, profile.decay_exponent, 1.0)?,
    };
    let (radius, tail) = cut_radius(c, profile.decay_exponent, cfg);
    let segments = [
        unit_segment(f, profile.endpoint_exponent),
        log_segment(f, 1.0, radius),
    ];
    let mut report = integrate_segments(&segments, None, tail, cfg)?;
    report.evaluations += if profile.decay_constant.is_none() {
        8
    } else {
        0
    };
    Ok(report)
}

/// `int_0^inf f(t) dt` where the part beyond `tail.radius` is supplied in closed form.
pub fn integrate_ray_with_tail<V: QuadValue>(
    f: impl Fn(f64) -> Result<V>,
    endpoint_exponent: f64,
    tail: &AnalyticTail<V>,
    cfg: &QuadratureConfig,
) -> Result<QuadratureReport<V>> {
    if !(endpoint_exponent > -1.0 && tail.radius > 1.0) {
        return Err(Error::Precondition(format!(
            "ray integrand needs endpoint exponent > -1 and tail radius > 1, got {endpoint_exponent}, {}",
            tail.radius
        )));
    }
    let f: &dyn Fn(f64) -> Result<V> = &f;
    let segments = [
        unit_segment(f, endpoint_exponent),
        log_segment(f, 1.0, tail.radius),
    ];
    integrate_segments(&segments, Some(&tail.value), tail.remainder, cfg)
}

/// One piece of a contour in the plane `C_I`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum PathPiece {
    /// `r e^{I angle}` for `r` in `[inner, outer]`, `outer = None` meaning infinity;
    /// `outward` is the direction of travel. `decay` is the exponent `delta` of the
    /// integrand bound `C r^{-1-delta}` used for the cut.
    Ray {
        angle: f64,
        inner: f64,
        outer: Option<f64>,
        outward: bool,
        decay: f64,
    },
    /// `center + radius e^{I phi}` for `phi` from `from` to `to`.
    Arc {
        center: f64,
        radius: f64,
        from: f64,
        to: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourPath {
    pub plane: ImaginaryUnit,
    pub pieces: Vec<PathPiece>,
}

impl ContourPath {
    /// Positively oriented circle around a real center.
    pub fn circle(plane: ImaginaryUnit, center: f64, radius: f64) -> Self {
        ContourPath {
            plane,
            pieces: vec![PathPiece::Arc {
                center,
                radius,
                from: 0.0,
                to: 2.0 * PI,
            }],
        }
    }

    /// From `inf e^{I theta}` to `inf e^{-I theta}` around the origin at radius `a`,
    /// crossing the positive real axis; integrand bounds decay like `|s|^{-1-decay}`.
    pub fn keyhole(plane: ImaginaryUnit, theta: f64, a: f64, decay: f64) -> Self {
        ContourPath {
            plane,
            pieces: vec![
                PathPiece::Ray {
                    angle: theta,
                    inner: a,
                    outer: None,
                    outward: false,
                    decay,
                },
                PathPiece::Arc {
                    center: 0.0,
                    radius: a,
                    from: theta,
                    to: -theta,
                },
                PathPiece::Ray {
                    angle: -theta,
                    inner: a,
                    outer: None,
                    outward: true,
                    decay,
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for piece in &self.pieces {
            let ok = match *piece {
                PathPiece::Ray {
                    inner,
                    outer,
                    decay,
                    angle,
                    ..
                } => inner > 0.0 && angle.is_finite() && outer.map_or(decay > 0.0, |o| o > inner),
                PathPiece::Arc {
                    radius,
                    from,
                    to,
                    center,
                } => radius > 0.0 && from.is_finite() && to.is_finite() && center.is_finite(),
            };
            if !ok {
                return Err(Error::InvalidPath(format!("malformed piece {piece:?}")));
            }
        }
        if self.pieces.is_empty() {
            return Err(Error::InvalidPath("empty contour".into()));
        }
        Ok(())
    }

    /// Sample points along the trace, used for admissibility checks.
    pub fn sample_points(&self, per_piece: usize) -> Vec<Quaternion> {
        let mut pts = Vec::new();
        let i = self.plane;
        for piece in &self.pieces {
            for k in 0..=per_piece {
                let u = k as f64 / per_piece as f64;
                let z = match *piece {
                    PathPiece::Ray {
                        angle,
                        inner,
                        outer,
                        ..
                    } => {
                        let hi = outer.unwrap_or(inner * 1e6);
                        let r = inner * (hi / inner).powf(u);
                        num_complex::Complex64::from_polar(r, angle)
                    }
                    PathPiece::Arc {
                        center,
                        radius,
                        from,
                        to,
                    } => {
                        num_complex::Complex64::new(center, 0.0)
                            + num_complex::Complex64::from_polar(radius, from + (to - from) * u)
                    }
                };
                pts.push(i.lift(z));
            }
        }
        pts
    }
}

/// Which side of the matrix the scalar measure factor multiplies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelSide {
    /// `S_L^{-1}(s,T) ds_I f(s)`: measure on the right of the matrix.
    Left,
    /// `f(s) ds_I S_R^{-1}(s,T)`: measure on the left of the matrix.
    Right,
}

/// `(1/2 pi) int_Gamma F(s, ds_I)` with `ds_I = -I ds`.
///
/// `f` receives the point `s` and the scalar measure factor `-I gamma'(u) du`
/// (including all substitution Jacobians) and combines them itself.
pub fn integrate_contour<V: QuadValue>(
    f: impl Fn(Quaternion, Quaternion) -> Result<V>,
    path: &ContourPath,
    cfg: &QuadratureConfig,
) -> Result<QuadratureReport<V>> {
    path.validate()?;
    let unit = path.plane;
    let minus_i = -unit.as_quaternion();
    let f: &dyn Fn(Quaternion, Quaternion) -> Result<V> = &f;
    let mut segments: Vec<Segment<'_, V>> = Vec::new();
    let mut tail_err = 0.0;
    let mut evaluations = 0;
    for piece in &path.pieces {
        match *piece {
            PathPiece::Ray {
                angle,
                inner,
                outer,
                outward,
                decay,
            } => {
                let dir = unit.lift(num_complex::Complex64::from_polar(1.0, angle));
                let sign = if outward { 1.0 } else { -1.0 };
                let measure = minus_i * dir * sign;
                let on_ray = move |r: f64| -> Result<V> { f(dir * r, measure) };
                let outer = match outer {
                    Some(o) => o,
                    None => {
                        let c = sample_decay_constant(&on_ray, decay, inner.max(1e-3))?;
                        evaluations += 8;
                        let (radius, tail) = cut_radius(c, decay, cfg);
                        tail_err += tail;
                        radius.max(10.0 * inner)
                    }
                };
                let lo = inner.ln();
                let hi = outer.ln();
                segments.push(Segment {
                    lo,
                    hi,
                    f: Box::new(move |u: f64| {
                        let r = u.exp();
                        f(dir * r, measure * r)
                    }),
                });
            }
            PathPiece::Arc {
                center,
                radius,
                from,
                to,
            } => {
                segments.push(Segment {
                    lo: from,
                    hi: to,
                    f: Box::new(move |phi: f64| {
                        let e = unit.lift(num_complex::Complex64::from_polar(1.0, phi));
                        let s = Quaternion::real(center) + e * radius;
                        // -I * (I radius e^{I phi}) = radius e^{I phi}
                        f(s, e * radius)
                    }),
                });
            }
        }
    }
    let scaled_cfg = QuadratureConfig {
        abs_tol: cfg.abs_tol * 2.0 * PI,
        ..*cfg
    };
    let mut report = integrate_segments(&segments, None, tail_err, &scaled_cfg)?;
    let mut value = report.value.zero_like();
    value.axpy(1.0 / (2.0 * PI), &report.value);
    report.value = value;
    report.error_estimate /= 2.0 * PI;
    report.evaluations += evaluations;
    Ok(report)
}

/// Contour integral of a kernel-valued matrix function with the measure on `side`.
pub fn integrate_contour_kernel(
    f: impl Fn(Quaternion) -> Result<QMatrix>,
    side: KernelSide,
    path: &ContourPath,
    cfg: &QuadratureConfig,
) -> Result<QuadratureReport<QMatrix>> {
    integrate_contour(
        |s, ds| {
            let m = f(s)?;
            Ok(match side {
                KernelSide::Left => m.right_scale(ds),
                KernelSide::Right => m.left_scale(ds),
            })
        },
        path,
        cfg,
    )
}
