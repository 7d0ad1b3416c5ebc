//! S-spectrum, pseudo-resolvent, S-resolvent operators and sector data.
//!
//! For a matrix `T` and `s = s0 + I s1` the pseudo-resolvent is
//! `Q_s(T)^{-1} = (T^2 - 2 s0 T + |s|^2 Id)^{-1}`. The S-spectrum is the set
//! of spheres where `Q_s(T)` is singular; at matrix scale these are the
//! axially symmetric hulls of the eigenvalues of the complex embedding.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::QMatrix;
use crate::quaternion::{binomial, ds_metric, ImaginaryUnit, Quaternion};

/// One sphere `[s] = {s0 + I s1 : I unit}` of the S-spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSphere {
    pub s0: f64,
    pub s1: f64,
    pub multiplicity: usize,
}

impl SpectrumSphere {
    /// Representative `s0 + e1 s1`.
    pub fn point(&self) -> Quaternion {
        Quaternion::new(self.s0, self.s1, 0.0, 0.0)
    }

    pub fn modulus(&self) -> f64 {
        self.s0.hypot(self.s1)
    }

    pub fn arg(&self) -> f64 {
        self.s1.atan2(self.s0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpectralReport {
    pub spheres: Vec<SpectrumSphere>,
    pub max_arg: f64,
    pub max_modulus: f64,
}

impl SpectralReport {
    /// Sphere distance `min_p d_S(s, p)` over the spectrum.
    pub fn distance(&self, s: Quaternion) -> f64 {
        self.spheres
            .iter()
            .map(|p| ds_metric(s, p.point()))
            .fold(f64::INFINITY, f64::min)
    }

    /// Tolerance of the resolvent-set test, `1e-8(1+|s|^2)`.
    pub fn membership_tolerance(s: Quaternion) -> f64 {
        1e-8 * (1.0 + s.norm_sqr())
    }

    pub fn contains(&self, s: Quaternion) -> bool {
        !(self.distance(s) > Self::membership_tolerance(s))
    }

    /// Pairing tolerance `1e-8(1+maxModulus)`.
    pub fn pairing_tolerance(&self) -> f64 {
        1e-8 * (1.0 + self.max_modulus)
    }

    /// True when some sphere meets the closed negative real axis.
    pub fn touches_negative_axis(&self) -> bool {
        let tol = self.pairing_tolerance();
        self.spheres.iter().any(|p| p.s1 <= tol && p.s0 <= tol)
    }

    pub fn min_real_part(&self) -> f64 {
        self.spheres
            .iter()
            .map(|p| p.s0)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Eigenvalues of the complex embedding by a Schur decomposition.
fn embedding_eigenvalues(t: &QMatrix) -> Result<Vec<Complex64>> {
    let e = t.embed();
    let schur = e
        .try_schur(f64::EPSILON, 100_000)
        .ok_or_else(|| Error::EigenSolver("Schur iteration did not converge".into()))?;
    let (_, tri) = schur.unpack();
    let values: Vec<Complex64> = (0..tri.nrows()).map(|i| tri[(i, i)]).collect();
    if values
        .iter()
        .any(|z| !(z.re.is_finite() && z.im.is_finite()))
    {
        return Err(Error::EigenSolver("non-finite eigenvalue".into()));
    }
    Ok(values)
}

/// Groups embedding eigenvalues `z, conj(z)` into spheres `(Re z, |Im z|)`.
pub fn s_spectrum(t: &QMatrix) -> Result<SpectralReport> {
    let values = embedding_eigenvalues(t)?;
    let max_modulus_raw = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = 1e-8 * (1.0 + max_modulus_raw);
    let mut points: Vec<(f64, f64)> = values.iter().map(|z| (z.re, z.im.abs())).collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    // Single-linkage clustering in the (s0, s1) half plane.
    let mut cluster_of = vec![usize::MAX; points.len()];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..points.len() {
        if cluster_of[i] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        let mut members = vec![i];
        cluster_of[i] = id;
        let mut k = 0;
        while k < members.len() {
            let (a0, a1) = points[members[k]];
            for j in 0..points.len() {
                if cluster_of[j] == usize::MAX {
                    let (b0, b1) = points[j];
                    if (a0 - b0).hypot(a1 - b1) <= tol {
                        cluster_of[j] = id;
                        members.push(j);
                    }
                }
            }
            k += 1;
        }
        clusters.push(members);
    }

    let mut spheres = Vec::with_capacity(clusters.len());
    for members in &clusters {
        if members.len() % 2 != 0 {
            return Err(Error::EigenSolver(format!(
                "embedding eigenvalue cluster of odd size {} near ({}, {})",
                members.len(),
                points[members[0]].0,
                points[members[0]].1
            )));
        }
        let count = members.len() as f64;
        let s0 = members.iter().map(|&m| points[m].0).sum::<f64>() / count;
        let s1 = members.iter().map(|&m| points[m].1).sum::<f64>() / count;
        let s1 = if s1 <= tol { 0.0 } else { s1 };
        spheres.push(SpectrumSphere {
            s0,
            s1,
            multiplicity: members.len() / 2,
        });
    }
    spheres.sort_by(|a, b| a.s0.total_cmp(&b.s0).then(a.s1.total_cmp(&b.s1)));
    let max_modulus = spheres
        .iter()
        .map(SpectrumSphere::modulus)
        .fold(0.0, f64::max);
    let max_arg = spheres.iter().map(SpectrumSphere::arg).fold(0.0, f64::max);
    Ok(SpectralReport {
        spheres,
        max_arg,
        max_modulus,
    })
}

/// S-resolvent machinery for a fixed matrix with its spectrum cached.
#[derive(Clone, Debug)]
pub struct Resolvent {
    t: QMatrix,
    t2: QMatrix,
    spectrum: SpectralReport,
}

impl Resolvent {
    pub fn new(t: &QMatrix) -> Result<Self> {
        Ok(Resolvent {
            t: t.clone(),
            t2: t.matmul(t),
            spectrum: s_spectrum(t)?,
        })
    }

    pub fn operator(&self) -> &QMatrix {
        &self.t
    }

    pub fn spectrum(&self) -> &SpectralReport {
        &self.spectrum
    }

    pub fn n(&self) -> usize {
        self.t.n()
    }

    /// Rejects `s` within the membership tolerance of the spectrum.
    pub fn check(&self, s: Quaternion) -> Result<()> {
        let distance = self.spectrum.distance(s);
        let tolerance = SpectralReport::membership_tolerance(s);
        if distance > tolerance {
            Ok(())
        } else {
            Err(Error::SpectralSingularity {
                distance,
                tolerance,
            })
        }
    }

    /// `Q_s(T) = T^2 - 2 s0 T + |s|^2 Id`; depends on `s` only through `(s0, |s|^2)`.
    pub fn q_operator(&self, s: Quaternion) -> QMatrix {
        QMatrix::lincomb(1.0, &self.t2, -2.0 * s.w, &self.t)
            .add_scalar(Quaternion::real(s.norm_sqr()))
    }

    pub(crate) fn pseudo_unchecked(&self, s: Quaternion) -> Result<QMatrix> {
        self.q_operator(s).inverse()
    }

    /// `Q_s(T)^{-1}`.
    pub fn pseudo(&self, s: Quaternion) -> Result<QMatrix> {
        self.check(s)?;
        self.pseudo_unchecked(s)
    }

    /// Classical resolvent `(r Id - T)^{-1}` for real `r`.
    pub(crate) fn classical(&self, r: f64) -> Result<QMatrix> {
        (-&self.t).add_scalar(Quaternion::real(r)).inverse()
    }

    /// `S_L^{-1}(s,T) = Q_s^{-1} conj(s) - T Q_s^{-1}` evaluated through the pseudo-resolvent.
    pub(crate) fn left_by_pseudo(&self, s: Quaternion) -> Result<QMatrix> {
        let q = self.pseudo_unchecked(s)?;
        Ok(&q.right_scale(s.conj()) - &self.t.matmul(&q))
    }

    /// `S_R^{-1}(s,T) = -(T - Id conj(s)) Q_s^{-1}` evaluated through the pseudo-resolvent.
    pub(crate) fn right_by_pseudo(&self, s: Quaternion) -> Result<QMatrix> {
        let q = self.pseudo_unchecked(s)?;
        Ok(&q.left_scale(s.conj()) - &self.t.matmul(&q))
    }

    pub(crate) fn left_unchecked(&self, s: Quaternion) -> Result<QMatrix> {
        if s.imag_norm() == 0.0 {
            self.classical(s.w)
        } else {
            self.left_by_pseudo(s)
        }
    }

    pub(crate) fn right_unchecked(&self, s: Quaternion) -> Result<QMatrix> {
        if s.imag_norm() == 0.0 {
            self.classical(s.w)
        } else {
            self.right_by_pseudo(s)
        }
    }

    /// Left S-resolvent operator.
    pub fn left(&self, s: Quaternion) -> Result<QMatrix> {
        self.check(s)?;
        self.left_unchecked(s)
    }

    /// Right S-resolvent operator.
    pub fn right(&self, s: Quaternion) -> Result<QMatrix> {
        self.check(s)?;
        self.right_unchecked(s)
    }

    /// `sum_k C(n,k) (-T)^k Q_s^{-n} conj(s)^{n-k}`.
    pub(crate) fn left_pow_by_pseudo(&self, n: u32, s: Quaternion) -> Result<QMatrix> {
        let qn = self.pseudo_unchecked(s)?.powi(n);
        let sb = s.conj();
        let minus_t = -&self.t;
        let mut tk = QMatrix::identity(self.n());
        let mut acc = QMatrix::zeros(self.n());
        for k in 0..=n {
            let term = tk.matmul(&qn).right_scale(sb.powi(n - k) * binomial(n, k));
            acc = &acc + &term;
            tk = tk.matmul(&minus_t);
        }
        Ok(acc)
    }

    /// `sum_k C(n,k) conj(s)^{n-k} (-T)^k Q_s^{-n}`.
    pub(crate) fn right_pow_by_pseudo(&self, n: u32, s: Quaternion) -> Result<QMatrix> {
        let qn = self.pseudo_unchecked(s)?.powi(n);
        let sb = s.conj();
        let minus_t = -&self.t;
        let mut tk = QMatrix::identity(self.n());
        let mut acc = QMatrix::zeros(self.n());
        for k in 0..=n {
            let term = tk.matmul(&qn).left_scale(sb.powi(n - k) * binomial(n, k));
            acc = &acc + &term;
            tk = tk.matmul(&minus_t);
        }
        Ok(acc)
    }

    pub(crate) fn right_pow_unchecked(&self, n: u32, s: Quaternion) -> Result<QMatrix> {
        if s.imag_norm() == 0.0 {
            Ok(self.classical(s.w)?.powi(n))
        } else {
            self.right_pow_by_pseudo(n, s)
        }
    }

    pub(crate) fn left_pow_unchecked(&self, n: u32, s: Quaternion) -> Result<QMatrix> {
        if s.imag_norm() == 0.0 {
            Ok(self.classical(s.w)?.powi(n))
        } else {
            self.left_pow_by_pseudo(n, s)
        }
    }

    /// Left S-resolvent power `S_L^{-n}(s,T)`, `n >= 1`.
    pub fn left_pow(&self, n: u32, s: Quaternion) -> Result<QMatrix> {
        if n == 0 {
            return Err(Error::Domain("resolvent power requires n >= 1".into()));
        }
        self.check(s)?;
        self.left_pow_unchecked(n, s)
    }

    /// Right S-resolvent power `S_R^{-n}(s,T)`, `n >= 1`.
    pub fn right_pow(&self, n: u32, s: Quaternion) -> Result<QMatrix> {
        if n == 0 {
            return Err(Error::Domain("resolvent power requires n >= 1".into()));
        }
        self.check(s)?;
        self.right_pow_unchecked(n, s)
    }
}

pub fn pseudo_resolvent(s: Quaternion, t: &QMatrix) -> Result<QMatrix> {
    Resolvent::new(t)?.pseudo(s)
}

pub fn sresolvent_left(s: Quaternion, t: &QMatrix) -> Result<QMatrix> {
    Resolvent::new(t)?.left(s)
}

pub fn sresolvent_right(s: Quaternion, t: &QMatrix) -> Result<QMatrix> {
    Resolvent::new(t)?.right(s)
}

pub fn sresolvent_left_pow(n: u32, s: Quaternion, t: &QMatrix) -> Result<QMatrix> {
    Resolvent::new(t)?.left_pow(n, s)
}

pub fn sresolvent_right_pow(n: u32, s: Quaternion, t: &QMatrix) -> Result<QMatrix> {
    Resolvent::new(t)?.right_pow(n, s)
}

/// Outcome of the pseudo-resolvent expansion around `p`.
#[derive(Clone, Debug)]
pub struct NeumannReport {
    pub value: QMatrix,
    pub terms_used: usize,
    pub converged: bool,
    pub last_term_norm: f64,
    /// `d_S(s,p)(||T Q_p^{-1}|| + ||Q_p^{-1}||)`; below 1 guarantees convergence.
    pub ratio_bound: f64,
    /// `||term_{k+1}|| / ||term_k||` for consecutive nonzero terms.
    pub term_ratios: Vec<f64>,
}

/// `Q_s^{-1} = sum_n D^n Q_p^{-(n+1)}` with `D = Q_p - Q_s = 2(s0 - p0)T + (|p|^2 - |s|^2) Id`.
pub fn neumann_pseudo_resolvent(
    s: Quaternion,
    p: Quaternion,
    t: &QMatrix,
    nmax: usize,
) -> Result<NeumannReport> {
    let res = Resolvent::new(t)?;
    let qp = res.pseudo(p)?;
    let tq = t.matmul(&qp);
    let ratio_bound = ds_metric(s, p) * (tq.opnorm() + qp.opnorm());
    let d = t
        .scale(2.0 * (s.w - p.w))
        .add_scalar(Quaternion::real(p.norm_sqr() - s.norm_sqr()));
    let step = d.matmul(&qp);

    let mut term = qp.clone();
    let mut sum = qp;
    let mut term_norm = term.opnorm();
    let mut term_ratios = Vec::new();
    let mut terms_used = 1;
    let mut converged = false;
    while terms_used < nmax {
        let next = step.matmul(&term);
        let next_norm = next.opnorm();
        if term_norm > 0.0 && next_norm > 0.0 {
            term_ratios.push(next_norm / term_norm);
        }
        if next_norm <= 1e-17 * sum.opnorm() {
            converged = true;
            term_norm = next_norm;
            break;
        }
        if !next_norm.is_finite() || next_norm > 1e100 {
            term_norm = next_norm;
            break;
        }
        sum = &sum + &next;
        term = next;
        term_norm = next_norm;
        terms_used += 1;
    }
    Ok(NeumannReport {
        value: sum,
        terms_used,
        converged,
        last_term_norm: term_norm,
        ratio_bound,
        term_ratios,
    })
}

/// `count` points log-spaced over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1).max(1) as f64).exp())
        .collect()
}

/// Default sampling grid: 200 points over `[1e-6, 1e6]`.
pub fn default_grid() -> Vec<f64> {
    log_grid(1e-6, 1e6, 200)
}

/// Sector and bound constants of an operator with `(-inf, 0]` in its resolvent set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SectorEstimate {
    /// `max_t (1+t) ||S_R^{-1}(-t,T)||` over the grid.
    #[serde(rename = "M")]
    pub m: f64,
    /// Largest spectral argument.
    pub omega: f64,
    pub a0: f64,
    pub theta0: f64,
    /// `M_n = (1 + 1/(2M))^n 4^n M^n` for `n = 1..=nmax`.
    #[serde(rename = "Mn")]
    pub m_n: Vec<f64>,
    /// `max_t ||t S_R^{-1}(-t,T)||` over the grid.
    pub type_m: f64,
    /// Largest `||s S_R^{-1}(s,T)||` found on rays with angle in `(omega, pi]`.
    pub ray_bound: f64,
    /// Whether every sampled ray value was finite.
    pub is_type: bool,
}

impl SectorEstimate {
    /// `M_n`, extending the stored list by the closed formula if needed.
    pub fn m_of(&self, n: u32) -> f64 {
        strip_constant(self.m, n)
    }
}

fn strip_constant(m: f64, n: u32) -> f64 {
    ((1.0 + 1.0 / (2.0 * m)) * 4.0 * m).powi(n as i32)
}

/// Chord angle from `a0` to `a0 e^{I phi}`, equal to `(pi + phi)/2`.
fn chord_angle(phi: f64) -> f64 {
    phi.sin().atan2(phi.cos() - 1.0)
}

pub fn sector_estimate(t: &QMatrix, grid: &[f64], nmax: u32) -> Result<SectorEstimate> {
    sector_estimate_with(&Resolvent::new(t)?, grid, nmax)
}

pub fn sector_estimate_with(res: &Resolvent, grid: &[f64], nmax: u32) -> Result<SectorEstimate> {
    let spec = res.spectrum();
    if spec.touches_negative_axis() {
        return Err(Error::Precondition(
            "S-spectrum meets the closed negative real axis; operator is not sectorial".into(),
        ));
    }
    let mut m: f64 = 0.0;
    let mut type_m: f64 = 0.0;
    for &g in grid {
        let norm = res.classical(-g)?.opnorm();
        m = m.max((1.0 + g) * norm);
        type_m = type_m.max(g * norm);
    }
    // t -> 0 limit of (1+t)||(-t-T)^{-1}||
    m = m.max(res.classical(0.0)?.opnorm());
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::Precondition(format!(
            "resolvent bound is not finite: {m}"
        )));
    }
    let omega = spec.max_arg;
    let a0 = (1.0 / (4.0 * m)).min(1.0);
    let phi = PI - (1.0 / (2.0 * m)).atan();
    let theta0 = chord_angle(phi);
    let m_n = (1..=nmax).map(|n| strip_constant(m, n)).collect();

    let mut ray_bound: f64 = 0.0;
    let mut is_type = true;
    for k in 1..=4 {
        let angle = omega + (PI - omega) * k as f64 / 4.0;
        let dir = Complex64::from_polar(1.0, angle);
        for &r in grid {
            let s = ImaginaryUnit::E1.lift(dir * r);
            match res.right_unchecked(s) {
                Ok(rs) => {
                    let v = r * rs.opnorm();
                    if v.is_finite() {
                        ray_bound = ray_bound.max(v);
                    } else {
                        is_type = false;
                    }
                }
                Err(_) => is_type = false,
            }
        }
    }
    Ok(SectorEstimate {
        m,
        omega,
        a0,
        theta0,
        m_n,
        type_m,
        ray_bound,
        is_type,
    })
}

/// `sup_I ||S_L^{-1}(s0 + I s1, T)||` over the given units.
pub fn sphere_sup_norm(res: &Resolvent, s0: f64, s1: f64, units: &[ImaginaryUnit]) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for u in units {
        sup = sup.max(res.left_unchecked(u.point(s0, s1))?.opnorm());
    }
    Ok(sup)
}

/// `count` nearly uniform units on the sphere (Fibonacci lattice).
pub fn fibonacci_units(count: usize) -> Vec<ImaginaryUnit> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            ImaginaryUnit::from_direction(r * phi.cos(), r * phi.sin(), z)
                .expect("lattice point has unit length")
        })
        .collect()
}
