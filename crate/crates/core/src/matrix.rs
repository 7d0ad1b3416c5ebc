//! Quaternionic matrices acting right-linearly on column vectors of `H^n`.
//!
//! Linear algebra is routed through the complex embedding: an entry
//! `q = (w + x i) + (y + z i) e2` maps to the 2x2 cell
//! `[[w + x i, y + z i], [-(y - z i), w - x i]]`. The map is a ring
//! homomorphism and an isometry for the l2 norm on `H^n = C^{2n}`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quaternion::Quaternion;

/// Condition numbers above `1/(100 eps)` are treated as singular.
pub const MAX_CONDITION: f64 = 1.0 / (100.0 * f64::EPSILON);

/// Complex `2n x 2n` image of a quaternionic matrix.
pub type CEmbedding = DMatrix<Complex64>;

/// Dense `n x n` quaternionic matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixFile", into = "MatrixFile")]
pub struct QMatrix {
    n: usize,
    data: Vec<Quaternion>,
}

/// Wire format `{"n": int, "entries": [[[w,x,y,z], ...], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub entries: Vec<Vec<Quaternion>>,
}

impl TryFrom<MatrixFile> for QMatrix {
    type Error = Error;
    fn try_from(f: MatrixFile) -> Result<Self> {
        if f.entries.len() != f.n {
            return Err(Error::Dimension(format!(
                "declared n = {} but found {} rows",
                f.n,
                f.entries.len()
            )));
        }
        QMatrix::from_rows(f.entries)
    }
}

impl From<QMatrix> for MatrixFile {
    fn from(m: QMatrix) -> Self {
        MatrixFile {
            n: m.n,
            entries: (0..m.n).map(|i| m.row(i).to_vec()).collect(),
        }
    }
}

impl QMatrix {
    pub fn zeros(n: usize) -> Self {
        QMatrix {
            n,
            data: vec![Quaternion::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        QMatrix::scalar(n, Quaternion::ONE)
    }

    /// `q Id`.
    pub fn scalar(n: usize, q: Quaternion) -> Self {
        let mut m = QMatrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = q;
        }
        m
    }

    pub fn from_diagonal(diag: &[Quaternion]) -> Self {
        let n = diag.len();
        let mut m = QMatrix::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Quaternion>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Dimension("empty matrix".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        if data.iter().any(|q| !q.is_finite()) {
            return Err(Error::Domain("non-finite matrix entry".into()));
        }
        Ok(QMatrix { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Quaternion) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        QMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Quaternion {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, q: Quaternion) {
        self.data[i * self.n + j] = q;
    }

    pub fn row(&self, i: usize) -> &[Quaternion] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[Quaternion] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(Quaternion::is_finite)
    }

    fn map(&self, f: impl Fn(Quaternion) -> Quaternion) -> QMatrix {
        QMatrix {
            n: self.n,
            data: self.data.iter().map(|&q| f(q)).collect(),
        }
    }

    fn zip(&self, other: &QMatrix, f: impl Fn(Quaternion, Quaternion) -> Quaternion) -> QMatrix {
        assert_eq!(self.n, other.n, "matrix dimensions differ");
        QMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `r T` for real `r`.
    pub fn scale(&self, r: f64) -> QMatrix {
        self.map(|q| q * r)
    }

    /// `a T`: every entry multiplied by `a` from the left.
    pub fn left_scale(&self, a: Quaternion) -> QMatrix {
        self.map(|q| a * q)
    }

    /// `T a`: every entry multiplied by `a` from the right.
    pub fn right_scale(&self, a: Quaternion) -> QMatrix {
        self.map(|q| q * a)
    }

    /// `T + a Id`.
    pub fn add_scalar(&self, a: Quaternion) -> QMatrix {
        let mut m = self.clone();
        for i in 0..self.n {
            m.data[i * self.n + i] += a;
        }
        m
    }

    /// Real linear combination `a A + b B`.
    pub fn lincomb(a: f64, x: &QMatrix, b: f64, y: &QMatrix) -> QMatrix {
        x.zip(y, |p, q| p * a + q * b)
    }

    pub fn matmul(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.n, other.n, "matrix dimensions differ");
        let n = self.n;
        let mut out = QMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == Quaternion::ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// `T^k` for `k >= 0`.
    pub fn powi(&self, k: u32) -> QMatrix {
        let mut result = QMatrix::identity(self.n);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = result.matmul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.matmul(&base);
            }
        }
        result
    }

    /// `(T v)_i = sum_j T_ij v_j`.
    pub fn apply(&self, v: &[Quaternion]) -> Vec<Quaternion> {
        assert_eq!(v.len(), self.n, "vector length differs from dimension");
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(Quaternion::ZERO, |acc, (&t, &x)| acc + t * x)
            })
            .collect()
    }

    /// Largest absolute component difference over all entries.
    pub fn max_abs_diff(&self, other: &QMatrix) -> f64 {
        assert_eq!(self.n, other.n, "matrix dimensions differ");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry component.
    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .map(|q| q.max_abs_diff(&Quaternion::ZERO))
            .fold(0.0, f64::max)
    }

    pub fn embed(&self) -> CEmbedding {
        let n = self.n;
        let mut e = DMatrix::from_element(2 * n, 2 * n, Complex64::new(0.0, 0.0));
        for i in 0..n {
            for j in 0..n {
                let q = self.data[i * n + j];
                let a = Complex64::new(q.w, q.x);
                let b = Complex64::new(q.y, q.z);
                e[(2 * i, 2 * j)] = a;
                e[(2 * i, 2 * j + 1)] = b;
                e[(2 * i + 1, 2 * j)] = -b.conj();
                e[(2 * i + 1, 2 * j + 1)] = a.conj();
            }
        }
        e
    }

    /// Reads back quaternion entries, averaging each cell onto the symplectic form.
    pub fn unembed(e: &CEmbedding) -> Result<QMatrix> {
        if e.nrows() != e.ncols() || !e.nrows().is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "embedding must be square of even order, got {}x{}",
                e.nrows(),
                e.ncols()
            )));
        }
        let n = e.nrows() / 2;
        Ok(QMatrix::from_fn(n, |i, j| {
            let a = (e[(2 * i, 2 * j)] + e[(2 * i + 1, 2 * j + 1)].conj()) * 0.5;
            let b = (e[(2 * i, 2 * j + 1)] - e[(2 * i + 1, 2 * j)].conj()) * 0.5;
            Quaternion::new(a.re, a.im, b.re, b.im)
        }))
    }

    /// Inverse via partial-pivoting LU of the embedding.
    pub fn inverse(&self) -> Result<QMatrix> {
        let mut e = self.embed();
        let norm = one_norm(&e);
        // Complex division squares moduli; a power-of-two rescale keeps them in range exactly.
        let shift = if norm > 0.0 && norm.is_finite() {
            norm.log2().round() as i32
        } else {
            0
        };
        let down = Complex64::new(2f64.powi(-shift), 0.0);
        e *= down;
        let mut inv = e.lu().try_inverse().ok_or(Error::NotInvertible {
            condition: f64::INFINITY,
        })?;
        inv *= down;
        let condition = norm * one_norm(&inv);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::NotInvertible { condition });
        }
        QMatrix::unembed(&inv)
    }

    /// Spectral norm, the largest singular value of the embedding.
    pub fn opnorm(&self) -> f64 {
        if self.data.iter().all(|&q| q == Quaternion::ZERO) {
            return 0.0;
        }
        self.embed()
            .singular_values()
            .iter()
            .fold(0.0, |m: f64, &s| m.max(s))
    }
}

/// Maximum absolute column sum.
fn one_norm(e: &CEmbedding) -> f64 {
    e.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest deviation of any cell from the `[[a, b], [-conj(b), conj(a)]]` form.
pub fn symplectic_defect(e: &CEmbedding) -> f64 {
    let n = e.nrows() / 2;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d1 = (e[(2 * i, 2 * j)] - e[(2 * i + 1, 2 * j + 1)].conj()).norm();
            let d2 = (e[(2 * i, 2 * j + 1)] + e[(2 * i + 1, 2 * j)].conj()).norm();
            worst = worst.max(d1).max(d2);
        }
    }
    worst
}

/// Euclidean norm on `H^n`.
pub fn vector_norm(v: &[Quaternion]) -> f64 {
    v.iter().map(Quaternion::norm_sqr).sum::<f64>().sqrt()
}

impl Add for &QMatrix {
    type Output = QMatrix;
    fn add(self, o: &QMatrix) -> QMatrix {
        self.zip(o, |a, b| a + b)
    }
}

impl Sub for &QMatrix {
    type Output = QMatrix;
    fn sub(self, o: &QMatrix) -> QMatrix {
        self.zip(o, |a, b| a - b)
    }
}

impl Mul for &QMatrix {
    type Output = QMatrix;
    fn mul(self, o: &QMatrix) -> QMatrix {
        self.matmul(o)
    }
}

impl Neg for &QMatrix {
    type Output = QMatrix;
    fn neg(self) -> QMatrix {
        self.map(|q| -q)
    }
}

impl Add for QMatrix {
    type Output = QMatrix;
    fn add(self, o: QMatrix) -> QMatrix {
        &self + &o
    }
}

impl Sub for QMatrix {
    type Output = QMatrix;
    fn sub(self, o: QMatrix) -> QMatrix {
        &self - &o
    }
}

impl Mul for QMatrix {
    type Output = QMatrix;
    fn mul(self, o: QMatrix) -> QMatrix {
        self.matmul(&o)
    }
}

impl Neg for QMatrix {
    type Output = QMatrix;
    fn neg(self) -> QMatrix {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inverse_survives_extreme_scales() {
        for k in [-200, -80, 0, 80, 200] {
            let f = 10f64.powi(k);
            let t = sample(5, 3).scale(f);
            let inv = t.inverse().unwrap();
            let id = QMatrix::identity(3);
            assert!(t.matmul(&inv).max_abs_diff(&id) < 1e-12, "scale 1e{k}");
        }
    }

    fn sample(seed: u64, n: usize) -> QMatrix {
        // Small deterministic LCG keeps these unit tests dependency-free.
        let mut state = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        QMatrix::from_fn(n, |_, _| Quaternion::new(next(), next(), next(), next()))
    }

    #[test]
    fn embedding_examples() {
        let id = QMatrix::identity(1).embed();
        assert_eq!(id, DMatrix::identity(2, 2));
        let e2 = QMatrix::scalar(1, Quaternion::E2).embed();
        assert_eq!(e2[(0, 0)], c(0.0, 0.0));
        assert_eq!(e2[(0, 1)], c(1.0, 0.0));
        assert_eq!(e2[(1, 0)], c(-1.0, 0.0));
        assert_eq!(e2[(1, 1)], c(0.0, 0.0));
    }

    #[test]
    fn embedding_is_multiplicative() {
        for seed in 0..10 {
            let s = sample(seed, 2);
            let t = sample(seed + 100, 2);
            let lhs = (&s * &t).embed();
            let rhs = s.embed() * t.embed();
            let diff = (lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-12);
        }
    }

    #[test]
    fn embedding_round_trip_is_exact() {
        let t = sample(3, 4);
        assert_eq!(QMatrix::unembed(&t.embed()).unwrap(), t);
    }

    #[test]
    fn inverse_examples() {
        let id = QMatrix::identity(3);
        assert_eq!(id.inverse().unwrap(), id);
        let d = QMatrix::scalar(2, Quaternion::real(2.0)).inverse().unwrap();
        assert!(d.max_abs_diff(&QMatrix::scalar(2, Quaternion::real(0.5))) < 1e-15);
        let d = QMatrix::scalar(1, Quaternion::E1).inverse().unwrap();
        assert!(d.max_abs_diff(&QMatrix::scalar(1, -Quaternion::E1)) < 1e-15);
    }

    #[test]
    fn inverse_residual_and_structure() {
        for seed in 0..5 {
            let t = sample(seed, 4).add_scalar(Quaternion::real(3.0));
            let inv = t.inverse().unwrap();
            let residual = (&t * &inv - QMatrix::identity(4)).opnorm();
            assert!(residual < 1e-12);
            let raw = t.embed().lu().try_inverse().unwrap();
            assert!(symplectic_defect(&raw) < 1e-10);
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let mut t = QMatrix::identity(2);
        t.set(1, 1, Quaternion::ZERO);
        assert!(matches!(t.inverse(), Err(Error::NotInvertible { .. })));
        let rank_one = QMatrix::from_fn(2, |_, _| Quaternion::new(1.0, 1.0, 0.0, 0.0));
        assert!(rank_one.inverse().is_err());
    }

    #[test]
    fn opnorm_examples() {
        assert!((QMatrix::identity(3).opnorm() - 1.0).abs() < 1e-14);
        let t = QMatrix::scalar(2, Quaternion::E2 * 3.0);
        assert!((t.opnorm() - 3.0).abs() < 1e-14);
        assert_eq!(QMatrix::zeros(2).opnorm(), 0.0);
    }

    #[test]
    fn opnorm_dominates_vector_images() {
        let t = sample(11, 3);
        let norm = t.opnorm();
        for seed in 0..10 {
            let v: Vec<Quaternion> = sample(seed + 50, 3).row(0).to_vec();
            let ratio = vector_norm(&t.apply(&v)) / vector_norm(&v);
            assert!(ratio <= norm * (1.0 + 1e-12));
        }
    }

    #[test]
    fn action_is_right_linear() {
        let t = sample(7, 3);
        let v = sample(8, 3).row(1).to_vec();
        let a = Quaternion::new(0.3, -1.2, 0.5, 2.0);
        let lhs: Vec<Quaternion> = t.apply(&v).into_iter().map(|x| x * a).collect();
        let va: Vec<Quaternion> = v.iter().map(|&x| x * a).collect();
        let rhs = t.apply(&va);
        for (l, r) in lhs.iter().zip(&rhs) {
            assert!(l.max_abs_diff(r) < 1e-13);
        }
    }

    #[test]
    fn powers() {
        let t = sample(9, 3);
        let t3 = &(&t * &t) * &t;
        assert!(t.powi(3).max_abs_diff(&t3) < 1e-13);
        assert_eq!(t.powi(0), QMatrix::identity(3));
    }

    #[test]
    fn wire_format_validation() {
        let f = MatrixFile {
            n: 2,
            entries: vec![vec![Quaternion::ONE; 2]],
        };
        assert!(QMatrix::try_from(f).is_err());
        let f = MatrixFile {
            n: 2,
            entries: vec![vec![Quaternion::ONE; 2], vec![Quaternion::ONE]],
        };
        assert!(QMatrix::try_from(f).is_err());
    }
}
