//! Seeded generators for quaternions, units and sectorial test matrices.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::QMatrix;
use crate::quaternion::{ImaginaryUnit, Quaternion};
use crate::spectral::Resolvent;

pub type TestRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Components uniform in `[-scale, scale]`.
pub fn quaternion(rng: &mut TestRng, scale: f64) -> Quaternion {
    Quaternion::new(
        rng.gen_range(-scale..=scale),
        rng.gen_range(-scale..=scale),
        rng.gen_range(-scale..=scale),
        rng.gen_range(-scale..=scale),
    )
}

/// Uniform on the unit sphere of imaginary quaternions.
pub fn unit(rng: &mut TestRng) -> ImaginaryUnit {
    loop {
        let (x, y, z) = (
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0f64..=1.0),
        );
        let r2 = x * x + y * y + z * z;
        if r2 > 1e-4 && r2 <= 1.0 {
            return ImaginaryUnit::from_direction(x, y, z).expect("nonzero direction");
        }
    }
}

/// `r e^{I phi}` with `r` in `[rmin, rmax]`, `phi` in `[0, max_arg)`, random unit `I`.
pub fn polar(rng: &mut TestRng, rmin: f64, rmax: f64, max_arg: f64) -> Quaternion {
    let r = rng.gen_range(rmin..=rmax);
    let phi = rng.gen_range(0.0..max_arg);
    unit(rng).point(r * phi.cos(), r * phi.sin())
}

pub fn vector(rng: &mut TestRng, n: usize) -> Vec<Quaternion> {
    (0..n).map(|_| quaternion(rng, 1.0)).collect()
}

pub fn matrix(rng: &mut TestRng, n: usize, scale: f64) -> QMatrix {
    QMatrix::from_fn(n, |_, _| quaternion(rng, scale))
}

/// `P D P^{-1}` with `D = diag(lambda_i)`, `|lambda_i|` in `[0.5, 3]`, `arg < 2 pi/3`
/// and `P` a perturbation of the identity. Accepted only when the computed
/// spectrum has `maxArg <= 3 pi/4` and every modulus is at least `0.2`.
pub fn sectorial(rng: &mut TestRng, n: usize) -> QMatrix {
    loop {
        let diag: Vec<Quaternion> = (0..n)
            .map(|_| polar(rng, 0.5, 3.0, 2.0 * PI / 3.0))
            .collect();
        let p = matrix(rng, n, 0.3 / n as f64).add_scalar(Quaternion::ONE);
        let Ok(p_inv) = p.inverse() else { continue };
        let t = p.matmul(&QMatrix::from_diagonal(&diag)).matmul(&p_inv);
        let Ok(res) = Resolvent::new(&t) else {
            continue;
        };
        let spec = res.spectrum();
        let min_modulus = spec
            .spheres
            .iter()
            .map(|s| s.modulus())
            .fold(f64::INFINITY, f64::min);
        if spec.max_arg <= 0.75 * PI && min_modulus >= 0.2 {
            return t;
        }
    }
}

/// A point with `d_S` distance at least `margin` from the spectrum, components in `[-scale, scale]`.
pub fn resolvent_point(rng: &mut TestRng, res: &Resolvent, scale: f64, margin: f64) -> Quaternion {
    loop {
        let s = quaternion(rng, scale);
        if res.spectrum().distance(s) >= margin {
            return s;
        }
    }
}
