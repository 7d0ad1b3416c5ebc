//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use qfrac::checks::{
    increasing_beyond, neumann_check, neumann_point, norm_explode_sequence, pseudo_derivatives,
    pseudo_lower_bound, resolvent_equation, resolvent_power_derivatives,
};
use qfrac::fracpow::{
    default_keyhole, frac_power_neg, frac_power_neg_contour, rounding_floor, verify_semigroup,
    KeyholeWindow, PowerReport,
};
use qfrac::kato::{kato_power, kato_resolvent_identity};
use qfrac::quadrature::{integrate_ray, ContourPath, KernelSide, QuadratureConfig, RayProfile};
use qfrac::quaternion::{ds_metric, qpow};
use qfrac::random::{self, TestRng};
use qfrac::spectral::{default_grid, sector_estimate, Resolvent};
use qfrac::{Error, ImaginaryUnit, QMatrix, Quaternion};

type Outcome = Result<String, String>;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn err(e: Error) -> String {
    e.to_string()
}

/// Tracks the worst ratio `residual / tolerance` and the first failure.
#[derive(Default)]
struct Tally {
    worst: f64,
    count: usize,
    failure: Option<String>,
}

impl Tally {
    fn record(&mut self, what: impl FnOnce() -> String, residual: f64, tolerance: f64) {
        self.count += 1;
        let ratio = residual / tolerance;
        if (ratio > 1.0 || ratio.is_nan()) && self.failure.is_none() {
            self.failure = Some(format!(
                "{}: residual {residual:.3e} > {tolerance:.3e}",
                what()
            ));
        }
        if ratio > self.worst || ratio.is_nan() {
            self.worst = ratio;
        }
    }

    fn finish(self) -> Outcome {
        match self.failure {
            Some(f) => Err(f),
            None => Ok(format!(
                "{} checks, worst residual/tolerance {:.3e}",
                self.count, self.worst
            )),
        }
    }
}

fn converged(r: &PowerReport, what: &str) -> Result<(), String> {
    if r.converged {
        Ok(())
    } else {
        Err(format!(
            "{what}: quadrature did not converge (estimate {:.3e})",
            r.error_estimate
        ))
    }
}

fn sectorial_batch(seed: u64, count: usize, n: usize) -> Vec<QMatrix> {
    let mut rng = random::seeded(seed);
    (0..count).map(|_| random::sectorial(&mut rng, n)).collect()
}

fn identity_law() -> Outcome {
    let mut tally = Tally::default();
    for n in [1, 4] {
        let id = QMatrix::identity(n);
        for alpha in [0.25, 0.5, 0.75, 1.5] {
            let r = frac_power_neg(&id, alpha, &cfg()).map_err(err)?;
            converged(&r, "identity")?;
            tally.record(
                || format!("n={n}, alpha={alpha}"),
                (&r.value - &id).opnorm(),
                1e-10,
            );
        }
    }
    tally.finish()
}

fn eigen_oracle() -> Outcome {
    let mut rng = random::seeded(2);
    let mut tally = Tally::default();
    for _ in 0..50 {
        let lambda = random::polar(&mut rng, 0.2, 5.0, 0.75 * PI);
        let t = QMatrix::from_diagonal(&[lambda]);
        for alpha in [0.3, 0.5, 1.7] {
            let r = frac_power_neg(&t, alpha, &cfg()).map_err(err)?;
            converged(&r, "eigen oracle")?;
            let oracle = QMatrix::from_diagonal(&[qpow(lambda, -alpha).map_err(err)?]);
            tally.record(
                || format!("lambda={lambda}, alpha={alpha}"),
                (&r.value - &oracle).opnorm(),
                1e-8,
            );
        }
    }
    tally.finish()
}

fn integer_consistency() -> Outcome {
    let mut tally = Tally::default();
    for (i, t) in sectorial_batch(3, 20, 4).iter().enumerate() {
        let inv = t.inverse().map_err(err)?;
        let r = frac_power_neg(t, 1.0, &cfg()).map_err(err)?;
        tally.record(
            || format!("matrix {i}, ray"),
            (&r.value - &inv).opnorm(),
            1e-9,
        );
        // The keyhole integral does not special-case integer exponents.
        let est = sector_estimate(t, &default_grid(), 1).map_err(err)?;
        let path = default_keyhole(&est, ImaginaryUnit::E1, 1.0);
        let c = frac_power_neg_contour(t, 1.0, &path, KernelSide::Right, &cfg()).map_err(err)?;
        converged(&c, "contour at alpha=1")?;
        tally.record(
            || format!("matrix {i}, contour"),
            (&c.value - &inv).opnorm(),
            1e-9,
        );
    }
    tally.finish()
}

fn semigroup() -> Outcome {
    let mut tally = Tally::default();
    for (i, t) in sectorial_batch(4, 20, 4).iter().enumerate() {
        for (a, b) in [(0.3, 0.7), (0.25, 0.5)] {
            let r = verify_semigroup(t, a, b, &cfg()).map_err(err)?;
            if !r.converged {
                return Err(format!(
                    "matrix {i}, ({a}, {b}): quadrature did not converge"
                ));
            }
            tally.record(
                || format!("matrix {i}, ({a}, {b})"),
                r.residual,
                r.tolerance,
            );
        }
    }
    tally.finish()
}

fn resolvent_equation_draws() -> Outcome {
    let mut rng = random::seeded(5);
    let mut tally = Tally::default();
    let mut draws = 0;
    while draws < 500 {
        let n = 1 + draws % 4;
        let t = random::matrix(&mut rng, n, 1.0);
        let Ok(res) = Resolvent::new(&t) else {
            continue;
        };
        let scale = 1.0 + res.spectrum().max_modulus;
        let s = random::resolvent_point(&mut rng, &res, 2.0 * scale, 0.1 * scale);
        let p = random::resolvent_point(&mut rng, &res, 2.0 * scale, 0.1 * scale);
        if ds_metric(s, p) <= 1e-3 * scale {
            continue;
        }
        let c = resolvent_equation(&res, s, p).map_err(err)?;
        tally.record(|| c.name.clone(), c.residual, c.tolerance);
        draws += 1;
    }
    tally.finish()
}

fn beta_integrals() -> Outcome {
    let mut tally = Tally::default();
    for (n, alpha) in [(0u32, 0.5), (1, 0.5), (2, 0.3)] {
        let e = n as f64 - alpha;
        let r = integrate_ray(
            |t: f64| Ok(t.powf(e) * (1.0 + t).powi(-(n as i32) - 1)),
            &RayProfile::new(e, alpha).with_constant(1.0),
            &cfg(),
        )
        .map_err(err)?;
        if !r.converged {
            return Err(format!("(n, alpha) = ({n}, {alpha}): did not converge"));
        }
        let mut closed = PI / (PI * alpha).sin();
        for j in 1..=n {
            closed *= (j as f64 - alpha) / j as f64;
        }
        tally.record(
            || format!("(n, alpha) = ({n}, {alpha})"),
            (r.value - closed).abs(),
            1e-10,
        );
    }
    tally.finish()
}

fn keyhole(window: &KeyholeWindow, plane: ImaginaryUnit, theta: f64, alpha: f64) -> ContourPath {
    ContourPath::keyhole(plane, theta, window.default_radius(), alpha)
}

fn plane_and_path_independence() -> Outcome {
    let mut tally = Tally::default();
    let tilted = ImaginaryUnit::from_direction(1.0, -2.0, 0.5).map_err(err)?;
    let mut compare = |what: String, a: &PowerReport, b: &PowerReport| {
        let tol = 10.0 * (a.error_estimate + b.error_estimate) + rounding_floor(a.value.opnorm());
        tally.record(|| what, (&a.value - &b.value).opnorm(), tol);
    };
    for (i, t) in sectorial_batch(7, 5, 3).iter().enumerate() {
        let est = sector_estimate(t, &default_grid(), 1).map_err(err)?;
        let w = KeyholeWindow::from_estimate(&est);
        let (lo, hi) = (w.theta_min + 0.3 * w.width(), w.theta_min + 0.7 * w.width());
        for alpha in [0.4, 1.5] {
            let run = |plane, theta, side| {
                let r = frac_power_neg_contour(
                    t,
                    alpha,
                    &keyhole(&w, plane, theta, alpha),
                    side,
                    &cfg(),
                )
                .map_err(err)?;
                converged(&r, "contour")?;
                Ok::<_, String>(r)
            };
            let base = run(ImaginaryUnit::E1, lo, KernelSide::Right)?;
            let other_plane = run(tilted, lo, KernelSide::Right)?;
            let other_theta = run(ImaginaryUnit::E1, hi, KernelSide::Right)?;
            let left = run(ImaginaryUnit::E1, lo, KernelSide::Left)?;
            compare(
                format!("matrix {i}, alpha {alpha}, plane"),
                &base,
                &other_plane,
            );
            compare(
                format!("matrix {i}, alpha {alpha}, theta"),
                &base,
                &other_theta,
            );
            compare(format!("matrix {i}, alpha {alpha}, side"), &base, &left);
        }
    }
    tally.finish()
}

fn derivative_point(rng: &mut TestRng, res: &Resolvent) -> Result<Quaternion, String> {
    let scale = 1.0 + res.spectrum().max_modulus;
    let mut s = random::resolvent_point(rng, res, 2.0 * scale, 0.2 * scale);
    if s.imag_norm() < 0.1 {
        s += ImaginaryUnit::E2.as_quaternion() * 0.5;
    }
    res.check(s).map_err(err)?;
    Ok(s)
}

fn derivative_checks() -> Outcome {
    let mut rng = random::seeded(8);
    let mut tally = Tally::default();
    let mut draws = 0;
    while draws < 50 {
        let t = random::matrix(&mut rng, 1 + draws % 3, 1.0);
        let Ok(res) = Resolvent::new(&t) else {
            continue;
        };
        let Ok(s) = derivative_point(&mut rng, &res) else {
            continue;
        };
        let mut checks = pseudo_derivatives(&res, s, 1e-5).map_err(err)?;
        checks.extend(resolvent_power_derivatives(&res, s, 1e-5).map_err(err)?);
        for c in checks {
            tally.record(|| c.name.clone(), c.residual, c.tolerance);
        }
        draws += 1;
    }
    tally.finish()
}

fn neumann_series() -> Outcome {
    let mut rng = random::seeded(9);
    let mut tally = Tally::default();
    for t in sectorial_batch(10, 10, 3) {
        let res = Resolvent::new(&t).map_err(err)?;
        let scale = 1.0 + res.spectrum().max_modulus;
        for fraction in [0.25, 0.5, 0.9] {
            let p = random::resolvent_point(&mut rng, &res, 2.0 * scale, 0.1 * scale);
            let s = neumann_point(&res, p, fraction).map_err(err)?;
            for c in neumann_check(&res, s, p).map_err(err)? {
                tally.record(|| c.name.clone(), c.residual, c.tolerance);
            }
        }
    }
    tally.finish()
}

fn kato_consistency() -> Outcome {
    let mut tally = Tally::default();
    for (i, t) in sectorial_batch(11, 20, 4).iter().enumerate() {
        let omega_t = sector_estimate(t, &default_grid(), 1).map_err(err)?.omega;
        for alpha in [0.3, 0.5] {
            let b = kato_power(t, alpha, -1.0, &cfg()).map_err(err)?;
            if !b.converged {
                return Err(format!(
                    "matrix {i}, alpha {alpha}: Kato quadrature did not converge"
                ));
            }
            let inv = b.matrix.inverse().map_err(err)?;
            let ray = frac_power_neg(t, alpha, &cfg()).map_err(err)?;
            converged(&ray, "ray")?;
            let ni = inv.opnorm();
            let tol =
                100.0 * (ni * ni * b.error_estimate + ray.error_estimate) + rounding_floor(ni);
            tally.record(
                || format!("matrix {i}, alpha {alpha}, inverse"),
                (&inv - &ray.value).opnorm(),
                tol,
            );
            let omega_b = sector_estimate(&b.matrix, &default_grid(), 1)
                .map_err(err)?
                .omega;
            tally.record(
                || format!("matrix {i}, alpha {alpha}, sector {omega_b} vs {omega_t}"),
                omega_b,
                alpha * omega_t + 1e-3,
            );
            for (l, m) in [(-0.5, -1.0), (-1.0, -3.0)] {
                let c = kato_resolvent_identity(t, alpha, l, m, &cfg()).map_err(err)?;
                tally.record(
                    || format!("matrix {i}, {}", c.name),
                    c.residual,
                    c.tolerance,
                );
            }
        }
    }
    tally.finish()
}

fn lower_bound_and_blowup() -> Outcome {
    let mut rng = random::seeded(12);
    let mut tally = Tally::default();
    let mut draws = 0;
    while draws < 200 {
        let t = random::matrix(&mut rng, 1 + draws % 4, 1.0);
        let Ok(res) = Resolvent::new(&t) else {
            continue;
        };
        let scale = 1.0 + res.spectrum().max_modulus;
        let s = random::resolvent_point(&mut rng, &res, 2.0 * scale, 1e-3 * scale);
        let c = pseudo_lower_bound(&res, s).map_err(err)?;
        tally.record(|| c.name.clone(), c.residual, c.tolerance);
        draws += 1;
    }
    let seq = norm_explode_sequence(2, 40).map_err(err)?;
    if !increasing_beyond(&seq, 10) {
        return Err(format!(
            "blow-up sequence not increasing beyond k = 10: {seq:?}"
        ));
    }
    tally
        .finish()
        .map(|s| format!("{s}; sup norm at k=40 is {:.3e}", seq[39]))
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_qfrac");
    let run = || {
        Command::new(bin)
            .args([
                "verify", "--random", "3", "--count", "2", "--seed", "42", "--suite", "all",
            ])
            .env_remove("QFRAC_SEED")
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    if a.status.code() != Some(0) {
        return Err(format!("verify exited with {:?}", a.status.code()));
    }
    if a.stdout != b.stdout || a.status.code() != b.status.code() {
        return Err("outputs differ between runs".into());
    }
    Ok(format!("{} identical bytes", a.stdout.len()))
}

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

const CRITERIA: [Criterion; 12] = [
    Criterion {
        name: "identity law",
        limit: Some(Duration::from_secs(5)),
        run: identity_law,
    },
    Criterion {
        name: "scalar eigen oracle",
        limit: Some(Duration::from_secs(30)),
        run: eigen_oracle,
    },
    Criterion {
        name: "integer consistency",
        limit: None,
        run: integer_consistency,
    },
    Criterion {
        name: "semigroup",
        limit: None,
        run: semigroup,
    },
    Criterion {
        name: "S-resolvent equation",
        limit: None,
        run: resolvent_equation_draws,
    },
    Criterion {
        name: "Beta integrals",
        limit: None,
        run: beta_integrals,
    },
    Criterion {
        name: "plane and path independence",
        limit: None,
        run: plane_and_path_independence,
    },
    Criterion {
        name: "derivative checks",
        limit: None,
        run: derivative_checks,
    },
    Criterion {
        name: "Neumann series",
        limit: None,
        run: neumann_series,
    },
    Criterion {
        name: "Kato consistency",
        limit: None,
        run: kato_consistency,
    },
    Criterion {
        name: "spectral lower bound and blow-up",
        limit: None,
        run: lower_bound_and_blowup,
    },
    Criterion {
        name: "determinism",
        limit: None,
        run: determinism,
    },
];

fn main() -> ExitCode {
    let mut failed = 0;
    for (i, c) in CRITERIA.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = (c.run)();
        let elapsed = start.elapsed();
        if let (Ok(detail), Some(limit)) = (&outcome, c.limit) {
            if elapsed > limit {
                outcome = Err(format!("{detail}; took {elapsed:.2?}, limit {limit:?}"));
            }
        }
        match outcome {
            Ok(detail) => println!("PASS {:>2} {}: {detail} ({elapsed:.2?})", i + 1, c.name),
            Err(reason) => {
                failed += 1;
                println!("FAIL {:>2} {}: {reason} ({elapsed:.2?})", i + 1, c.name);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} criteria failed", CRITERIA.len());
        ExitCode::FAILURE
    }
}
