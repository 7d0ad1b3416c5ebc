//! `qfrac`: JSON front end for S-spectra, fractional powers and property suites.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qfrac::checks::{run_suite, Suite, SuiteReport};
use qfrac::fracpow::{
    default_keyhole, frac_power_halfplane, frac_power_neg, frac_power_neg_contour, rounding_floor,
    KeyholeWindow, PowerReport,
};
use qfrac::kato::kato_power;
use qfrac::quadrature::{KernelSide, QuadratureConfig};
use qfrac::spectral::{default_grid, s_spectrum, sector_estimate};
use qfrac::{random, Error, ImaginaryUnit, QMatrix};

const EXIT_PARSE: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;
const EXIT_CONVERGENCE: u8 = 4;
const EXIT_PROPERTY: u8 = 5;

#[derive(Parser)]
#[command(
    name = "qfrac",
    version,
    about = "Fractional powers of quaternionic matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the S-spectrum of a matrix file.
    Spectrum { file: PathBuf },
    /// Compute T^{-alpha}.
    Fracpow {
        file: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = Method::Ray)]
        method: Method,
        /// Relative quadrature tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Imaginary unit of the contour plane as `x,y,z`.
        #[arg(long, default_value = "1,0,0")]
        plane: String,
        /// Kernel side of the contour form.
        #[arg(long, value_enum, default_value_t = Side::Right)]
        side: Side,
        /// Also run a second method and report the discrepancy.
        #[arg(long)]
        verify: bool,
    },
    /// Run invariant suites on a matrix file or on seeded random sectorial matrices.
    Verify {
        file: Option<PathBuf>,
        /// Dimension of the random matrices.
        #[arg(long, conflicts_with = "file")]
        random: Option<usize>,
        /// Number of random matrices.
        #[arg(long, default_value_t = 3)]
        count: usize,
        /// Seed; `QFRAC_SEED` takes precedence.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Tabulate drift against a tighter reference run for a list of tolerances.
    Convergence {
        file: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, value_delimiter = ',', default_value = "1e-6,1e-8,1e-10")]
        tols: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Method::Ray)]
        method: Method,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Ray,
    Contour,
    Halfplane,
    Kato,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteArg {
    Resolvent,
    Semigroup,
    Kato,
    Derivatives,
    All,
}

impl SuiteArg {
    fn suites(self) -> Vec<Suite> {
        match self {
            SuiteArg::Resolvent => vec![Suite::Resolvent],
            SuiteArg::Semigroup => vec![Suite::Semigroup],
            SuiteArg::Kato => vec![Suite::Kato],
            SuiteArg::Derivatives => vec![Suite::Derivatives],
            SuiteArg::All => Suite::ALL.to_vec(),
        }
    }
}

/// Failure carried to `main`: exit code plus a JSON error body.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn parse(message: String) -> Self {
        Failure {
            code: EXIT_PARSE,
            kind: "parse",
            message,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Convergence { .. } | Error::EigenSolver(_) => (EXIT_CONVERGENCE, "convergence"),
            Error::Inconsistency { .. } => (EXIT_PROPERTY, "property"),
            _ => (EXIT_PRECONDITION, "precondition"),
        };
        Failure {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: ErrorDetail<'a>,
}

#[derive(Serialize)]
struct ErrorDetail<'a> {
    kind: &'a str,
    message: &'a str,
}

/// Command output with the exit code it implies.
struct Outcome {
    json: String,
    code: u8,
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("output types serialize")
}

fn load_matrix(path: &Path) -> Result<QMatrix, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

fn parse_plane(text: &str) -> Result<ImaginaryUnit, Failure> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::parse(format!("--plane: {e}")))?;
    let [x, y, z] = parts[..] else {
        return Err(Failure::parse(format!(
            "--plane needs three components, got {}",
            parts.len()
        )));
    };
    let norm = (x * x + y * y + z * z).sqrt();
    if (norm - 1.0).abs() > 1e-6 || norm.is_nan() {
        return Err(Failure::parse(format!(
            "--plane must be a unit vector, has length {norm}"
        )));
    }
    ImaginaryUnit::from_direction(x, y, z).map_err(|e| Failure::parse(e.to_string()))
}

fn config(tol: f64) -> Result<QuadratureConfig, Failure> {
    let cfg = QuadratureConfig {
        rel_tol: tol,
        abs_tol: QuadratureConfig::default().abs_tol.min(tol * 1e-2),
        ..QuadratureConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn env_seed(seed: u64) -> Result<u64, Failure> {
    match std::env::var("QFRAC_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|e| Failure::parse(format!("QFRAC_SEED: {e}"))),
        Err(_) => Ok(seed),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ReportMeta {
    error_estimate: f64,
    evaluations: usize,
    converged: bool,
}

impl ReportMeta {
    fn of(r: &PowerReport) -> Self {
        ReportMeta {
            error_estimate: r.error_estimate,
            evaluations: r.evaluations,
            converged: r.converged,
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CrossCheck {
    method: Method,
    discrepancy: f64,
    tolerance: f64,
    agree: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct FracpowOutput {
    alpha: f64,
    method: Method,
    matrix: QMatrix,
    report: ReportMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    window: Option<KeyholeWindow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verify: Option<CrossCheck>,
}

/// `T^{-alpha}` by the chosen method, with the keyhole window for contour runs.
fn negative_power(
    t: &QMatrix,
    alpha: f64,
    method: Method,
    plane: ImaginaryUnit,
    side: Side,
    cfg: &QuadratureConfig,
) -> Result<(PowerReport, Option<KeyholeWindow>), Error> {
    match method {
        Method::Ray => Ok((frac_power_neg(t, alpha, cfg)?, None)),
        Method::Contour => {
            let est = sector_estimate(t, &default_grid(), 1)?;
            let path = default_keyhole(&est, plane, alpha);
            let side = match side {
                Side::Left => KernelSide::Left,
                Side::Right => KernelSide::Right,
            };
            let r = frac_power_neg_contour(t, alpha, &path, side, cfg)?;
            Ok((r, Some(KeyholeWindow::from_estimate(&est))))
        }
        Method::Halfplane => Ok((frac_power_halfplane(t, alpha, cfg)?, None)),
        Method::Kato => {
            let b = kato_power(t, alpha, -1.0, cfg)?;
            let inv = b.matrix.inverse()?;
            let n = inv.opnorm();
            let report = PowerReport {
                error_estimate: n * n * b.error_estimate,
                value: inv,
                evaluations: b.evaluations,
                converged: b.converged,
            };
            Ok((report, None))
        }
    }
}

fn cmd_spectrum(file: &Path) -> Result<Outcome, Failure> {
    let t = load_matrix(file)?;
    Ok(Outcome {
        json: to_json(&s_spectrum(&t)?),
        code: 0,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_fracpow(
    file: &Path,
    alpha: f64,
    method: Method,
    tol: f64,
    plane: &str,
    side: Side,
    verify: bool,
) -> Result<Outcome, Failure> {
    let t = load_matrix(file)?;
    let plane = parse_plane(plane)?;
    let cfg = config(tol)?;
    let (report, window) = negative_power(&t, alpha, method, plane, side, &cfg)?;
    let mut code = if report.converged {
        0
    } else {
        EXIT_CONVERGENCE
    };
    let verify = if verify {
        let other = match method {
            Method::Ray => Method::Contour,
            _ => Method::Ray,
        };
        let (second, _) = negative_power(&t, alpha, other, plane, side, &cfg)?;
        let discrepancy = (&report.value - &second.value).opnorm();
        let tolerance = 10.0 * (report.error_estimate + second.error_estimate)
            + rounding_floor(report.value.opnorm());
        let agree = discrepancy <= tolerance;
        if !second.converged && code == 0 {
            code = EXIT_CONVERGENCE;
        }
        if !agree && code == 0 {
            code = EXIT_PROPERTY;
        }
        Some(CrossCheck {
            method: other,
            discrepancy,
            tolerance,
            agree,
        })
    } else {
        None
    };
    let out = FracpowOutput {
        alpha,
        method,
        report: ReportMeta::of(&report),
        matrix: report.value,
        window,
        verify,
    };
    Ok(Outcome {
        json: to_json(&out),
        code,
    })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct MatrixSuites {
    index: usize,
    matrix: QMatrix,
    suites: Vec<SuiteReport>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct VerifyOutput {
    seed: u64,
    pass: bool,
    matrices: Vec<MatrixSuites>,
}

fn cmd_verify(
    file: Option<&Path>,
    random_dim: Option<usize>,
    count: usize,
    seed: u64,
    suite: SuiteArg,
    tol: f64,
) -> Result<Outcome, Failure> {
    let seed = env_seed(seed)?;
    let cfg = config(tol)?;
    let mut rng = random::seeded(seed);
    let matrices = match (file, random_dim) {
        (Some(f), _) => vec![load_matrix(f)?],
        (None, Some(n)) if n >= 1 => (0..count).map(|_| random::sectorial(&mut rng, n)).collect(),
        (None, Some(_)) => {
            return Err(Failure::parse("--random needs a positive dimension".into()))
        }
        (None, None) => return Err(Failure::parse("pass a matrix file or --random N".into())),
    };
    let mut out = Vec::new();
    for (index, t) in matrices.into_iter().enumerate() {
        let mut suites = Vec::new();
        for s in suite.suites() {
            suites.push(run_suite(s, &t, &mut rng, &cfg)?);
        }
        out.push(MatrixSuites {
            index,
            matrix: t,
            suites,
        });
    }
    let pass = out.iter().all(|m| m.suites.iter().all(|s| s.pass));
    Ok(Outcome {
        json: to_json(&VerifyOutput {
            seed,
            pass,
            matrices: out,
        }),
        code: if pass { 0 } else { EXIT_PROPERTY },
    })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ConvergenceRow {
    tol: f64,
    drift: f64,
    error_estimate: f64,
    evaluations: usize,
    converged: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ConvergenceOutput {
    alpha: f64,
    method: Method,
    reference_tol: f64,
    noise_floor: f64,
    monotone: bool,
    rows: Vec<ConvergenceRow>,
}

fn cmd_convergence(
    file: &Path,
    alpha: f64,
    tols: &[f64],
    method: Method,
) -> Result<Outcome, Failure> {
    let t = load_matrix(file)?;
    if tols.is_empty() {
        return Err(Failure::parse("--tols needs at least one value".into()));
    }
    let mut tols = tols.to_vec();
    tols.sort_by(|a, b| b.total_cmp(a));
    let reference_tol = tols[tols.len() - 1] / 100.0;
    let plane = ImaginaryUnit::E1;
    let (reference, _) = negative_power(
        &t,
        alpha,
        method,
        plane,
        Side::Right,
        &config(reference_tol)?,
    )?;
    let noise_floor = reference.error_estimate + rounding_floor(reference.value.opnorm());
    let mut rows = Vec::new();
    let mut all_converged = reference.converged;
    for &tol in &tols {
        let (r, _) = negative_power(&t, alpha, method, plane, Side::Right, &config(tol)?)?;
        all_converged &= r.converged;
        rows.push(ConvergenceRow {
            tol,
            drift: (&r.value - &reference.value).opnorm(),
            error_estimate: r.error_estimate,
            evaluations: r.evaluations,
            converged: r.converged,
        });
    }
    let monotone = rows
        .windows(2)
        .all(|w| w[1].drift <= w[0].drift + noise_floor);
    let code = if !all_converged {
        EXIT_CONVERGENCE
    } else if !monotone {
        EXIT_PROPERTY
    } else {
        0
    };
    Ok(Outcome {
        json: to_json(&ConvergenceOutput {
            alpha,
            method,
            reference_tol,
            noise_floor,
            monotone,
            rows,
        }),
        code,
    })
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    match cli.command {
        Command::Spectrum { file } => cmd_spectrum(&file),
        Command::Fracpow {
            file,
            alpha,
            method,
            tol,
            plane,
            side,
            verify,
        } => cmd_fracpow(&file, alpha, method, tol, &plane, side, verify),
        Command::Verify {
            file,
            random,
            count,
            seed,
            suite,
            tol,
        } => cmd_verify(file.as_deref(), random, count, seed, suite, tol),
        Command::Convergence {
            file,
            alpha,
            tols,
            method,
        } => cmd_convergence(&file, alpha, &tols, method),
    }
}

/// One JSON document per line; a closed stdout is not an error.
fn emit(json: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{json}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            emit(&out.json);
            ExitCode::from(out.code)
        }
        Err(f) => {
            emit(&to_json(&ErrorBody {
                error: ErrorDetail {
                    kind: f.kind,
                    message: &f.message,
                },
            }));
            ExitCode::from(f.code)
        }
    }
}
