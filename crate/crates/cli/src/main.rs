//! `moebius`: command-line front end of the Möbius camera library.
//!
//! stdout carries JSON or CSV only; stderr carries human-readable messages.
//! Exit codes: 0 success, 2 parse error, 3 precondition violation, 4
//! internal inconsistency.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::{json, Value};

use moebius_core::camera::{
    camera_eval, camera_eval_param, camera_eval_param_exact, camera_sample, compute_degree_exact, image_distance,
    EvalMode,
};
use moebius_core::exact::{format_rational, gauss, parse_rational, GaussRat};
use moebius_core::geometry::{classify, fit_similarity, Direction, PointConfig, Vec3, DEFAULT_TOL};
use moebius_core::io::{parse_config, parse_pentapod, ParsedConfig};
use moebius_core::pentapod::necessary_condition_report_tol;
use moebius_core::projective::{cross_ratio, P1Point};
use moebius_core::reconstruction::{reconstruct5_with, verify_equivalence_n, CameraOracle, FiberOptions};
use moebius_core::Error;

#[derive(Parser)]
#[command(name = "moebius", version, about = "Möbius cameras of point configurations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Float,
    Exact,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a configuration by its collinear and coplanar subsets.
    Classify {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Evaluate the camera at a direction or at a parameter `(s:t)`.
    CameraEval {
        input: PathBuf,
        /// Direction `x,y,z`; normalized before use.
        #[arg(long, conflicts_with = "param", required_unless_present = "param")]
        direction: Option<String>,
        /// Parameter `s_re,s_im,t_re,t_im`; entries may be `p/q` strings.
        #[arg(long)]
        param: Option<String>,
        #[arg(long, value_enum, default_value_t = Mode::Float)]
        mode: Mode,
    },
    /// Sample the camera on a seeded Fibonacci grid and write CSV.
    CameraSample {
        input: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Exact degree of the camera image.
    Degree {
        input: PathBuf,
        /// `exact` reads coordinates as written; `float` uses their double
        /// values.
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
    },
    /// Distance between the camera images of two configurations.
    ImageCompare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 400)]
        n: usize,
    },
    /// Reconstruct a configuration from the camera of the input.
    Reconstruct {
        /// Configuration whose camera is the oracle.
        input: Option<PathBuf>,
        /// Use a random spatial configuration drawn from `--seed`.
        #[arg(long, conflicts_with = "input")]
        self_test: bool,
        /// Ground truth for a similarity fit of the result.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5000)]
        grid: usize,
    },
    /// Compare two n-point configurations through their 5-point subtuples.
    Nverify { a: PathBuf, b: PathBuf },
    /// Check the necessary conditions for pentapod mobility >= 2.
    PentapodCheck {
        input: PathBuf,
        #[arg(long, default_value_t = moebius_core::pentapod::DEFAULT_TOL)]
        tol: f64,
    },
    /// Cross ratio of four points of the projective line.
    CrossRatio {
        /// JSON array of four values, each `[re, im]` or `"inf"`.
        values: String,
    },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    error: String,
    kind: &'static str,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match e {
            Error::Parse(_) => (2, "parse"),
            Error::DegreeInconsistency { .. }
            | Error::CalibrationFailure
            | Error::InconsistentDirections { .. }
            | Error::AmbiguousFiber { .. } => (4, "internal"),
            _ => (3, "precondition"),
        };
        Failure {
            code,
            error: e.to_string(),
            kind,
        }
    }
}

fn parse_failure(msg: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        error: msg.into(),
        kind: "parse",
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| parse_failure(format!("cannot read {}: {e}", path.display())))
}

fn load_config(path: &Path) -> CliResult<ParsedConfig> {
    Ok(parse_config(&read(path)?)?)
}

fn triple(text: &str) -> CliResult<Vec3> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_failure(format!("expected three comma-separated numbers, got {text:?}")))?;
    match v[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(parse_failure(format!("expected three comma-separated numbers, got {text:?}"))),
    }
}

fn param(text: &str) -> CliResult<(GaussRat, GaussRat)> {
    let v = text
        .split(',')
        .map(parse_rational)
        .collect::<moebius_core::Result<Vec<_>>>()?;
    match <[_; 4]>::try_from(v) {
        Ok([sr, si, tr, ti]) => Ok((gauss(sr, si), gauss(tr, ti))),
        Err(_) => Err(parse_failure("expected four comma-separated entries s_re,s_im,t_re,t_im")),
    }
}

fn to_json(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Projective representative with the first nonzero component equal to one.
fn exact_value(w: [GaussRat; 6]) -> CliResult<Value> {
    use num_traits::Zero;
    let lead = w.iter().find(|z| !z.is_zero()).cloned().ok_or(Error::DegenerateParameter)?;
    let comps: Vec<Value> = w
        .iter()
        .map(|z| {
            let q = z / &lead;
            json!([format_rational(&q.re), format_rational(&q.im)])
        })
        .collect();
    Ok(json!({ "w": comps }))
}

fn random_spatial(seed: u64) -> CliResult<PointConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec3> = (0..5)
        .map(|_| Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    Ok(PointConfig::new(pts)?.with_label(format!("random spatial, seed {seed}")))
}

fn cross_ratio_value(text: &str) -> CliResult<Value> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_failure(e.to_string()))?;
    let arr = v
        .as_array()
        .filter(|a| a.len() == 4)
        .ok_or_else(|| parse_failure("expected a JSON array of four values"))?;
    let point = |x: &Value| -> CliResult<P1Point> {
        if x.as_str() == Some("inf") {
            return Ok(P1Point::INFINITY);
        }
        let c = x
            .as_array()
            .filter(|c| c.len() == 2)
            .and_then(|c| Some(Complex64::new(c[0].as_f64()?, c[1].as_f64()?)))
            .ok_or_else(|| parse_failure("each value must be [re, im] or \"inf\""))?;
        Ok(P1Point::finite(c))
    };
    let m = [point(&arr[0])?, point(&arr[1])?, point(&arr[2])?, point(&arr[3])?];
    let cr = cross_ratio(&m)?;
    Ok(match cr.value() {
        Some(z) => json!({ "cross_ratio": [z.re, z.im] }),
        None => json!({ "cross_ratio": "inf" }),
    })
}

enum Output {
    Json(Value),
    Text(String),
}

fn run(cmd: Command) -> CliResult<Output> {
    match cmd {
        Command::Classify { input, tol } => {
            let p = load_config(&input)?;
            Ok(Output::Json(to_json(&classify(&p.config, tol)?)))
        }
        Command::CameraEval {
            input,
            direction,
            param: par,
            mode,
        } => {
            let p = load_config(&input)?;
            if let Some(d) = direction {
                let eps = Direction::from_vector(triple(&d)?)?;
                return Ok(Output::Json(to_json(&camera_eval(&p.config, &eps)?)));
            }
            let (s, t) = param(par.as_deref().unwrap_or_default())?;
            match mode {
                Mode::Exact => Ok(Output::Json(exact_value(camera_eval_param_exact(&p.exact, &s, &t)?)?)),
                Mode::Float => {
                    let c = |z: &GaussRat| moebius_core::exact::gauss_to_c64(z);
                    let pp = P1Point::new(c(&s), c(&t))?;
                    Ok(Output::Json(to_json(&camera_eval_param(&p.config, &pp, EvalMode::Float)?)))
                }
            }
        }
        Command::CameraSample { input, n, seed, output } => {
            let p = load_config(&input)?;
            let curve = camera_sample(&p.config, n, seed)?;
            let mut buf = Vec::new();
            curve.write_csv(&mut buf).expect("writing to memory");
            match output {
                Some(path) => {
                    fs::write(&path, &buf).map_err(|e| Failure {
                        code: 3,
                        error: format!("cannot write {}: {e}", path.display()),
                        kind: "precondition",
                    })?;
                    Ok(Output::Json(json!({ "samples": curve.samples.len(), "output": path })))
                }
                None => Ok(Output::Text(String::from_utf8(buf).expect("csv is utf-8"))),
            }
        }
        Command::Degree { input, mode } => {
            let p = load_config(&input)?;
            let exact = match mode {
                Mode::Exact => p.exact,
                Mode::Float => moebius_core::exact::RationalConfig::from_config(&p.config)?,
            };
            Ok(Output::Json(to_json(&compute_degree_exact(&exact)?)))
        }
        Command::ImageCompare { a, b, n } => {
            let a = load_config(&a)?;
            let b = load_config(&b)?;
            Ok(Output::Json(to_json(&image_distance(&a.config, &b.config, n)?)))
        }
        Command::Reconstruct {
            input,
            self_test,
            truth,
            seed,
            grid,
        } => {
            let source = match (input, self_test) {
                (Some(path), _) => load_config(&path)?.config,
                (None, true) => random_spatial(seed)?,
                (None, false) => return Err(Error::PreconditionViolated("give an input file or --self-test".into()).into()),
            };
            let truth = match truth {
                Some(path) => Some(load_config(&path)?.config),
                None if self_test => Some(source.clone()),
                None => None,
            };
            let oracle = CameraOracle::from_config(&source)?;
            let opts = FiberOptions {
                grid_n: grid,
                seed: FiberOptions::default().seed ^ seed,
                ..FiberOptions::default()
            };
            let result = reconstruct5_with(&oracle, opts)?;
            let fit = match (&truth, &result.config) {
                (Some(t), Some(c)) => {
                    let (tr, r) = fit_similarity(t, c)?;
                    json!({ "residual": r, "proper": tr.proper, "transform": to_json(&tr) })
                }
                _ => Value::Null,
            };
            Ok(Output::Json(json!({
                "source": to_json(&source),
                "result": to_json(&result),
                "similarity_fit": fit,
            })))
        }
        Command::Nverify { a, b } => {
            let a = load_config(&a)?;
            let b = load_config(&b)?;
            Ok(Output::Json(to_json(&verify_equivalence_n(&a.config, &b.config)?)))
        }
        Command::PentapodCheck { input, tol } => {
            let pp = parse_pentapod(&read(&input)?)?;
            Ok(Output::Json(to_json(&necessary_condition_report_tol(&pp, tol))))
        }
        Command::CrossRatio { values } => Ok(Output::Json(cross_ratio_value(&values)?)),
    }
}

fn init_threads() -> std::result::Result<(), String> {
    let Ok(v) = std::env::var("MOEBIUS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("MOEBIUS_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        println!("{}", json!({ "error": msg, "kind": "parse" }));
        return ExitCode::from(2);
    }
    let mut out = std::io::stdout().lock();
    match run(cli.command) {
        Ok(Output::Json(v)) => {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json values serialize"));
            ExitCode::SUCCESS
        }
        Ok(Output::Text(t)) => {
            let _ = out.write_all(t.as_bytes());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.error);
            let _ = writeln!(out, "{}", json!({ "error": f.error, "kind": f.kind, "exit_code": f.code }));
            ExitCode::from(f.code)
        }
    }
}
