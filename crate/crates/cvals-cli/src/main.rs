//! `cvals`: solve contextual values from detector/target JSON artifacts,
//! run the worked scenarios, check the estimator's MSE bound, and sweep
//! measurement strength toward the weak limit.
//!
//! Exit codes: 0 success, 2 validation problem, 3 numerical failure,
//! 4 estimator bound-check failure. Every command is deterministic given
//! its flags; sampling is seeded (`--seed`, default 0).

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cvals::estimator::{estimate_and_check, sample_outcomes};
use cvals::prob::ProbState;
use cvals::quantum::{weak_limit_sweep, HermitianOperator};
use cvals::scenarios::{run_scenario, three_box_kraus, three_box_states, ScenarioSpec};
use cvals::solver::{solution_family, solve_with_tol, ResponseMap};
use cvals_cli::{
    parse_key_value, to_json_string, CliError, DetectorFile, EstimateOutput, SolveOutput,
    TargetFile,
};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "cvals",
    version,
    about = "Contextual values of generalized measurements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a detector/target pair for contextual values (JSON on stdout).
    Solve {
        /// Detector description (JSON).
        detector: PathBuf,
        /// Target observable (JSON).
        target: PathBuf,
        /// Relative singular-value cutoff in (0, 1); default is
        /// dimension-scaled machine precision.
        #[arg(long)]
        tol: Option<f64>,
        /// Pin an outcome's contextual value, as OUTCOME=VALUE (repeatable);
        /// the remaining outcomes are solved least-norm.
        #[arg(long = "pin", value_name = "OUTCOME=VALUE")]
        pins: Vec<String>,
    },
    /// Run a named scenario: print its scalar table, optionally write
    /// report.json and one CSV per curve.
    Scenario {
        /// Scenario name (try an unknown name to list the known ones).
        name: String,
        /// Scenario parameter, as KEY=VALUE (repeatable).
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        /// Output directory for report.json and curve CSVs (created if
        /// missing).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the detector under the uniform preparation and check the
    /// estimator against its MSE bound (JSON on stdout; exit 4 when the
    /// check fails).
    Estimate {
        /// Detector description (JSON).
        detector: PathBuf,
        /// Target observable (JSON).
        target: PathBuf,
        /// Draws per batch.
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        /// Replayed batches for the MSE estimate (at least 30).
        #[arg(long, default_value_t = 64)]
        batches: u32,
        /// Sampling seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relative singular-value cutoff in (0, 1).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Sweep the three-box detector strength toward the weak limit and
    /// emit the convergence CSV (stdout; also written with a JSON summary
    /// under --out).
    Sweep {
        /// Sweep parameter: start, stop, points, or box (repeatable).
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        /// Output directory for convergence.csv and summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Solve { detector, target, tol, pins } => {
            cmd_solve(&detector, &target, tol, &pins)
        }
        Command::Scenario { name, params, out } => {
            cmd_scenario(&name, &params, out.as_deref())
        }
        Command::Estimate { detector, target, n, batches, seed, tol } => {
            cmd_estimate(&detector, &target, n, batches, seed, tol)
        }
        Command::Sweep { params, out } => cmd_sweep(&params, out.as_deref()),
    }
}

fn load_problem(
    detector: &Path,
    target: &Path,
) -> Result<(cvals_cli::ValidatedDetector, TargetFile, ResponseMap), CliError> {
    let validated = DetectorFile::load(detector)?.validate()?;
    let tgt = TargetFile::load(target)?;
    let map = ResponseMap::from_response(&validated.response);
    Ok((validated, tgt, map))
}

fn cmd_solve(
    detector: &Path,
    target: &Path,
    tol: Option<f64>,
    pins: &[String],
) -> Result<ExitCode, CliError> {
    let (validated, tgt, map) = load_problem(detector, target)?;
    let sol = if pins.is_empty() {
        solve_with_tol(&map, &tgt.values, None, tol)?
    } else {
        if tol.is_some() {
            return Err(CliError::Input(
                "--tol cannot be combined with --pin (pinned solves use the default cutoff)"
                    .into(),
            ));
        }
        let outcomes = validated.response.detector();
        let mut pinned = Vec::with_capacity(pins.len());
        for pin in pins {
            let (label, value) = parse_key_value(pin)?;
            let idx = outcomes.index_of(label).ok_or_else(|| {
                CliError::Input(format!(
                    "unknown outcome `{label}`; detector outcomes are {:?}",
                    outcomes.atoms()
                ))
            })?;
            let value: f64 = value.parse().map_err(|_| {
                CliError::Input(format!("pin value `{value}` is not a number"))
            })?;
            pinned.push((idx, value));
        }
        solution_family(&map, &tgt.values, &pinned)?
    };
    print!("{}", to_json_string(&SolveOutput::from(&sol)));
    Ok(ExitCode::SUCCESS)
}

fn write_artifact(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

fn cmd_scenario(
    name: &str,
    params: &[String],
    out: Option<&Path>,
) -> Result<ExitCode, CliError> {
    let mut spec = ScenarioSpec::new(name);
    for p in params {
        let (k, v) = parse_key_value(p)?;
        spec.set(k, v);
    }
    let report = run_scenario(&spec)?;

    let mut stdout = std::io::stdout().lock();
    for (key, sv) in &report.scalars {
        writeln!(stdout, "{key:<28} {:>24} [{}]", sv.value, sv.method)
            .map_err(|e| CliError::Output(format!("stdout: {e}")))?;
    }
    for note in &report.notes {
        writeln!(stdout, "note: {note}")
            .map_err(|e| CliError::Output(format!("stdout: {e}")))?;
    }
    drop(stdout);

    if let Some(dir) = out {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
        write_artifact(&dir.join("report.json"), &to_json_string(&report))?;
        for key in report.curves.keys() {
            let csv = report.curve_csv(key).expect("listed curve exists");
            write_artifact(&dir.join(format!("{key}.csv")), &csv)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_estimate(
    detector: &Path,
    target: &Path,
    n: usize,
    batches: u32,
    seed: u64,
    tol: Option<f64>,
) -> Result<ExitCode, CliError> {
    let (validated, tgt, map) = load_problem(detector, target)?;
    let sol = solve_with_tol(&map, &tgt.values, None, tol)?;
    let state = ProbState::uniform(validated.response.system());
    // Uniform preparation, so the estimand is the plain average of the
    // target values (exact even for least-squares solutions: the response
    // maps the unit observable to itself, making the residual average out).
    let truth = tgt.values.iter().sum::<f64>() / tgt.values.len() as f64;
    let sample = sample_outcomes(&state, &validated.effects, n, seed)?;
    let report = estimate_and_check(&sample, &sol, truth, batches)?;
    print!("{}", to_json_string(&EstimateOutput::from(&report)));
    if report.mse_checked && !report.within_bound {
        return Ok(ExitCode::from(4));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SweepSummary {
    box_label: String,
    weak_value: f64,
    fitted_order: Option<f64>,
    kraus_identity_limit: bool,
    polar_parts_compatible: bool,
    all_points_exact: bool,
    points_total: usize,
    points_usable: usize,
}

fn parse_number(key: &str, v: &str) -> Result<f64, CliError> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(CliError::Input(format!(
            "sweep parameter `{key}` must be a finite number, got `{v}`"
        ))),
    }
}

fn cmd_sweep(params: &[String], out: Option<&Path>) -> Result<ExitCode, CliError> {
    let mut start = 0.1f64;
    let mut stop = 0.01f64;
    let mut points = 7usize;
    let mut box_label = "c".to_string();
    for p in params {
        let (k, v) = parse_key_value(p)?;
        match k {
            "start" => start = parse_number(k, v)?,
            "stop" => stop = parse_number(k, v)?,
            "points" => {
                points = v.parse().map_err(|_| {
                    CliError::Input(format!(
                        "sweep parameter `points` must be a positive integer, got `{v}`"
                    ))
                })?
            }
            "box" => box_label = v.to_string(),
            other => {
                return Err(CliError::Input(format!(
                    "unknown sweep parameter `{other}` (expected start, stop, points, box)"
                )))
            }
        }
    }
    if !(0.0 < stop && stop <= start && start < 1.0) {
        return Err(CliError::Input(format!(
            "sweep needs 0 < stop <= start < 1, got start={start} stop={stop}"
        )));
    }
    if points < 2 {
        return Err(CliError::Input(format!(
            "sweep needs at least 2 points to fit an order, got {points}"
        )));
    }
    let box_index = match box_label.as_str() {
        "a" => 0,
        "b" => 1,
        "c" => 2,
        other => {
            return Err(CliError::Input(format!(
                "unknown box `{other}` (expected a, b, or c)"
            )))
        }
    };

    let grid: Vec<f64> = (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            (start.ln() + (stop.ln() - start.ln()) * t).exp()
        })
        .collect();
    let (rho, z_eff) = three_box_states()?;
    let obs = HermitianOperator::basis_projector(3, box_index);
    let report = weak_limit_sweep(three_box_kraus, &rho, &z_eff, &obs, &grid)?;

    let mut csv = String::from("eps,conditioned_average,deviation\n");
    let mut usable = 0usize;
    for pt in &report.points {
        if let (Some(ca), Some(dev)) = (pt.conditioned_average, pt.deviation) {
            csv.push_str(&format!("{},{ca},{dev}\n", pt.eps));
            usable += 1;
        }
    }
    print!("{csv}");

    if let Some(dir) = out {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
        write_artifact(&dir.join("convergence.csv"), &csv)?;
        let summary = SweepSummary {
            box_label,
            weak_value: report.weak_value,
            fitted_order: report.fitted_order,
            kraus_identity_limit: report.kraus_identity_limit,
            polar_parts_compatible: report.polar_parts_compatible,
            all_points_exact: report.all_points_exact,
            points_total: report.points.len(),
            points_usable: usable,
        };
        write_artifact(&dir.join("summary.json"), &to_json_string(&summary))?;
    }
    Ok(ExitCode::SUCCESS)
}
