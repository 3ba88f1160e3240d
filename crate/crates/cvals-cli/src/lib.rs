//! On-disk artifact formats and conversions for the `cvals` command-line
//! front end: detector and target descriptions in JSON, solver and
//! estimator output schemas, and the validation layer between files and
//! library types.
//!
//! File-level tolerances are deliberately looser than library ones: rows of
//! a likelihood (and coupling distributions) may sum to 1 within 1e-9 and
//! are renormalized exactly before constructing library objects.

use std::fmt;
use std::path::Path;

use cvals::detector::{CouplingSpec, DetectorResponse, EffectSet, OutcomeChannel};
use cvals::estimator::EstimatorReport;
use cvals::prob::{ProbState, SampleSpace, TransitionKernel};
use cvals::solver::CvSolution;
use serde::{Deserialize, Serialize};

/// Row sums (and distributions) in input files may deviate from 1 by this
/// much; they are renormalized exactly afterwards.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Maximum deviation between a coupling's effective response and the
/// stated likelihood before the detector file is rejected as inconsistent.
pub const COUPLING_CONSISTENCY_TOL: f64 = 1e-9;

/// Errors raised by the command-line layer, tagged with the exit code they
/// map to: unreadable/invalid artifacts and library validation errors exit
/// with 2, numerical failures with 3.
#[derive(Debug)]
pub enum CliError {
    /// An input artifact is missing, unparsable, or inconsistent.
    Input(String),
    /// An output artifact could not be written.
    Output(String),
    /// The underlying library rejected the request.
    Lib(cvals::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "invalid input: {msg}"),
            CliError::Output(msg) => write!(f, "cannot write output: {msg}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<cvals::Error> for CliError {
    fn from(e: cvals::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    /// Exit code for the process contract: 2 for validation problems,
    /// 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(cvals::Error::Numerical(_)) => 3,
            _ => 2,
        }
    }
}

fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

/// JSON description of a detector: system atom labels, outcome labels, and
/// the likelihood matrix `P(y|x)` (one row per system atom). An optional
/// coupling block gives the invasive realization as a detector prior plus a
/// joint transition kernel on the system-detector product space; its
/// effective response must reproduce the likelihood.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorFile {
    pub system_atoms: Vec<String>,
    pub detector_outcomes: Vec<String>,
    pub likelihood: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingFile>,
}

/// Invasive realization of a detector: marginal outcome distribution and
/// the row-stochastic joint kernel on the product space (system-major
/// ordering, `index = x * outcomes + y`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingFile {
    pub prior: Vec<f64>,
    pub joint_kernel: Vec<Vec<f64>>,
}

/// JSON description of the target observable: one value per system atom,
/// in `system_atoms` order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetFile {
    pub values: Vec<f64>,
}

/// A detector file after validation: the response (with exactly normalized
/// rows), its effect set, and the invasive outcome channel when a coupling
/// block was given.
#[derive(Debug, Clone)]
pub struct ValidatedDetector {
    pub response: DetectorResponse,
    pub effects: EffectSet,
    pub channel: Option<OutcomeChannel>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

/// Serializes `value` as pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

/// Checks a distribution-like row (finite, nonnegative, sums to 1 within
/// [`ROW_SUM_TOL`]) and renormalizes it exactly.
fn normalized_row(row: &[f64], what: &str) -> Result<Vec<f64>, CliError> {
    let mut sum = 0.0;
    for &p in row {
        if !p.is_finite() || p < 0.0 {
            return Err(input_err(format!(
                "{what} contains {p}; entries must be finite and nonnegative"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(input_err(format!(
            "{what} sums to {sum}, expected 1 within {ROW_SUM_TOL:e}"
        )));
    }
    Ok(row.iter().map(|p| p / sum).collect())
}

impl DetectorFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        read_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, to_json_string(self))
            .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
    }

    /// Rebuilds the file representation from an effect set, reading the
    /// likelihood off the effect values.
    pub fn from_effects(effects: &EffectSet) -> Self {
        let nx = effects.system().len();
        let ny = effects.detector().len();
        let likelihood = (0..nx)
            .map(|x| (0..ny).map(|y| effects.effect(y).value(x)).collect())
            .collect();
        DetectorFile {
            system_atoms: effects.system().atoms().to_vec(),
            detector_outcomes: effects.detector().atoms().to_vec(),
            likelihood,
            coupling: None,
        }
    }

    /// Validates shapes, entry ranges, row sums, and (when present) the
    /// consistency of the coupling block with the stated likelihood.
    pub fn validate(&self) -> Result<ValidatedDetector, CliError> {
        let system = SampleSpace::new(self.system_atoms.clone()).map_err(CliError::Lib)?;
        let detector =
            SampleSpace::new(self.detector_outcomes.clone()).map_err(CliError::Lib)?;
        let nx = system.len();
        let ny = detector.len();
        if self.likelihood.len() != nx {
            return Err(input_err(format!(
                "likelihood has {} rows for {nx} system atoms",
                self.likelihood.len()
            )));
        }
        let mut rows = Vec::with_capacity(nx);
        for (x, row) in self.likelihood.iter().enumerate() {
            if row.len() != ny {
                return Err(input_err(format!(
                    "likelihood row {x} has {} entries for {ny} outcomes",
                    row.len()
                )));
            }
            rows.push(normalized_row(row, &format!("likelihood row {x}"))?);
        }
        let response = DetectorResponse::new(&system, &detector, rows).map_err(CliError::Lib)?;
        let effects = EffectSet::from_response(&response);
        let channel = match &self.coupling {
            None => None,
            Some(c) => Some(build_coupling(&system, &detector, &response, c)?),
        };
        Ok(ValidatedDetector { response, effects, channel })
    }
}

fn build_coupling(
    system: &SampleSpace,
    detector: &SampleSpace,
    response: &DetectorResponse,
    coupling: &CouplingFile,
) -> Result<OutcomeChannel, CliError> {
    let ny = detector.len();
    if coupling.prior.len() != ny {
        return Err(input_err(format!(
            "coupling prior has {} entries for {ny} outcomes",
            coupling.prior.len()
        )));
    }
    let prior_probs = normalized_row(&coupling.prior, "coupling prior")?;
    let prior = ProbState::new(detector, prior_probs).map_err(CliError::Lib)?;

    let joint = system.product(detector);
    let dim = joint.len();
    if coupling.joint_kernel.len() != dim {
        return Err(input_err(format!(
            "joint kernel has {} rows for a {dim}-atom product space",
            coupling.joint_kernel.len()
        )));
    }
    let mut rows = Vec::with_capacity(dim);
    for (i, row) in coupling.joint_kernel.iter().enumerate() {
        if row.len() != dim {
            return Err(input_err(format!(
                "joint kernel row {i} has {} entries for {dim} product atoms",
                row.len()
            )));
        }
        rows.push(normalized_row(row, &format!("joint kernel row {i}"))?);
    }
    let kernel = TransitionKernel::new(&joint, &joint, rows).map_err(CliError::Lib)?;
    let spec = CouplingSpec::new(system, &prior, &kernel).map_err(CliError::Lib)?;
    let channel = OutcomeChannel::from_coupling(&spec).map_err(CliError::Lib)?;

    // The coupling is an implementation of the stated likelihood; reject
    // files whose two halves disagree.
    let effective = channel.effective_response().map_err(CliError::Lib)?;
    let mut worst = 0.0f64;
    for x in 0..system.len() {
        for y in 0..ny {
            worst = worst.max(
                (effective.likelihood(x, y) - response.likelihood(x, y)).abs(),
            );
        }
    }
    if worst > COUPLING_CONSISTENCY_TOL {
        return Err(input_err(format!(
            "coupling's effective response deviates from the likelihood by {worst:.3e} \
             (allowed {COUPLING_CONSISTENCY_TOL:e})"
        )));
    }
    Ok(channel)
}

impl TargetFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        read_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, to_json_string(self))
            .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
    }
}

/// JSON schema of `cvals solve` standard output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOutput {
    pub contextual_values: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub residual: f64,
    pub norm_sq: f64,
    pub exact: bool,
}

impl From<&CvSolution> for SolveOutput {
    fn from(sol: &CvSolution) -> Self {
        SolveOutput {
            contextual_values: sol.values.clone(),
            singular_values: sol.singular_values.clone(),
            rank: sol.rank,
            residual: sol.residual,
            norm_sq: sol.norm_sq,
            exact: sol.exact,
        }
    }
}

/// JSON schema of `cvals estimate` standard output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateOutput {
    pub mean: f64,
    pub empirical_mse: f64,
    pub bound: f64,
    pub slack: f64,
    pub within_bound: bool,
    pub mse_checked: bool,
}

impl From<&EstimatorReport> for EstimateOutput {
    fn from(r: &EstimatorReport) -> Self {
        EstimateOutput {
            mean: r.mean,
            empirical_mse: r.empirical_mse,
            bound: r.bound,
            slack: r.slack,
            within_bound: r.within_bound,
            mse_checked: r.mse_checked,
        }
    }
}

/// Splits a repeatable `KEY=VALUE` flag argument at the first `=`.
pub fn parse_key_value(arg: &str) -> Result<(&str, &str), CliError> {
    match arg.split_once('=') {
        Some((k, v)) if !k.is_empty() => Ok((k, v)),
        _ => Err(input_err(format!(
            "expected KEY=VALUE, got `{arg}`"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn marble_file() -> DetectorFile {
        DetectorFile {
            system_atoms: vec!["g".into(), "r".into()],
            detector_outcomes: vec!["b".into(), "y".into()],
            likelihood: vec![vec![0.6, 0.4], vec![0.2, 0.8]],
            coupling: None,
        }
    }

    #[test]
    fn detector_roundtrips_through_effects() {
        let file = marble_file();
        let validated = file.validate().unwrap();
        let rebuilt = DetectorFile::from_effects(&validated.effects);
        assert_eq!(rebuilt.system_atoms, file.system_atoms);
        assert_eq!(rebuilt.detector_outcomes, file.detector_outcomes);
        assert_eq!(rebuilt.likelihood, file.likelihood);
    }

    #[test]
    fn row_sums_get_the_loose_gate_then_exact_normalization() {
        let mut file = marble_file();
        file.likelihood[0][0] = 0.6 + 5e-10;
        let validated = file.validate().unwrap();
        let sum: f64 = validated.response.rows()[0].iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);

        file.likelihood[0][0] = 0.5; // row sums to 0.9
        let err = file.validate().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("sums to 0.9"));
    }

    #[test]
    fn rejects_shape_mismatches_and_bad_entries() {
        let mut file = marble_file();
        file.likelihood.push(vec![0.5, 0.5]);
        assert!(file.validate().is_err());

        let mut file = marble_file();
        file.likelihood[1] = vec![0.2, 0.3, 0.5];
        assert!(file.validate().is_err());

        let mut file = marble_file();
        file.likelihood[0][0] = -0.1;
        file.likelihood[0][1] = 1.1;
        assert!(file.validate().is_err());
    }

    #[test]
    fn coupling_must_reproduce_the_likelihood() {
        // Noninvasive coupling for the marble detector: the joint kernel
        // leaves the system atom alone and resamples the detector outcome
        // with the likelihood of that atom.
        let mut rows = Vec::new();
        for x in 0..2usize {
            for _y in 0..2usize {
                let mut row = vec![0.0; 4];
                let like = [[0.6, 0.4], [0.2, 0.8]][x];
                row[2 * x] = like[0];
                row[2 * x + 1] = like[1];
                rows.push(row);
            }
        }
        let mut file = marble_file();
        file.coupling = Some(CouplingFile {
            prior: vec![0.5, 0.5],
            joint_kernel: rows.clone(),
        });
        let validated = file.validate().unwrap();
        assert!(validated.channel.is_some());

        // A kernel implementing a different response is rejected.
        let mut wrong = marble_file();
        wrong.likelihood = vec![vec![0.7, 0.3], vec![0.2, 0.8]];
        wrong.coupling = Some(CouplingFile { prior: vec![0.5, 0.5], joint_kernel: rows });
        let err = wrong.validate().unwrap_err();
        assert!(err.to_string().contains("effective response"));
    }

    #[test]
    fn key_value_parsing() {
        assert_eq!(parse_key_value("eps=0.05").unwrap(), ("eps", "0.05"));
        assert_eq!(parse_key_value("b=-1.875").unwrap(), ("b", "-1.875"));
        assert!(parse_key_value("eps").is_err());
        assert!(parse_key_value("=3").is_err());
    }
}
