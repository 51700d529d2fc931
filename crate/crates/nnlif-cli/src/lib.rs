//! Batch front end: reads a scenario config, runs it on `nnlif-core` and
//! renders byte-stable artifacts.
//!
//! Nothing is written until a scenario has finished, so a failed run leaves
//! no partial outputs.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod scenarios;
mod setup;

use std::path::{Path, PathBuf};

use nnlif_core::output::{write_artifacts, Summary};
use nnlif_core::NnlifError;
use thiserror::Error;

pub use config::Config;
pub use setup::Setup;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<NnlifError> for CliError {
    fn from(e: NnlifError) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

/// Exit code for a simulate run that raised the blow-up flag.
pub const EXIT_BLOW_UP: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Simulate,
    Steady,
    StefanOracle,
    Entropy,
    PeriodicityScan,
    ParticleCompare,
    SupersolutionCheck,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Simulate,
        Scenario::Steady,
        Scenario::StefanOracle,
        Scenario::Entropy,
        Scenario::PeriodicityScan,
        Scenario::ParticleCompare,
        Scenario::SupersolutionCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Simulate => "simulate",
            Scenario::Steady => "steady",
            Scenario::StefanOracle => "stefan-oracle",
            Scenario::Entropy => "entropy",
            Scenario::PeriodicityScan => "periodicity-scan",
            Scenario::ParticleCompare => "particle-compare",
            Scenario::SupersolutionCheck => "supersolution-check",
        }
    }

    pub fn parse(name: &str) -> Result<Self, CliError> {
        Self::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| CliError::Validation(format!("unknown scenario {name:?}")))
    }
}

/// Summary and files of a finished scenario.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Summary,
    /// `(file name, contents)`, written in this order.
    pub files: Vec<(String, String)>,
    /// Set by `simulate` when the refinement-validated blow-up flag was raised.
    pub blow_up: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.blow_up {
            EXIT_BLOW_UP
        } else {
            0
        }
    }

    /// The rendered summary text.
    pub fn summary_text(&self) -> String {
        self.summary.render()
    }
}

/// Runs `scenario` on `config`; `seed` overrides `[output] seed`.
pub fn run(scenario: Scenario, config: &Config, seed: Option<u64>) -> Result<Outcome, CliError> {
    let seed = match seed {
        Some(s) => s,
        None => config.u64_or("output", "seed", 0)?,
    };
    let mut outcome = scenarios::dispatch(scenario, config, seed)?;
    let s = &mut outcome.summary;
    s.set("scenario", scenario.name())?;
    s.set("seed", seed as i64)?;
    outcome
        .files
        .push(("config.ini".into(), config.text.clone()));
    outcome
        .files
        .push(("summary.txt".into(), outcome.summary.render()));
    Ok(outcome)
}

/// Output directory: `--out` if given, else `[output] dir`, else `out`.
pub fn output_dir(config: &Config, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(config.str_or("output", "dir", "out")))
}

/// Runs and writes the artifacts; returns the process exit code.
pub fn run_to_dir(
    scenario: Scenario,
    config_path: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
) -> Result<i32, CliError> {
    let config = Config::from_file(config_path)?;
    let outcome = run(scenario, &config, seed)?;
    let dir = output_dir(&config, out);
    write_artifacts(&dir, &outcome.files)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", dir.display())))?;
    Ok(outcome.exit_code())
}
