//! Scenario runner for the `liesys` workbench.
//!
//! A scenario is a TOML file naming a system, its parameters, initial data and
//! one pipeline. Running it writes CSV series plus a JSON summary and maps the
//! outcome to an exit status.

pub mod output;
pub mod run;
pub mod scenario;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use liesys::group::GroupError;
use liesys::integrate::{IntegrationError, TrajectoryError};
use liesys::invariants::InvariantError;
use liesys::superposition::SuperpositionError;
use liesys::systems::SYSTEM_NAMES;
use liesys::vectorfield::FieldError;
use liesys::verify::{run_all, CriterionReport};
use thiserror::Error;

use crate::output::{num, write_atomic, Summary, Table};
use crate::scenario::{Overrides, Pipeline};

/// Exit status for a run in which every threshold held.
pub const EXIT_PASS: u8 = 0;
/// Exit status when a threshold was violated.
pub const EXIT_THRESHOLD: u8 = 1;
/// Exit status for invalid arguments or scenario files.
pub const EXIT_USAGE: u8 = 2;
/// Exit status for numerical failures and output errors.
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid `{field}`: {message}")]
    Usage { field: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{message}")]
    Runtime { message: String, last_good_time: Option<f64> },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage { .. } => EXIT_USAGE,
            CliError::Io { .. } | CliError::Runtime { .. } => EXIT_RUNTIME,
        }
    }

    fn runtime(message: impl ToString, last_good_time: Option<f64>) -> Self {
        CliError::Runtime {
            message: message.to_string(),
            last_good_time,
        }
    }
}

fn group_last_good(e: &GroupError) -> Option<f64> {
    match e {
        GroupError::Integration(i) => i.last_good_time(),
        _ => None,
    }
}

impl From<IntegrationError> for CliError {
    fn from(e: IntegrationError) -> Self {
        let t = e.last_good_time();
        Self::runtime(e, t)
    }
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> Self {
        let t = group_last_good(&e);
        Self::runtime(e, t)
    }
}

impl From<SuperpositionError> for CliError {
    fn from(e: SuperpositionError) -> Self {
        let t = match &e {
            SuperpositionError::Group(g) => group_last_good(g),
            _ => None,
        };
        Self::runtime(e, t)
    }
}

impl From<TrajectoryError> for CliError {
    fn from(e: TrajectoryError) -> Self {
        Self::runtime(e, None)
    }
}

impl From<InvariantError> for CliError {
    fn from(e: InvariantError) -> Self {
        Self::runtime(e, None)
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        Self::runtime(e, None)
    }
}

/// Outcome of one scenario file in a batch.
#[derive(Debug)]
pub struct BatchItem {
    pub path: PathBuf,
    pub result: Result<Summary, CliError>,
}

impl BatchItem {
    pub fn exit_code(&self) -> u8 {
        match &self.result {
            Ok(s) => s.exit_code,
            Err(e) => e.exit_code(),
        }
    }
}

/// Validate and run one scenario file.
pub fn run_file(path: &Path, out: Option<&Path>, overrides: Overrides) -> Result<Summary, CliError> {
    let mut sc = scenario::load(path, overrides)?;
    let dir = output::resolve_out_dir(out, sc.out_dir.as_deref());
    run::run_scenario(&mut sc, &dir)
}

/// Run scenario files in parallel, one thread each; results keep input order.
pub fn run_batch(paths: &[PathBuf], out: Option<&Path>, overrides: Overrides) -> Vec<BatchItem> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = paths
            .iter()
            .map(|p| scope.spawn(move || run_file(p, out, overrides)))
            .collect();
        paths
            .iter()
            .zip(handles)
            .map(|(p, h)| BatchItem {
                path: p.clone(),
                result: h.join().unwrap_or_else(|_| Err(CliError::runtime("scenario thread panicked", None))),
            })
            .collect()
    })
}

/// Combined status of a batch: the largest individual exit code.
pub fn batch_exit_code(items: &[BatchItem]) -> u8 {
    items.iter().map(BatchItem::exit_code).max().unwrap_or(EXIT_PASS)
}

/// Quote a CSV text cell when needed.
fn text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Built-in acceptance suite: criteria results plus the written file names.
pub fn run_verify(seed: u64, out_dir: &Path) -> Result<(Vec<CriterionReport>, Vec<String>), CliError> {
    let reports = run_all(seed);
    let mut table = Table::new(["criterion", "check", "value", "threshold", "passed"]);
    for r in &reports {
        for c in &r.checks {
            table.push_cells(vec![
                r.id.to_string(),
                text(&c.label),
                num(c.value),
                num(c.threshold),
                u8::from(c.passed).to_string(),
            ]);
        }
    }
    write_atomic(&out_dir.join("verify.csv"), table.render().as_bytes())?;
    let mut summary = Table::new(["criterion", "title", "passed"]);
    for r in &reports {
        summary.push_cells(vec![r.id.to_string(), text(r.title), u8::from(r.passed()).to_string()]);
    }
    write_atomic(&out_dir.join("verify_summary.csv"), summary.render().as_bytes())?;
    Ok((reports, vec!["verify.csv".into(), "verify_summary.csv".into()]))
}

/// Human-readable catalog of systems, profiles, shapes and pipelines.
pub fn catalog() -> String {
    let mut s = String::new();
    let w = |s: &mut String, line: &str| writeln!(s, "{line}").unwrap();
    w(&mut s, "systems ([system] name = ...):");
    for name in SYSTEM_NAMES {
        let params = match name {
            "milne_pinney" | "pinney_triple" => "k (default 1), half_plane, frequency",
            "generalized_ermakov" => "shape (ermakov | quadratic), half_plane, frequency",
            "ermakov" => "half_plane, frequency",
            _ => "frequency",
        };
        let sys = liesys::systems::by_name(name, liesys::FrequencyProfile::constant(1.0), None, None).unwrap();
        writeln!(s, "  {name:<20} state ({})  params: {params}", sys.coordinates().join(", ")).unwrap();
    }
    w(&mut s, "frequency profiles ([system.frequency] kind = ...):");
    w(&mut s, "  constant             value");
    w(&mut s, "  two_plus_sine        (omega^2 = 2 + sin t)");
    w(&mut s, "  sinusoidal           offset, amplitude");
    w(&mut s, "  step                 at, before, after");
    w(&mut s, "shape functions ([system] shape = ...):");
    w(&mut s, "  ermakov              f = 0, g = 1");
    w(&mut s, "  quadratic            f = u^2, g = 1");
    w(&mut s, "pipelines (pipeline = ...):");
    for p in Pipeline::ALL {
        let params = match p {
            Pipeline::Integrate => "t_span, initial_states; thresholds.max_variation",
            Pipeline::Drift => "t_span, initial_states; thresholds.max_drift",
            Pipeline::Superpose => {
                "[superpose] rule = linear | quadrature | pinney, k_prime, k, y, z; thresholds.max_abs_error, max_rel_error"
            }
            Pipeline::Reduce => {
                "[reduce] method = dalembert | pinney-self | pinney-osc, particular, k_prime, k; thresholds.max_rel_error, max_det_drift"
            }
            Pipeline::VerifyAlgebra => "[probes] count; thresholds.max_residual (default 1e-9)",
            Pipeline::MinimalM => "[probes] max_copies, per_level, rank_tol; thresholds.expected_m",
            Pipeline::GroupSolve => "t_span, optional initial_states; thresholds.max_det_drift, max_rel_error",
        };
        writeln!(s, "  {:<20} {params}", p.name()).unwrap();
    }
    s
}
