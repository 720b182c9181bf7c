//! Scenario files: TOML schema, validation and the resolved form the runner consumes.

use std::path::Path;

use liesys::systems::{self, SYSTEM_NAMES};
use liesys::{FrequencyProfile, HalfPlane, IntegrateOptions, ShapeFunctions, SystemDef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Integrate,
    Drift,
    Superpose,
    Reduce,
    VerifyAlgebra,
    MinimalM,
    GroupSolve,
}

impl Pipeline {
    pub const ALL: [Pipeline; 7] = [
        Pipeline::Integrate,
        Pipeline::Drift,
        Pipeline::Superpose,
        Pipeline::Reduce,
        Pipeline::VerifyAlgebra,
        Pipeline::MinimalM,
        Pipeline::GroupSolve,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Integrate => "integrate",
            Pipeline::Drift => "drift",
            Pipeline::Superpose => "superpose",
            Pipeline::Reduce => "reduce",
            Pipeline::VerifyAlgebra => "verify-algebra",
            Pipeline::MinimalM => "minimal-m",
            Pipeline::GroupSolve => "group-solve",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrequencySpec {
    Constant { value: f64 },
    TwoPlusSine,
    Sinusoidal { offset: f64, amplitude: f64 },
    Step { at: f64, before: f64, after: f64 },
}

impl Default for FrequencySpec {
    fn default() -> Self {
        FrequencySpec::Constant { value: 1.0 }
    }
}

impl FrequencySpec {
    pub fn profile(&self) -> FrequencyProfile {
        match *self {
            FrequencySpec::Constant { value } => FrequencyProfile::constant(value),
            FrequencySpec::TwoPlusSine => FrequencyProfile::two_plus_sine(),
            FrequencySpec::Sinusoidal { offset, amplitude } => FrequencyProfile::sinusoidal(offset, amplitude),
            FrequencySpec::Step { at, before, after } => FrequencyProfile::step(at, before, after),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeSpec {
    Ermakov,
    Quadratic,
}

impl ShapeSpec {
    pub fn functions(self) -> ShapeFunctions {
        match self {
            ShapeSpec::Ermakov => ShapeFunctions::ermakov(),
            ShapeSpec::Quadratic => ShapeFunctions::quadratic(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfPlaneSpec {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub name: String,
    pub k: Option<f64>,
    pub shape: Option<ShapeSpec>,
    pub half_plane: Option<HalfPlaneSpec>,
    #[serde(default)]
    pub frequency: FrequencySpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomStates {
    pub count: usize,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_tol")]
    pub abs: f64,
    #[serde(default = "default_tol")]
    pub rel: f64,
}

fn default_tol() -> f64 {
    liesys::integrate::DEFAULT_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            abs: default_tol(),
            rel: default_tol(),
        }
    }
}

/// Pass/fail limits. Only the limits present in the file are enforced.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Largest change of any state component from its initial value.
    pub max_variation: Option<f64>,
    /// Largest relative invariant drift.
    pub max_drift: Option<f64>,
    pub max_abs_error: Option<f64>,
    pub max_rel_error: Option<f64>,
    /// Bracket closure residual; defaults to 1e-9 for verify-algebra.
    pub max_residual: Option<f64>,
    pub max_det_drift: Option<f64>,
    pub expected_m: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<String>,
    pub stem: Option<String>,
    pub format: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuperposeRule {
    Linear,
    Quadrature,
    Pinney,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperposeSpec {
    pub rule: SuperposeRule,
    pub k_prime: Option<f64>,
    pub k: Option<f64>,
    /// Initial data of the two oscillator solutions used by the Pinney rule.
    pub y: Option<[f64; 2]>,
    pub z: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReduceMethod {
    Dalembert,
    PinneySelf,
    PinneyOsc,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceSpec {
    pub method: ReduceMethod,
    /// Initial data of the particular solution.
    pub particular: [f64; 2],
    pub k_prime: Option<f64>,
    pub k: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    #[serde(default = "default_probe_count")]
    pub count: usize,
    #[serde(default = "default_max_copies")]
    pub max_copies: usize,
    #[serde(default = "default_per_level")]
    pub per_level: usize,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
}

fn default_probe_count() -> usize {
    100
}
fn default_max_copies() -> usize {
    4
}
fn default_per_level() -> usize {
    25
}
fn default_rank_tol() -> f64 {
    liesys::vectorfield::DEFAULT_RANK_TOL
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self {
            count: default_probe_count(),
            max_copies: default_max_copies(),
            per_level: default_per_level(),
            rank_tol: default_rank_tol(),
        }
    }
}

/// The file as written.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: Option<String>,
    pub pipeline: Pipeline,
    #[serde(default)]
    pub seed: u64,
    pub t_span: Option<[f64; 2]>,
    pub system: SystemSpec,
    #[serde(default)]
    pub initial_states: Vec<Vec<f64>>,
    pub random_states: Option<RandomStates>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub output: OutputSpec,
    pub superpose: Option<SuperposeSpec>,
    pub reduce: Option<ReduceSpec>,
    #[serde(default)]
    pub probes: ProbeSpec,
}

/// Command-line adjustments applied on top of the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub pipeline: Pipeline,
    pub seed: u64,
    pub t_span: (f64, f64),
    pub system: SystemDef,
    pub spec: SystemSpec,
    pub shapes: ShapeFunctions,
    pub states: Vec<Vec<f64>>,
    pub options: IntegrateOptions,
    pub thresholds: Thresholds,
    pub out_dir: Option<String>,
    pub stem: String,
    pub superpose: Option<SuperposeSpec>,
    pub reduce: Option<ReduceSpec>,
    pub probes: ProbeSpec,
    /// Random stream shared by random initial states and probe points.
    pub rng: ChaCha8Rng,
}

fn usage(field: &str, message: impl Into<String>) -> CliError {
    CliError::Usage {
        field: field.to_string(),
        message: message.into(),
    }
}

fn positive(field: &str, value: f64) -> Result<f64, CliError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(usage(field, format!("must be positive and finite, got {value}")))
    }
}

/// Build a system from its name and parameters.
pub fn build_system(spec: &SystemSpec) -> Result<(SystemDef, ShapeFunctions), CliError> {
    let shapes = spec.shape.unwrap_or(ShapeSpec::Ermakov).functions();
    let mut sys = systems::by_name(&spec.name, spec.frequency.profile(), spec.k, Some(shapes.clone())).ok_or_else(|| {
        usage("system.name", format!("unknown system `{}` (known: {})", spec.name, SYSTEM_NAMES.join(", ")))
    })?;
    if let Some(k) = spec.k {
        if !k.is_finite() {
            return Err(usage("system.k", "must be finite"));
        }
        if !matches!(spec.name.as_str(), "milne_pinney" | "pinney_triple") {
            return Err(usage("system.k", format!("`{}` takes no k", spec.name)));
        }
    }
    if spec.shape.is_some() && spec.name != "generalized_ermakov" {
        return Err(usage("system.shape", format!("`{}` takes no shape", spec.name)));
    }
    if let Some(h) = spec.half_plane {
        sys = sys.with_half_plane(match h {
            HalfPlaneSpec::Positive => HalfPlane::Positive,
            HalfPlaneSpec::Negative => HalfPlane::Negative,
        });
    }
    Ok((sys, shapes))
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage {
            field: e
                .span()
                .map(|s| format!("line {}", text[..s.start].matches('\n').count() + 1))
                .unwrap_or_else(|| "scenario".into()),
            message: e.message().to_string(),
        })
    }

    pub fn validate(self, fallback_name: &str, overrides: Overrides) -> Result<Scenario, CliError> {
        let (system, shapes) = build_system(&self.system)?;
        let seed = overrides.seed.unwrap_or(self.seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let t_span = match self.t_span {
            Some([a, b]) if a.is_finite() && b.is_finite() && b > a => (a, b),
            Some(_) => return Err(usage("t_span", "needs finite [start, end] with end > start")),
            None if matches!(self.pipeline, Pipeline::VerifyAlgebra | Pipeline::MinimalM) => (0.0, 0.0),
            None => return Err(usage("t_span", "required for this pipeline")),
        };

        let mut options = IntegrateOptions::with_tol(
            positive("tolerances.abs", self.tolerances.abs)?,
            positive("tolerances.rel", self.tolerances.rel)?,
        );
        if let Some(tol) = overrides.tol {
            let tol = positive("--tol-override", tol)?;
            options.abs_tol = tol;
            options.rel_tol = tol;
        }

        let mut states = self.initial_states;
        if let Some(r) = &self.random_states {
            if r.low.len() != system.dim() || r.high.len() != system.dim() {
                return Err(usage("random_states", format!("low/high need {} entries", system.dim())));
            }
            if r.low.iter().zip(&r.high).any(|(l, h)| l.partial_cmp(h) != Some(std::cmp::Ordering::Less)) {
                return Err(usage("random_states", "every low must be below its high"));
            }
            for _ in 0..r.count {
                states.push(r.low.iter().zip(&r.high).map(|(l, h)| rng.random_range(*l..*h)).collect());
            }
        }
        let state_dim = match (self.pipeline, self.system.name.as_str()) {
            // Pinney-rule and reduction targets are (x, v) pairs.
            (Pipeline::Superpose | Pipeline::Reduce, _) => 2,
            _ => system.dim(),
        };
        for (i, s) in states.iter().enumerate() {
            if s.len() != state_dim {
                return Err(usage(
                    &format!("initial_states[{i}]"),
                    format!("has {} entries, `{}` needs {state_dim}", s.len(), self.system.name),
                ));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(usage(&format!("initial_states[{i}]"), "entries must be finite"));
            }
        }

        let needs_states = !matches!(self.pipeline, Pipeline::VerifyAlgebra | Pipeline::MinimalM | Pipeline::GroupSolve);
        let dalembert = self.reduce.as_ref().is_some_and(|r| r.method == ReduceMethod::Dalembert);
        if needs_states && states.is_empty() && !dalembert {
            return Err(usage("initial_states", "at least one initial state is required"));
        }
        for (field, value) in [
            ("thresholds.max_variation", self.thresholds.max_variation),
            ("thresholds.max_drift", self.thresholds.max_drift),
            ("thresholds.max_abs_error", self.thresholds.max_abs_error),
            ("thresholds.max_rel_error", self.thresholds.max_rel_error),
            ("thresholds.max_residual", self.thresholds.max_residual),
            ("thresholds.max_det_drift", self.thresholds.max_det_drift),
        ] {
            if let Some(v) = value {
                positive(field, v)?;
            }
        }
        if let Some(f) = &self.output.format {
            if f != "csv" {
                return Err(usage("output.format", format!("only `csv` is supported, got `{f}`")));
            }
        }

        let expect = |want: &[&str], field: &str| -> Result<(), CliError> {
            if want.contains(&self.system.name.as_str()) {
                Ok(())
            } else {
                Err(usage(field, format!("needs system {}, got `{}`", want.join(" or "), self.system.name)))
            }
        };
        match self.pipeline {
            Pipeline::Superpose => {
                let s = self.superpose.as_ref().ok_or_else(|| usage("superpose", "table required"))?;
                match s.rule {
                    SuperposeRule::Linear => {
                        expect(&["oscillator_1d"], "superpose.rule")?;
                        if states.len() != 3 {
                            return Err(usage("initial_states", "linear rule takes two reference states and a target"));
                        }
                    }
                    SuperposeRule::Quadrature => {
                        expect(&["oscillator_1d"], "superpose.rule")?;
                        if s.k_prime.is_none() || s.k.is_none() {
                            return Err(usage("superpose.k_prime", "quadrature rule needs k_prime and k"));
                        }
                    }
                    SuperposeRule::Pinney => expect(&["milne_pinney"], "superpose.rule")?,
                }
            }
            Pipeline::Reduce => {
                let r = self.reduce.as_ref().ok_or_else(|| usage("reduce", "table required"))?;
                match r.method {
                    ReduceMethod::Dalembert => {
                        expect(&["oscillator_1d"], "reduce.method")?;
                        if r.k_prime.is_none() || r.k.is_none() {
                            return Err(usage("reduce.k_prime", "dalembert reduction needs k_prime and k"));
                        }
                    }
                    ReduceMethod::PinneySelf | ReduceMethod::PinneyOsc => expect(&["milne_pinney"], "reduce.method")?,
                }
            }
            Pipeline::Drift => expect(
                &["oscillator_2d", "ermakov", "generalized_ermakov", "pinney_triple"],
                "pipeline",
            )?,
            Pipeline::GroupSolve => {
                if !states.is_empty() {
                    expect(&["oscillator_1d", "milne_pinney"], "initial_states")?;
                }
            }
            Pipeline::MinimalM => {
                if self.probes.max_copies == 0 {
                    return Err(usage("probes.max_copies", "must be at least 1"));
                }
            }
            Pipeline::Integrate | Pipeline::VerifyAlgebra => {}
        }
        if self.probes.count == 0 {
            return Err(usage("probes.count", "must be at least 1"));
        }
        positive("probes.rank_tol", self.probes.rank_tol)?;

        let name = self.name.unwrap_or_else(|| fallback_name.to_string());
        let stem = self.output.stem.unwrap_or_else(|| name.clone());
        if stem.is_empty() || stem.contains(['/', '\\']) {
            return Err(usage("output.stem", "must be a plain file name"));
        }
        Ok(Scenario {
            name,
            pipeline: self.pipeline,
            seed,
            t_span,
            system,
            spec: self.system,
            shapes,
            states,
            options,
            thresholds: self.thresholds,
            out_dir: self.output.dir,
            stem,
            superpose: self.superpose,
            reduce: self.reduce,
            probes: self.probes,
            rng,
        })
    }
}

/// Read, parse and validate a scenario file.
pub fn load(path: &Path, overrides: Overrides) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let fallback = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    ScenarioFile::parse(&text)?.validate(fallback, overrides)
}
