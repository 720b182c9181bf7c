//! Pipeline execution.

use std::collections::BTreeMap;
use std::path::Path;

use liesys::group::{
    linear_action, oscillator_algebra_curve, pinney_action, reduce_oscillator, reduce_pinney_from_oscillator,
    reduce_pinney_from_pinney, solve_group_equation, Reduction,
};
use liesys::invariants::{
    angular_momentum, drift, ermakov_pair_invariants, generalized_invariant, lewis_ermakov, InvariantError,
    DEFAULT_QUAD_TOL,
};
use liesys::superposition::{keys_from, linear_rule, pinney_rule_from_solutions, quadrature_series};
use liesys::systems::oscillator_1d;
use liesys::vectorfield::{closure_residual, minimal_m, MinimalM};
use liesys::verify::{normwise_rel_error, pointwise_rel_error, resample};
use liesys::Trajectory;

use crate::output::{write_atomic, Status, Summary, Table, ThresholdCheck};
use crate::scenario::{Pipeline, ReduceMethod, Scenario, SuperposeRule};
use crate::CliError;

/// Everything a pipeline produces before it is written out.
#[derive(Debug, Default)]
pub struct Report {
    /// `(file suffix, table)`; the file is `<stem><suffix>.csv`.
    pub tables: Vec<(String, Table)>,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<ThresholdCheck>,
    pub notes: Vec<String>,
}

impl Report {
    fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    fn limit(&mut self, name: &str, value: f64, limit: Option<f64>) {
        if let Some(l) = limit {
            self.checks.push(ThresholdCheck::at_most(name, value, l));
        }
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn suffix(i: usize, n: usize) -> String {
    if n == 1 {
        String::new()
    } else {
        format!("_{i}")
    }
}

/// Running maximum of the absolute and relative errors across several series.
#[derive(Debug, Default, Clone, Copy)]
struct Errors {
    abs: f64,
    rel: f64,
}

impl Errors {
    fn absorb(&mut self, value: &[f64], oracle: &[f64], pointwise: bool) {
        let abs = value.iter().zip(oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let rel = if pointwise {
            pointwise_rel_error(value, oracle)
        } else {
            normwise_rel_error(value, oracle)
        };
        self.abs = self.abs.max(abs);
        self.rel = self.rel.max(rel);
    }

    fn record(self, report: &mut Report, sc: &Scenario) {
        report.metric("max_abs_error", self.abs);
        report.metric("max_rel_error", self.rel);
        report.limit("max_abs_error", self.abs, sc.thresholds.max_abs_error);
        report.limit("max_rel_error", self.rel, sc.thresholds.max_rel_error);
    }
}

fn comparison_table(times: &[f64], value: &[f64], oracle: &[f64]) -> Table {
    let mut table = Table::new(["t", "value", "oracle", "abs_err"]);
    for ((t, v), o) in times.iter().zip(value).zip(oracle) {
        table.push(&[*t, *v, *o, (v - o).abs()]);
    }
    table
}

fn pinney_k(sc: &Scenario) -> f64 {
    sc.spec.k.unwrap_or(1.0)
}

/// Run the scenario's pipeline in memory.
pub fn execute(sc: &mut Scenario) -> Result<Report, CliError> {
    let mut report = Report::default();
    match sc.pipeline {
        Pipeline::Integrate => integrate(sc, &mut report)?,
        Pipeline::Drift => invariant_drift(sc, &mut report)?,
        Pipeline::Superpose => superpose(sc, &mut report)?,
        Pipeline::Reduce => reduce(sc, &mut report)?,
        Pipeline::VerifyAlgebra => verify_algebra(sc, &mut report)?,
        Pipeline::MinimalM => rank_search(sc, &mut report)?,
        Pipeline::GroupSolve => group_solve(sc, &mut report)?,
    }
    Ok(report)
}

fn integrate(sc: &Scenario, report: &mut Report) -> Result<(), CliError> {
    let mut variation: f64 = 0.0;
    let mut samples = 0;
    for (i, s0) in sc.states.iter().enumerate() {
        let tr = sc.system.integrate(s0, sc.t_span, &sc.options)?;
        let mut table = Table::new(std::iter::once("t").chain(sc.system.coordinates().iter().copied()));
        for (t, s) in tr.times().iter().zip(tr.states()) {
            let mut row = vec![*t];
            row.extend(s);
            table.push(&row);
            for (a, b) in s.iter().zip(s0) {
                variation = variation.max((a - b).abs());
            }
        }
        samples += tr.len();
        report.tables.push((suffix(i, sc.states.len()), table));
    }
    report.metric("samples", samples as f64);
    report.metric("max_variation", variation);
    report.limit("max_variation", variation, sc.thresholds.max_variation);
    Ok(())
}

type Invariant<'a> = Box<dyn Fn(&[f64]) -> Result<f64, InvariantError> + 'a>;

fn catalogued_invariants(sc: &Scenario) -> Vec<(&'static str, Invariant<'_>)> {
    let k = pinney_k(sc);
    match sc.spec.name.as_str() {
        "oscillator_2d" => vec![("angular_momentum", Box::new(|s: &[f64]| Ok(angular_momentum(s[0], s[1], s[2], s[3]))))],
        "ermakov" => vec![("lewis_ermakov", Box::new(|s: &[f64]| lewis_ermakov(s[0], s[2], s[1], s[3])))],
        "generalized_ermakov" => vec![(
            "generalized_invariant",
            Box::new(|s: &[f64]| generalized_invariant(s[0], s[2], s[1], s[3], &sc.shapes, DEFAULT_QUAD_TOL)),
        )],
        "pinney_triple" => vec![
            ("i1", Box::new(move |s: &[f64]| Ok(ermakov_pair_invariants(s, k)?.i1)) as Invariant),
            ("i2", Box::new(move |s: &[f64]| Ok(ermakov_pair_invariants(s, k)?.i2))),
            ("wronskian", Box::new(move |s: &[f64]| Ok(ermakov_pair_invariants(s, k)?.w))),
        ],
        _ => Vec::new(),
    }
}

fn invariant_drift(sc: &Scenario, report: &mut Report) -> Result<(), CliError> {
    let invariants = catalogued_invariants(sc);
    let mut worst = BTreeMap::<&str, f64>::new();
    for (i, s0) in sc.states.iter().enumerate() {
        let tr = sc.system.integrate(s0, sc.t_span, &sc.options)?;
        let mut series = Vec::new();
        for (label, f) in &invariants {
            let s = drift(&tr, label, f);
            if let Some((t, e)) = &s.failure {
                return Err(CliError::Runtime {
                    message: format!("{label} undefined at t = {t}: {e}"),
                    last_good_time: s.times.last().copied(),
                });
            }
            let w = worst.entry(label).or_insert(0.0);
            *w = w.max(s.drift_rel);
            series.push(s);
        }
        let header = std::iter::once("t".to_string())
            .chain(invariants.iter().flat_map(|(l, _)| [l.to_string(), format!("{l}_drift")]));
        let mut table = Table::new(header);
        for (j, t) in tr.times().iter().enumerate() {
            let mut row = vec![*t];
            for s in &series {
                row.push(s.values[j]);
                row.push((s.values[j] - s.values[0]).abs());
            }
            table.push(&row);
        }
        report.tables.push((suffix(i, sc.states.len()), table));
    }
    let max = worst.values().copied().fold(0.0, f64::max);
    for (label, w) in worst {
        report.metric(&format!("drift_rel.{label}"), w);
    }
    report.metric("max_drift", max);
    report.limit("max_drift", max, sc.thresholds.max_drift);
    Ok(())
}

fn superpose(sc: &Scenario, report: &mut Report) -> Result<(), CliError> {
    let spec = sc.superpose.as_ref().expect("validated");
    let mut errors = Errors::default();
    match spec.rule {
        SuperposeRule::Linear => {
            let tr: Vec<Trajectory> = sc
                .states
                .iter()
                .map(|s| sc.system.integrate(s, sc.t_span, &sc.options))
                .collect::<Result<_, _>>()?;
            let (a, b, c) = (&tr[0], &tr[1], &tr[2]);
            let (a0, b0, c0) = (a.initial_state(), b.initial_state(), c.initial_state());
            let (k1, k2) = keys_from(c0[0], c0[1], a0[0], a0[1], b0[0], b0[1]);
            let mut value = Vec::with_capacity(c.len());
            for t in c.times() {
                let (p, q) = (a.dense(*t)?, b.dense(*t)?);
                value.push(linear_rule(p[0], p[1], q[0], q[1], k1, k2)?.0);
            }
            let oracle = c.component(0);
            errors.absorb(&value, &oracle, false);
            report.tables.push((String::new(), comparison_table(c.times(), &value, &oracle)));
            report.metric("keys.k1", k1);
            report.metric("keys.k2", k2);
        }
        SuperposeRule::Quadrature => {
            let x1 = sc.system.integrate(&sc.states[0], sc.t_span, &sc.options)?;
            let x2 = quadrature_series(&x1, spec.k_prime.unwrap(), spec.k.unwrap())?;
            let direct = sc.system.integrate(&x2.states()[0], sc.t_span, &sc.options)?;
            let oracle = resample(&direct, x2.times(), 0)?;
            let value = x2.component(0);
            errors.absorb(&value, &oracle, false);
            report.tables.push((String::new(), comparison_table(x2.times(), &value, &oracle)));
        }
        SuperposeRule::Pinney => {
            let k = pinney_k(sc);
            let osc = oscillator_1d(sc.system.frequency().clone());
            let y = osc.integrate(&spec.y.unwrap_or([1.0, 0.0]), sc.t_span, &sc.options)?;
            let z = osc.integrate(&spec.z.unwrap_or([0.0, 1.0]), sc.t_span, &sc.options)?;
            for (i, s0) in sc.states.iter().enumerate() {
                let x = pinney_rule_from_solutions(&y, &z, s0[0], s0[1], k)?;
                let direct = sc.system.integrate(s0, sc.t_span, &sc.options)?;
                let oracle = resample(&direct, x.times(), 0)?;
                let value = x.component(0);
                errors.absorb(&value, &oracle, true);
                report.tables.push((suffix(i, sc.states.len()), comparison_table(x.times(), &value, &oracle)));
            }
        }
    }
    errors.record(report, sc);
    Ok(())
}

fn reduction_table(r: &Reduction, oracle: &[f64]) -> Table {
    let mut table = Table::new(["t", "tau", "closed_form", "oracle", "abs_err", "det_drift"]);
    for (i, t) in r.trajectory.times().iter().enumerate() {
        let x = r.closed_form[i];
        table.push(&[*t, r.tau[i], x, oracle[i], (x - oracle[i]).abs(), r.det_drift[i]]);
    }
    table
}

fn reduce(sc: &Scenario, report: &mut Report) -> Result<(), CliError> {
    let spec = sc.reduce.as_ref().expect("validated");
    let mut errors = Errors::default();
    let (mut det, mut mismatch): (f64, f64) = (0.0, 0.0);
    let mut emit = |r: Reduction, oracle_sys: &liesys::SystemDef, pointwise: bool, name: String| -> Result<(), CliError> {
        let direct = oracle_sys.integrate(&r.trajectory.states()[0], sc.t_span, &sc.options)?;
        let oracle = resample(&direct, r.trajectory.times(), 0)?;
        errors.absorb(&r.closed_form, &oracle, pointwise);
        det = r.det_drift.iter().copied().fold(det, f64::max);
        mismatch = mismatch.max(r.route_mismatch());
        report.tables.push((name, reduction_table(&r, &oracle)));
        Ok(())
    };
    match spec.method {
        ReduceMethod::Dalembert => {
            let x1 = sc.system.integrate(&spec.particular, sc.t_span, &sc.options)?;
            let r = reduce_oscillator(&x1, spec.k_prime.unwrap(), spec.k.unwrap())?;
            emit(r, &sc.system, false, String::new())?;
        }
        ReduceMethod::PinneySelf | ReduceMethod::PinneyOsc => {
            let k = pinney_k(sc);
            let x1 = if spec.method == ReduceMethod::PinneySelf {
                sc.system.integrate(&spec.particular, sc.t_span, &sc.options)?
            } else {
                oscillator_1d(sc.system.frequency().clone()).integrate(&spec.particular, sc.t_span, &sc.options)?
            };
            for (i, s0) in sc.states.iter().enumerate() {
                let r = if spec.method == ReduceMethod::PinneySelf {
                    reduce_pinney_from_pinney(&x1, s0[0], s0[1], k)?
                } else {
                    reduce_pinney_from_oscillator(&x1, s0[0], s0[1], k)?
                };
                emit(r, &sc.system, true, suffix(i, sc.states.len()))?;
            }
        }
    }
    errors.record(report, sc);
    report.metric("max_det_drift", det);
    report.metric("max_route_mismatch", mismatch);
    report.limit("max_det_drift", det, sc.thresholds.max_det_drift);
    Ok(())
}

fn group_solve(sc: &Scenario, report: &mut Report) -> Result<(), CliError> {
    let g = solve_group_equation(oscillator_algebra_curve(sc.system.frequency()), sc.t_span, sc.options.rel_tol)?;
    let mut table = Table::new(["t", "alpha", "beta", "gamma", "delta", "det_drift"]);
    for t in g.times() {
        let m = g.at(*t)?;
        let mut row = vec![*t];
        row.extend(m.entries());
        row.push(g.det_drift(*t)?);
        table.push(&row);
    }
    report.tables.push((String::new(), table));
    let det = g.max_det_drift();
    report.metric("max_det_drift", det);
    report.limit("max_det_drift", det, sc.thresholds.max_det_drift);

    if sc.states.is_empty() {
        return Ok(());
    }
    let pinney = sc.spec.name == "milne_pinney";
    let mut errors = Errors::default();
    for (i, s0) in sc.states.iter().enumerate() {
        let direct = sc.system.integrate(s0, sc.t_span, &sc.options)?;
        let (mut value, mut oracle) = (Vec::new(), Vec::new());
        for t in g.times() {
            let m = g.at(*t)?;
            value.push(if pinney {
                pinney_action(&m, (s0[0], s0[1]), pinney_k(sc))?.x_bar
            } else {
                linear_action(&m, (s0[0], s0[1])).0
            });
            oracle.push(direct.dense_component(*t, 0)?);
        }
        errors.absorb(&value, &oracle, pinney);
        let name = if sc.states.len() == 1 { "_action".to_string() } else { format!("_action_{i}") };
        report.tables.push((name, comparison_table(g.times(), &value, &oracle)));
    }
    errors.record(report, sc);
    Ok(())
}

fn verify_algebra(sc: &mut Scenario, report: &mut Report) -> Result<(), CliError> {
    let probes = sc.system.sample_probes(sc.probes.count, &mut sc.rng);
    let fields = sc.system.generators();
    let r = fields.len();
    let header = ["probe", "residual"].into_iter().chain(sc.system.coordinates().iter().copied());
    let mut table = Table::new(header);
    let mut worst: f64 = 0.0;
    for (i, p) in probes.iter().enumerate() {
        let mut residual: f64 = 0.0;
        for a in 0..r {
            for b in (a + 1)..r {
                residual = residual.max(closure_residual(fields, sc.system.constants(), a, b, p)?);
            }
        }
        worst = worst.max(residual);
        let mut row = vec![i as f64, residual];
        row.extend(p);
        table.push(&row);
    }
    report.tables.push((String::new(), table));
    report.metric("worst_residual", worst);
    report.metric("probes", probes.len() as f64);
    report.limit("max_residual", worst, Some(sc.thresholds.max_residual.unwrap_or(1e-9)));
    Ok(())
}

fn rank_search(sc: &mut Scenario, report: &mut Report) -> Result<(), CliError> {
    let p = sc.probes;
    let result = minimal_m(sc.system.generators(), p.max_copies, p.per_level, p.rank_tol, &mut sc.rng)?;
    let ranks = match &result {
        MinimalM::Found { ranks, .. } | MinimalM::Undetermined { ranks } => ranks.clone(),
    };
    let mut table = Table::new(["copies", "rank"]);
    for (i, rank) in ranks.iter().enumerate() {
        table.push(&[(i + 1) as f64, *rank as f64]);
    }
    report.tables.push((String::new(), table));
    let m = result.value().map_or(f64::NAN, |m| m as f64);
    report.metric("m", m);
    if result.value().is_none() {
        report.notes.push(format!("no full rank up to {} copies", p.max_copies));
    }
    if let Some(expected) = sc.thresholds.expected_m {
        report.checks.push(ThresholdCheck::equal("m", m, expected as f64));
    }
    Ok(())
}

/// Run a validated scenario and write its CSV files and summary into `out_dir`.
/// Returns the summary; its `exit_code` is 0, 1 (threshold failure) or 3 (runtime failure).
pub fn run_scenario(sc: &mut Scenario, out_dir: &Path) -> Result<Summary, CliError> {
    let mut summary = Summary {
        scenario: sc.name.clone(),
        pipeline: sc.pipeline.name().to_string(),
        system: sc.spec.name.clone(),
        seed: sc.seed,
        status: Status::Pass,
        exit_code: 0,
        metrics: BTreeMap::new(),
        thresholds: Vec::new(),
        files: Vec::new(),
        notes: Vec::new(),
        error: None,
        last_good_time: None,
    };
    match execute(sc) {
        Ok(report) => {
            for (suffix, table) in &report.tables {
                let file = format!("{}{suffix}.csv", sc.stem);
                write_atomic(&out_dir.join(&file), table.render().as_bytes())?;
                summary.files.push(file);
            }
            if !report.passed() {
                summary.status = Status::Fail;
                summary.exit_code = 1;
            }
            summary.metrics = report.metrics;
            summary.thresholds = report.checks;
            summary.notes = report.notes;
        }
        Err(CliError::Runtime { message, last_good_time }) => {
            summary.status = Status::Error;
            summary.exit_code = 3;
            summary.error = Some(message);
            summary.last_good_time = last_good_time;
        }
        Err(other) => return Err(other),
    }
    let file = format!("{}.summary.json", sc.stem);
    write_atomic(&out_dir.join(&file), summary.to_json().as_bytes())?;
    Ok(summary)
}
