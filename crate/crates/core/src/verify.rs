//! End-to-end checks tying the closed forms to numerical integration.
//!
//! Each `criterion_*` function runs one family of checks from a seed and
//! returns a [`CriterionReport`]. [`run_all`] runs the nine of them in order.
//! Failures inside a check (a singular state, a failed quadrature) are
//! recorded as a failed [`Check`] rather than propagated.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::group::{
    linear_action, oscillator_algebra_curve, pinney_action, reduce_oscillator, reduce_pinney_from_oscillator,
    reduce_pinney_from_pinney, sl2_exp, solve_group_equation, GroupError, Sl2Matrix, Sl2Vector,
};
use crate::integrate::{FrequencyProfile, IntegrateOptions, IntegrationError, Trajectory, TrajectoryError};
use crate::invariants::{
    angular_momentum, drift, ermakov_pair_invariants, generalized_invariant, lewis_ermakov, InvariantError,
    DEFAULT_QUAD_TOL,
};
use crate::superposition::{keys_from, linear_rule, pinney_rule_from_solutions, quadrature_rule, SuperpositionError};
use crate::systems::{
    ermakov, generalized_ermakov, milne_pinney, milne_pinney_generators, oscillator_1d, oscillator_2d,
    oscillator_generators, pinney_triple, ShapeFunctions,
};
use crate::vectorfield::{minimal_m, AlgebraError, FieldError, MinimalM, DEFAULT_RANK_TOL};

/// Integration tolerance for the drift and oracle runs.
pub const ORACLE_TOL: f64 = 1e-10;
/// Tighter tolerance where the check itself is at the 1e-8 level.
pub const FINE_TOL: f64 = 1e-12;
/// Number of random initial conditions per scenario.
pub const SEEDED_RUNS: usize = 5;
/// Number of random points for pointwise checks.
pub const PROBES: usize = 100;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Superposition(#[from] SuperpositionError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("invariant series stopped at t = {0}")]
    Partial(f64),
}

/// One measured quantity against its threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub label: String,
    /// Measured value; NaN when the computation failed.
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub note: Option<String>,
}

impl Check {
    /// Passes when `value < threshold`.
    pub fn below(label: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            label: label.into(),
            value,
            threshold,
            passed: value < threshold,
            note: None,
        }
    }

    /// Passes when `value == expected`.
    pub fn equals(label: impl Into<String>, value: f64, expected: f64) -> Self {
        Self {
            label: label.into(),
            value,
            threshold: expected,
            passed: value == expected,
            note: None,
        }
    }

    fn measure(label: impl Into<String>, threshold: f64, f: impl FnOnce() -> Result<f64, VerifyError>) -> Self {
        match f() {
            Ok(v) => Self::below(label, v, threshold),
            Err(e) => Self {
                label: label.into(),
                value: f64::NAN,
                threshold,
                passed: false,
                note: Some(e.to_string()),
            },
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: usize,
    pub title: &'static str,
    pub checks: Vec<Check>,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    /// The check with the largest `value / threshold`, failures first.
    pub fn worst(&self) -> Option<&Check> {
        let score = |c: &Check| {
            if !c.passed {
                f64::INFINITY
            } else if c.threshold != 0.0 {
                c.value / c.threshold
            } else {
                0.0
            }
        };
        self.checks
            .iter()
            .max_by(|a, b| score(a).partial_cmp(&score(b)).unwrap_or(std::cmp::Ordering::Equal))
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "[{status}] {:>2}. {}", self.id, self.title)?;
        if let Some(w) = self.worst() {
            write!(f, " (worst: {} = {:.3e} vs {:.1e})", w.label, w.value, w.threshold)?;
            if let Some(n) = &w.note {
                write!(f, " {n}")?;
            }
        }
        Ok(())
    }
}

fn rng_for(seed: u64, id: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(id as u64))
}

/// `max |a − b| / |b|` over paired samples.
pub fn pointwise_rel_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a - b).abs() / b.abs()).fold(0.0, f64::max)
}

/// `max |a − b| / max |b|`, for quantities that change sign.
pub fn normwise_rel_error(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().map(|b| b.abs()).fold(0.0, f64::max);
    let diff = a.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    diff / scale
}

/// Component `i` of `reference` read at `times`.
pub fn resample(reference: &Trajectory, times: &[f64], i: usize) -> Result<Vec<f64>, TrajectoryError> {
    times.iter().map(|&t| reference.dense_component(t, i)).collect()
}

fn opts(tol: f64) -> IntegrateOptions {
    IntegrateOptions::with_tol(tol, tol)
}

fn pinney_start<R: Rng>(rng: &mut R) -> (f64, f64) {
    (rng.random_range(0.5..2.0), rng.random_range(-1.0..1.0))
}

/// Bracket closure of the four sl(2,ℝ) realizations at seeded probes.
pub fn criterion_1(seed: u64) -> CriterionReport {
    let mut rng = rng_for(seed, 1);
    let omega = FrequencyProfile::two_plus_sine();
    let systems = [
        ("oscillator X", oscillator_1d(omega.clone())),
        ("Pinney L", milne_pinney(omega.clone(), 1.0)),
        ("generalized N (f=u^2, g=1)", generalized_ermakov(omega.clone(), ShapeFunctions::quadratic())),
        ("triple N", pinney_triple(omega, 1.0)),
    ];
    let checks = systems
        .iter()
        .map(|(label, sys)| {
            let probes = sys.sample_probes(PROBES, &mut rng);
            Check::measure(format!("closure {label}"), 1e-9, || {
                Ok(sys.verify_algebra(&probes, f64::INFINITY)?.worst_residual)
            })
        })
        .collect();
    CriterionReport {
        id: 1,
        title: "sl(2,R) closure of the four realizations",
        checks,
    }
}

/// Rank test on diagonal prolongations of the oscillator generators.
pub fn criterion_2(seed: u64) -> CriterionReport {
    let mut rng = rng_for(seed, 2);
    let check = match minimal_m(&oscillator_generators(), 4, 25, DEFAULT_RANK_TOL, &mut rng) {
        Ok(MinimalM::Found { m, ranks }) => {
            Check::equals("minimal m", m as f64, 2.0).with_note(format!("ranks {ranks:?}"))
        }
        Ok(MinimalM::Undetermined { ranks }) => {
            Check::equals("minimal m", f64::NAN, 2.0).with_note(format!("undetermined, ranks {ranks:?}"))
        }
        Err(e) => Check::equals("minimal m", f64::NAN, 2.0).with_note(e.to_string()),
    };
    CriterionReport {
        id: 2,
        title: "minimal number of solutions for the oscillator",
        checks: vec![check],
    }
}

fn series_drift(
    traj: &Trajectory,
    label: &str,
    f: impl FnMut(&[f64]) -> Result<f64, InvariantError>,
) -> Result<f64, VerifyError> {
    let s = drift(traj, label, f);
    match s.failure {
        Some((t, _)) => Err(VerifyError::Partial(t)),
        None => Ok(s.drift_rel),
    }
}

/// Relative drift of every first integral over t ∈ [0, 20] with ω² = 2 + sin t.
pub fn criterion_3(seed: u64) -> CriterionReport {
    const TOL: f64 = 1e-6;
    let mut rng = rng_for(seed, 3);
    let omega = FrequencyProfile::two_plus_sine();
    let span = (0.0, 20.0);
    let o = opts(ORACLE_TOL);
    let erm = ermakov(omega.clone());
    let triple = pinney_triple(omega.clone(), 1.0);
    let osc2 = oscillator_2d(omega.clone());
    let shapes = ShapeFunctions::quadratic();
    let gen = generalized_ermakov(omega, shapes.clone());
    let mut checks = Vec::new();
    for run in 0..SEEDED_RUNS {
        let (y0, vy0) = pinney_start(&mut rng);
        let (x0, vx0) = (rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0));
        checks.push(Check::measure(format!("psi run {run}"), TOL, || {
            let tr = erm.integrate(&[x0, vx0, y0, vy0], span, &o)?;
            series_drift(&tr, "psi", |s| lewis_ermakov(s[0], s[2], s[1], s[3]))
        }));

        let (p0, pv0) = pinney_start(&mut rng);
        let yz: Vec<f64> = (0..4).map(|_| rng.random_range(-1.5..1.5)).collect();
        let state = [p0, yz[0], yz[1], pv0, yz[2], yz[3]];
        match triple.integrate(&state, span, &o) {
            Ok(tr) => {
                for (name, pick) in [("I1", 0usize), ("I2", 1), ("W", 2)] {
                    checks.push(Check::measure(format!("{name} run {run}"), TOL, || {
                        series_drift(&tr, name, |s| {
                            let p = ermakov_pair_invariants(s, 1.0)?;
                            Ok([p.i1, p.i2, p.w][pick])
                        })
                    }));
                }
            }
            Err(e) => checks.push(Check::measure(format!("I1/I2/W run {run}"), TOL, || Err(e.into()))),
        }

        let q: Vec<f64> = (0..4).map(|_| rng.random_range(-1.5..1.5)).collect();
        checks.push(Check::measure(format!("xi run {run}"), TOL, || {
            let tr = osc2.integrate(&q, span, &o)?;
            series_drift(&tr, "xi", |s| Ok(angular_momentum(s[0], s[1], s[2], s[3])))
        }));

        let (gx, gvx) = pinney_start(&mut rng);
        let (gy, gvy) = pinney_start(&mut rng);
        checks.push(Check::measure(format!("generalized run {run}"), TOL, || {
            let tr = gen.integrate(&[gx, gvx, gy, gvy], span, &o)?;
            series_drift(&tr, "generalized", |s| {
                generalized_invariant(s[0], s[2], s[1], s[3], &shapes, DEFAULT_QUAD_TOL)
            })
        }));
    }
    CriterionReport {
        id: 3,
        title: "first integrals stay constant along integrated solutions",
        checks,
    }
}

fn sampled(times: &[f64], f: impl Fn(f64) -> [f64; 4]) -> Result<Trajectory, TrajectoryError> {
    let rows: Vec<[f64; 4]> = times.iter().map(|&t| f(t)).collect();
    Trajectory::new(
        times.to_vec(),
        rows.iter().map(|r| vec![r[0], r[1]]).collect(),
        rows.iter().map(|r| vec![r[2], r[3]]).collect(),
    )
}

/// Pinney's rule against direct Milne–Pinney integration.
pub fn criterion_4(seed: u64) -> CriterionReport {
    let mut rng = rng_for(seed, 4);
    let mut checks = Vec::new();

    let times: Vec<f64> = (0..=400).map(|i| i as f64 * 0.025).collect();
    checks.push(Check::measure("analytic case y = sin t, z = cos t", 1e-8, || {
        let y = sampled(&times, |t| [t.sin(), t.cos(), t.cos(), -t.sin()])?;
        let z = sampled(&times, |t| [t.cos(), -t.sin(), -t.sin(), -t.cos()])?;
        let x = pinney_rule_from_solutions(&y, &z, 1.0, 0.0, 1.0)?;
        Ok(x.states().iter().map(|s| (s[0] - 1.0).abs()).fold(0.0, f64::max))
    }));

    let omega = FrequencyProfile::two_plus_sine();
    let osc = oscillator_1d(omega.clone());
    let mp = milne_pinney(omega, 1.0);
    let span = (0.0, 10.0);
    let o = opts(ORACLE_TOL);
    let pair = osc
        .integrate(&[1.0, 0.0], span, &o)
        .and_then(|y| Ok((y, osc.integrate(&[0.0, 1.0], span, &o)?)));
    for run in 0..SEEDED_RUNS {
        let (x0, v0) = pinney_start(&mut rng);
        checks.push(Check::measure(format!("superposition vs integration run {run}"), 1e-5, || {
            let (y, z) = pair.clone()?;
            let x = pinney_rule_from_solutions(&y, &z, x0, v0, 1.0)?;
            let direct = mp.integrate(&[x0, v0], span, &o)?;
            let reference = resample(&direct, x.times(), 0)?;
            Ok(pointwise_rel_error(&x.component(0), &reference))
        }));
    }
    CriterionReport {
        id: 4,
        title: "Pinney superposition matches direct integration",
        checks,
    }
}

/// Linear rule on three oscillator solutions; quadrature rule from cos t.
pub fn criterion_5(seed: u64) -> CriterionReport {
    let mut rng = rng_for(seed, 5);
    let mut checks = Vec::new();
    let osc = oscillator_1d(FrequencyProfile::two_plus_sine());
    let span = (0.0, 10.0);
    let o = opts(FINE_TOL);
    for run in 0..SEEDED_RUNS {
        let p: Vec<f64> = (0..2).map(|_| rng.random_range(-1.5..1.5)).collect();
        checks.push(Check::measure(format!("linear rule run {run}"), 1e-8, || {
            let x1 = osc.integrate(&[1.0, 0.0], span, &o)?;
            let x2 = osc.integrate(&[0.0, 1.0], span, &o)?;
            let x3 = osc.integrate(&p, span, &o)?;
            let (k1, k2) = keys_from(p[0], p[1], 1.0, 0.0, 0.0, 1.0);
            let mut rebuilt = Vec::with_capacity(x3.len());
            for &t in x3.times() {
                let (a, b) = (x1.dense(t)?, x2.dense(t)?);
                rebuilt.push(linear_rule(a[0], a[1], b[0], b[1], k1, k2)?.0);
            }
            Ok(normwise_rel_error(&rebuilt, &x3.component(0)))
        }));
    }
    checks.push(Check::measure("quadrature rule cos t -> sin t on [0, 1.2]", 1e-8, || {
        let x1 = oscillator_1d(FrequencyProfile::constant(1.0)).integrate(&[1.0, 0.0], (0.0, 1.2), &o)?;
        let mut worst = 0.0f64;
        for i in 0..=48 {
            let t = 1.2 * i as f64 / 48.0;
            worst = worst.max((quadrature_rule(&x1, 0.0, 1.0, t)? - t.sin()).abs());
        }
        Ok(worst)
    }));
    CriterionReport {
        id: 5,
        title: "linear and quadrature superposition rules",
        checks,
    }
}

/// The Lie equation on SL(2,ℝ) reproduces the oscillator flow.
pub fn criterion_6(seed: u64) -> CriterionReport {
    let mut rng = rng_for(seed, 6);
    let mut checks = Vec::new();
    for (name, omega) in [
        ("constant", FrequencyProfile::constant(1.0)),
        ("2 + sin t", FrequencyProfile::two_plus_sine()),
    ] {
        let solution = solve_group_equation(oscillator_algebra_curve(&omega), (0.0, 20.0), ORACLE_TOL);
        checks.push(Check::measure(format!("det drift, {name}"), 1e-9, || {
            let g = solution.clone()?;
            let mut worst = g.max_det_drift();
            for w in g.times().windows(2) {
                worst = worst.max(g.det_drift(0.5 * (w[0] + w[1]))?);
            }
            Ok(worst)
        }));
        let osc = oscillator_1d(omega.clone());
        for run in 0..SEEDED_RUNS {
            let p0 = (rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
            checks.push(Check::measure(format!("linear action vs integration, {name}, run {run}"), 1e-6, || {
                let g = solution.clone()?;
                let direct = osc.integrate(&[p0.0, p0.1], (0.0, 10.0), &opts(ORACLE_TOL))?;
                let mut got = Vec::with_capacity(direct.len());
                for &t in direct.times() {
                    got.push(linear_action(&g.at(t)?, p0).0);
                }
                Ok(normwise_rel_error(&got, &direct.component(0)))
            }));
        }
    }
    CriterionReport {
        id: 6,
        title: "group equation keeps det = 1 and reproduces the oscillator",
        checks,
    }
}

/// The three reduction pipelines against analytic solutions and direct integration.
pub fn criterion_7(seed: u64) -> CriterionReport {
    let mut rng = rng_for(seed, 7);
    let mut checks = Vec::new();
    let unit = FrequencyProfile::constant(1.0);
    let fine = opts(FINE_TOL);
    let o = opts(ORACLE_TOL);

    checks.push(Check::measure("oscillator reduction cos t -> sin t", 1e-8, || {
        let x1 = oscillator_1d(unit.clone()).integrate(&[1.0, 0.0], (0.0, 1.2), &fine)?;
        let r = reduce_oscillator(&x1, 0.0, 1.0)?;
        let exact: Vec<f64> = r.trajectory.times().iter().map(|t| t.sin()).collect();
        Ok(r.closed_form.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }));
    let osc = oscillator_1d(FrequencyProfile::two_plus_sine());
    for run in 0..SEEDED_RUNS {
        let (kp, k) = (rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        checks.push(Check::measure(format!("oscillator reduction vs integration run {run}"), 1e-5, || {
            let x1 = osc.integrate(&[1.0, 0.0], (0.0, 0.8), &o)?;
            let r = reduce_oscillator(&x1, kp, k)?;
            let direct = osc.integrate(r.trajectory.initial_state(), (0.0, 0.8), &o)?;
            let reference = resample(&direct, r.trajectory.times(), 0)?;
            Ok(normwise_rel_error(&r.trajectory.component(0), &reference)
                .max(normwise_rel_error(&r.group_route, &reference)))
        }));
    }

    checks.push(Check::measure("Pinney self-reduction at equilibrium", 1e-8, || {
        let x1 = milne_pinney(unit.clone(), 1.0).integrate(&[1.0, 0.0], (0.0, 5.0), &fine)?;
        let r = reduce_pinney_from_pinney(&x1, 1.0, 0.0, 1.0)?;
        Ok(r.closed_form.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max))
    }));
    for k in [1.0, 2.0] {
        let mp = milne_pinney(unit.clone(), k);
        for run in 0..SEEDED_RUNS {
            let (x0, v0) = pinney_start(&mut rng);
            let (p, pv) = pinney_start(&mut rng);
            checks.push(Check::measure(format!("Pinney self-reduction k = {k} run {run}"), 1e-5, || {
                let x1 = mp.integrate(&[p, pv], (0.0, 5.0), &o)?;
                let r = reduce_pinney_from_pinney(&x1, x0, v0, k)?;
                let direct = mp.integrate(&[x0, v0], (0.0, 5.0), &o)?;
                let reference = resample(&direct, r.trajectory.times(), 0)?;
                Ok(pointwise_rel_error(&r.closed_form, &reference)
                    .max(pointwise_rel_error(&r.group_route, &reference)))
            }));
        }
    }

    checks.push(Check::measure("Pinney from cos t at equilibrium", 1e-8, || {
        let x1 = oscillator_1d(unit.clone()).integrate(&[1.0, 0.0], (0.0, 1.2), &fine)?;
        let r = reduce_pinney_from_oscillator(&x1, 1.0, 0.0, 1.0)?;
        Ok(r.closed_form.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max))
    }));
    let mp = milne_pinney(unit.clone(), 1.0);
    for run in 0..SEEDED_RUNS {
        let (x0, v0) = pinney_start(&mut rng);
        checks.push(Check::measure(format!("Pinney from oscillator run {run}"), 1e-5, || {
            let x1 = oscillator_1d(unit.clone()).integrate(&[1.0, 0.0], (0.0, 1.2), &o)?;
            let r = reduce_pinney_from_oscillator(&x1, x0, v0, 1.0)?;
            let direct = mp.integrate(&[x0, v0], (0.0, 1.2), &o)?;
            let reference = resample(&direct, r.trajectory.times(), 0)?;
            Ok(pointwise_rel_error(&r.closed_form, &reference).max(pointwise_rel_error(&r.group_route, &reference)))
        }));
    }
    CriterionReport {
        id: 7,
        title: "reductions by a particular solution",
        checks,
    }
}

/// Central difference of `value(s)` at `s = 0`.
fn derivative_at_zero(h: f64, value: impl Fn(f64) -> Result<[f64; 2], VerifyError>) -> Result<[f64; 2], VerifyError> {
    let (p, m) = (value(h)?, value(-h)?);
    Ok([(p[0] - m[0]) / (2.0 * h), (p[1] - m[1]) / (2.0 * h)])
}

/// Sanity of the linear and Milne–Pinney actions.
pub fn criterion_8(seed: u64) -> CriterionReport {
    let mut rng = rng_for(seed, 8);
    let mut checks = Vec::new();

    checks.push(Check::measure("Pinney action at the identity", 1e-12, || {
        let mut worst = 0.0f64;
        for _ in 0..PROBES {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let p = (sign * rng.random_range(0.1..2.0), rng.random_range(-2.0..2.0));
            let k = rng.random_range(0.1..2.0);
            let img = pinney_action(&Sl2Matrix::IDENTITY, p, k)?;
            worst = worst.max((img.x_bar - p.0).abs()).max((img.v_bar_magnitude - p.1.abs()).abs());
        }
        Ok(worst)
    }));

    let mut mismatches = 0usize;
    let mut valid = 0usize;
    for _ in 0..1000 {
        let v = Sl2Vector::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let a = sl2_exp(v, rng.random_range(-1.5..1.5));
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let p = (sign * rng.random_range(0.1..2.0), rng.random_range(-2.0..2.0));
        if let Ok(img) = pinney_action(&a, p, rng.random_range(0.1..2.0)) {
            valid += 1;
            if img.x_bar.signum() != p.0.signum() {
                mismatches += 1;
            }
        }
    }
    checks.push(
        Check::equals("half-plane violations in 1000 samples", mismatches as f64, 0.0)
            .with_note(format!("{valid} samples with valid radicands")),
    );

    let h = 1e-5;
    let k = 1.0;
    let osc = oscillator_generators();
    let pin = milne_pinney_generators(k);
    for i in 0..3 {
        let a = -Sl2Vector::basis(i);
        let probes: Vec<(f64, f64)> = (0..20).map(|_| (rng.random_range(0.2..2.0), rng.random_range(0.2..2.0))).collect();
        checks.push(Check::measure(format!("linear action generates X{}", i + 1), 1e-6, || {
            let mut worst = 0.0f64;
            for &p in &probes {
                let d = derivative_at_zero(h, |s| {
                    let q = linear_action(&sl2_exp(a, s), p);
                    Ok([q.0, q.1])
                })?;
                let field = osc[i].eval(&[p.0, p.1])?;
                worst = worst.max((d[0] - field[0]).abs()).max((d[1] - field[1]).abs());
            }
            Ok(worst)
        }));
        checks.push(Check::measure(format!("Pinney action generates L{}", i + 1), 1e-5, || {
            let mut worst = 0.0f64;
            for &p in &probes {
                let d = derivative_at_zero(h, |s| {
                    let img = pinney_action(&sl2_exp(a, s), p, k)?;
                    Ok([img.x_bar, img.v_bar])
                })?;
                let field = pin[i].eval(&[p.0, p.1])?;
                let scale = 1.0 + field[0].abs().max(field[1].abs());
                worst = worst.max((d[0] - field[0]).abs() / scale).max((d[1] - field[1]).abs() / scale);
            }
            Ok(worst)
        }));
    }
    CriterionReport {
        id: 8,
        title: "group actions: identity, half-plane, fundamental fields",
        checks,
    }
}

/// The generalized construction collapses onto the Ermakov one at f = 0, g = 1.
pub fn criterion_9(seed: u64) -> CriterionReport {
    let mut rng = rng_for(seed, 9);
    let shapes = ShapeFunctions::ermakov();
    let omega = FrequencyProfile::two_plus_sine();
    let erm = ermakov(omega.clone());
    let gen = generalized_ermakov(omega, shapes.clone());
    let probes = gen.sample_probes(PROBES, &mut rng);
    let times: Vec<f64> = (0..PROBES).map(|_| rng.random_range(0.0..20.0)).collect();
    let invariant = Check::measure("generalized invariant vs (psi - 1)/2", 1e-10, || {
        let mut worst = 0.0f64;
        for p in &probes {
            let g = generalized_invariant(p[0], p[2], p[1], p[3], &shapes, DEFAULT_QUAD_TOL)?;
            let psi = lewis_ermakov(p[0], p[2], p[1], p[3])?;
            worst = worst.max((g - (0.5 * psi - 0.5)).abs());
        }
        Ok(worst)
    });
    let rhs = Check::measure("Ermakov rhs vs generalized rhs", 1e-14, || {
        let mut worst = 0.0f64;
        for (p, &t) in probes.iter().zip(&times) {
            let a = erm.rhs_vec(t, p).map_err(FieldError::Singular)?;
            let b = gen.rhs_vec(t, p).map_err(FieldError::Singular)?;
            worst = a.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
        }
        Ok(worst)
    });
    CriterionReport {
        id: 9,
        title: "generalized Ermakov reduces to Ermakov",
        checks: vec![invariant, rhs],
    }
}

/// Number of built-in criteria.
pub const CRITERION_COUNT: usize = 9;

const CRITERIA: [fn(u64) -> CriterionReport; CRITERION_COUNT] = [
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
];

/// Criterion `id` (1 to 9), or `None` when out of range.
pub fn run_one(id: usize, seed: u64) -> Option<CriterionReport> {
    CRITERIA.get(id.checked_sub(1)?).map(|c| c(seed))
}

/// Criteria 1 to 9 in order.
pub fn run_all(seed: u64) -> Vec<CriterionReport> {
    CRITERIA.iter().map(|c| c(seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_measures() {
        assert_eq!(pointwise_rel_error(&[1.1, 2.0], &[1.0, 2.0]), 0.10000000000000009);
        assert_eq!(normwise_rel_error(&[0.1, 2.0], &[0.0, 2.0]), 0.05);
    }

    #[test]
    fn check_constructors() {
        assert!(Check::below("a", 0.5, 1.0).passed);
        assert!(!Check::below("a", f64::NAN, 1.0).passed);
        assert!(Check::equals("m", 2.0, 2.0).passed);
        let failed = Check::measure("e", 1.0, || Err(VerifyError::Partial(3.0)));
        assert!(!failed.passed && failed.value.is_nan() && failed.note.is_some());
    }

    #[test]
    fn report_display_marks_failures() {
        let r = CriterionReport {
            id: 4,
            title: "demo",
            checks: vec![Check::below("ok", 0.1, 1.0), Check::below("bad", 2.0, 1.0)],
        };
        assert!(!r.passed());
        assert_eq!(r.worst().unwrap().label, "bad");
        assert!(r.to_string().starts_with("[FAIL]  4. demo"));
    }
}
