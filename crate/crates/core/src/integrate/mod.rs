//! Error-controlled integration of non-autonomous ODEs and quadrature.
//!
//! The stepper is the Dormand–Prince 5(4) pair with local extrapolation. The
//! right-hand side is fallible: a [`Singularity`] reported by the rhs aborts the
//! solve and the error carries the last accepted time.

mod quadrature;
mod trajectory;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use quadrature::{quadrature, QuadratureError};
pub use trajectory::{Trajectory, TrajectoryError};
use trajectory::DenseSegment;

use crate::vectorfield::Singularity;

/// Default absolute and relative tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// A time-dependent ω²(t).
#[derive(Clone)]
pub struct FrequencyProfile {
    omega_squared: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    description: String,
}

impl fmt::Debug for FrequencyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("FrequencyProfile").field(&self.description).finish()
    }
}

impl FrequencyProfile {
    pub fn custom(description: impl Into<String>, omega_squared: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            omega_squared: Arc::new(omega_squared),
            description: description.into(),
        }
    }

    pub fn constant(omega_squared: f64) -> Self {
        Self::custom(format!("omega^2 = {omega_squared}"), move |_| omega_squared)
    }

    /// ω²(t) = offset + amplitude·sin t.
    pub fn sinusoidal(offset: f64, amplitude: f64) -> Self {
        Self::custom(format!("omega^2 = {offset} + {amplitude} sin t"), move |t| {
            offset + amplitude * t.sin()
        })
    }

    /// The smooth profile used throughout the test-suite: ω²(t) = 2 + sin t.
    pub fn two_plus_sine() -> Self {
        Self::sinusoidal(2.0, 1.0)
    }

    /// `before` for t < `at`, `after` from `at` on.
    pub fn step(at: f64, before: f64, after: f64) -> Self {
        Self::custom(format!("omega^2 = {before} (t < {at}), {after} (t >= {at})"), move |t| {
            if t < at {
                before
            } else {
                after
            }
        })
    }

    pub fn omega_squared(&self, t: f64) -> f64 {
        (self.omega_squared)(t)
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
    /// First trial step; chosen automatically when `None`.
    pub initial_step: Option<f64>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            abs_tol: DEFAULT_TOL,
            rel_tol: DEFAULT_TOL,
            max_steps: 1_000_000,
            initial_step: None,
        }
    }
}

impl IntegrateOptions {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IntegrationError {
    #[error("degenerate time span [{0}, {1}]")]
    DegenerateSpan(f64, f64),
    #[error("tolerances must be positive and finite")]
    BadTolerance,
    #[error("singularity after t = {last_good_t}: {singularity}")]
    Singularity {
        last_good_t: f64,
        singularity: Singularity,
    },
    #[error("step size underflow at t = {last_good_t} (h = {h:e})")]
    StepUnderflow { last_good_t: f64, h: f64 },
    #[error("non-finite state after t = {last_good_t}")]
    NonFinite { last_good_t: f64 },
    #[error("maximum of {max_steps} steps reached at t = {last_good_t}")]
    TooManySteps { last_good_t: f64, max_steps: usize },
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

impl IntegrationError {
    /// Last time up to which the solution is trustworthy, when known.
    pub fn last_good_time(&self) -> Option<f64> {
        match self {
            IntegrationError::Singularity { last_good_t, .. }
            | IntegrationError::StepUnderflow { last_good_t, .. }
            | IntegrationError::NonFinite { last_good_t }
            | IntegrationError::TooManySteps { last_good_t, .. } => Some(*last_good_t),
            _ => None,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

// Dense-output weights of the continuous extension.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

fn dense_segment(origin: f64, h: f64, y: &[f64], ynew: &[f64], k: &[Vec<f64>]) -> DenseSegment {
    let n = y.len();
    let mut r: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
    for i in 0..n {
        let diff = ynew[i] - y[i];
        let bspl = h * k[0][i] - diff;
        r[0][i] = y[i];
        r[1][i] = diff;
        r[2][i] = bspl;
        r[3][i] = diff - h * k[6][i] - bspl;
        r[4][i] = h * D.iter().zip(k).map(|(d, ks)| d * ks[i]).sum::<f64>();
    }
    DenseSegment { origin, h, r }
}

/// Integrate `dy/dt = rhs(t, y)` over `t_span` (which may run backwards).
pub fn integrate<F>(
    rhs: F,
    y0: &[f64],
    t_span: (f64, f64),
    options: &IntegrateOptions,
) -> Result<Trajectory, IntegrationError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), Singularity>,
{
    integrate_projected(rhs, y0, t_span, options, |_: &mut [f64]| {})
}

/// As [`integrate`], applying `project` to every accepted state before it is
/// stored. The derivative is re-evaluated at the projected state.
pub fn integrate_projected<F, P>(
    mut rhs: F,
    y0: &[f64],
    t_span: (f64, f64),
    options: &IntegrateOptions,
    mut project: P,
) -> Result<Trajectory, IntegrationError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), Singularity>,
    P: FnMut(&mut [f64]),
{
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite()) || t0 == t1 {
        return Err(IntegrationError::DegenerateSpan(t0, t1));
    }
    let (atol, rtol) = (options.abs_tol, options.rel_tol);
    if !(atol > 0.0 && rtol > 0.0 && atol.is_finite() && rtol.is_finite()) {
        return Err(IntegrationError::BadTolerance);
    }
    let dir = (t1 - t0).signum();
    let n = y0.len();

    let mut t = t0;
    let mut y = y0.to_vec();
    project(&mut y);
    let mut f = vec![0.0; n];
    rhs(t, &y, &mut f).map_err(|s| singular(t, s))?;

    let mut times = vec![t];
    let mut states = vec![y.clone()];
    let mut derivs = vec![f.clone()];
    let mut segments = Vec::new();

    let mut h = match options.initial_step {
        Some(h) => h.abs().min((t1 - t0).abs()),
        None => initial_step(&mut rhs, t, &y, &f, dir, (t1 - t0).abs(), atol, rtol)?,
    };

    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut steps = 0usize;
    let mut last_rejected = false;

    while (t1 - t) * dir > 0.0 {
        if steps >= options.max_steps {
            return Err(IntegrationError::TooManySteps {
                last_good_t: t,
                max_steps: options.max_steps,
            });
        }
        steps += 1;
        let min_h = 16.0 * f64::EPSILON * t.abs().max(1.0);
        if h < min_h {
            return Err(IntegrationError::StepUnderflow { last_good_t: t, h });
        }
        let remaining = (t1 - t).abs();
        let last = h >= remaining;
        let hs = if last { remaining } else { h } * dir;

        k[0].copy_from_slice(&f);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                ytmp[i] = y[i] + hs * acc;
            }
            let ts = t + C[s] * hs;
            rhs(ts, &ytmp, &mut k[s]).map_err(|sg| singular(t, sg))?;
            if s == 6 {
                ynew.copy_from_slice(&ytmp);
            }
        }

        let mut err: f64 = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (s, ks) in k.iter().enumerate() {
                e += E[s] * ks[i];
            }
            let scale = atol + rtol * y[i].abs().max(ynew[i].abs());
            err = err.max((hs * e).abs() / scale);
        }
        if !err.is_finite() || ynew.iter().any(|v| !v.is_finite()) {
            if h <= min_h {
                return Err(IntegrationError::NonFinite { last_good_t: t });
            }
            h *= 0.25;
            last_rejected = true;
            continue;
        }

        if err <= 1.0 {
            segments.push(dense_segment(t, hs, &y, &ynew, &k));
            t = if last { t1 } else { t + hs };
            y.copy_from_slice(&ynew);
            project(&mut y);
            // FSAL: stage 7 is f at the new point unless projection moved it.
            if y == ynew {
                f.copy_from_slice(&k[6]);
            } else {
                rhs(t, &y, &mut f).map_err(|s| singular(t, s))?;
            }
            times.push(t);
            states.push(y.clone());
            derivs.push(f.clone());
            let mut factor = if err == 0.0 { 5.0 } else { 0.9 * err.powf(-0.2) };
            factor = factor.clamp(0.2, 5.0);
            if last_rejected {
                factor = factor.min(1.0);
            }
            h *= factor;
            last_rejected = false;
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            last_rejected = true;
        }
    }

    Ok(Trajectory::from_steps(times, states, derivs, segments, dir > 0.0)?)
}

fn singular(last_good_t: f64, singularity: Singularity) -> IntegrationError {
    IntegrationError::Singularity {
        last_good_t,
        singularity,
    }
}

#[allow(clippy::too_many_arguments)]
fn initial_step<F>(
    rhs: &mut F,
    t: f64,
    y: &[f64],
    f: &[f64],
    dir: f64,
    span: f64,
    atol: f64,
    rtol: f64,
) -> Result<f64, IntegrationError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), Singularity>,
{
    // Hairer–Nørsett–Wanner starting step.
    let n = y.len() as f64;
    let norm = |v: &dyn Fn(usize) -> f64| -> f64 {
        ((0..y.len())
            .map(|i| {
                let s = atol + rtol * y[i].abs();
                (v(i) / s).powi(2)
            })
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let d0 = norm(&|i| y[i]);
    let d1 = norm(&|i| f[i]);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<f64> = y.iter().zip(f).map(|(a, b)| a + dir * h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    rhs(t + dir * h0, &y1, &mut f1).map_err(|s| singular(t, s))?;
    let d2 = norm(&|i| f1[i] - f[i]) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn oscillator(omega: FrequencyProfile) -> impl FnMut(f64, &[f64], &mut [f64]) -> Result<(), Singularity> {
        move |t, y, dy| {
            dy[0] = y[1];
            dy[1] = -omega.omega_squared(t) * y[0];
            Ok(())
        }
    }

    #[test]
    fn quarter_period_of_cosine() {
        let tol = 1e-10;
        let tr = integrate(
            oscillator(FrequencyProfile::constant(1.0)),
            &[1.0, 0.0],
            (0.0, FRAC_PI_2),
            &IntegrateOptions::with_tol(tol, tol),
        )
        .unwrap();
        let y = tr.final_state();
        assert!(y[0].abs() < 10.0 * tol, "{y:?}");
        assert!((y[1] + 1.0).abs() < 10.0 * tol, "{y:?}");
        assert_eq!(tr.end(), FRAC_PI_2);
    }

    #[test]
    fn tighter_tolerance_reduces_error() {
        let errs: Vec<f64> = [1e-6, 1e-8, 1e-10]
            .iter()
            .map(|&tol| {
                let tr = integrate(
                    oscillator(FrequencyProfile::constant(1.0)),
                    &[1.0, 0.0],
                    (0.0, 10.0),
                    &IntegrateOptions::with_tol(tol, tol),
                )
                .unwrap();
                (tr.final_state()[0] - 10f64.cos()).abs()
            })
            .collect();
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
        // Error per tolerance decade stays within roughly one decade for a 5(4) pair.
        assert!(errs[0] / errs[2] > 10.0, "{errs:?}");
    }

    #[test]
    fn backward_returns_to_start() {
        let tol = 1e-10;
        let opts = IntegrateOptions::with_tol(tol, tol);
        let fwd = integrate(oscillator(FrequencyProfile::two_plus_sine()), &[0.3, -0.8], (0.0, 5.0), &opts).unwrap();
        let back = integrate(oscillator(FrequencyProfile::two_plus_sine()), fwd.final_state(), (5.0, 0.0), &opts).unwrap();
        assert!(!back.is_forward());
        assert_eq!(back.start(), 0.0);
        let y = back.final_state();
        assert!((y[0] - 0.3).abs() < 100.0 * tol && (y[1] + 0.8).abs() < 100.0 * tol, "{y:?}");
    }

    #[test]
    fn dense_output_matches_fresh_integration() {
        use rand::{Rng, SeedableRng};
        let tol = 1e-10;
        let opts = IntegrateOptions::with_tol(tol, tol);
        let rhs = || oscillator(FrequencyProfile::two_plus_sine());
        let full = integrate(rhs(), &[1.0, 0.5], (0.0, 10.0), &opts).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let t = rng.random_range(0.01..10.0);
            let fresh = integrate(rhs(), &[1.0, 0.5], (0.0, t), &opts).unwrap();
            let (a, b) = (full.dense(t).unwrap(), fresh.final_state());
            assert!((a[0] - b[0]).abs() < 10.0 * tol && (a[1] - b[1]).abs() < 10.0 * tol, "t = {t}: {a:?} vs {b:?}");
        }
    }

    #[test]
    fn dense_derivative_matches_rhs_and_backward_dense() {
        let tol = 1e-10;
        let opts = IntegrateOptions::with_tol(tol, tol);
        let fwd = integrate(oscillator(FrequencyProfile::constant(1.0)), &[1.0, 0.0], (0.0, 6.0), &opts).unwrap();
        let back = integrate(oscillator(FrequencyProfile::constant(1.0)), &[1.0, 0.0], (0.0, -6.0), &opts).unwrap();
        for t in [0.37f64, 2.9, 5.55] {
            let d = fwd.dense_derivative(t).unwrap();
            assert!((d[0] + t.sin()).abs() < 1e-8 && (d[1] + t.cos()).abs() < 1e-8, "{t}: {d:?}");
            let y = back.dense(-t).unwrap();
            assert!((y[0] - t.cos()).abs() < 1e-9 && (y[1] - t.sin()).abs() < 1e-9, "{t}: {y:?}");
        }
    }

    #[test]
    fn singularity_aborts_with_last_good_time() {
        // ẏ = -1 from y = 1 leaves the half-line y > 0 at t = 1.
        let err = integrate(
            |_, y, dy| {
                if y[0] < 1e-6 {
                    return Err(Singularity { coordinate: 0, value: y[0] });
                }
                dy[0] = -1.0;
                Ok(())
            },
            &[1.0],
            (0.0, 2.0),
            &IntegrateOptions::default(),
        )
        .unwrap_err();
        let t = err.last_good_time().unwrap();
        assert!(t > 0.0 && t <= 1.0, "{err}");
        assert!(matches!(err, IntegrationError::Singularity { .. }));
    }

    #[test]
    fn degenerate_span_and_tolerance() {
        let opts = IntegrateOptions::default();
        assert!(matches!(
            integrate(oscillator(FrequencyProfile::constant(1.0)), &[1.0, 0.0], (1.0, 1.0), &opts),
            Err(IntegrationError::DegenerateSpan(..))
        ));
        assert_eq!(
            integrate(
                oscillator(FrequencyProfile::constant(1.0)),
                &[1.0, 0.0],
                (0.0, 1.0),
                &IntegrateOptions::with_tol(0.0, 1e-8)
            ),
            Err(IntegrationError::BadTolerance)
        );
    }

    #[test]
    fn step_profile() {
        let p = FrequencyProfile::step(1.0, 1.0, 4.0);
        assert_eq!(p.omega_squared(0.5), 1.0);
        assert_eq!(p.omega_squared(1.0), 4.0);
    }
}
