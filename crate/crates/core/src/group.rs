//! SL(2,ℝ) machinery: algebra and group elements, the exponential and adjoint
//! maps, the Lie equation `ġ g⁻¹ = a(t)`, the linear and Milne–Pinney actions,
//! and reduction of the oscillator and Milne–Pinney equations by a known
//! particular solution.
//!
//! Basis of sl(2,ℝ):
//!
//! ```text
//! a₁ = [[0, 0], [-1, 0]]   a₂ = [[0, -1], [0, 0]]   a₃ = ½ [[-1, 0], [0, 1]]
//! ```
//!
//! Fundamental vector fields of an action Φ are `X_a(p) = d/ds Φ(exp(−s a), p)|₀`,
//! which sends aᵢ to the generators Xᵢ (linear action) and Lᵢ (Pinney action).

use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::integrate::{
    integrate_projected, quadrature, FrequencyProfile, IntegrateOptions, IntegrationError, QuadratureError,
    Trajectory, TrajectoryError,
};
use crate::systems::SINGULARITY_GUARD;

/// Below this `|det M|` the exponential takes the parabolic branch `I + sM`.
pub const PARABOLIC_THRESHOLD: f64 = 1e-12;
/// Tolerance used for every τ quadrature.
pub const TAU_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GroupError {
    #[error("{what} is singular at t = {t}")]
    Singular { what: &'static str, t: f64 },
    #[error("{what} has a negative radicand {value:e}")]
    Domain { what: &'static str, value: f64 },
    #[error("reduction parameter A vanishes")]
    ZeroA,
    #[error("the Pinney self-reduction needs k > 0, got {0}")]
    NonPositiveK(f64),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

/// Coordinates of an sl(2,ℝ) element in the basis a₁, a₂, a₃.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sl2Vector {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Sl2Vector {
    pub const fn new(c1: f64, c2: f64, c3: f64) -> Self {
        Self { c1, c2, c3 }
    }

    pub const A1: Self = Self::new(1.0, 0.0, 0.0);
    pub const A2: Self = Self::new(0.0, 1.0, 0.0);
    pub const A3: Self = Self::new(0.0, 0.0, 1.0);

    /// Basis element `a_{i+1}`.
    pub fn basis(i: usize) -> Self {
        [Self::A1, Self::A2, Self::A3][i]
    }

    /// The traceless matrix `c₁a₁ + c₂a₂ + c₃a₃`, row-major.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[-0.5 * self.c3, -self.c2], [-self.c1, 0.5 * self.c3]]
    }

    /// Inverse of [`Sl2Vector::matrix`]; the trace part is dropped.
    pub fn from_matrix(m: [[f64; 2]; 2]) -> Self {
        Self {
            c1: -m[1][0],
            c2: -m[0][1],
            c3: m[1][1] - m[0][0],
        }
    }

    /// Determinant of the matrix; its sign classifies the one-parameter subgroup.
    pub fn det(&self) -> f64 {
        let m = self.matrix();
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// `ω² a₁ − a₂`, the algebra curve shared by the oscillator and Pinney systems.
    pub fn oscillator(omega_squared: f64) -> Self {
        Self::new(omega_squared, -1.0, 0.0)
    }
}

impl Add for Sl2Vector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.c1 + o.c1, self.c2 + o.c2, self.c3 + o.c3)
    }
}

impl Sub for Sl2Vector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.c1 - o.c1, self.c2 - o.c2, self.c3 - o.c3)
    }
}

impl Mul<Sl2Vector> for f64 {
    type Output = Sl2Vector;
    fn mul(self, v: Sl2Vector) -> Sl2Vector {
        Sl2Vector::new(self * v.c1, self * v.c2, self * v.c3)
    }
}

impl Neg for Sl2Vector {
    type Output = Self;
    fn neg(self) -> Self {
        -1.0 * self
    }
}

/// `[[α, β], [γ, δ]]` with `αδ − βγ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sl2Matrix {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl Sl2Matrix {
    pub const IDENTITY: Self = Self::new(1.0, 0.0, 0.0, 1.0);

    /// No determinant check; see [`Sl2Matrix::try_new`].
    pub const fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        Self { alpha, beta, gamma, delta }
    }

    /// Accepts the entries when `|det − 1| ≤ 1e-9`.
    pub fn try_new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Option<Self> {
        let m = Self::new(alpha, beta, gamma, delta);
        ((m.det() - 1.0).abs() <= 1e-9).then_some(m)
    }

    pub fn det(&self) -> f64 {
        self.alpha * self.delta - self.beta * self.gamma
    }

    pub fn inverse(&self) -> Self {
        let d = self.det();
        Self::new(self.delta / d, -self.beta / d, -self.gamma / d, self.alpha / d)
    }

    /// Rescaled by `1/√det` so the determinant is 1 again.
    pub fn renormalized(&self) -> Self {
        let s = self.det().sqrt();
        Self::new(self.alpha / s, self.beta / s, self.gamma / s, self.delta / s)
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }

    fn from_rows(m: [[f64; 2]; 2]) -> Self {
        Self::new(m[0][0], m[0][1], m[1][0], m[1][1])
    }

    fn rows(&self) -> [[f64; 2]; 2] {
        [[self.alpha, self.beta], [self.gamma, self.delta]]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Mul for Sl2Matrix {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::from_rows(mat_mul(self.rows(), o.rows()))
    }
}

fn mat_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// Constants `(A, B)` fixed once from the initial Pinney state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionParameters {
    pub a: f64,
    pub b: f64,
}

impl ReductionParameters {
    pub fn new(a: f64, b: f64) -> Result<Self, GroupError> {
        if a == 0.0 || !a.is_finite() {
            return Err(GroupError::ZeroA);
        }
        Ok(Self { a, b })
    }
}

/// `exp(s·v)` in closed form, by the sign of `det v`.
pub fn sl2_exp(v: Sl2Vector, s: f64) -> Sl2Matrix {
    let m = v.matrix();
    let d = v.det();
    let (c, k) = if d.abs() < PARABOLIC_THRESHOLD {
        (1.0, s)
    } else if d > 0.0 {
        let w = d.sqrt();
        ((w * s).cos(), (w * s).sin() / w)
    } else {
        let w = (-d).sqrt();
        ((w * s).cosh(), (w * s).sinh() / w)
    };
    Sl2Matrix::new(c + k * m[0][0], k * m[0][1], k * m[1][0], c + k * m[1][1])
}

/// `Ad(g) v = g · v · g⁻¹`.
pub fn adjoint(g: &Sl2Matrix, v: Sl2Vector) -> Sl2Vector {
    let conj = mat_mul(mat_mul(g.rows(), v.matrix()), g.inverse().rows());
    Sl2Vector::from_matrix(conj)
}

/// Linear action `g · (x, v)ᵀ`.
pub fn linear_action(g: &Sl2Matrix, p: (f64, f64)) -> (f64, f64) {
    (g.alpha * p.0 + g.beta * p.1, g.gamma * p.0 + g.delta * p.1)
}

/// Image of a point under the Milne–Pinney action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinneyImage {
    /// `x̄`, on the same side of zero as the input `x`.
    pub x_bar: f64,
    /// The nonnegative root defining `v̄`.
    pub v_bar_magnitude: f64,
    /// Radicand of that root.
    pub v_radicand: f64,
    /// Signed velocity `[(βv + αx)(δv + γx) + kβδ/x²] / x̄`, whose square equals the radicand.
    pub v_bar: f64,
}

/// The SL(2,ℝ) action on the Pinney half-plane:
///
/// ```text
/// x̄ = sign(x) √( (k + [(βv + αx)(δv + γx) + kδβ/x²]²) / ((δv + γx)² + kδ²/x²) )
/// v̄ = √( (δv + γx)² + (kδ²/x²)(1 − x²/(δ²x̄²)) )
/// ```
pub fn pinney_action(a: &Sl2Matrix, p: (f64, f64), k: f64) -> Result<PinneyImage, GroupError> {
    let (x, v) = p;
    if x == 0.0 {
        return Err(GroupError::Singular { what: "Pinney action", t: f64::NAN });
    }
    let Sl2Matrix { alpha, beta, gamma, delta } = *a;
    let x2 = x * x;
    let q = delta * v + gamma * x;
    let bracket = (beta * v + alpha * x) * q + k * delta * beta / x2;
    let den = q * q + k * delta * delta / x2;
    let ratio = (k + bracket * bracket) / den;
    if ratio <= 0.0 || !ratio.is_finite() {
        return Err(GroupError::Domain { what: "x̄", value: ratio });
    }
    let x_bar = x.signum() * ratio.sqrt();
    // (kδ²/x²)(1 − x²/(δ²x̄²)) expanded so that δ = 0 stays finite.
    let mut radicand = q * q + k * delta * delta / x2 - k / ratio;
    if radicand < 0.0 {
        let scale = q * q + (k * delta * delta / x2).abs() + (k / ratio).abs();
        if radicand < -64.0 * f64::EPSILON * scale {
            return Err(GroupError::Domain { what: "v̄", value: radicand });
        }
        radicand = 0.0;
    }
    Ok(PinneyImage {
        x_bar,
        v_bar_magnitude: radicand.sqrt(),
        v_radicand: radicand,
        v_bar: bracket / x_bar,
    })
}

/// Numerical solution of `ġ = a(t)·g`, `g(t₀) = I`, kept on SL(2,ℝ).
#[derive(Debug, Clone)]
pub struct GroupSolution {
    trajectory: Trajectory,
    step_drift: f64,
}

impl GroupSolution {
    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn times(&self) -> &[f64] {
        self.trajectory.times()
    }

    /// `g(t)`, interpolated and renormalized onto the group.
    pub fn at(&self, t: f64) -> Result<Sl2Matrix, GroupError> {
        let s = self.trajectory.dense(t)?;
        Ok(Sl2Matrix::new(s[0], s[1], s[2], s[3]).renormalized())
    }

    /// `|det g(t) − 1|` of the returned matrix.
    pub fn det_drift(&self, t: f64) -> Result<f64, GroupError> {
        Ok((self.at(t)?.det() - 1.0).abs())
    }

    /// Largest `|det − 1|` of an accepted step before it was renormalized,
    /// i.e. how far a single step wanders off the group.
    pub fn max_step_drift(&self) -> f64 {
        self.step_drift
    }

    /// Largest of the per-step drift and the drift of the stored samples.
    pub fn max_det_drift(&self) -> f64 {
        self.trajectory
            .states()
            .iter()
            .map(|s| (s[0] * s[3] - s[1] * s[2] - 1.0).abs())
            .fold(self.step_drift, f64::max)
    }
}

/// Integrate the right-invariant Lie equation `ġ g⁻¹ = a(t)` from the identity.
/// Each accepted step is rescaled by `1/√det`.
pub fn solve_group_equation<F>(a: F, t_span: (f64, f64), tol: f64) -> Result<GroupSolution, GroupError>
where
    F: Fn(f64) -> Sl2Vector,
{
    let rhs = |t: f64, g: &[f64], dg: &mut [f64]| {
        let m = a(t).matrix();
        dg[0] = m[0][0] * g[0] + m[0][1] * g[2];
        dg[1] = m[0][0] * g[1] + m[0][1] * g[3];
        dg[2] = m[1][0] * g[0] + m[1][1] * g[2];
        dg[3] = m[1][0] * g[1] + m[1][1] * g[3];
        Ok(())
    };
    let mut step_drift = 0.0f64;
    let project = |g: &mut [f64]| {
        let det = g[0] * g[3] - g[1] * g[2];
        step_drift = step_drift.max((det - 1.0).abs());
        if det > 0.0 {
            let s = det.sqrt();
            g.iter_mut().for_each(|e| *e /= s);
        }
    };
    let trajectory = integrate_projected(
        rhs,
        &[1.0, 0.0, 0.0, 1.0],
        t_span,
        &IntegrateOptions::with_tol(tol, tol),
        project,
    )?;
    Ok(GroupSolution { trajectory, step_drift })
}

/// Group curve of the oscillator/Pinney family for a frequency profile.
pub fn oscillator_algebra_curve(omega: &FrequencyProfile) -> impl Fn(f64) -> Sl2Vector + '_ {
    move |t| Sl2Vector::oscillator(omega.omega_squared(t))
}

fn check_nonvanishing(x1: &Trajectory) -> Result<(), GroupError> {
    let s0 = x1.states()[0][0].signum();
    for (t, s) in x1.times().iter().zip(x1.states()) {
        if s[0].abs() < SINGULARITY_GUARD || s[0].signum() != s0 {
            return Err(GroupError::Singular {
                what: "particular solution",
                t: *t,
            });
        }
    }
    Ok(())
}

/// `τ(t) = ∫_{t₀}^t dζ / x₁(ζ)²` over the dense output of `x1` (position in component 0).
pub fn tau_reparametrization(x1: &Trajectory, t: f64) -> Result<f64, GroupError> {
    check_nonvanishing(x1)?;
    let t0 = x1.times()[0];
    x1.dense(t)?;
    let integrand = |z: f64| x1.dense_component(z, 0).map(|x| 1.0 / (x * x)).unwrap_or(f64::NAN);
    Ok(quadrature(integrand, t0, t, TAU_TOL)?)
}

/// τ at every sample of `x1`, accumulated segment by segment.
pub fn tau_series(x1: &Trajectory) -> Result<Vec<f64>, GroupError> {
    check_nonvanishing(x1)?;
    let times = x1.times();
    let total = (x1.end() - x1.start()).max(f64::MIN_POSITIVE);
    let integrand = |z: f64| x1.dense_component(z, 0).map(|x| 1.0 / (x * x)).unwrap_or(f64::NAN);
    let mut tau = Vec::with_capacity(times.len());
    tau.push(0.0);
    let mut acc = 0.0;
    for w in times.windows(2) {
        let share = TAU_TOL * (w[1] - w[0]) / total;
        acc += quadrature(integrand, w[0], w[1], share)?;
        tau.push(acc);
    }
    Ok(tau)
}

/// `g₁ = [[x₁, 0], [ẋ₁, 1/x₁]]`, which carries (1, 0) to (x₁, ẋ₁).
pub fn particular_matrix(x1: f64, dx1: f64) -> Result<Sl2Matrix, GroupError> {
    if x1 == 0.0 {
        return Err(GroupError::Singular {
            what: "particular solution curve",
            t: f64::NAN,
        });
    }
    Ok(Sl2Matrix::new(x1, 0.0, dx1, 1.0 / x1))
}

/// The curve `t ↦ g₁(t)` read from a trajectory `(x₁, ẋ₁)`.
#[derive(Debug, Clone, Copy)]
pub struct ParticularCurve<'a> {
    x1: &'a Trajectory,
}

pub fn particular_solution_curve(x1: &Trajectory) -> Result<ParticularCurve<'_>, GroupError> {
    check_nonvanishing(x1)?;
    Ok(ParticularCurve { x1 })
}

impl ParticularCurve<'_> {
    pub fn at(&self, t: f64) -> Result<Sl2Matrix, GroupError> {
        let s = self.x1.dense(t)?;
        particular_matrix(s[0], s[1]).map_err(|_| GroupError::Singular {
            what: "particular solution curve",
            t,
        })
    }
}

/// `a′ = Ad(g₁⁻¹) a + (d/dt g₁⁻¹) g₁` for `g₁` built from `(x₁, ẋ₁, ẍ₁)`.
///
/// For an oscillator solution this is `−a₂/x₁²`; for a Pinney solution it is
/// `(k a₁ − a₂)/x₁²`.
pub fn reduced_algebra_element(x1: f64, dx1: f64, ddx1: f64, a: Sl2Vector) -> Result<Sl2Vector, GroupError> {
    let g1 = particular_matrix(x1, dx1)?;
    let g1_inv = g1.inverse();
    let g1_dot = [[dx1, 0.0], [ddx1, -dx1 / (x1 * x1)]];
    let ad = adjoint(&g1_inv, a);
    let correction = mat_mul(g1_inv.rows(), g1_dot);
    Ok(Sl2Vector::from_matrix([
        [ad.matrix()[0][0] - correction[0][0], ad.matrix()[0][1] - correction[0][1]],
        [ad.matrix()[1][0] - correction[1][0], ad.matrix()[1][1] - correction[1][1]],
    ]))
}

/// Output of a reduction pipeline, sampled on the particular solution's grid.
#[derive(Debug, Clone)]
pub struct Reduction {
    /// `(x, v)` with `x` from the closed form and `v` from the group action.
    pub trajectory: Trajectory,
    pub tau: Vec<f64>,
    /// Closed-form `x(t)`.
    pub closed_form: Vec<f64>,
    /// Position obtained by acting with `g(t) = g₁(t) h(τ) g₁(0)⁻¹` on the initial state.
    pub group_route: Vec<f64>,
    /// `|det g(t) − 1|`.
    pub det_drift: Vec<f64>,
    pub parameters: Option<ReductionParameters>,
}

impl Reduction {
    /// Largest gap between the closed form and the group route.
    pub fn route_mismatch(&self) -> f64 {
        self.closed_form
            .iter()
            .zip(&self.group_route)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn require_phase(x1: &Trajectory) {
    assert!(x1.dim() >= 2, "particular solution must carry (x, v)");
}

/// `(A, B)`: the Pinney action of `g₁(0)⁻¹` on the initial state.
pub fn reduction_parameters(x1_0: f64, dx1_0: f64, x0: f64, v0: f64, k: f64) -> Result<ReductionParameters, GroupError> {
    let g0_inv = particular_matrix(x1_0, dx1_0)?.inverse();
    let img = pinney_action(&g0_inv, (x0, v0), k)?;
    ReductionParameters::new(img.x_bar, img.v_bar)
}

/// General oscillator solution from one particular solution (d'Alembert
/// reduction): the initial state `(k′x₁(0), k′ẋ₁(0) + k/x₁(0))` transported by
/// `g(t) = g₁(t)·exp(−τ a₂)·g₁(0)⁻¹`; the closed form is `x₁(t)(k′ + kτ)`.
pub fn reduce_oscillator(x1: &Trajectory, k_prime: f64, k: f64) -> Result<Reduction, GroupError> {
    require_phase(x1);
    let tau = tau_series(x1)?;
    let first = &x1.states()[0];
    let g0_inv = particular_matrix(first[0], first[1])?.inverse();
    let p0 = (k_prime * first[0], k_prime * first[1] + k / first[0]);

    let n = x1.len();
    let (mut states, mut derivs) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut closed, mut route, mut det) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for (i, s) in x1.states().iter().enumerate() {
        let g = particular_matrix(s[0], s[1])? * sl2_exp(-Sl2Vector::A2, tau[i]) * g0_inv;
        let (x, v) = linear_action(&g, p0);
        let xc = s[0] * (k_prime + k * tau[i]);
        // ẍ = −ω²x with ω² = −ẍ₁/x₁.
        let acc = x1.derivs()[i][1] / s[0] * xc;
        states.push(vec![xc, v]);
        derivs.push(vec![v, acc]);
        closed.push(xc);
        route.push(x);
        det.push((g.det() - 1.0).abs());
    }
    Ok(Reduction {
        trajectory: Trajectory::new(x1.times().to_vec(), states, derivs)?,
        tau,
        closed_form: closed,
        group_route: route,
        det_drift: det,
        parameters: None,
    })
}

/// Closed form of the Pinney solution reduced through another Pinney solution:
///
/// ```text
/// x² = x₁² [kA² + B² + k/A² + (kA² − B² − k/A²) cos 2√kτ + 2√k AB sin 2√kτ] / (2k)
/// ```
pub fn pinney_self_closed_form(x1: f64, tau: f64, params: ReductionParameters, k: f64) -> Result<f64, GroupError> {
    let ReductionParameters { a, b } = params;
    let sk = k.sqrt();
    let (c, s) = ((2.0 * sk * tau).cos(), (2.0 * sk * tau).sin());
    let bracket = k * a * a + b * b + k / (a * a) + (k * a * a - b * b - k / (a * a)) * c + 2.0 * sk * a * b * s;
    let r = bracket * x1 * x1 / (2.0 * k);
    if r < 0.0 {
        return Err(GroupError::Domain { what: "closed-form x²", value: r });
    }
    Ok(r.sqrt())
}

/// Closed form of the Pinney solution reduced through an oscillator solution:
/// `x = (x₁/A) √(A⁴ + 2A³Bτ + (A²B² + k)τ²)`.
pub fn pinney_oscillator_closed_form(x1: f64, tau: f64, params: ReductionParameters, k: f64) -> Result<f64, GroupError> {
    let ReductionParameters { a, b } = params;
    let r = a.powi(4) + 2.0 * a.powi(3) * b * tau + (a * a * b * b + k) * tau * tau;
    if r < 0.0 {
        return Err(GroupError::Domain { what: "closed-form radicand", value: r });
    }
    Ok(x1 / a * r.sqrt())
}

enum PinneyReduction {
    FromPinney,
    FromOscillator,
}

fn reduce_pinney(
    kind: PinneyReduction,
    x1: &Trajectory,
    x0: f64,
    v0: f64,
    k: f64,
) -> Result<Reduction, GroupError> {
    require_phase(x1);
    if x0 == 0.0 {
        return Err(GroupError::Singular { what: "initial Pinney state", t: x1.start() });
    }
    let tau = tau_series(x1)?;
    let first = &x1.states()[0];
    let params = reduction_parameters(first[0], first[1], x0, v0, k)?;
    let g0_inv = particular_matrix(first[0], first[1])?.inverse();
    let side = x0.signum();

    let n = x1.len();
    let (mut states, mut derivs) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut closed, mut route, mut det) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for (i, (t, s)) in x1.times().iter().zip(x1.states()).enumerate() {
        let h = match kind {
            PinneyReduction::FromPinney => sl2_exp(k * Sl2Vector::A1 - Sl2Vector::A2, tau[i]),
            PinneyReduction::FromOscillator => sl2_exp(-Sl2Vector::A2, tau[i]),
        };
        let g = particular_matrix(s[0], s[1])? * h * g0_inv;
        let img = pinney_action(&g, (x0, v0), k)?;
        let magnitude = match kind {
            PinneyReduction::FromPinney => pinney_self_closed_form(s[0], tau[i], params, k)?,
            PinneyReduction::FromOscillator => pinney_oscillator_closed_form(s[0], tau[i], params, k)?,
        }
        .abs();
        let x = side * magnitude;
        if x.abs() < SINGULARITY_GUARD {
            return Err(GroupError::Singular { what: "reduced Pinney solution", t: *t });
        }
        let acc1 = x1.derivs()[i][1];
        let omega_sq = match kind {
            PinneyReduction::FromPinney => (k / s[0].powi(3) - acc1) / s[0],
            PinneyReduction::FromOscillator => -acc1 / s[0],
        };
        states.push(vec![x, img.v_bar]);
        derivs.push(vec![img.v_bar, -omega_sq * x + k / (x * x * x)]);
        closed.push(x);
        route.push(img.x_bar);
        det.push((g.det() - 1.0).abs());
    }
    Ok(Reduction {
        trajectory: Trajectory::new(x1.times().to_vec(), states, derivs)?,
        tau,
        closed_form: closed,
        group_route: route,
        det_drift: det,
        parameters: Some(params),
    })
}

/// Milne–Pinney solution from `(x₀, v₀)` given another Milne–Pinney solution
/// `x1` with the same ω(t) and k.
pub fn reduce_pinney_from_pinney(x1: &Trajectory, x0: f64, v0: f64, k: f64) -> Result<Reduction, GroupError> {
    if k.is_nan() || k <= 0.0 {
        return Err(GroupError::NonPositiveK(k));
    }
    reduce_pinney(PinneyReduction::FromPinney, x1, x0, v0, k)
}

/// Milne–Pinney solution from `(x₀, v₀)` given an oscillator solution `x1`
/// with the same ω(t).
pub fn reduce_pinney_from_oscillator(x1: &Trajectory, x0: f64, v0: f64, k: f64) -> Result<Reduction, GroupError> {
    reduce_pinney(PinneyReduction::FromOscillator, x1, x0, v0, k)
}
