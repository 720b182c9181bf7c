//! Superposition rules for the oscillator and Milne–Pinney equations.

use thiserror::Error;

use crate::group::{tau_reparametrization, tau_series, GroupError};
use crate::integrate::{Trajectory, TrajectoryError};
use crate::invariants::{ermakov_pair_invariants, InvariantError, PairInvariants};

/// Relative slack, in units of ε, before a negative radicand counts as a domain error.
const CLAMP_ULPS: f64 = 64.0;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SuperpositionError {
    #[error("solutions are linearly dependent (Wronskian {0:e})")]
    Dependent(f64),
    #[error("{what} is negative ({value:e})")]
    Domain { what: &'static str, value: f64 },
    #[error("superposition branch lost at t = {t}")]
    BranchFlip { t: f64 },
    #[error("no branch matches the initial state: {0}")]
    NoBranch(Box<SuperpositionError>),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

/// Combine two oscillator solutions with keys `(k₁, k₂)`:
/// `x = (k₁x₁ + k₂x₂)/k`, `v = (k₁v₁ + k₂v₂)/k`, `k = x₁v₂ − x₂v₁`.
pub fn linear_rule(x1: f64, v1: f64, x2: f64, v2: f64, k1: f64, k2: f64) -> Result<(f64, f64), SuperpositionError> {
    let k = x1 * v2 - x2 * v1;
    if k == 0.0 {
        return Err(SuperpositionError::Dependent(k));
    }
    Ok(((k1 * x1 + k2 * x2) / k, (k1 * v1 + k2 * v2) / k))
}

/// Keys of `(x, v)` relative to two reference solutions; constant in time
/// when all three solve the same oscillator.
pub fn keys_from(x: f64, v: f64, x1: f64, v1: f64, x2: f64, v2: f64) -> (f64, f64) {
    (x * v2 - x2 * v, x1 * v - v1 * x)
}

/// `x₂(t) = x₁(t) (k′ + k ∫_{t₀}^t dζ/x₁²)`, a second oscillator solution from one.
pub fn quadrature_rule(x1: &Trajectory, k_prime: f64, k: f64, t: f64) -> Result<f64, SuperpositionError> {
    let x = x1.dense_component(t, 0)?;
    if k == 0.0 {
        return Ok(k_prime * x);
    }
    Ok(x * (k_prime + k * tau_reparametrization(x1, t)?))
}

/// [`quadrature_rule`] on every sample of `x1`, with velocity
/// `ẋ₁(k′ + kτ) + k/x₁`.
pub fn quadrature_series(x1: &Trajectory, k_prime: f64, k: f64) -> Result<Trajectory, SuperpositionError> {
    let tau = tau_series(x1)?;
    let mut states = Vec::with_capacity(x1.len());
    let mut derivs = Vec::with_capacity(x1.len());
    for ((s, d), tau) in x1.states().iter().zip(x1.derivs()).zip(tau) {
        let c = k_prime + k * tau;
        let (x, v) = (s[0] * c, s[1] * c + k / s[0]);
        states.push(vec![x, v]);
        derivs.push(vec![v, d[1] / s[0] * x]);
    }
    Ok(Trajectory::new(x1.times().to_vec(), states, derivs)?)
}

/// Sign in front of the mixed `yz` term of the Pinney rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinneyBranch {
    Plus,
    Minus,
}

impl PinneyBranch {
    pub fn sign(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }
}

/// Output of the Pinney rule: the raw signed value and its magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinneyValue {
    /// `(√2/W)·√(…)`, negative whenever `W < 0`.
    pub raw: f64,
    /// `√(4I₁I₂ − kW²)`.
    pub discriminant_root: f64,
}

impl PinneyValue {
    pub fn magnitude(&self) -> f64 {
        self.raw.abs()
    }
}

fn clamped_sqrt(value: f64, scale: f64, what: &'static str) -> Result<f64, SuperpositionError> {
    if value >= 0.0 {
        Ok(value.sqrt())
    } else if value >= -CLAMP_ULPS * f64::EPSILON * scale {
        Ok(0.0)
    } else {
        Err(SuperpositionError::Domain { what, value })
    }
}

/// Pinney's nonlinear rule
/// `x = (√2/W) (I₂y² + I₁z² ± √(4I₁I₂ − kW²) yz)^{1/2}`
/// for oscillator solutions `y`, `z` with Wronskian `W`.
pub fn pinney_rule(y: f64, z: f64, inv: PairInvariants, k: f64, branch: PinneyBranch) -> Result<PinneyValue, SuperpositionError> {
    let PairInvariants { i1, i2, w } = inv;
    if w == 0.0 {
        return Err(SuperpositionError::Dependent(w));
    }
    let disc = 4.0 * i1 * i2 - k * w * w;
    let root = clamped_sqrt(disc, (4.0 * i1 * i2).abs() + (k * w * w).abs(), "discriminant")?;
    let mixed = branch.sign() * root * y * z;
    let radicand = i2 * y * y + i1 * z * z + mixed;
    let r = clamped_sqrt(radicand, (i2 * y * y).abs() + (i1 * z * z).abs() + mixed.abs(), "radicand")?;
    Ok(PinneyValue {
        raw: std::f64::consts::SQRT_2 / w * r,
        discriminant_root: root,
    })
}

/// Milne–Pinney solution through `(x₀, v₀)` assembled from two oscillator
/// solutions `y` and `z` that share ω(t). Sampled on `y`'s grid with `z` read
/// from its dense output. The branch is fixed at the first sample and the
/// result stays on the side of zero where `x₀` lies.
pub fn pinney_rule_from_solutions(
    y: &Trajectory,
    z: &Trajectory,
    x0: f64,
    v0: f64,
    k: f64,
) -> Result<Trajectory, SuperpositionError> {
    let t0 = y.start();
    let (ys, zs) = (&y.states()[0], z.dense(t0)?);
    let inv = ermakov_pair_invariants(&[x0, ys[0], zs[0], v0, ys[1], zs[1]], k)?;
    if inv.w == 0.0 {
        return Err(SuperpositionError::Dependent(inv.w));
    }
    let branch = choose_branch((ys[0], ys[1]), (zs[0], zs[1]), inv, k, (x0, v0))?;
    let side = x0.signum();

    let n = y.len();
    let (mut states, mut derivs) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for (i, (&t, ys)) in y.times().iter().zip(y.states()).enumerate() {
        let zs = z.dense(t)?;
        let zd = z.dense_derivative(t)?;
        let (yy, zz) = (ys[0], zs[0]);
        let (x, v) = pinney_phase((yy, ys[1]), (zz, zs[1]), inv, k, branch, side).map_err(|e| match e {
            SuperpositionError::Domain { .. } => SuperpositionError::BranchFlip { t },
            other => other,
        })?;
        // ω² recovered from both oscillators, which never vanish together.
        let yacc = y.derivs()[i][1];
        let omega_sq = -(yacc * yy + zd[1] * zz) / (yy * yy + zz * zz);
        states.push(vec![x, v]);
        derivs.push(vec![v, -omega_sq * x + k / (x * x * x)]);
    }
    Ok(Trajectory::new(y.times().to_vec(), states, derivs)?)
}

/// Position and velocity from Pinney's rule on the half-line of sign `side`.
/// The velocity differentiates `x² = (2/W²)(I₂y² + I₁z² ± √(…) yz)`.
pub fn pinney_phase(
    y: (f64, f64),
    z: (f64, f64),
    inv: PairInvariants,
    k: f64,
    branch: PinneyBranch,
    side: f64,
) -> Result<(f64, f64), SuperpositionError> {
    let value = pinney_rule(y.0, z.0, inv, k, branch)?;
    let x = side * value.magnitude();
    if x == 0.0 {
        return Err(SuperpositionError::Domain { what: "Pinney solution", value: 0.0 });
    }
    let rate = 2.0 * inv.i2 * y.0 * y.1
        + 2.0 * inv.i1 * z.0 * z.1
        + branch.sign() * value.discriminant_root * (y.1 * z.0 + y.0 * z.1);
    Ok((x, rate / (inv.w * inv.w * x)))
}

/// The branch whose phase point at the initial time lies closest to `(x₀, v₀)`.
/// Position alone cannot decide when `y₀z₀ = 0`; the velocity can.
pub fn choose_branch(
    y0: (f64, f64),
    z0: (f64, f64),
    inv: PairInvariants,
    k: f64,
    start: (f64, f64),
) -> Result<PinneyBranch, SuperpositionError> {
    let side = start.0.signum();
    let distance = |b| {
        pinney_phase(y0, z0, inv, k, b, side).map(|(x, v)| (x - start.0).hypot(v - start.1))
    };
    match (distance(PinneyBranch::Plus), distance(PinneyBranch::Minus)) {
        (Ok(p), Ok(m)) => Ok(if p <= m { PinneyBranch::Plus } else { PinneyBranch::Minus }),
        (Ok(_), Err(_)) => Ok(PinneyBranch::Plus),
        (Err(_), Ok(_)) => Ok(PinneyBranch::Minus),
        (Err(e), Err(_)) => Err(SuperpositionError::NoBranch(Box::new(e))),
    }
}
