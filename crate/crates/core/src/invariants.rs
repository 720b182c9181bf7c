//! Closed-form first integrals and their drift along sampled solutions.

use std::io::{self, Write};

use thiserror::Error;

use crate::integrate::{quadrature, QuadratureError, Trajectory, TrajectoryError};
use crate::systems::ShapeFunctions;

/// Quadrature tolerance for the generalized Ermakov potential term.
pub const DEFAULT_QUAD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum InvariantError {
    #[error("invariant singular: {coordinate} = 0")]
    Singular { coordinate: &'static str },
    #[error("potential quadrature failed: {0}")]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

/// `x₁v₂ − x₂v₁`.
pub fn angular_momentum(x1: f64, v1: f64, x2: f64, v2: f64) -> f64 {
    x1 * v2 - x2 * v1
}

/// Lewis–Ermakov invariant `(x/y)² + (x v_y − y vₓ)²` for an oscillator `x`
/// paired with a Pinney (k = 1) solution `y`.
pub fn lewis_ermakov(x: f64, y: f64, vx: f64, vy: f64) -> Result<f64, InvariantError> {
    if y == 0.0 {
        return Err(InvariantError::Singular { coordinate: "y" });
    }
    let ratio = x / y;
    let xi = x * vy - y * vx;
    Ok(ratio * ratio + xi * xi)
}

/// First integrals of the Pinney triple: the two Ermakov invariants and the
/// Wronskian of the oscillator pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairInvariants {
    pub i1: f64,
    pub i2: f64,
    pub w: f64,
}

/// `I₁ = ½((y vₓ − x v_y)² + k(y/x)²)`, `I₂ = ½((x v_z − z vₓ)² + k(z/x)²)`,
/// `W = y v_z − z v_y` for the state `(x, y, z, vₓ, v_y, v_z)`.
pub fn ermakov_pair_invariants(state: &[f64], k: f64) -> Result<PairInvariants, InvariantError> {
    assert_eq!(state.len(), 6, "Pinney triple state has six components");
    let [x, y, z, vx, vy, vz] = [state[0], state[1], state[2], state[3], state[4], state[5]];
    if x == 0.0 {
        return Err(InvariantError::Singular { coordinate: "x" });
    }
    let a = y * vx - x * vy;
    let b = x * vz - z * vx;
    Ok(PairInvariants {
        i1: 0.5 * (a * a + k * (y / x) * (y / x)),
        i2: 0.5 * (b * b + k * (z / x) * (z / x)),
        w: y * vz - z * vy,
    })
}

/// `∫₁^{u} [−ζ⁻³ f(1/ζ) + ζ g(1/ζ)] dζ`.
pub fn generalized_potential(u: f64, shapes: &ShapeFunctions, quad_tol: f64) -> Result<f64, InvariantError> {
    let integrand = |z: f64| {
        let inv = 1.0 / z;
        // f ≡ 0 must not turn ∞·0 into NaN at ζ = 0.
        let fv = shapes.f(inv);
        let f_term = if fv == 0.0 { 0.0 } else { -inv * inv * inv * fv };
        let gv = shapes.g(inv);
        let g_term = if z == 0.0 { 0.0 } else { z * gv };
        f_term + g_term
    };
    Ok(quadrature(integrand, 1.0, u, quad_tol)?)
}

/// Generalized Ermakov invariant `½(x v_y − y vₓ)² + Q(x/y)`, with `Q` the
/// potential integral from the reference ratio 1.
pub fn generalized_invariant(
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    shapes: &ShapeFunctions,
    quad_tol: f64,
) -> Result<f64, InvariantError> {
    if x == 0.0 {
        return Err(InvariantError::Singular { coordinate: "x" });
    }
    if y == 0.0 {
        return Err(InvariantError::Singular { coordinate: "y" });
    }
    let xi = x * vy - y * vx;
    Ok(0.5 * xi * xi + generalized_potential(x / y, shapes, quad_tol)?)
}

/// Values of an invariant along a solution and their drift.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantSeries {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `max |value − value₀|`.
    pub drift_abs: f64,
    /// `drift_abs / max(1, |value₀|)`.
    pub drift_rel: f64,
    /// Set when evaluation stopped early; the series covers samples before `t`.
    pub failure: Option<(f64, InvariantError)>,
}

impl InvariantSeries {
    pub fn from_values(label: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(times.len(), values.len());
        let v0 = values.first().copied().unwrap_or(0.0);
        let drift_abs = values.iter().map(|v| (v - v0).abs()).fold(0.0, f64::max);
        Self {
            label: label.into(),
            times,
            values,
            drift_abs,
            drift_rel: drift_abs / v0.abs().max(1.0),
            failure: None,
        }
    }

    pub fn is_partial(&self) -> bool {
        self.failure.is_some()
    }

    /// CSV with columns `t,<label>,drift`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,{},drift", self.label)?;
        let v0 = self.values.first().copied().unwrap_or(0.0);
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(w, "{t:.16e},{v:.16e},{:.16e}", (v - v0).abs())?;
        }
        Ok(())
    }
}

/// Evaluate `invariant` at every sample of `traj`.
pub fn drift<F>(traj: &Trajectory, label: &str, mut invariant: F) -> InvariantSeries
where
    F: FnMut(&[f64]) -> Result<f64, InvariantError>,
{
    let mut times = Vec::with_capacity(traj.len());
    let mut values = Vec::with_capacity(traj.len());
    let mut failure = None;
    for (t, s) in traj.times().iter().zip(traj.states()) {
        match invariant(s) {
            Ok(v) => {
                times.push(*t);
                values.push(v);
            }
            Err(e) => {
                failure = Some((*t, e));
                break;
            }
        }
    }
    let mut series = InvariantSeries::from_values(label, times, values);
    series.failure = failure;
    series
}

/// As [`drift`] on the concatenated state `(a(t), b(t))`, sampled on `a`'s
/// grid with `b` read from its dense output.
pub fn drift_pair<F>(a: &Trajectory, b: &Trajectory, label: &str, mut invariant: F) -> InvariantSeries
where
    F: FnMut(&[f64]) -> Result<f64, InvariantError>,
{
    let mut times = Vec::with_capacity(a.len());
    let mut values = Vec::with_capacity(a.len());
    let mut failure = None;
    for (t, s) in a.times().iter().zip(a.states()) {
        let combined = b.dense(*t).map_err(InvariantError::from).and_then(|sb| {
            let mut c = s.clone();
            c.extend(sb);
            invariant(&c)
        });
        match combined {
            Ok(v) => {
                times.push(*t);
                values.push(v);
            }
            Err(e) => {
                failure = Some((*t, e));
                break;
            }
        }
    }
    let mut series = InvariantSeries::from_values(label, times, values);
    series.failure = failure;
    series
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angular_momentum_values() {
        assert_eq!(angular_momentum(1.0, 0.0, 0.0, 1.0), 1.0);
        assert_eq!(angular_momentum(0.4, -1.3, 0.4, -1.3), 0.0);
    }

    #[test]
    fn lewis_ermakov_values() {
        assert_eq!(lewis_ermakov(0.0, 1.0, 1.0, 0.0).unwrap(), 1.0);
        assert_eq!(lewis_ermakov(1.0, 1.0, 0.0, 0.0).unwrap(), 1.0);
        assert!(lewis_ermakov(1.0, 0.0, 0.0, 0.0).is_err());
        // x = sin t against the Pinney equilibrium y ≡ 1.
        for t in [0.0, 0.4, 2.2, 5.9] {
            let v = lewis_ermakov(f64::sin(t), 1.0, f64::cos(t), 0.0).unwrap();
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn pair_invariants_on_analytic_solutions() {
        // x ≡ 1, y = sin t, z = cos t at t = 0.
        let p = ermakov_pair_invariants(&[1.0, 0.0, 1.0, 0.0, 1.0, 0.0], 1.0).unwrap();
        assert_eq!(p, PairInvariants { i1: 0.5, i2: 0.5, w: -1.0 });
        for t in [0.3, 1.7, 4.0] {
            let (s, c) = (f64::sin(t), f64::cos(t));
            let p = ermakov_pair_invariants(&[1.0, s, c, 0.0, c, -s], 1.0).unwrap();
            assert!((p.i1 - 0.5).abs() < 1e-15 && (p.i2 - 0.5).abs() < 1e-15 && (p.w + 1.0).abs() < 1e-15);
        }
        assert!(ermakov_pair_invariants(&[0.0; 6], 1.0).is_err());
    }

    #[test]
    fn k_zero_reduces_to_angular_momentum() {
        let s = [0.7, -0.4, 1.1, 0.3, 0.9, -1.2];
        let p = ermakov_pair_invariants(&s, 0.0).unwrap();
        let l = angular_momentum(s[1], s[4], s[0], s[3]);
        assert!((p.i1 - 0.5 * l * l).abs() < 1e-15);
    }

    #[test]
    fn generalized_invariant_reference_point() {
        let v = generalized_invariant(1.0, 1.0, 0.0, 0.0, &ShapeFunctions::quadratic(), 1e-12).unwrap();
        assert_eq!(v, 0.0);
        assert!(generalized_invariant(0.0, 1.0, 0.0, 0.0, &ShapeFunctions::quadratic(), 1e-12).is_err());
    }

    #[test]
    fn generalized_potential_closed_forms() {
        // f = 0, g = 1: ∫₁ᵘ ζ dζ = (u² − 1)/2.
        // f = u², g = 1: ∫₁ᵘ (ζ − ζ⁻⁵) dζ = (u² − 1)/2 + (u⁻⁴ − 1)/4.
        for u in [0.3, 0.8, 1.0, 1.9, 4.5] {
            let e = generalized_potential(u, &ShapeFunctions::ermakov(), 1e-12).unwrap();
            assert!((e - 0.5 * (u * u - 1.0)).abs() < 1e-12);
            let q = generalized_potential(u, &ShapeFunctions::quadratic(), 1e-12).unwrap();
            let exact = 0.5 * (u * u - 1.0) + 0.25 * (u.powi(-4) - 1.0);
            assert!((q - exact).abs() < 1e-11, "{u}: {q} vs {exact}");
        }
    }

    #[test]
    fn drift_of_constant_is_zero() {
        let tr = Trajectory::new(vec![0.0, 1.0, 2.0], vec![vec![1.0]; 3], vec![vec![0.0]; 3]).unwrap();
        let s = drift(&tr, "c", |_| Ok(3.0));
        assert_eq!(s.drift_abs, 0.0);
        assert!(!s.is_partial());
    }

    #[test]
    fn drift_flags_singular_sample() {
        let tr = Trajectory::new(
            vec![0.0, 1.0, 2.0],
            vec![vec![1.0], vec![0.0], vec![-1.0]],
            vec![vec![-1.0]; 3],
        )
        .unwrap();
        let s = drift(&tr, "1/x", |p| {
            if p[0] == 0.0 {
                Err(InvariantError::Singular { coordinate: "x" })
            } else {
                Ok(1.0 / p[0])
            }
        });
        assert!(s.is_partial());
        assert_eq!(s.values, vec![1.0]);
        assert_eq!(s.failure.as_ref().unwrap().0, 1.0);
    }

    #[test]
    fn csv_layout() {
        let s = InvariantSeries::from_values("psi", vec![0.0, 0.5], vec![1.0, 1.25]);
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,psi,drift");
        assert_eq!(lines[2], "5.0000000000000000e-1,1.2500000000000000e0,2.5000000000000000e-1");
        assert_eq!(s.drift_rel, 0.25);
    }
}
