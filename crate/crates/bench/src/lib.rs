//! Inputs shared by the benchmarks in `benches/`.

use liesys::systems::oscillator_1d;
use liesys::{FrequencyProfile, IntegrateOptions, Trajectory};

/// Tolerance used by every benchmarked solve.
pub const TOL: f64 = 1e-10;

pub fn options() -> IntegrateOptions {
    IntegrateOptions::with_tol(TOL, TOL)
}

/// Two independent oscillator solutions for ω² = 2 + sin t on `[0, end]`.
pub fn oscillator_pair(end: f64) -> (Trajectory, Trajectory) {
    let osc = oscillator_1d(FrequencyProfile::two_plus_sine());
    let y = osc.integrate(&[1.0, 0.0], (0.0, end), &options()).expect("oscillator solve");
    let z = osc.integrate(&[0.0, 1.0], (0.0, end), &options()).expect("oscillator solve");
    (y, z)
}
