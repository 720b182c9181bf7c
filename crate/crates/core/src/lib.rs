//! Numerical workbench for Lie systems of ODEs built on sl(2,ℝ).
//!
//! The crate covers the time-dependent harmonic oscillator (one and two
//! dimensional), the Milne–Pinney equation, the Ermakov and generalized Ermakov
//! systems and the Pinney triple system. For each it provides:
//!
//! * the generator fields and their structure constants ([`vectorfield`], [`systems`]),
//! * closed-form first integrals and drift measurement ([`invariants`]),
//! * linear, quadrature and nonlinear superposition rules ([`superposition`]),
//! * SL(2,ℝ) actions and reduction by a particular solution ([`group`]),
//!
//! all cross-checked against adaptive numerical integration ([`integrate`]).
//! [`verify`] bundles the end-to-end checks that the `liesys verify` command runs.

pub mod group;
pub mod integrate;
pub mod invariants;
pub mod probes;
pub mod superposition;
pub mod systems;
pub mod verify;
pub mod vectorfield;

pub use group::{ReductionParameters, Sl2Matrix, Sl2Vector};
pub use integrate::{FrequencyProfile, IntegrateOptions, Trajectory};
pub use invariants::InvariantSeries;
pub use systems::{HalfPlane, ShapeFunctions, SystemDef};
pub use vectorfield::{StructureConstants, VectorField};
