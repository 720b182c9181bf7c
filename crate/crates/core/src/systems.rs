//! The concrete Lie systems: each is a set of sl(2,ℝ) generators `X_α`,
//! coefficients `b_α(t)` and the shared structure constants, assembled into the
//! time-dependent right-hand side `Σ b_α(t) X_α`.
//!
//! Coordinate orderings:
//!
//! | system                | state                    |
//! |-----------------------|--------------------------|
//! | `oscillator_1d`       | (x, v)                   |
//! | `oscillator_2d`       | (x₁, v₁, x₂, v₂)         |
//! | `milne_pinney`        | (x, v)                   |
//! | `ermakov`             | (x, vₓ, y, v_y)          |
//! | `generalized_ermakov` | (x, vₓ, y, v_y)          |
//! | `pinney_triple`       | (x, y, z, vₓ, v_y, v_z)  |

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::integrate::{integrate, FrequencyProfile, IntegrateOptions, IntegrationError, Trajectory};
use crate::probes::{ProbeDomain, Side};
use crate::vectorfield::{
    diagonal_prolongation, verify_algebra, AlgebraError, AlgebraReport, Singularity, StructureConstants,
    VectorField,
};

/// Integration aborts once a guarded coordinate comes this close to its
/// singular hyperplane (or leaves its half-plane).
pub const SINGULARITY_GUARD: f64 = 1e-6;

/// Names accepted by [`by_name`].
pub const SYSTEM_NAMES: [&str; 6] = [
    "oscillator_1d",
    "oscillator_2d",
    "milne_pinney",
    "ermakov",
    "generalized_ermakov",
    "pinney_triple",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HalfPlane {
    #[default]
    Positive,
    Negative,
}

impl HalfPlane {
    pub fn sign(self) -> f64 {
        match self {
            HalfPlane::Positive => 1.0,
            HalfPlane::Negative => -1.0,
        }
    }

    pub fn of(value: f64) -> Self {
        if value < 0.0 {
            HalfPlane::Negative
        } else {
            HalfPlane::Positive
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            HalfPlane::Positive => HalfPlane::Negative,
            HalfPlane::Negative => HalfPlane::Positive,
        }
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The pair `f, g` of the generalized Ermakov system, with derivatives.
#[derive(Clone)]
pub struct ShapeFunctions {
    label: String,
    f: ScalarFn,
    df: ScalarFn,
    g: ScalarFn,
    dg: ScalarFn,
}

impl fmt::Debug for ShapeFunctions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("ShapeFunctions").field(&self.label).finish()
    }
}

fn central_derivative(h: ScalarFn) -> ScalarFn {
    Arc::new(move |u| {
        let step = f64::EPSILON.cbrt() * u.abs().max(1.0);
        (h(u + step) - h(u - step)) / (2.0 * step)
    })
}

impl ShapeFunctions {
    pub fn with_derivatives(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dg: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
            df: Arc::new(df),
            g: Arc::new(g),
            dg: Arc::new(dg),
        }
    }

    /// User-supplied shapes; derivatives by central differences.
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let f: ScalarFn = Arc::new(f);
        let g: ScalarFn = Arc::new(g);
        Self {
            label: label.into(),
            df: central_derivative(f.clone()),
            dg: central_derivative(g.clone()),
            f,
            g,
        }
    }

    /// f(u) = 0, g(u) = 1: the plain Ermakov system.
    pub fn ermakov() -> Self {
        Self::with_derivatives("f=0, g=1", |_| 0.0, |_| 0.0, |_| 1.0, |_| 0.0)
    }

    /// f(u) = u², g(u) = 1.
    pub fn quadratic() -> Self {
        Self::with_derivatives("f=u^2, g=1", |u| u * u, |u| 2.0 * u, |_| 1.0, |_| 0.0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn f(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    pub fn df(&self, u: f64) -> f64 {
        (self.df)(u)
    }

    pub fn g(&self, u: f64) -> f64 {
        (self.g)(u)
    }

    pub fn dg(&self, u: f64) -> f64 {
        (self.dg)(u)
    }
}

/// A Lie system `Σ_α b_α(t) X_α` with its algebra data.
#[derive(Clone)]
pub struct SystemDef {
    name: String,
    coordinates: Vec<&'static str>,
    generators: Vec<VectorField>,
    coefficients: Vec<ScalarFn>,
    constants: StructureConstants,
    guarded: Vec<(usize, HalfPlane)>,
    frequency: FrequencyProfile,
}

impl fmt::Debug for SystemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemDef")
            .field("name", &self.name)
            .field("coordinates", &self.coordinates)
            .field("generators", &self.generators)
            .field("guarded", &self.guarded)
            .field("frequency", &self.frequency)
            .finish()
    }
}

impl SystemDef {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.coordinates.len()
    }

    pub fn coordinates(&self) -> &[&'static str] {
        &self.coordinates
    }

    pub fn generators(&self) -> &[VectorField] {
        &self.generators
    }

    pub fn constants(&self) -> &StructureConstants {
        &self.constants
    }

    pub fn frequency(&self) -> &FrequencyProfile {
        &self.frequency
    }

    /// `b_α(t)`, zero-based α.
    pub fn coefficient(&self, alpha: usize, t: f64) -> f64 {
        (self.coefficients[alpha])(t)
    }

    /// Guarded coordinates with the half-plane each is confined to.
    pub fn guarded(&self) -> &[(usize, HalfPlane)] {
        &self.guarded
    }

    /// Move every guarded coordinate to the given half-plane.
    pub fn with_half_plane(mut self, half: HalfPlane) -> Self {
        for g in &mut self.guarded {
            g.1 = half;
        }
        self
    }

    fn check_domain(&self, p: &[f64]) -> Result<(), Singularity> {
        for &(i, half) in &self.guarded {
            if p[i] * half.sign() < SINGULARITY_GUARD || p[i].is_nan() {
                return Err(Singularity {
                    coordinate: i,
                    value: p[i],
                });
            }
        }
        Ok(())
    }

    /// `Σ_α b_α(t) X_α(p)` written into `out`.
    pub fn rhs(&self, t: f64, p: &[f64], out: &mut [f64]) -> Result<(), Singularity> {
        assert_eq!(p.len(), self.dim(), "state dimension");
        self.check_domain(p)?;
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut buf = vec![0.0; p.len()];
        for (field, b) in self.generators.iter().zip(&self.coefficients) {
            let b = b(t);
            if b == 0.0 {
                continue;
            }
            field.eval_into(p, &mut buf).map_err(|_| Singularity {
                coordinate: self.guarded.first().map(|g| g.0).unwrap_or(0),
                value: f64::NAN,
            })?;
            for (o, v) in out.iter_mut().zip(&buf) {
                *o += b * v;
            }
        }
        Ok(())
    }

    pub fn rhs_vec(&self, t: f64, p: &[f64]) -> Result<Vec<f64>, Singularity> {
        let mut out = vec![0.0; p.len()];
        self.rhs(t, p, &mut out)?;
        Ok(out)
    }

    /// Probe points in the guarded domain of this system.
    pub fn probe_domain(&self) -> ProbeDomain {
        self.guarded.iter().fold(ProbeDomain::new(self.dim()), |d, &(i, h)| {
            d.guard(
                i,
                match h {
                    HalfPlane::Positive => Side::Positive,
                    HalfPlane::Negative => Side::Negative,
                },
            )
        })
    }

    pub fn sample_probes<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
        self.probe_domain().sample_many(count, rng)
    }

    pub fn verify_algebra(&self, probes: &[Vec<f64>], tol: f64) -> Result<AlgebraReport, AlgebraError> {
        verify_algebra(&self.generators, &self.constants, probes, tol)
    }

    pub fn integrate(
        &self,
        y0: &[f64],
        t_span: (f64, f64),
        options: &IntegrateOptions,
    ) -> Result<Trajectory, IntegrationError> {
        integrate(|t, y, dy| self.rhs(t, y, dy), y0, t_span, options)
    }
}

fn sl2_system(
    name: &str,
    coordinates: Vec<&'static str>,
    generators: Vec<VectorField>,
    guarded: Vec<(usize, HalfPlane)>,
    omega: FrequencyProfile,
) -> SystemDef {
    let w = omega.clone();
    SystemDef {
        name: name.to_string(),
        coordinates,
        generators,
        coefficients: vec![
            Arc::new(move |t| -w.omega_squared(t)),
            Arc::new(|_| 1.0),
            Arc::new(|_| 0.0),
        ],
        constants: StructureConstants::sl2(),
        guarded,
        frequency: omega,
    }
}

/// Generators of the 1-dimensional oscillator on (x, v):
/// `X₁ = x∂ᵥ`, `X₂ = v∂ₓ`, `X₃ = ½(x∂ₓ − v∂ᵥ)`.
pub fn oscillator_generators() -> Vec<VectorField> {
    vec![
        VectorField::new("X1", 2, |p, o| o[1] = p[0]).with_jacobian(|_, m| m[(1, 0)] = 1.0),
        VectorField::new("X2", 2, |p, o| o[0] = p[1]).with_jacobian(|_, m| m[(0, 1)] = 1.0),
        VectorField::new("X3", 2, |p, o| {
            o[0] = 0.5 * p[0];
            o[1] = -0.5 * p[1];
        })
        .with_jacobian(|_, m| {
            m[(0, 0)] = 0.5;
            m[(1, 1)] = -0.5;
        }),
    ]
}

pub fn oscillator_1d(omega: FrequencyProfile) -> SystemDef {
    sl2_system("oscillator_1d", vec!["x", "v"], oscillator_generators(), vec![], omega)
}

/// Two copies of the oscillator sharing ω(t); the generators are the diagonal
/// prolongations of the 1-dimensional ones.
pub fn oscillator_2d(omega: FrequencyProfile) -> SystemDef {
    let generators = oscillator_generators()
        .iter()
        .map(|f| diagonal_prolongation(f, 2))
        .collect();
    sl2_system("oscillator_2d", vec!["x1", "v1", "x2", "v2"], generators, vec![], omega)
}

/// Milne–Pinney generators on (x, v):
/// `L₁ = x∂ᵥ`, `L₂ = (k/x³)∂ᵥ + v∂ₓ`, `L₃ = ½(x∂ₓ − v∂ᵥ)`.
pub fn milne_pinney_generators(k: f64) -> Vec<VectorField> {
    let singular: Vec<usize> = if k != 0.0 { vec![0] } else { vec![] };
    vec![
        VectorField::new("L1", 2, |p, o| o[1] = p[0]).with_jacobian(|_, m| m[(1, 0)] = 1.0),
        VectorField::new("L2", 2, move |p, o| {
            o[0] = p[1];
            o[1] = k / (p[0] * p[0] * p[0]);
        })
        .with_jacobian(move |p, m| {
            m[(0, 1)] = 1.0;
            m[(1, 0)] = -3.0 * k / p[0].powi(4);
        })
        .with_singular_coords(singular),
        VectorField::new("L3", 2, |p, o| {
            o[0] = 0.5 * p[0];
            o[1] = -0.5 * p[1];
        })
        .with_jacobian(|_, m| {
            m[(0, 0)] = 0.5;
            m[(1, 1)] = -0.5;
        }),
    ]
}

/// ẍ = −ω²(t)x + k/x³ on the half-plane x > 0. `k = 0` gives back the oscillator.
pub fn milne_pinney(omega: FrequencyProfile, k: f64) -> SystemDef {
    let guarded = if k != 0.0 { vec![(0, HalfPlane::Positive)] } else { vec![] };
    sl2_system("milne_pinney", vec!["x", "v"], milne_pinney_generators(k), guarded, omega)
}

fn n1_field(label: &str) -> VectorField {
    VectorField::new(label, 4, |p, o| {
        o[1] = p[0];
        o[3] = p[2];
    })
    .with_jacobian(|_, m| {
        m[(1, 0)] = 1.0;
        m[(3, 2)] = 1.0;
    })
}

fn n3_field(label: &str) -> VectorField {
    VectorField::new(label, 4, |p, o| {
        for i in 0..4 {
            o[i] = if i % 2 == 0 { 0.5 * p[i] } else { -0.5 * p[i] };
        }
    })
    .with_jacobian(|_, m| {
        for i in 0..4 {
            m[(i, i)] = if i % 2 == 0 { 0.5 } else { -0.5 };
        }
    })
}

/// Oscillator in x coupled to a Pinney equation (k = 1) in y, state (x, vₓ, y, v_y).
pub fn ermakov(omega: FrequencyProfile) -> SystemDef {
    let x2 = VectorField::new("X2", 4, |p, o| {
        o[0] = p[1];
        o[2] = p[3];
        o[3] = 1.0 / (p[2] * p[2] * p[2]);
    })
    .with_jacobian(|p, m| {
        m[(0, 1)] = 1.0;
        m[(2, 3)] = 1.0;
        m[(3, 2)] = -3.0 / p[2].powi(4);
    })
    .with_singular_coords(vec![2]);
    sl2_system(
        "ermakov",
        vec!["x", "vx", "y", "vy"],
        vec![n1_field("X1"), x2, n3_field("X3")],
        vec![(2, HalfPlane::Positive)],
        omega,
    )
}

/// ẍ = f(y/x)/x³ − ω²x, ÿ = g(y/x)/y³ − ω²y on x > 0, y > 0, state (x, vₓ, y, v_y).
pub fn generalized_ermakov(omega: FrequencyProfile, shapes: ShapeFunctions) -> SystemDef {
    let s = shapes.clone();
    let n2 = VectorField::new("N2", 4, move |p, o| {
        let (x, y) = (p[0], p[2]);
        let u = y / x;
        o[0] = p[1];
        o[1] = s.f(u) / (x * x * x);
        o[2] = p[3];
        o[3] = s.g(u) / (y * y * y);
    })
    .with_jacobian(move |p, m| {
        let (x, y) = (p[0], p[2]);
        let u = y / x;
        let (f, df, g, dg) = (shapes.f(u), shapes.df(u), shapes.g(u), shapes.dg(u));
        let (x3, y3) = (x * x * x, y * y * y);
        m[(0, 1)] = 1.0;
        m[(2, 3)] = 1.0;
        m[(1, 0)] = -df * y / (x * x * x3) - 3.0 * f / (x3 * x);
        m[(1, 2)] = df / (x * x3);
        m[(3, 0)] = -dg * y / (x * x * y3);
        m[(3, 2)] = dg / (x * y3) - 3.0 * g / (y3 * y);
    })
    .with_singular_coords(vec![0, 2]);
    sl2_system(
        "generalized_ermakov",
        vec!["x", "vx", "y", "vy"],
        vec![n1_field("N1"), n2, n3_field("N3")],
        vec![(0, HalfPlane::Positive), (2, HalfPlane::Positive)],
        omega,
    )
}

/// A Pinney equation in x with two oscillators y, z sharing ω(t); state
/// (x, y, z, vₓ, v_y, v_z).
pub fn pinney_triple(omega: FrequencyProfile, k: f64) -> SystemDef {
    let singular: Vec<usize> = if k != 0.0 { vec![0] } else { vec![] };
    let n1 = VectorField::new("N1", 6, |p, o| {
        o[3] = p[0];
        o[4] = p[1];
        o[5] = p[2];
    })
    .with_jacobian(|_, m| {
        for i in 0..3 {
            m[(i + 3, i)] = 1.0;
        }
    });
    let n2 = VectorField::new("N2", 6, move |p, o| {
        o[0] = p[3];
        o[1] = p[4];
        o[2] = p[5];
        o[3] = k / (p[0] * p[0] * p[0]);
    })
    .with_jacobian(move |p, m| {
        for i in 0..3 {
            m[(i, i + 3)] = 1.0;
        }
        m[(3, 0)] = -3.0 * k / p[0].powi(4);
    })
    .with_singular_coords(singular);
    let n3 = VectorField::new("N3", 6, |p, o| {
        for i in 0..3 {
            o[i] = 0.5 * p[i];
            o[i + 3] = -0.5 * p[i + 3];
        }
    })
    .with_jacobian(|_, m| {
        for i in 0..3 {
            m[(i, i)] = 0.5;
            m[(i + 3, i + 3)] = -0.5;
        }
    });
    let guarded = if k != 0.0 { vec![(0, HalfPlane::Positive)] } else { vec![] };
    sl2_system(
        "pinney_triple",
        vec!["x", "y", "z", "vx", "vy", "vz"],
        vec![n1, n2, n3],
        guarded,
        omega,
    )
}

/// Catalog lookup. `k` defaults to 1 and `shapes` to f = 0, g = 1 where relevant.
pub fn by_name(
    name: &str,
    omega: FrequencyProfile,
    k: Option<f64>,
    shapes: Option<ShapeFunctions>,
) -> Option<SystemDef> {
    let k = k.unwrap_or(1.0);
    Some(match name {
        "oscillator_1d" => oscillator_1d(omega),
        "oscillator_2d" => oscillator_2d(omega),
        "milne_pinney" => milne_pinney(omega, k),
        "ermakov" => ermakov(omega),
        "generalized_ermakov" => generalized_ermakov(omega, shapes.unwrap_or_else(ShapeFunctions::ermakov)),
        "pinney_triple" => pinney_triple(omega, k),
        _ => return None,
    })
}
