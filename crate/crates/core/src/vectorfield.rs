//! Autonomous vector fields on ℝⁿ, Lie brackets, diagonal prolongations and
//! the rank test that fixes the number of particular solutions a
//! superposition rule needs.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use thiserror::Error;

use crate::probes::ProbeDomain;

/// A coordinate hit a singular hyperplane of a field (for example `x = 0`
/// for `k/x³`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singularity {
    pub coordinate: usize,
    pub value: f64,
}

impl fmt::Display for Singularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "coordinate {} = {:e} is singular", self.coordinate, self.value)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FieldError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular point: {0}")]
    Singular(Singularity),
    #[error("field `{label}` produced a non-finite value")]
    NonFinite { label: String },
}

type EvalFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
type JacobianFn = dyn Fn(&[f64], &mut DMatrix<f64>) + Send + Sync;

/// An autonomous vector field on ℝⁿ.
///
/// The evaluation closure writes into a zeroed output buffer. Fields built
/// without an analytic Jacobian fall back to central differences; that fallback
/// is visible through [`VectorField::has_analytic_jacobian`].
#[derive(Clone)]
pub struct VectorField {
    label: String,
    dim: usize,
    eval: Arc<EvalFn>,
    jacobian: Option<Arc<JacobianFn>>,
    singular_coords: Vec<usize>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("singular_coords", &self.singular_coords)
            .finish()
    }
}

impl VectorField {
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        eval: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        assert!(dim > 0, "vector field dimension must be positive");
        Self {
            label: label.into(),
            dim,
            eval: Arc::new(eval),
            jacobian: None,
            singular_coords: Vec::new(),
        }
    }

    /// Attach an analytic Jacobian. The closure receives a zeroed `n×n` matrix.
    pub fn with_jacobian(
        mut self,
        jacobian: impl Fn(&[f64], &mut DMatrix<f64>) + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    /// Mark coordinates whose zero set is a singular hyperplane.
    pub fn with_singular_coords(mut self, coords: impl Into<Vec<usize>>) -> Self {
        self.singular_coords = coords.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn singular_coords(&self) -> &[usize] {
        &self.singular_coords
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    fn check_point(&self, p: &[f64]) -> Result<(), FieldError> {
        if p.len() != self.dim {
            return Err(FieldError::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        for &i in &self.singular_coords {
            if p[i] == 0.0 {
                return Err(FieldError::Singular(Singularity {
                    coordinate: i,
                    value: p[i],
                }));
            }
        }
        Ok(())
    }

    /// Evaluate into `out`, which must have length `dim`.
    pub fn eval_into(&self, p: &[f64], out: &mut [f64]) -> Result<(), FieldError> {
        self.check_point(p)?;
        out.iter_mut().for_each(|o| *o = 0.0);
        (self.eval)(p, out);
        if out.iter().any(|o| !o.is_finite()) {
            return Err(FieldError::NonFinite {
                label: self.label.clone(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, FieldError> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(p, &mut out)?;
        Ok(out)
    }

    /// Jacobian `∂Xⁱ/∂xʲ` at `p`: analytic when supplied, central differences otherwise.
    pub fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>, FieldError> {
        self.check_point(p)?;
        match &self.jacobian {
            Some(jac) => {
                let mut m = DMatrix::zeros(self.dim, self.dim);
                jac(p, &mut m);
                if m.iter().any(|v| !v.is_finite()) {
                    return Err(FieldError::NonFinite {
                        label: self.label.clone(),
                    });
                }
                Ok(m)
            }
            None => central_difference_jacobian(self, p),
        }
    }
}

/// Central-difference Jacobian with step `cbrt(ε)·max(1, ‖p‖)`.
pub fn central_difference_jacobian(field: &VectorField, p: &[f64]) -> Result<DMatrix<f64>, FieldError> {
    let n = field.dim();
    let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    let h = f64::EPSILON.cbrt() * norm.max(1.0);
    let mut m = DMatrix::zeros(n, n);
    let mut q = p.to_vec();
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    for j in 0..n {
        q[j] = p[j] + h;
        field.eval_into(&q, &mut plus)?;
        q[j] = p[j] - h;
        field.eval_into(&q, &mut minus)?;
        q[j] = p[j];
        for i in 0..n {
            m[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Ok(m)
}

fn check_same_dim(x: &VectorField, y: &VectorField) -> Result<(), FieldError> {
    if x.dim() != y.dim() {
        return Err(FieldError::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    Ok(())
}

/// Lie bracket `[X, Y](p) = DY·X − DX·Y`.
pub fn bracket(x: &VectorField, y: &VectorField, p: &[f64]) -> Result<Vec<f64>, FieldError> {
    check_same_dim(x, y)?;
    let xv = nalgebra::DVector::from_vec(x.eval(p)?);
    let yv = nalgebra::DVector::from_vec(y.eval(p)?);
    let dx = x.jacobian(p)?;
    let dy = y.jacobian(p)?;
    Ok((dy * xv - dx * yv).as_slice().to_vec())
}

/// The bracket `[X, Y]` packaged as a field of its own. Its Jacobian is the
/// finite-difference fallback.
pub fn bracket_field(x: &VectorField, y: &VectorField) -> Result<VectorField, FieldError> {
    check_same_dim(x, y)?;
    let (xc, yc) = (x.clone(), y.clone());
    let mut singular: Vec<usize> = x.singular_coords().to_vec();
    singular.extend_from_slice(y.singular_coords());
    singular.sort_unstable();
    singular.dedup();
    let label = format!("[{},{}]", x.label(), y.label());
    Ok(VectorField::new(label, x.dim(), move |p, out| {
        match bracket(&xc, &yc, p) {
            Ok(b) => out.copy_from_slice(&b),
            Err(_) => out.iter_mut().for_each(|o| *o = f64::NAN),
        }
    })
    .with_singular_coords(singular))
}

/// Real structure constants `c_{αβ}^γ` of an `r`-dimensional Lie algebra,
/// zero-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstants {
    r: usize,
    c: Vec<f64>,
}

impl StructureConstants {
    pub fn zeros(r: usize) -> Self {
        Self { r, c: vec![0.0; r * r * r] }
    }

    /// The constants shared by every sl(2,ℝ) realization in this crate:
    /// `[X₁,X₂] = 2X₃`, `[X₁,X₃] = −X₁`, `[X₂,X₃] = X₂`.
    pub fn sl2() -> Self {
        let mut c = Self::zeros(3);
        c.set(0, 1, 2, 2.0);
        c.set(0, 2, 0, -1.0);
        c.set(1, 2, 1, 1.0);
        c
    }

    pub fn dim(&self) -> usize {
        self.r
    }

    fn idx(&self, a: usize, b: usize, g: usize) -> usize {
        (a * self.r + b) * self.r + g
    }

    pub fn get(&self, a: usize, b: usize, g: usize) -> f64 {
        self.c[self.idx(a, b, g)]
    }

    /// Sets `c_{ab}^g = value` and `c_{ba}^g = −value`.
    pub fn set(&mut self, a: usize, b: usize, g: usize, value: f64) {
        let i = self.idx(a, b, g);
        let j = self.idx(b, a, g);
        self.c[i] = value;
        self.c[j] = -value;
    }

    /// Largest violation of `c_{αβ}^γ = −c_{βα}^γ`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let r = self.r;
        let mut worst: f64 = 0.0;
        for a in 0..r {
            for b in 0..r {
                for g in 0..r {
                    worst = worst.max((self.get(a, b, g) + self.get(b, a, g)).abs());
                }
            }
        }
        worst
    }

    /// Largest component of the cyclic Jacobi sum.
    pub fn jacobi_residual(&self) -> f64 {
        let r = self.r;
        let mut worst: f64 = 0.0;
        for a in 0..r {
            for b in 0..r {
                for g in 0..r {
                    for e in 0..r {
                        let mut s = 0.0;
                        for d in 0..r {
                            s += self.get(b, g, d) * self.get(a, d, e)
                                + self.get(g, a, d) * self.get(b, d, e)
                                + self.get(a, b, d) * self.get(g, d, e);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AlgebraError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("expected {expected} fields for the structure constants, got {got}")]
    WrongFieldCount { expected: usize, got: usize },
    #[error("no probe points supplied")]
    NoProbes,
    #[error(
        "bracket [X{},X{}] misses its expansion by {residual:e} (tol {tol:e}) at {point:?}",
        alpha + 1,
        beta + 1
    )]
    ResidualExceeded {
        alpha: usize,
        beta: usize,
        point: Vec<f64>,
        residual: f64,
        tol: f64,
    },
}

/// Outcome of a successful closure check.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraReport {
    pub checks: usize,
    pub worst_residual: f64,
    pub worst_pair: (usize, usize),
    pub worst_point: Vec<f64>,
}

/// Residual `‖[X_α,X_β](p) − Σ_γ c_{αβ}^γ X_γ(p)‖∞`.
pub fn closure_residual(
    fields: &[VectorField],
    constants: &StructureConstants,
    alpha: usize,
    beta: usize,
    p: &[f64],
) -> Result<f64, FieldError> {
    let b = bracket(&fields[alpha], &fields[beta], p)?;
    let mut expansion = vec![0.0; b.len()];
    for (g, field) in fields.iter().enumerate() {
        let c = constants.get(alpha, beta, g);
        if c != 0.0 {
            for (e, v) in expansion.iter_mut().zip(field.eval(p)?) {
                *e += c * v;
            }
        }
    }
    Ok(b.iter()
        .zip(&expansion)
        .map(|(a, e)| (a - e).abs())
        .fold(0.0, f64::max))
}

/// Check that `fields` close on the algebra described by `constants` at every probe.
pub fn verify_algebra(
    fields: &[VectorField],
    constants: &StructureConstants,
    probes: &[Vec<f64>],
    tol: f64,
) -> Result<AlgebraReport, AlgebraError> {
    if fields.len() != constants.dim() {
        return Err(AlgebraError::WrongFieldCount {
            expected: constants.dim(),
            got: fields.len(),
        });
    }
    if probes.is_empty() {
        return Err(AlgebraError::NoProbes);
    }
    let n = fields[0].dim();
    if let Some(bad) = fields.iter().find(|f| f.dim() != n) {
        return Err(FieldError::DimensionMismatch {
            expected: n,
            got: bad.dim(),
        }
        .into());
    }
    let mut report = AlgebraReport {
        checks: 0,
        worst_residual: 0.0,
        worst_pair: (0, 0),
        worst_point: probes[0].clone(),
    };
    for p in probes {
        for a in 0..fields.len() {
            for b in (a + 1)..fields.len() {
                let residual = closure_residual(fields, constants, a, b, p)?;
                report.checks += 1;
                if residual > report.worst_residual {
                    report.worst_residual = residual;
                    report.worst_pair = (a, b);
                    report.worst_point = p.clone();
                }
                if residual > tol || residual.is_nan() {
                    return Err(AlgebraError::ResidualExceeded {
                        alpha: a,
                        beta: b,
                        point: p.clone(),
                        residual,
                        tol,
                    });
                }
            }
        }
    }
    Ok(report)
}

/// The field acting as `X` on each of `copies` consecutive blocks of ℝ^(n·copies).
pub fn diagonal_prolongation(x: &VectorField, copies: usize) -> VectorField {
    assert!(copies >= 1, "a prolongation needs at least one copy");
    if copies == 1 {
        return x.clone();
    }
    let n = x.dim();
    let label = format!("{}^({})", x.label(), copies);
    let singular: Vec<usize> = (0..copies)
        .flat_map(|c| x.singular_coords().iter().map(move |&i| c * n + i))
        .collect();
    let inner = x.clone();
    let mut field = VectorField::new(label, n * copies, move |p, out| {
        for (block, chunk) in p.chunks(n).zip(out.chunks_mut(n)) {
            if inner.eval_into(block, chunk).is_err() {
                chunk.iter_mut().for_each(|o| *o = f64::NAN);
            }
        }
    })
    .with_singular_coords(singular);
    if x.has_analytic_jacobian() {
        let inner = x.clone();
        field = field.with_jacobian(move |p, m| {
            for (c, block) in p.chunks(n).enumerate() {
                match inner.jacobian(block) {
                    Ok(j) => m.view_mut((c * n, c * n), (n, n)).copy_from(&j),
                    Err(_) => m.view_mut((c * n, c * n), (n, n)).fill(f64::NAN),
                }
            }
        });
    }
    field
}

/// Number of singular values above `rank_tol · σ₁`.
pub fn numerical_rank(m: &DMatrix<f64>, rank_tol: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let largest = sv.iter().cloned().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rank_tol * largest).count()
}

/// Rank of the fields' values at `p`, stacked as rows.
pub fn pointwise_rank(fields: &[VectorField], p: &[f64], rank_tol: f64) -> Result<usize, FieldError> {
    let rows: Vec<Vec<f64>> = fields.iter().map(|f| f.eval(p)).collect::<Result<_, _>>()?;
    let m = DMatrix::from_fn(rows.len(), p.len(), |i, j| rows[i][j]);
    Ok(numerical_rank(&m, rank_tol))
}

/// Result of the minimal-`m` search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MinimalM {
    /// Smallest number of copies with full rank; `ranks[k-1]` is the majority rank at `k` copies.
    Found { m: usize, ranks: Vec<usize> },
    /// No level up to `max_copies` reached full rank.
    Undetermined { ranks: Vec<usize> },
}

impl MinimalM {
    pub fn value(&self) -> Option<usize> {
        match self {
            MinimalM::Found { m, .. } => Some(*m),
            MinimalM::Undetermined { .. } => None,
        }
    }
}

/// Default relative singular-value threshold for the rank test.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Smallest number of copies whose diagonal prolongations are pointwise
/// independent at generic points, by majority vote over random probes.
pub fn minimal_m<R: Rng + ?Sized>(
    fields: &[VectorField],
    max_copies: usize,
    probes_per_level: usize,
    rank_tol: f64,
    rng: &mut R,
) -> Result<MinimalM, FieldError> {
    assert!(!fields.is_empty(), "minimal_m needs at least one field");
    let r = fields.len();
    let base = ProbeDomain::for_fields(fields);
    let mut ranks = Vec::with_capacity(max_copies);
    for copies in 1..=max_copies {
        let prolonged: Vec<VectorField> = fields
            .iter()
            .map(|f| diagonal_prolongation(f, copies))
            .collect();
        let domain = base.repeated(copies);
        let mut votes = vec![0usize; r + 1];
        for _ in 0..probes_per_level.max(1) {
            let p = domain.sample(rng);
            votes[pointwise_rank(&prolonged, &p, rank_tol)?] += 1;
        }
        // Highest vote wins; ties go to the lower rank.
        let majority = votes
            .iter()
            .enumerate()
            .fold((0, 0), |best, (rank, &n)| if n > best.1 { (rank, n) } else { best })
            .0;
        ranks.push(majority);
        if majority == r {
            return Ok(MinimalM::Found { m: copies, ranks });
        }
    }
    Ok(MinimalM::Undetermined { ranks })
}
