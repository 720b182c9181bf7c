use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("trajectory needs at least one sample")]
    Empty,
    #[error("{what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("sample times not strictly increasing at index {index}")]
    NotIncreasing { index: usize },
    #[error("t = {t} outside [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
}

/// A sampled solution with dense output.
///
/// Trajectories produced by the integrator carry its 4th-order continuous
/// extension on every step; hand-built ones interpolate by cubic Hermite
/// from the stored states and derivatives.
///
/// Samples are stored in increasing time order. A backward solve keeps that
/// ordering and records its direction, so [`Trajectory::initial_state`] and
/// [`Trajectory::final_state`] follow the direction of integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
    forward: bool,
    segments: Vec<DenseSegment>,
}

/// Continuous extension of one Dormand–Prince step, in the step's own
/// direction: `y(origin + θh) = r₀ + θ(r₁ + (1−θ)(r₂ + θ(r₃ + (1−θ)r₄)))`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DenseSegment {
    pub(crate) origin: f64,
    pub(crate) h: f64,
    pub(crate) r: [Vec<f64>; 5],
}

impl DenseSegment {
    fn eval(&self, t: f64, derivative: bool) -> Vec<f64> {
        let th = (t - self.origin) / self.h;
        let [r0, r1, r2, r3, r4] = &self.r;
        (0..r0.len())
            .map(|i| {
                let a = r3[i] + (1.0 - th) * r4[i];
                let b = r2[i] + th * a;
                let c = r1[i] + (1.0 - th) * b;
                if derivative {
                    let db = a - th * r4[i];
                    let dc = -b + (1.0 - th) * db;
                    (c + th * dc) / self.h
                } else {
                    r0[i] + th * c
                }
            })
            .collect()
    }
}

impl Trajectory {
    /// Build from samples and the time derivatives at each sample.
    pub fn new(
        times: Vec<f64>,
        states: Vec<Vec<f64>>,
        derivs: Vec<Vec<f64>>,
    ) -> Result<Self, TrajectoryError> {
        if times.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        for (what, len) in [("states", states.len()), ("derivs", derivs.len())] {
            if len != times.len() {
                return Err(TrajectoryError::LengthMismatch {
                    what,
                    expected: times.len(),
                    got: len,
                });
            }
        }
        let dim = states[0].len();
        for (s, d) in states.iter().zip(&derivs) {
            if s.len() != dim || d.len() != dim {
                return Err(TrajectoryError::LengthMismatch {
                    what: "state dimension",
                    expected: dim,
                    got: if s.len() != dim { s.len() } else { d.len() },
                });
            }
        }
        if let Some(index) = times.windows(2).position(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(TrajectoryError::NotIncreasing { index: index + 1 });
        }
        Ok(Self {
            times,
            states,
            derivs,
            forward: true,
            segments: Vec::new(),
        })
    }

    /// Samples in integration order plus one continuous extension per step.
    pub(crate) fn from_steps(
        mut times: Vec<f64>,
        mut states: Vec<Vec<f64>>,
        mut derivs: Vec<Vec<f64>>,
        mut segments: Vec<DenseSegment>,
        forward: bool,
    ) -> Result<Self, TrajectoryError> {
        if segments.len() + 1 != times.len() {
            return Err(TrajectoryError::LengthMismatch {
                what: "dense segments",
                expected: times.len().saturating_sub(1),
                got: segments.len(),
            });
        }
        if !forward {
            times.reverse();
            states.reverse();
            derivs.reverse();
            segments.reverse();
        }
        let mut t = Self::new(times, states, derivs)?;
        t.forward = forward;
        t.segments = segments;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn is_forward(&self) -> bool {
        self.forward
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn derivs(&self) -> &[Vec<f64>] {
        &self.derivs
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// State at the time integration started from.
    pub fn initial_state(&self) -> &[f64] {
        if self.forward {
            &self.states[0]
        } else {
            self.states.last().unwrap()
        }
    }

    /// State at the time integration stopped at.
    pub fn final_state(&self) -> &[f64] {
        if self.forward {
            self.states.last().unwrap()
        } else {
            &self.states[0]
        }
    }

    /// Sample values of one state component.
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[i]).collect()
    }

    fn locate(&self, t: f64) -> Result<Located, TrajectoryError> {
        let (start, end) = (self.start(), self.end());
        if !(t >= start && t <= end) {
            return Err(TrajectoryError::OutOfRange { t, start, end });
        }
        match self.times.binary_search_by(|probe| probe.total_cmp(&t)) {
            Ok(i) => Ok(Located::Sample(i)),
            Err(i) => Ok(Located::Between(i - 1)),
        }
    }

    fn between(&self, i: usize, t: f64, derivative: bool) -> Vec<f64> {
        match self.segments.get(i) {
            Some(seg) => seg.eval(t, derivative),
            None => self.hermite(i, t, derivative),
        }
    }

    fn hermite(&self, i: usize, t: f64, derivative: bool) -> Vec<f64> {
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (y0, y1) = (&self.states[i], &self.states[i + 1]);
        let (f0, f1) = (&self.derivs[i], &self.derivs[i + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        if derivative {
            let d00 = (6.0 * s2 - 6.0 * s) / h;
            let d10 = 3.0 * s2 - 4.0 * s + 1.0;
            let d01 = (-6.0 * s2 + 6.0 * s) / h;
            let d11 = 3.0 * s2 - 2.0 * s;
            (0..y0.len())
                .map(|k| d00 * y0[k] + d10 * f0[k] + d01 * y1[k] + d11 * f1[k])
                .collect()
        } else {
            let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
            let h10 = s3 - 2.0 * s2 + s;
            let h01 = -2.0 * s3 + 3.0 * s2;
            let h11 = s3 - s2;
            (0..y0.len())
                .map(|k| h00 * y0[k] + h10 * h * f0[k] + h01 * y1[k] + h11 * h * f1[k])
                .collect()
        }
    }

    /// Dense output. Reproduces the stored state exactly at sample times.
    pub fn dense(&self, t: f64) -> Result<Vec<f64>, TrajectoryError> {
        Ok(match self.locate(t)? {
            Located::Sample(i) => self.states[i].clone(),
            Located::Between(i) => self.between(i, t, false),
        })
    }

    /// Time derivative of the dense output (the stored derivative at samples).
    pub fn dense_derivative(&self, t: f64) -> Result<Vec<f64>, TrajectoryError> {
        Ok(match self.locate(t)? {
            Located::Sample(i) => self.derivs[i].clone(),
            Located::Between(i) => self.between(i, t, true),
        })
    }

    /// Dense output of a single component.
    pub fn dense_component(&self, t: f64, i: usize) -> Result<f64, TrajectoryError> {
        self.dense(t).map(|s| s[i])
    }
}

enum Located {
    Sample(usize),
    Between(usize),
}
