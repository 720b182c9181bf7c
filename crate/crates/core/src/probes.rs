//! Random probe points for pointwise checks.
//!
//! Coordinates are drawn uniformly from `[-2, 2]`. Coordinates that carry a
//! singular hyperplane keep out of the band `|c| < 0.1`, optionally restricted to
//! one side of it.

use rand::Rng;

use crate::vectorfield::VectorField;

pub const PROBE_HALF_WIDTH: f64 = 2.0;
pub const GUARD_BAND: f64 = 0.1;

/// Which side of a singular hyperplane a guarded coordinate is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
    Either,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeDomain {
    dim: usize,
    guarded: Vec<(usize, Side)>,
    guard: f64,
}

impl ProbeDomain {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            guarded: Vec::new(),
            guard: GUARD_BAND,
        }
    }

    pub fn guard(mut self, coordinate: usize, side: Side) -> Self {
        assert!(coordinate < self.dim);
        self.guarded.retain(|(c, _)| *c != coordinate);
        self.guarded.push((coordinate, side));
        self
    }

    /// Widen the excluded band around the guarded hyperplanes.
    pub fn with_guard_band(mut self, guard: f64) -> Self {
        assert!((0.0..PROBE_HALF_WIDTH).contains(&guard));
        self.guard = guard;
        self
    }

    /// Union of the fields' singular coordinates, both sides allowed.
    pub fn for_fields(fields: &[VectorField]) -> Self {
        let dim = fields.first().map(|f| f.dim()).unwrap_or(0);
        fields
            .iter()
            .flat_map(|f| f.singular_coords().iter().copied())
            .fold(Self::new(dim), |d, c| d.guard(c, Side::Either))
    }

    /// The same constraints on each of `copies` consecutive blocks.
    pub fn repeated(&self, copies: usize) -> Self {
        let mut out = Self::new(self.dim * copies).with_guard_band(self.guard);
        for c in 0..copies {
            for &(i, s) in &self.guarded {
                out = out.guard(c * self.dim + i, s);
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut p: Vec<f64> = (0..self.dim)
            .map(|_| rng.random_range(-PROBE_HALF_WIDTH..PROBE_HALF_WIDTH))
            .collect();
        for &(i, side) in &self.guarded {
            let magnitude = rng.random_range(self.guard..PROBE_HALF_WIDTH);
            p[i] = match side {
                Side::Positive => magnitude,
                Side::Negative => -magnitude,
                Side::Either => {
                    if rng.random_bool(0.5) {
                        magnitude
                    } else {
                        -magnitude
                    }
                }
            };
        }
        p
    }

    pub fn sample_many<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..count).map(|_| self.sample(rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn guarded_coordinates_respect_band_and_side() {
        let d = ProbeDomain::new(4).guard(0, Side::Positive).guard(2, Side::Either);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for p in d.sample_many(500, &mut rng) {
            assert!(p[0] >= GUARD_BAND && p[0] < 2.0);
            assert!(p[2].abs() >= GUARD_BAND);
            assert!(p.iter().all(|c| c.abs() <= 2.0));
        }
    }

    #[test]
    fn repeated_shifts_guards() {
        let d = ProbeDomain::new(2).guard(0, Side::Negative).repeated(3);
        assert_eq!(d.dim(), 6);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = d.sample(&mut rng);
        assert!(p[0] < 0.0 && p[2] < 0.0 && p[4] < 0.0);
    }
}
