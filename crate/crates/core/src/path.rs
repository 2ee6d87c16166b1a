//! Piecewise-linear histories used for prescribed displacements and
//! strain-driven material-point tests.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::SymTensor2;

#[derive(Debug, Error)]
pub enum PathError {
    #[error("a history needs at least two knots, got {0}")]
    TooFewKnots(usize),
    #[error("knot times must be finite and strictly increasing (knot {0})")]
    BadTime(usize),
    #[error("knot values must be finite (knot {0})")]
    BadValue(usize),
}

/// Scalar piecewise-linear history over pseudo-time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct PiecewiseLinear {
    knots: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for PiecewiseLinear {
    type Error = PathError;
    fn try_from(knots: Vec<(f64, f64)>) -> Result<Self, PathError> {
        PiecewiseLinear::new(knots)
    }
}

impl From<PiecewiseLinear> for Vec<(f64, f64)> {
    fn from(p: PiecewiseLinear) -> Self {
        p.knots
    }
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self, PathError> {
        if knots.len() < 2 {
            return Err(PathError::TooFewKnots(knots.len()));
        }
        for (i, &(t, v)) in knots.iter().enumerate() {
            if !t.is_finite() || (i > 0 && t <= knots[i - 1].0) {
                return Err(PathError::BadTime(i));
            }
            if !v.is_finite() {
                return Err(PathError::BadValue(i));
            }
        }
        Ok(Self { knots })
    }

    /// Constant-zero history over [0, 1], handy for fixed supports.
    pub fn zero() -> Self {
        Self {
            knots: vec![(0.0, 0.0), (1.0, 0.0)],
        }
    }

    /// History through the given values, with knots spaced over [0, 1]
    /// proportionally to the value change of each leg (so a constant step
    /// count resolves every leg at the same rate). Equal consecutive values
    /// get a minimal time slice.
    pub fn through_values(values: &[f64]) -> Result<Self, PathError> {
        if values.len() < 2 {
            return Err(PathError::TooFewKnots(values.len()));
        }
        let total: f64 = values.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        let mut knots = Vec::with_capacity(values.len());
        let mut t = 0.0;
        knots.push((0.0, values[0]));
        for w in values.windows(2) {
            let span = if total > 0.0 {
                ((w[1] - w[0]).abs() / total).max(1e-6)
            } else {
                1.0 / (values.len() - 1) as f64
            };
            t += span;
            knots.push((t, w[1]));
        }
        // Normalize the end to exactly 1.
        let scale = 1.0 / t;
        for k in &mut knots {
            k.0 *= scale;
        }
        knots.last_mut().expect("non-empty").0 = 1.0;
        Self::new(knots)
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn start_time(&self) -> f64 {
        self.knots[0].0
    }

    pub fn end_time(&self) -> f64 {
        self.knots[self.knots.len() - 1].0
    }

    /// Linear interpolation; clamped outside the knot range.
    pub fn eval(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        if t >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let i = match k.binary_search_by(|&(kt, _)| kt.partial_cmp(&t).expect("finite")) {
            Ok(i) => return k[i].1,
            Err(i) => i,
        };
        let (t0, v0) = k[i - 1];
        let (t1, v1) = k[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Sample times for a driver: the knot times plus enough uniform
    /// subdivisions so that at least `n` intervals cover the history,
    /// distributed proportionally to each leg's value change.
    pub fn sample_times(&self, n: usize) -> Vec<f64> {
        let total: f64 = self
            .knots
            .windows(2)
            .map(|w| (w[1].1 - w[0].1).abs())
            .sum();
        let mut times = Vec::with_capacity(n + self.knots.len());
        for w in self.knots.windows(2) {
            let frac = if total > 0.0 {
                (w[1].1 - w[0].1).abs() / total
            } else {
                1.0 / (self.knots.len() - 1) as f64
            };
            let steps = ((n as f64 * frac).ceil() as usize).max(1);
            for s in 0..steps {
                times.push(w[0].0 + (w[1].0 - w[0].0) * s as f64 / steps as f64);
            }
        }
        times.push(self.end_time());
        times
    }
}

/// Piecewise-linear tensor strain history.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorPath {
    knots: Vec<(f64, SymTensor2)>,
}

impl TensorPath {
    pub fn new(knots: Vec<(f64, SymTensor2)>) -> Result<Self, PathError> {
        if knots.len() < 2 {
            return Err(PathError::TooFewKnots(knots.len()));
        }
        for (i, &(t, v)) in knots.iter().enumerate() {
            if !t.is_finite() || (i > 0 && t <= knots[i - 1].0) {
                return Err(PathError::BadTime(i));
            }
            if !v.is_finite() {
                return Err(PathError::BadValue(i));
            }
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, SymTensor2)] {
        &self.knots
    }

    pub fn end_time(&self) -> f64 {
        self.knots[self.knots.len() - 1].0
    }

    pub fn eval(&self, t: f64) -> SymTensor2 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        if t >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let i = match k.binary_search_by(|&(kt, _)| kt.partial_cmp(&t).expect("finite")) {
            Ok(i) => return k[i].1,
            Err(i) => i,
        };
        let (t0, v0) = k[i - 1];
        let (t1, v1) = k[i];
        let w = (t - t0) / (t1 - t0);
        v0 + (v1 - v0) * w
    }

    /// Sample times: knots plus uniform subdivisions, at least `n` overall,
    /// spread proportionally to the strain change of each leg.
    pub fn sample_times(&self, n: usize) -> Vec<f64> {
        let total: f64 = self
            .knots
            .windows(2)
            .map(|w| (w[1].1 - w[0].1).norm())
            .sum();
        let mut times = Vec::with_capacity(n + self.knots.len());
        for w in self.knots.windows(2) {
            let frac = if total > 0.0 {
                (w[1].1 - w[0].1).norm() / total
            } else {
                1.0 / (self.knots.len() - 1) as f64
            };
            let steps = ((n as f64 * frac).ceil() as usize).max(1);
            for s in 0..steps {
                times.push(w[0].0 + (w[1].0 - w[0].0) * s as f64 / steps as f64);
            }
        }
        times.push(self.end_time());
        times
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_interpolates_and_clamps() {
        let p = PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, 2.0), (2.0, 0.0)]).unwrap();
        assert_eq!(p.eval(-1.0), 0.0);
        assert_eq!(p.eval(0.5), 1.0);
        assert_eq!(p.eval(1.0), 2.0);
        assert_eq!(p.eval(1.5), 1.0);
        assert_eq!(p.eval(3.0), 0.0);
    }

    #[test]
    fn validation_rejects_bad_knots() {
        assert!(PiecewiseLinear::new(vec![(0.0, 0.0)]).is_err());
        assert!(PiecewiseLinear::new(vec![(0.0, 0.0), (0.0, 1.0)]).is_err());
        assert!(PiecewiseLinear::new(vec![(1.0, 0.0), (0.5, 1.0)]).is_err());
        assert!(PiecewiseLinear::new(vec![(0.0, f64::NAN), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn through_values_spans_unit_time() {
        let p = PiecewiseLinear::through_values(&[0.0, 1.0, -1.0, 0.5]).unwrap();
        assert_eq!(p.start_time(), 0.0);
        assert_eq!(p.end_time(), 1.0);
        assert_eq!(p.eval(0.0), 0.0);
        assert_eq!(p.eval(1.0), 0.5);
        // Legs get time proportional to their value change: the first leg
        // spans 1.0 of a 4.5 total variation.
        let k = p.knots();
        assert!((k[1].0 - 1.0 / 4.5).abs() < 1e-12);
    }

    #[test]
    fn sample_times_cover_all_knots() {
        let p = PiecewiseLinear::new(vec![(0.0, 0.0), (0.25, 1.0), (1.0, -0.5)]).unwrap();
        let times = p.sample_times(16);
        assert_eq!(*times.first().unwrap(), 0.0);
        assert_eq!(*times.last().unwrap(), 1.0);
        assert!(times.iter().any(|&t| t == 0.25));
        assert!(times.len() >= 17);
        assert!(times.windows(2).all(|w| w[1] > w[0]));
    }
}
