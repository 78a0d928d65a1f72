use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear map through `(x, t)` knots, constant beyond the outer
/// knots.
///
/// Monotonicity and the 1-Lipschitz bound are not enforced here; the
/// verifiers check them, so that barycenter maps and deliberately bad
/// candidates are representable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneMap {
    knots: Vec<(f64, f64)>,
}

impl MonotoneMap {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Domain("map needs at least one knot".into()));
        }
        if knots.iter().any(|&(x, t)| !x.is_finite() || !t.is_finite()) {
            return Err(Error::Domain("non-finite knot".into()));
        }
        if knots.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::Domain("knot positions must be strictly increasing".into()));
        }
        Ok(Self { knots })
    }

    pub fn from_values(xs: &[f64], ts: &[f64]) -> Result<Self> {
        if xs.len() != ts.len() {
            return Err(Error::Domain(format!("{} positions but {} values", xs.len(), ts.len())));
        }
        Self::new(xs.iter().copied().zip(ts.iter().copied()).collect())
    }

    /// Samples `f` at the given strictly increasing positions.
    pub fn from_fn(xs: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(xs.iter().map(|&x| (x, f(x))).collect())
    }

    pub fn identity(xs: &[f64]) -> Result<Self> {
        Self::from_fn(xs, |x| x)
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn positions(&self) -> Vec<f64> {
        self.knots.iter().map(|k| k.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.knots.iter().map(|k| k.1).collect()
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0].0 {
            return k[0].1;
        }
        let last = k.len() - 1;
        if x >= k[last].0 {
            return k[last].1;
        }
        let j = k.partition_point(|p| p.0 <= x);
        let (x0, t0) = k[j - 1];
        if x0 == x {
            return t0;
        }
        let (x1, t1) = k[j];
        t0 + (t1 - t0) * (x - x0) / (x1 - x0)
    }

    /// Largest decrease `t_i − t_{i+1}` over consecutive knots (≤ 0 when increasing).
    pub fn max_decrease(&self) -> f64 {
        self.knots.windows(2).map(|w| w[0].1 - w[1].1).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest excess `(t_{i+1} − t_i) − (x_{i+1} − x_i)` over consecutive knots.
    pub fn max_lipschitz_excess(&self) -> f64 {
        self.knots
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) - (w[1].0 - w[0].0))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_increasing(&self, tol: f64) -> bool {
        self.len() < 2 || self.max_decrease() <= tol
    }

    pub fn is_one_lipschitz(&self, tol: f64) -> bool {
        self.len() < 2 || self.max_lipschitz_excess() <= tol
    }

    /// Sup distance over the union of both knot sets.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.knots
            .iter()
            .chain(other.knots.iter())
            .map(|&(x, _)| (self.eval(x) - other.eval(x)).abs())
            .fold(0.0, f64::max)
    }
}
