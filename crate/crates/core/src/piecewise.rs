//! Piecewise-linear functions on the real line.
//!
//! A [`PiecewiseLinearFn`] is stored as `(breakpoint, value)` pairs plus the
//! two outer slopes. Potentials `y ↦ ∫|x − y| dm(x)` and quantile integrals
//! `s ↦ ∫₀ˢ F⁻¹` are both of this form, and convex order reduces to pointwise
//! comparisons, maxima and convex envelopes of such functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearFn {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
}

impl PiecewiseLinearFn {
    pub fn new(
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        left_slope: f64,
        right_slope: f64,
    ) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::Domain("piecewise-linear function needs a breakpoint".into()));
        }
        if breakpoints.len() != values.len() {
            return Err(Error::Domain(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("breakpoints must be strictly increasing".into()));
        }
        if breakpoints
            .iter()
            .chain(&values)
            .chain([&left_slope, &right_slope])
            .any(|v| !v.is_finite())
        {
            return Err(Error::Domain("non-finite breakpoint, value or slope".into()));
        }
        Ok(Self { breakpoints, values, left_slope, right_slope })
    }

    pub(crate) fn from_parts_unchecked(
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        left_slope: f64,
        right_slope: f64,
    ) -> Self {
        debug_assert_eq!(breakpoints.len(), values.len());
        debug_assert!(breakpoints.windows(2).all(|w| w[0] < w[1]));
        Self { breakpoints, values, left_slope, right_slope }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn left_slope(&self) -> f64 {
        self.left_slope
    }

    pub fn right_slope(&self) -> f64 {
        self.right_slope
    }

    pub fn eval(&self, y: f64) -> f64 {
        let b = &self.breakpoints;
        let v = &self.values;
        let last = b.len() - 1;
        if y <= b[0] {
            return v[0] + self.left_slope * (y - b[0]);
        }
        if y >= b[last] {
            return v[last] + self.right_slope * (y - b[last]);
        }
        // first index with b[k] > y; 1 <= k <= last
        let k = b.partition_point(|&x| x <= y);
        if b[k - 1] == y {
            return v[k - 1];
        }
        let w = (y - b[k - 1]) / (b[k] - b[k - 1]);
        v[k - 1] + w * (v[k] - v[k - 1])
    }

    /// Slopes of all linear pieces, left tail first: `len() + 1` entries.
    pub fn slopes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.breakpoints.len() + 1);
        out.push(self.left_slope);
        for k in 1..self.breakpoints.len() {
            out.push(
                (self.values[k] - self.values[k - 1])
                    / (self.breakpoints[k] - self.breakpoints[k - 1]),
            );
        }
        out.push(self.right_slope);
        out
    }

    pub fn is_convex(&self, tol: f64) -> bool {
        self.slopes().windows(2).all(|w| w[0] <= w[1] + tol)
    }

    /// Slope increments at each breakpoint (right slope minus left slope).
    pub fn slope_jumps(&self) -> Vec<(f64, f64)> {
        let s = self.slopes();
        self.breakpoints
            .iter()
            .enumerate()
            .map(|(k, &b)| (b, s[k + 1] - s[k]))
            .collect()
    }

    /// Pointwise maximum, with breakpoints added where the two graphs cross.
    pub fn max(&self, other: &Self) -> Self {
        let grid = crossing_grid(self, other);
        let values: Vec<f64> = grid.iter().map(|&y| self.eval(y).max(other.eval(y))).collect();
        let probe = grid[0] - 1.0;
        let left_slope = if self.eval(probe) >= other.eval(probe) {
            self.left_slope
        } else {
            other.left_slope
        };
        let probe = grid[grid.len() - 1] + 1.0;
        let right_slope = if self.eval(probe) >= other.eval(probe) {
            self.right_slope
        } else {
            other.right_slope
        };
        Self::from_parts_unchecked(grid, values, left_slope, right_slope)
    }

    /// Pointwise minimum, with breakpoints added where the two graphs cross.
    pub fn min(&self, other: &Self) -> Self {
        let grid = crossing_grid(self, other);
        let values: Vec<f64> = grid.iter().map(|&y| self.eval(y).min(other.eval(y))).collect();
        let probe = grid[0] - 1.0;
        let left_slope = if self.eval(probe) <= other.eval(probe) {
            self.left_slope
        } else {
            other.left_slope
        };
        let probe = grid[grid.len() - 1] + 1.0;
        let right_slope = if self.eval(probe) <= other.eval(probe) {
            self.right_slope
        } else {
            other.right_slope
        };
        Self::from_parts_unchecked(grid, values, left_slope, right_slope)
    }

    /// Largest convex function below `min(self, other)`.
    ///
    /// Crossing points of the two graphs are concave kinks of the minimum and
    /// never hull vertices, so one lower-hull pass over the merged breakpoints
    /// is exact. Requires `left_slope <= right_slope` of the minimum.
    pub fn lower_convex_envelope_of_min(&self, other: &Self) -> Self {
        self.min(other).lower_convex_envelope()
    }

    /// Largest convex function below `self`.
    pub fn lower_convex_envelope(&self) -> Self {
        let b = &self.breakpoints;
        let v = &self.values;
        let (sl, sr) = (self.left_slope, self.right_slope);
        debug_assert!(sl <= sr);
        // vertices touching the supporting lines of the two tail slopes
        let first = argmin_by(b.len(), |k| v[k] - sl * b[k]);
        let last = argmin_by(b.len(), |k| v[k] - sr * b[k]);
        let (first, last) = (first.min(last), last.max(first));
        let span = (b[b.len() - 1] - b[0]).abs().max(1.0);
        let vscale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let eps = 1e-14 * span * vscale;
        let mut hull: Vec<usize> = Vec::new();
        for k in first..=last {
            while hull.len() >= 2 {
                let o = hull[hull.len() - 2];
                let a = hull[hull.len() - 1];
                let cross = (b[a] - b[o]) * (v[k] - v[o]) - (v[a] - v[o]) * (b[k] - b[o]);
                if cross <= eps {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(k);
        }
        let bp: Vec<f64> = hull.iter().map(|&k| b[k]).collect();
        let vals: Vec<f64> = hull.iter().map(|&k| v[k]).collect();
        Self::from_parts_unchecked(bp, vals, sl, sr)
    }
}

fn argmin_by(n: usize, f: impl Fn(usize) -> f64) -> usize {
    let mut best = 0;
    let mut best_val = f(0);
    for k in 1..n {
        let val = f(k);
        if val < best_val {
            best = k;
            best_val = val;
        }
    }
    best
}

/// Union of both breakpoint sets plus every point where the graphs cross.
fn crossing_grid(f: &PiecewiseLinearFn, g: &PiecewiseLinearFn) -> Vec<f64> {
    let mut grid = merge_sorted(&f.breakpoints, &g.breakpoints);
    // differences at rounding level count as touching, not crossing
    let diff = |y: f64| {
        let (a, b) = (f.eval(y), g.eval(y));
        let d = a - b;
        if d.abs() <= 64.0 * f64::EPSILON * (a.abs() + b.abs() + y.abs()) {
            0.0
        } else {
            d
        }
    };
    let mut extra = Vec::new();
    for w in grid.windows(2) {
        let (d0, d1) = (diff(w[0]), diff(w[1]));
        if d0 * d1 < 0.0 {
            let y = w[0] + (w[1] - w[0]) * d0 / (d0 - d1);
            if y > w[0] && y < w[1] {
                extra.push(y);
            }
        }
    }
    let first = grid[0];
    let dl = f.left_slope - g.left_slope;
    let d0 = diff(first);
    if dl != 0.0 && d0 != 0.0 && d0 / dl > 0.0 {
        extra.push(first - d0 / dl);
    }
    let lastb = grid[grid.len() - 1];
    let dr = f.right_slope - g.right_slope;
    let d1 = diff(lastb);
    if dr != 0.0 && d1 != 0.0 && d1 / dr < 0.0 {
        extra.push(lastb - d1 / dr);
    }
    if !extra.is_empty() {
        extra.sort_by(f64::total_cmp);
        grid = merge_sorted(&grid, &extra);
    }
    grid
}

pub(crate) fn merge_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = if j >= b.len() || (i < a.len() && a[i] <= b[j]) {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        if out.last().is_none_or(|&l: &f64| l < next) {
            out.push(next);
        }
    }
    out
}
