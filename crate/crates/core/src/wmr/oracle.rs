//! Exhaustive grid search over the images `t`, used as an independent check
//! of the solver on tiny instances.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{self, DiscreteMeasure};
use crate::qp::LinearConstraint;

use super::solver::feasibility_constraints;
use super::CostSpec;

pub const ORACLE_MAX_ATOMS: usize = 4;

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub value: f64,
    pub t: Vec<f64>,
    /// `Lip(θ on the search box) · grid_step · n`
    pub bound: f64,
}

struct Search<'a> {
    xs: &'a [f64],
    p: &'a [f64],
    cost: CostSpec,
    grid: Vec<f64>,
    /// level constraints grouped by the last image they involve
    by_last: Vec<Vec<&'a LinearConstraint>>,
    mean: f64,
    hi: f64,
    feas: f64,
}

impl Search<'_> {
    fn prefix_ok(&self, t: &[f64]) -> bool {
        let k = t.len() - 1;
        self.by_last[k].iter().all(|c| c.slack(t) >= -self.feas)
    }

    fn cost_of(&self, t: &[f64]) -> f64 {
        self.xs.iter().zip(t).zip(self.p).map(|((x, ti), w)| w * self.cost.eval(x - ti)).sum()
    }

    fn best_from(&self, t: &mut Vec<f64>, from: usize, best: &mut Option<(f64, Vec<f64>)>) {
        let n = self.xs.len();
        if t.len() == n - 1 {
            let partial: f64 = t.iter().zip(self.p).map(|(a, w)| a * w).sum();
            let last = (self.mean - partial) / self.p[n - 1];
            if last < t[n - 2] - self.feas || last > self.hi + self.feas {
                return;
            }
            t.push(last);
            if self.prefix_ok(t) {
                let v = self.cost_of(t);
                if best.as_ref().is_none_or(|b| v < b.0) {
                    *best = Some((v, t.clone()));
                }
            }
            t.pop();
            return;
        }
        for k in from..self.grid.len() {
            t.push(self.grid[k]);
            if self.prefix_ok(t) {
                self.best_from(t, k, best);
            }
            t.pop();
        }
    }
}

/// Brute-force minimum over a grid of step `grid_step` covering `conv(supp ν)`.
///
/// Every feasible `t` lies in `conv(supp ν)`, since `T(μ) ≤_c ν`. The last image
/// is solved from the mean constraint, so the work is
/// `O((diam ν / grid_step)^(n−1))`.
pub fn oracle_solve(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: CostSpec, grid_step: f64) -> Result<OracleResult> {
    cost.validate()?;
    let n = mu.len();
    if n > ORACLE_MAX_ATOMS {
        return Err(Error::Size(format!("oracle handles at most {ORACLE_MAX_ATOMS} source atoms, got {n}")));
    }
    if !(grid_step > 0.0) {
        return Err(Error::Domain(format!("grid step {grid_step} must be positive")));
    }
    let scale = measures::scale(mu, nu);
    let bound = cost.lipschitz_on(scale) * grid_step * n as f64;
    if n == 1 {
        let t = vec![nu.mean()];
        return Ok(OracleResult { value: cost.eval(mu.atoms()[0] - t[0]), t, bound });
    }

    let constraints = feasibility_constraints(mu, nu);
    let mut by_last: Vec<Vec<&LinearConstraint>> = vec![Vec::new(); n];
    // the mean equality is replaced by solving for the last image
    for c in constraints.iter().skip(1) {
        let last = c.normal.iter().rposition(|&v| v != 0.0).unwrap_or(0);
        by_last[last].push(c);
    }
    let count = ((nu.max() - nu.min()) / grid_step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=count).map(|k| nu.min() + k as f64 * grid_step).collect();
    let search = Search {
        xs: mu.atoms(),
        p: mu.weights(),
        cost,
        grid,
        by_last,
        mean: nu.mean(),
        hi: nu.max(),
        feas: 1e-12 * scale,
    };

    let best = (0..search.grid.len())
        .into_par_iter()
        .map(|k0| {
            let mut best = None;
            let mut t = vec![search.grid[k0]];
            if search.prefix_ok(&t) {
                search.best_from(&mut t, k0, &mut best);
            }
            best
        })
        .reduce(
            || None,
            |a: Option<(f64, Vec<f64>)>, b| match (a, b) {
                (Some(a), Some(b)) => Some(if b.0 < a.0 { b } else { a }),
                (a, None) => a,
                (None, b) => b,
            },
        );
    let (value, t) = best.ok_or_else(|| Error::Consistency("oracle grid contains no feasible point".into()))?;
    Ok(OracleResult { value, t, bound })
}
