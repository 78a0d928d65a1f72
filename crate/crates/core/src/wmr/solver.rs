//! Reduction of the weak transport problem to a program over the images
//! `t_i = T(x_i)`.
//!
//! `T(μ) ≤_c ν` holds for sorted `t` iff the quantile integral of `T(μ)`
//! dominates the one of `ν` at every merged cumulative level, with equality
//! at level one. Both sides are linear in `t`, so the feasible set is a
//! polyhedron and the quadratic cost gives a strictly convex QP.

use crate::error::{Error, Result};
use crate::measures::{self, DiscreteMeasure, MERGE_RTOL};
use crate::qp::{self, Hessian, LinearConstraint, QpSolution};

use super::{CostSpec, MonotoneMap, WeakSolution};

const KKT_RTOL: f64 = 1e-8;
const PG_MAX_ITER: usize = 100_000;
const LEVEL_MERGE: f64 = 1e-14;

/// Monotonicity, partial-sum and mean constraints on `t`.
pub(crate) fn feasibility_constraints(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Vec<LinearConstraint> {
    let n = mu.len();
    let p = mu.weights();
    let cum = mu.cumulative();
    let h = nu.quantile_integral();
    let mut out = Vec::with_capacity(n + mu.len() + nu.len());

    out.push(LinearConstraint::eq(p.to_vec(), nu.mean()));
    for i in 0..n.saturating_sub(1) {
        let mut row = vec![0.0; n];
        row[i] = -1.0;
        row[i + 1] = 1.0;
        out.push(LinearConstraint::geq(row, 0.0));
    }
    for s in interior_levels(&cum, &nu.cumulative()) {
        out.push(LinearConstraint::geq(partial_sum_row(p, &cum, s), h.eval(s)));
    }
    out
}

/// Merged cumulative levels of both measures strictly inside `(0, 1)`.
pub(crate) fn interior_levels(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().filter(|&s| s < 1.0 - LEVEL_MERGE).collect();
    all.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for s in all {
        if out.last().is_none_or(|&l| s - l > LEVEL_MERGE) {
            out.push(s);
        }
    }
    out
}

/// Coefficients of `∫₀ˢ q_t` as a linear form in `t`.
pub(crate) fn partial_sum_row(p: &[f64], cum: &[f64], s: f64) -> Vec<f64> {
    let n = p.len();
    let k = cum.partition_point(|&c| c < s - 1e-15).min(n - 1);
    let mut row = vec![0.0; n];
    row[..k].copy_from_slice(&p[..k]);
    let below = if k == 0 { 0.0 } else { cum[k - 1] };
    row[k] = (s - below).clamp(0.0, p[k]);
    row
}

/// p-weighted projection of `y` onto the feasible polyhedron.
fn project(p: &[f64], y: &[f64], constraints: &[LinearConstraint]) -> Result<QpSolution> {
    let hessian = Hessian::diagonal(p);
    let linear: Vec<f64> = p.iter().zip(y).map(|(w, v)| -w * v).collect();
    let cap = 50 * (p.len() + constraints.len()) + 1000;
    qp::solve_qp(&hessian, &linear, constraints, cap)
}

fn weighted_norm(p: &[f64], v: &[f64]) -> f64 {
    p.iter().zip(v).map(|(w, x)| w * x * x).sum::<f64>().sqrt()
}

/// Minimizes `Σ p_i θ(x_i − t_i)` subject to `T(μ) ≤_c ν` with `t` sorted.
///
/// Quadratic cost is solved exactly by the active-set QP. Other strictly
/// convex costs run projected gradient in the `p`-weighted metric, started
/// from the quadratic solution; `ρ = 1` returns the quadratic map, which is an
/// optimizer but not the unique one.
pub fn solve_weak_transport(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: CostSpec) -> Result<WeakSolution> {
    cost.validate()?;
    let scale = measures::scale(mu, nu);
    let tol = measures::order_tol(mu, nu);
    let xs = mu.atoms();
    let p = mu.weights();

    let closed_form = if mu.len() == 1 {
        Some(vec![nu.mean()])
    } else if measures::convex_order_leq(mu, nu, tol) {
        Some(xs.to_vec())
    } else {
        let c = nu.mean() - mu.mean();
        measures::convex_order_leq(&mu.shift(c), nu, tol).then(|| xs.iter().map(|x| x + c).collect())
    };

    let (ts, kkt_residual, iterations) = match closed_form {
        Some(ts) => (ts, 0.0, 0),
        None => {
            let constraints = feasibility_constraints(mu, nu);
            let quad = project(p, xs, &constraints)?;
            if quad.kkt_residual > KKT_RTOL * scale {
                return Err(Error::Solver { iterations: quad.iterations, residual: quad.kkt_residual });
            }
            match cost {
                CostSpec::Quadratic => (quad.x, quad.kkt_residual, quad.iterations),
                c if !c.strictly_convex() || c == (CostSpec::Power { rho: 2.0 }) => {
                    (quad.x, quad.kkt_residual, quad.iterations)
                }
                c => projected_gradient(xs, p, &constraints, c, quad.x, scale)?,
            }
        }
    };
    assemble(mu, nu, cost, ts, kkt_residual, iterations)
}

fn projected_gradient(
    xs: &[f64],
    p: &[f64],
    constraints: &[LinearConstraint],
    cost: CostSpec,
    start: Vec<f64>,
    scale: f64,
) -> Result<(Vec<f64>, f64, usize)> {
    let rho = cost.growth_exponent();
    let alpha0 = scale / (rho * cost.right_derivative(scale));
    let objective = |t: &[f64]| -> f64 { xs.iter().zip(t).zip(p).map(|((x, ti), w)| w * cost.eval(x - ti)).sum() };
    let mut t = start;
    let mut f = objective(&t);
    let mut alpha = alpha0;
    let mut residual = f64::INFINITY;
    for k in 1..=PG_MAX_ITER {
        // descent direction in the p-weighted metric
        let g: Vec<f64> = xs.iter().zip(&t).map(|(x, ti)| cost.right_derivative(x - ti)).collect();
        let probe: Vec<f64> = t.iter().zip(&g).map(|(ti, gi)| ti + alpha0 * gi).collect();
        let proj = project(p, &probe, constraints)?;
        let diff: Vec<f64> = proj.x.iter().zip(&t).map(|(a, b)| a - b).collect();
        residual = weighted_norm(p, &diff) / alpha0;
        if residual <= KKT_RTOL * scale {
            return Ok((t, residual, k));
        }
        // Armijo backtracking on the projected step
        alpha *= 2.0;
        loop {
            let y: Vec<f64> = t.iter().zip(&g).map(|(ti, gi)| ti + alpha * gi).collect();
            let cand = project(p, &y, constraints)?.x;
            let d: Vec<f64> = cand.iter().zip(&t).map(|(a, b)| a - b).collect();
            let lin: f64 = p.iter().zip(&g).zip(&d).map(|((w, gi), di)| -w * gi * di).sum();
            let dn = weighted_norm(p, &d);
            let fc = objective(&cand);
            if fc <= f + lin + dn * dn / (2.0 * alpha) || alpha < 1e-12 * alpha0 {
                t = cand;
                f = fc;
                break;
            }
            alpha *= 0.5;
        }
    }
    Err(Error::Solver { iterations: PG_MAX_ITER, residual })
}

fn assemble(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: CostSpec,
    ts: Vec<f64>,
    kkt_residual: f64,
    iterations: usize,
) -> Result<WeakSolution> {
    let scale = measures::scale(mu, nu);
    let xs = mu.atoms();
    let value = xs.iter().zip(&ts).zip(mu.weights()).map(|((x, t), w)| w * cost.eval(x - t)).sum();
    let pushforward = DiscreteMeasure::from_masses(ts.iter().copied().zip(mu.weights().iter().copied()), MERGE_RTOL * scale)?;
    let irreducibles = measures::irreducible_components(&pushforward, nu, measures::order_tol(mu, nu))?;
    Ok(WeakSolution {
        map: MonotoneMap::from_values(xs, &ts)?,
        pushforward,
        value,
        irreducibles,
        kkt_residual,
        iterations,
        unique: cost.strictly_convex(),
        cost,
    })
}

/// The weak monotone rearrangement: the quadratic-cost solution.
pub fn weak_monotone_rearrangement(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<WeakSolution> {
    solve_weak_transport(mu, nu, CostSpec::Quadratic)
}

pub fn value(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: CostSpec) -> Result<f64> {
    Ok(solve_weak_transport(mu, nu, cost)?.value)
}

/// Test hook: projected gradient from an arbitrary feasible start.
#[doc(hidden)]
pub fn solve_from(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: CostSpec,
    start: Vec<f64>,
) -> Result<WeakSolution> {
    let constraints = feasibility_constraints(mu, nu);
    let scale = measures::scale(mu, nu);
    let (ts, r, it) = projected_gradient(mu.atoms(), mu.weights(), &constraints, cost, start, scale)?;
    assemble(mu, nu, cost, ts, r, it)
}
