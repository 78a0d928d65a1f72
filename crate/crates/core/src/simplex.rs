//! Phase-1 simplex for `A x = b, x >= 0` on a dense tableau.
//!
//! One artificial variable per row; the sum of artificials is minimized with
//! Bland's rule (smallest eligible index enters, ties in the ratio test go to
//! the smallest basic index), which rules out cycling and makes the returned
//! vertex a deterministic function of the input order.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;

#[derive(Debug, Clone)]
pub struct PhaseOne {
    pub x: Vec<f64>,
    /// optimal sum of artificial variables; zero iff feasible
    pub infeasibility: f64,
    pub iterations: usize,
}

pub fn phase_one(a: &[Vec<f64>], b: &[f64], max_iter: usize) -> Result<PhaseOne> {
    let m = a.len();
    if b.len() != m {
        return Err(Error::Domain(format!("{m} rows but {} right-hand sides", b.len())));
    }
    let n = a.first().map_or(0, |r| r.len());
    if a.iter().any(|r| r.len() != n) {
        return Err(Error::Domain("ragged constraint matrix".into()));
    }
    let width = n + m + 1;
    let mut tab = vec![0.0; m * width];
    for r in 0..m {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for c in 0..n {
            tab[r * width + c] = sign * a[r][c];
        }
        tab[r * width + n + r] = 1.0;
        tab[r * width + width - 1] = sign * b[r];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    // reduced costs of the phase-1 objective
    let mut obj = vec![0.0; width];
    for r in 0..m {
        for c in 0..n {
            obj[c] -= tab[r * width + c];
        }
        obj[width - 1] -= tab[r * width + width - 1];
    }

    let mut iterations = 0;
    loop {
        let Some(enter) = (0..n + m).find(|&c| obj[c] < -PIVOT_EPS) else { break };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let coef = tab[r * width + enter];
            if coef > PIVOT_EPS {
                let ratio = tab[r * width + width - 1] / coef;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - 1e-15 || (ratio <= lratio + 1e-15 && basis[r] < basis[lr]) {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
        }
        // phase-1 objective is bounded below by zero, so a pivot row exists
        let Some((row, _)) = leave else { break };
        iterations += 1;
        if iterations > max_iter {
            return Err(Error::Solver { iterations, residual: -obj[width - 1] });
        }
        let piv = tab[row * width + enter];
        for c in 0..width {
            tab[row * width + c] /= piv;
        }
        for r in 0..m {
            if r == row {
                continue;
            }
            let f = tab[r * width + enter];
            if f != 0.0 {
                for c in 0..width {
                    tab[r * width + c] -= f * tab[row * width + c];
                }
            }
        }
        let f = obj[enter];
        for c in 0..width {
            obj[c] -= f * tab[row * width + c];
        }
        basis[row] = enter;
    }

    let mut x = vec![0.0; n];
    let mut infeasibility = 0.0;
    for (r, &v) in basis.iter().enumerate() {
        let val = tab[r * width + width - 1].max(0.0);
        if v < n {
            x[v] = val;
        } else {
            infeasibility += val;
        }
    }
    Ok(PhaseOne { x, infeasibility, iterations })
}
