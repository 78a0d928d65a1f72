//! Dense strictly convex quadratic programming.
//!
//! Dual active-set method of Goldfarb and Idnani: start from the unconstrained
//! minimizer, repeatedly add the most violated constraint and drop active
//! constraints whose multipliers would turn negative. The factorization
//! `Jᵀ N = [R; 0]` of the active normals is updated with Givens rotations.
//!
//! ```text
//!     minimize    ½ xᵀ G x + aᵀ x
//!     subject to  nᵢᵀ x  = bᵢ   (equalities)
//!                 nᵢᵀ x >= bᵢ   (inequalities)
//! ```

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    Equality,
    Inequality,
}

#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub normal: Vec<f64>,
    pub rhs: f64,
    pub kind: ConstraintKind,
}

impl LinearConstraint {
    pub fn geq(normal: Vec<f64>, rhs: f64) -> Self {
        Self { normal, rhs, kind: ConstraintKind::Inequality }
    }

    pub fn eq(normal: Vec<f64>, rhs: f64) -> Self {
        Self { normal, rhs, kind: ConstraintKind::Equality }
    }

    /// Signed slack `nᵀx − b`.
    pub fn slack(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.rhs
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: Vec<f64>,
    /// One multiplier per constraint, zero for inactive ones.
    pub multipliers: Vec<f64>,
    pub active: Vec<usize>,
    pub iterations: usize,
    pub kkt_residual: f64,
}

/// Dense row-major symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Hessian {
    n: usize,
    data: Vec<f64>,
}

impl Hessian {
    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, &d) in diag.iter().enumerate() {
            data[i * n + i] = d;
        }
        Self { n, data }
    }

    pub fn dense(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Domain(format!("Hessian needs {} entries, got {}", n * n, data.len())));
        }
        Ok(Self { n, data })
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(&self.data[i * self.n..(i + 1) * self.n], x)).collect()
    }

    /// Lower Cholesky factor, row-major.
    fn cholesky(&self) -> Result<Vec<f64>> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.at(i, j);
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(sum > 0.0) {
                        return Err(Error::Domain("Hessian is not positive definite".into()));
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Ok(l)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct ActiveSet {
    n: usize,
    /// column-major n×n: `j[col * n + row]`
    j: Vec<f64>,
    /// column-major upper triangle: `r[col * n + row]`
    r: Vec<f64>,
    idx: Vec<usize>,
    sign: Vec<f64>,
    u: Vec<f64>,
}

impl ActiveSet {
    fn q(&self) -> usize {
        self.idx.len()
    }

    fn jt_times(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n).map(|c| dot(&self.j[c * n..(c + 1) * n], v)).collect()
    }

    fn primal_direction(&self, d: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut z = vec![0.0; n];
        for c in self.q()..n {
            let dc = d[c];
            if dc != 0.0 {
                for (zi, ji) in z.iter_mut().zip(&self.j[c * n..(c + 1) * n]) {
                    *zi += dc * ji;
                }
            }
        }
        z
    }

    fn dual_direction(&self, d: &[f64]) -> Vec<f64> {
        let n = self.n;
        let q = self.q();
        let mut r = vec![0.0; q];
        for k in (0..q).rev() {
            let mut s = d[k];
            for c in k + 1..q {
                s -= self.r[c * n + k] * r[c];
            }
            r[k] = s / self.r[k * n + k];
        }
        r
    }

    fn rotate_j(&mut self, a: usize, b: usize, c: f64, s: f64) {
        let n = self.n;
        for i in 0..n {
            let ja = self.j[a * n + i];
            let jb = self.j[b * n + i];
            self.j[a * n + i] = c * ja + s * jb;
            self.j[b * n + i] = -s * ja + c * jb;
        }
    }

    fn add(&mut self, mut d: Vec<f64>, index: usize, sign: f64, u: f64) {
        let n = self.n;
        let q = self.q();
        for k in (q + 1..n).rev() {
            let (a, b) = (d[k - 1], d[k]);
            if b == 0.0 {
                continue;
            }
            let h = a.hypot(b);
            let (c, s) = (a / h, b / h);
            d[k - 1] = h;
            d[k] = 0.0;
            self.rotate_j(k - 1, k, c, s);
        }
        for row in 0..=q {
            self.r[q * n + row] = d[row];
        }
        self.idx.push(index);
        self.sign.push(sign);
        self.u.push(u);
    }

    fn drop(&mut self, l: usize) {
        let n = self.n;
        let q = self.q();
        for col in l..q - 1 {
            for row in 0..=col + 1 {
                self.r[col * n + row] = self.r[(col + 1) * n + row];
            }
        }
        for row in 0..n {
            self.r[(q - 1) * n + row] = 0.0;
        }
        self.idx.remove(l);
        self.sign.remove(l);
        self.u.remove(l);
        let q = q - 1;
        for k in l..q {
            let (a, b) = (self.r[k * n + k], self.r[k * n + k + 1]);
            if b == 0.0 {
                continue;
            }
            let h = a.hypot(b);
            let (c, s) = (a / h, b / h);
            for col in k..q {
                let ra = self.r[col * n + k];
                let rb = self.r[col * n + k + 1];
                self.r[col * n + k] = c * ra + s * rb;
                self.r[col * n + k + 1] = -s * ra + c * rb;
            }
            self.rotate_j(k, k + 1, c, s);
        }
    }
}

fn feasibility_tol(c: &LinearConstraint, x: &[f64]) -> f64 {
    let magnitude: f64 = c.normal.iter().zip(x).map(|(a, b)| (a * b).abs()).sum();
    1e-13 * (1.0 + c.rhs.abs() + magnitude)
}

/// Solves the program; fails if the constraints are inconsistent or the
/// iteration cap is hit.
pub fn solve_qp(
    hessian: &Hessian,
    linear: &[f64],
    constraints: &[LinearConstraint],
    max_iter: usize,
) -> Result<QpSolution> {
    let n = hessian.n;
    if linear.len() != n || constraints.iter().any(|c| c.normal.len() != n) {
        return Err(Error::Domain("dimension mismatch in quadratic program".into()));
    }
    let l = hessian.cholesky()?;

    // J = L^{-T}; column c of J is row c of L^{-1}.
    let mut linv = vec![0.0; n * n];
    for col in 0..n {
        for i in col..n {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in col..i {
                s -= l[i * n + k] * linv[k * n + col];
            }
            linv[i * n + col] = s / l[i * n + i];
        }
    }
    let mut j = vec![0.0; n * n];
    for c in 0..n {
        for i in 0..n {
            j[c * n + i] = linv[c * n + i];
        }
    }

    // unconstrained minimizer x = -G^{-1} a
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = -linear[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }

    let mut set = ActiveSet {
        n,
        j,
        r: vec![0.0; n * n],
        idx: Vec::new(),
        sign: Vec::new(),
        u: Vec::new(),
    };
    let mut is_active = vec![false; constraints.len()];
    let mut iterations = 0;

    loop {
        // choose the constraint to add
        let mut pick: Option<(usize, f64)> = None;
        for (k, c) in constraints.iter().enumerate() {
            if is_active[k] || c.kind != ConstraintKind::Equality {
                continue;
            }
            let s = c.slack(&x);
            pick = Some((k, if s > 0.0 { -1.0 } else { 1.0 }));
            break;
        }
        if pick.is_none() {
            let mut worst = 0.0;
            for (k, c) in constraints.iter().enumerate() {
                if is_active[k] {
                    continue;
                }
                let s = c.slack(&x);
                if s < -feasibility_tol(c, &x) {
                    let norm = c.normal.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
                    let score = s / norm;
                    if score < worst {
                        worst = score;
                        pick = Some((k, 1.0));
                    }
                }
            }
        }
        let Some((p, sign)) = pick else { break };
        let np: Vec<f64> = constraints[p].normal.iter().map(|v| sign * v).collect();
        let bp = sign * constraints[p].rhs;
        let mut u_new = 0.0;

        loop {
            iterations += 1;
            if iterations > max_iter {
                let residual = kkt_residual(hessian, linear, constraints, &x, &multipliers(&set, constraints.len()));
                return Err(Error::Solver { iterations, residual });
            }
            let d = set.jt_times(&np);
            let z = set.primal_direction(&d);
            let r = set.dual_direction(&d);
            let q = set.q();

            let mut t1 = f64::INFINITY;
            let mut drop_at = None;
            for k in 0..q {
                if constraints[set.idx[k]].kind == ConstraintKind::Inequality && r[k] > 1e-15 {
                    let ratio = set.u[k] / r[k];
                    if ratio < t1 {
                        t1 = ratio;
                        drop_at = Some(k);
                    }
                }
            }
            let dnorm2: f64 = d.iter().map(|v| v * v).sum();
            let ztn = dot(&z, &np);
            let t2 = if ztn > 1e-14 * dnorm2.max(1e-300) {
                -(dot(&np, &x) - bp) / ztn
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                return Err(Error::Consistency(format!(
                    "quadratic program constraints are inconsistent at constraint {p}"
                )));
            }
            for k in 0..q {
                set.u[k] -= t * r[k];
            }
            u_new += t;
            if t2.is_finite() {
                for (xi, zi) in x.iter_mut().zip(&z) {
                    *xi += t * zi;
                }
            }
            if t2 <= t1 {
                is_active[p] = true;
                set.add(d, p, sign, u_new);
                break;
            }
            let l = drop_at.expect("partial step without a blocking constraint");
            is_active[set.idx[l]] = false;
            set.drop(l);
        }
    }

    let lambda = multipliers(&set, constraints.len());
    let kkt = kkt_residual(hessian, linear, constraints, &x, &lambda);
    Ok(QpSolution { x, multipliers: lambda, active: set.idx.clone(), iterations, kkt_residual: kkt })
}

fn multipliers(set: &ActiveSet, m: usize) -> Vec<f64> {
    let mut lambda = vec![0.0; m];
    for ((&k, &s), &u) in set.idx.iter().zip(&set.sign).zip(&set.u) {
        lambda[k] = s * u;
    }
    lambda
}

/// Max of stationarity, primal infeasibility, dual infeasibility and
/// complementarity violations.
pub fn kkt_residual(
    hessian: &Hessian,
    linear: &[f64],
    constraints: &[LinearConstraint],
    x: &[f64],
    lambda: &[f64],
) -> f64 {
    let mut grad = hessian.apply(x);
    for (g, a) in grad.iter_mut().zip(linear) {
        *g += a;
    }
    let mut worst: f64 = 0.0;
    for (c, &lam) in constraints.iter().zip(lambda) {
        for (g, v) in grad.iter_mut().zip(&c.normal) {
            *g -= lam * v;
        }
        let s = c.slack(x);
        match c.kind {
            ConstraintKind::Equality => worst = worst.max(s.abs()),
            ConstraintKind::Inequality => {
                worst = worst.max((-s).max(0.0)).max((-lam).max(0.0)).max((lam * s).abs());
            }
        }
    }
    grad.iter().fold(worst, |m, g| m.max(g.abs()))
}
