//! Finitely supported probability measures on the line and their
//! order-theoretic toolkit: CDF and quantiles, potential functions, convex
//! order, irreducible components and Wasserstein distances.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::piecewise::{merge_sorted, PiecewiseLinearFn};

/// Weight sums within this distance of one are renormalized; others are rejected.
pub const NORMALIZATION_SLACK: f64 = 1e-9;

/// Relative tolerance used by every order comparison.
pub const ORDER_RTOL: f64 = 1e-9;

/// Relative distance below which pushed-forward atoms are merged.
pub const MERGE_RTOL: f64 = 1e-12;

/// Probability measure with finitely many atoms.
///
/// Atoms are strictly increasing and every weight is positive; the weights
/// sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure")]
pub struct DiscreteMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<RawMeasure> for DiscreteMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        DiscreteMeasure::new(raw.atoms, raw.weights)
    }
}

impl DiscreteMeasure {
    /// Sorts the atoms, merges exact duplicates and normalizes the weights.
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        Self::from_pairs(atoms.into_iter().zip(weights))
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut pairs: Vec<(f64, f64)> = pairs.into_iter().collect();
        if pairs.is_empty() {
            return Err(Error::InvalidMeasure("measure has no atoms".into()));
        }
        for &(x, w) in &pairs {
            if !x.is_finite() {
                return Err(Error::InvalidMeasure(format!("non-finite atom {x}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidMeasure(format!("weight {w} at atom {x} is not positive")));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut weights: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, w) in pairs {
            match atoms.last() {
                Some(&last) if last == x => *weights.last_mut().unwrap() += w,
                _ => {
                    atoms.push(x);
                    weights.push(w);
                }
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_SLACK {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, expected 1")));
        }
        for w in &mut weights {
            *w /= total;
        }
        Ok(Self { atoms, weights })
    }

    /// Builds a measure from possibly unnormalized nonnegative masses, merging
    /// atoms closer than `merge_tol` into their barycenter. Zero masses are
    /// dropped.
    pub fn from_masses(pairs: impl IntoIterator<Item = (f64, f64)>, merge_tol: f64) -> Result<Self> {
        let mut pairs: Vec<(f64, f64)> = pairs.into_iter().filter(|p| p.1 > 0.0).collect();
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidMeasure("no positive mass".into()));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut clusters: Vec<(f64, f64, f64)> = Vec::new(); // (anchor, mass, moment)
        for (x, w) in pairs {
            match clusters.last_mut() {
                Some(c) if x - c.0 <= merge_tol => {
                    c.1 += w;
                    c.2 += w * x;
                }
                _ => clusters.push((x, w, w * x)),
            }
        }
        let mut atoms = Vec::with_capacity(clusters.len());
        let mut weights = Vec::with_capacity(clusters.len());
        for (anchor, mass, moment) in clusters {
            let x = (moment / mass).clamp(anchor, anchor + merge_tol.max(0.0));
            match atoms.last() {
                Some(&last) if x <= last => *weights.last_mut().unwrap() += mass / total,
                _ => {
                    atoms.push(x);
                    weights.push(mass / total);
                }
            }
        }
        Ok(Self { atoms, weights })
    }

    pub fn dirac(x: f64) -> Self {
        assert!(x.is_finite(), "Dirac at non-finite point");
        Self { atoms: vec![x], weights: vec![1.0] }
    }

    pub fn uniform(atoms: &[f64]) -> Result<Self> {
        let w = 1.0 / atoms.len() as f64;
        Self::from_pairs(atoms.iter().map(|&x| (x, w)))
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.atoms.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn min(&self) -> f64 {
        self.atoms[0]
    }

    pub fn max(&self) -> f64 {
        self.atoms[self.atoms.len() - 1]
    }

    pub fn diameter(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(x, w)| x * w).sum()
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Cumulative weights `P_1, …, P_n`; the last entry is pinned to 1.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out: Vec<f64> = self
            .weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        *out.last_mut().unwrap() = 1.0;
        out
    }

    pub fn cdf(&self, y: f64) -> f64 {
        match self.atoms.partition_point(|&x| x <= y) {
            0 => 0.0,
            k => self.cumulative()[k - 1],
        }
    }

    /// Left-continuous inverse `inf{x : F(x) >= level}`.
    pub fn quantile(&self, level: f64) -> Result<f64> {
        if !(level > 0.0 && level <= 1.0) {
            return Err(Error::Domain(format!("quantile level {level} outside (0, 1]")));
        }
        Ok(self.atoms[self.quantile_index(level)])
    }

    /// Index of the atom holding quantile `level` (left-continuous convention).
    pub(crate) fn quantile_index(&self, level: f64) -> usize {
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if acc >= level - 1e-14 {
                return i;
            }
        }
        self.atoms.len() - 1
    }

    /// Potential function `y ↦ ∫|x − y| dm(x)`, evaluated at the atoms by one
    /// prefix-sum sweep.
    pub fn potential(&self) -> PiecewiseLinearFn {
        let n = self.len();
        let total_moment: f64 = self.mean();
        let mut values = Vec::with_capacity(n);
        let (mut w_left, mut m_left) = (0.0, 0.0);
        for (x, w) in self.iter() {
            let w_right = 1.0 - w_left - w;
            let m_right = total_moment - m_left - w * x;
            values.push(x * w_left - m_left + m_right - x * w_right);
            w_left += w;
            m_left += w * x;
        }
        PiecewiseLinearFn::from_parts_unchecked(self.atoms.clone(), values, -1.0, 1.0)
    }

    /// Quantile integral `s ↦ ∫₀ˢ F⁻¹(u) du` on `[0, 1]`, breakpoints at the
    /// cumulative weights.
    pub fn quantile_integral(&self) -> PiecewiseLinearFn {
        let mut levels = Vec::with_capacity(self.len() + 1);
        let mut values = Vec::with_capacity(self.len() + 1);
        levels.push(0.0);
        values.push(0.0);
        let mut acc = 0.0;
        for (&s, (x, w)) in self.cumulative().iter().zip(self.iter()) {
            acc += x * w;
            if s > *levels.last().unwrap() {
                levels.push(s);
                values.push(acc);
            } else {
                *values.last_mut().unwrap() = acc;
            }
        }
        PiecewiseLinearFn::from_parts_unchecked(levels, values, self.min(), self.max())
    }

    pub fn shift(&self, h: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|x| x + h).collect(),
            weights: self.weights.clone(),
        }
    }

    /// Image measure under `f`, merging images within `merge_tol`.
    pub fn pushforward(&self, f: impl Fn(f64) -> f64, merge_tol: f64) -> Result<Self> {
        Self::from_masses(self.iter().map(|(x, w)| (f(x), w)), merge_tol)
    }

    /// Atom-by-atom comparison with absolute tolerance.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.len() == other.len()
            && self
                .iter()
                .zip(other.iter())
                .all(|(a, b)| (a.0 - b.0).abs() <= tol && (a.1 - b.1).abs() <= tol)
    }

    /// Recovers a measure from a convex potential: atoms at the kinks, weight
    /// equal to half the slope jump. Jumps below `drop_tol` are discarded.
    pub fn from_potential(u: &PiecewiseLinearFn, drop_tol: f64) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = u
            .slope_jumps()
            .into_iter()
            .map(|(b, jump)| (b, jump / 2.0))
            .filter(|&(_, w)| w > drop_tol)
            .collect();
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Consistency(format!(
                "potential slope jumps carry mass {total}, expected 1"
            )));
        }
        Self::from_pairs(pairs.into_iter().map(|(b, w)| (b, w / total)))
    }
}

/// Open interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Domain(format!("empty interval ({lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, y: f64) -> bool {
        self.lo < y && y < self.hi
    }

    /// Membership in the open interval shrunk by `tol` at both ends.
    pub fn contains_strictly(&self, y: f64, tol: f64) -> bool {
        self.lo + tol < y && y < self.hi - tol
    }

    pub fn contains_closed(&self, y: f64, tol: f64) -> bool {
        self.lo - tol <= y && y <= self.hi + tol
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// `max(1, diameter of the joint support)`.
pub fn scale(a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
    let lo = a.min().min(b.min());
    let hi = a.max().max(b.max());
    (hi - lo).max(1.0)
}

pub fn scale_of(m: &DiscreteMeasure) -> f64 {
    m.diameter().max(1.0)
}

/// Default order tolerance `1e-9 · scale`.
pub fn order_tol(a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
    ORDER_RTOL * scale(a, b)
}

pub fn mean(m: &DiscreteMeasure) -> f64 {
    m.mean()
}

pub fn quantile(m: &DiscreteMeasure, level: f64) -> Result<f64> {
    m.quantile(level)
}

pub fn potential(m: &DiscreteMeasure) -> PiecewiseLinearFn {
    m.potential()
}

/// Largest violation of `u_a <= u_b` over the atoms of `b`, with its location.
pub fn order_violation(a: &DiscreteMeasure, b: &DiscreteMeasure) -> (f64, f64) {
    let ua = a.potential();
    let ub = b.potential();
    let mut worst = (f64::NEG_INFINITY, b.min());
    for (&y, &vb) in ub.breakpoints().iter().zip(ub.values()) {
        let gap = ua.eval(y) - vb;
        if gap > worst.0 {
            worst = (gap, y);
        }
    }
    worst
}

/// `a ≤_c b`: equal means and `u_a <= u_b + tol` at every atom of `b`.
///
/// The difference `u_a − u_b` is convex between consecutive atoms of `b` and
/// tends to a constant at ±∞ once the means agree, so its supremum is attained
/// at an atom of `b` or at infinity.
pub fn convex_order_leq(a: &DiscreteMeasure, b: &DiscreteMeasure, tol: f64) -> bool {
    if (a.mean() - b.mean()).abs() > tol {
        return false;
    }
    order_violation(a, b).0 <= tol
}

/// Maximal open intervals where `u_a < u_b − tol`.
///
/// `u_b − u_a` is nonnegative and linear between merged breakpoints, so it can
/// only vanish at breakpoints or on whole pieces; component endpoints are the
/// touching breakpoints.
pub fn irreducible_components(
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    tol: f64,
) -> Result<Vec<Interval>> {
    if !convex_order_leq(a, b, tol) {
        let (gap, at) = order_violation(a, b);
        return Err(Error::Order(format!(
            "first measure is not below the second in convex order (mean gap {:e}, potential gap {:e} at {})",
            a.mean() - b.mean(),
            gap,
            at
        )));
    }
    let ua = a.potential();
    let ub = b.potential();
    let grid = merge_sorted(a.atoms(), b.atoms());
    let touching: Vec<bool> = grid.iter().map(|&y| ub.eval(y) - ua.eval(y) <= tol).collect();
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for k in 0..grid.len() {
        if touching[k] {
            if let Some(s) = start {
                if k > s + 1 {
                    out.push(Interval { lo: grid[s], hi: grid[k] });
                }
            }
            start = Some(k);
        }
    }
    Ok(out)
}

/// Sorted union of the atoms of both measures.
pub fn merge_atoms(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Vec<f64> {
    merge_sorted(a.atoms(), b.atoms())
}

/// `ρ`-Wasserstein distance, exact on the merged cumulative-weight grid.
pub fn wasserstein(a: &DiscreteMeasure, b: &DiscreteMeasure, rho: f64) -> Result<f64> {
    if !(rho >= 1.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("Wasserstein exponent {rho} must be >= 1")));
    }
    let total = quantile_pairing(a, b)
        .into_iter()
        .map(|(len, x, y)| len * (x - y).abs().powf(rho))
        .sum::<f64>();
    Ok(total.powf(1.0 / rho))
}

/// Pieces `(length, F_a⁻¹, F_b⁻¹)` of the comonotone coupling on `(0, 1)`.
pub fn quantile_pairing(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Vec<(f64, f64, f64)> {
    let ca = a.cumulative();
    let cb = b.cumulative();
    let (mut i, mut j) = (0, 0);
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(a.len() + b.len());
    while i < a.len() && j < b.len() {
        let next = ca[i].min(cb[j]);
        if next > prev {
            out.push((next - prev, a.atoms()[i], b.atoms()[j]));
            prev = next;
        }
        if ca[i] <= next {
            i += 1;
        }
        if cb[j] <= next {
            j += 1;
        }
    }
    out
}

/// Barycentric coarsening on half-open bins `[kδ, (k+1)δ)`.
pub fn quantize(m: &DiscreteMeasure, delta: f64) -> Result<DiscreteMeasure> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("bin width {delta} must be positive")));
    }
    let mut bins: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for (x, w) in m.iter() {
        let e = bins.entry((x / delta).floor() as i64).or_insert((0.0, 0.0));
        e.0 += w;
        e.1 += w * x;
    }
    let pairs: Vec<(f64, f64)> = bins.values().map(|&(w, mom)| (mom / w, w)).collect();
    DiscreteMeasure::from_masses(pairs, 0.0)
}
