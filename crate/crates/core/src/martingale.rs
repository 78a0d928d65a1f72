//! Couplings between discrete measures, martingale couplings between
//! convex-ordered pairs, and the two-point competitor argument used to certify
//! suboptimality.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{self, DiscreteMeasure, Interval, MERGE_RTOL, ORDER_RTOL};
use crate::simplex;
use crate::wmr::{self, CostSpec, MonotoneMap};

/// Tolerance on row and column sums.
pub const MARGINAL_TOL: f64 = 1e-10;

/// One transported mass: `(source index, target index, mass)`.
pub type Entry = (usize, usize, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    source: DiscreteMeasure,
    target: DiscreteMeasure,
    entries: Vec<Entry>,
}

impl Coupling {
    /// Sorts and merges entries, drops zero masses and checks both marginals.
    pub fn new(source: DiscreteMeasure, target: DiscreteMeasure, mut entries: Vec<Entry>) -> Result<Self> {
        for &(i, j, m) in &entries {
            if i >= source.len() || j >= target.len() {
                return Err(Error::Coupling(format!("entry ({i}, {j}) out of range")));
            }
            if !(m >= 0.0) || !m.is_finite() {
                return Err(Error::Coupling(format!("entry ({i}, {j}) has mass {m}")));
            }
        }
        entries.sort_by_key(|a| (a.0, a.1));
        let mut merged: Vec<Entry> = Vec::with_capacity(entries.len());
        for e in entries {
            match merged.last_mut() {
                Some(l) if l.0 == e.0 && l.1 == e.1 => l.2 += e.2,
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.2 > 0.0);
        let c = Self { source, target, entries: merged };
        let (rows, cols) = (c.row_sums(), c.column_sums());
        for (i, (r, w)) in rows.iter().zip(c.source.weights()).enumerate() {
            if (r - w).abs() > MARGINAL_TOL {
                return Err(Error::Coupling(format!(
                    "row {i} carries {r}, source weight is {w}"
                )));
            }
        }
        for (j, (s, w)) in cols.iter().zip(c.target.weights()).enumerate() {
            if (s - w).abs() > MARGINAL_TOL {
                return Err(Error::Coupling(format!(
                    "column {j} carries {s}, target weight is {w}"
                )));
            }
        }
        Ok(c)
    }

    /// Builds a coupling from `(source atom, target atom, mass)` triplets; the
    /// marginals are read off the triplets.
    pub fn from_triplets(triplets: &[(f64, f64, f64)]) -> Result<Self> {
        if triplets.is_empty() {
            return Err(Error::Coupling("no coupling entries".into()));
        }
        let source = DiscreteMeasure::from_pairs(triplets.iter().map(|t| (t.0, t.2)))?;
        let target = DiscreteMeasure::from_pairs(triplets.iter().map(|t| (t.1, t.2)))?;
        let total: f64 = triplets.iter().map(|t| t.2).sum();
        let entries = triplets
            .iter()
            .map(|&(x, y, m)| (index_of(&source, x), index_of(&target, y), m / total))
            .collect();
        Self::new(source, target, entries)
    }

    pub fn source(&self) -> &DiscreteMeasure {
        &self.source
    }

    pub fn target(&self) -> &DiscreteMeasure {
        &self.target
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn triplets(&self) -> Vec<(f64, f64, f64)> {
        self.entries
            .iter()
            .map(|&(i, j, m)| (self.source.atoms()[i], self.target.atoms()[j], m))
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.source.len()];
        for &(i, _, m) in &self.entries {
            out[i] += m;
        }
        out
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.target.len()];
        for &(_, j, m) in &self.entries {
            out[j] += m;
        }
        out
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = &Entry> + '_ {
        let lo = self.entries.partition_point(|e| e.0 < i);
        self.entries[lo..].iter().take_while(move |e| e.0 == i)
    }

    /// Conditional law of the target given source atom `i`.
    pub fn conditional(&self, i: usize) -> Result<DiscreteMeasure> {
        let y = self.target.atoms();
        DiscreteMeasure::from_masses(self.row(i).map(|&(_, j, m)| (y[j], m)), 0.0)
    }

    /// Barycenters of the conditional laws, one per source atom.
    pub fn barycenters(&self) -> Vec<f64> {
        let y = self.target.atoms();
        let mut mass = vec![0.0; self.source.len()];
        let mut moment = vec![0.0; self.source.len()];
        for &(i, j, m) in &self.entries {
            mass[i] += m;
            moment[i] += m * y[j];
        }
        moment.iter().zip(&mass).map(|(a, b)| a / b).collect()
    }

    /// Largest `|barycenter(π_x) − x|` over source atoms.
    pub fn barycenter_gap(&self) -> f64 {
        self.barycenters()
            .iter()
            .zip(self.source.atoms())
            .map(|(b, x)| (b - x).abs())
            .fold(0.0, f64::max)
    }

    /// `Σ_i μ_i θ(x_i − barycenter(π_{x_i}))`.
    pub fn weak_cost(&self, cost: CostSpec) -> f64 {
        self.barycenters()
            .iter()
            .zip(self.source.iter())
            .map(|(b, (x, w))| w * cost.eval(x - b))
            .sum()
    }
}

fn index_of(m: &DiscreteMeasure, x: f64) -> usize {
    let a = m.atoms();
    let k = a.partition_point(|&v| v < x);
    if k == a.len() || (k > 0 && (x - a[k - 1]).abs() < (a[k] - x).abs()) {
        k - 1
    } else {
        k
    }
}

/// A coupling whose conditional laws have barycenter equal to their source
/// atom, within `1e-9 · scale`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleCoupling(Coupling);

impl MartingaleCoupling {
    pub fn new(c: Coupling) -> Result<Self> {
        let tol = ORDER_RTOL * measures::scale(&c.source, &c.target);
        let gap = c.barycenter_gap();
        if gap > tol {
            return Err(Error::Coupling(format!("barycenter deviates from the source atom by {gap:e}")));
        }
        Ok(Self(c))
    }

    pub fn into_inner(self) -> Coupling {
        self.0
    }
}

impl Deref for MartingaleCoupling {
    type Target = Coupling;
    fn deref(&self) -> &Coupling {
        &self.0
    }
}

/// Candidate target indices for each source atom: the closure of its
/// irreducible component, or the coinciding atom of `nu` when it lies on the
/// fixed set.
fn admissible_pairs(eta: &DiscreteMeasure, nu: &DiscreteMeasure, tol: f64) -> Result<Vec<(usize, usize)>> {
    let comps = measures::irreducible_components(eta, nu, tol)?;
    let slack = MERGE_RTOL * measures::scale(eta, nu);
    let mut pairs = Vec::new();
    for (i, &x) in eta.atoms().iter().enumerate() {
        match comps.iter().find(|c| c.contains(x)) {
            Some(c) => {
                for (j, &y) in nu.atoms().iter().enumerate() {
                    if c.contains_closed(y, slack) {
                        pairs.push((i, j));
                    }
                }
            }
            None => {
                for (j, &y) in nu.atoms().iter().enumerate() {
                    if (y - x).abs() <= tol {
                        pairs.push((i, j));
                    }
                }
            }
        }
    }
    Ok(pairs)
}

fn solve_martingale_lp(eta: &DiscreteMeasure, nu: &DiscreteMeasure, pairs: &[(usize, usize)]) -> Result<(Vec<Entry>, f64)> {
    let (n, m) = (eta.len(), nu.len());
    let scale = measures::scale(eta, nu);
    let (x, y) = (eta.atoms(), nu.atoms());
    let mut a = vec![vec![0.0; pairs.len()]; 2 * n + m];
    for (v, &(i, j)) in pairs.iter().enumerate() {
        a[i][v] = 1.0;
        a[n + j][v] = 1.0;
        a[n + m + i][v] = (y[j] - x[i]) / scale;
    }
    let mut b: Vec<f64> = eta.weights().to_vec();
    b.extend_from_slice(nu.weights());
    b.extend(std::iter::repeat_n(0.0, n));
    let sol = simplex::phase_one(&a, &b, 200 * (pairs.len() + a.len()))?;
    let entries = pairs
        .iter()
        .zip(&sol.x)
        .filter(|(_, &v)| v > 1e-15)
        .map(|(&(i, j), &v)| (i, j, v))
        .collect();
    Ok((entries, sol.infeasibility))
}

/// Some martingale coupling of `(eta, nu)`, the phase-1 simplex vertex under
/// Bland's rule.
pub fn build_martingale_coupling(eta: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<MartingaleCoupling> {
    let tol = measures::order_tol(eta, nu);
    if !measures::convex_order_leq(eta, nu, tol) {
        let (gap, at) = measures::order_violation(eta, nu);
        return Err(Error::Order(format!(
            "source is not below target in convex order (mean gap {:e}, potential gap {:e} at {at})",
            eta.mean() - nu.mean(),
            gap
        )));
    }
    let pairs = admissible_pairs(eta, nu, tol)?;
    let (mut entries, mut infeasibility) = solve_martingale_lp(eta, nu, &pairs)?;
    if infeasibility > tol {
        let all: Vec<(usize, usize)> = (0..eta.len()).flat_map(|i| (0..nu.len()).map(move |j| (i, j))).collect();
        (entries, infeasibility) = solve_martingale_lp(eta, nu, &all)?;
    }
    if infeasibility > tol {
        let (ue, un) = (eta.potential(), nu.potential());
        let dump: Vec<String> = measures::merge_atoms(eta, nu)
            .iter()
            .map(|&z| format!("{z}: {} <= {}", ue.eval(z), un.eval(z)))
            .collect();
        return Err(Error::Consistency(format!(
            "martingale feasibility problem infeasible (residual {infeasibility:e}); potentials {}",
            dump.join(", ")
        )));
    }
    MartingaleCoupling::new(Coupling::new(eta.clone(), nu.clone(), entries)?)
}

/// `π(i, j) = μ_i · π^M(T(x_i) → y_j) / T(μ)(T(x_i))`.
pub fn compose_with_map(mu: &DiscreteMeasure, map: &MonotoneMap, mg: &MartingaleCoupling) -> Result<Coupling> {
    let eta = mg.source();
    let tol = ORDER_RTOL * measures::scale(mu, eta);
    let mut routed = vec![0.0; eta.len()];
    let mut link = Vec::with_capacity(mu.len());
    for (x, w) in mu.iter() {
        let t = map.eval(x);
        let k = index_of(eta, t);
        if (eta.atoms()[k] - t).abs() > tol {
            return Err(Error::Composition(format!(
                "image {t} of atom {x} is not an atom of the coupling source"
            )));
        }
        routed[k] += w;
        link.push(k);
    }
    for (k, (r, w)) in routed.iter().zip(eta.weights()).enumerate() {
        if (r - w).abs() > tol {
            return Err(Error::Composition(format!(
                "source atom {} receives mass {r} from the map but carries {w}",
                eta.atoms()[k]
            )));
        }
    }
    let mut entries = Vec::new();
    for (i, (&k, w)) in link.iter().zip(mu.weights()).enumerate() {
        let eta_k = eta.weights()[k];
        entries.extend(mg.row(k).map(|&(_, j, m)| (i, j, w * m / eta_k)));
    }
    Coupling::new(mu.clone(), mg.target().clone(), entries)
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentPiece {
    pub interval: Interval,
    pub entries: Vec<Entry>,
    pub mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleDecomposition {
    pub components: Vec<ComponentPiece>,
    /// diagonal entries with source on the fixed set
    pub fixed: Vec<Entry>,
    /// source atoms on an endpoint shared by two adjacent components
    pub boundary_sources: Vec<usize>,
}

impl MartingaleDecomposition {
    /// All entries, in coupling order.
    pub fn reconstruct(&self) -> Vec<Entry> {
        let mut all: Vec<Entry> = self.components.iter().flat_map(|c| c.entries.iter().copied()).collect();
        all.extend(self.fixed.iter().copied());
        all.sort_by_key(|a| (a.0, a.1));
        all
    }
}

/// Splits a martingale coupling over the irreducible components of its
/// marginals plus the identity part on the fixed set.
pub fn decompose_martingale(mg: &MartingaleCoupling) -> Result<MartingaleDecomposition> {
    let (eta, nu) = (mg.source(), mg.target());
    let tol = measures::order_tol(eta, nu);
    let comps = measures::irreducible_components(eta, nu, tol)?;
    let mut components: Vec<ComponentPiece> =
        comps.iter().map(|&interval| ComponentPiece { interval, entries: Vec::new(), mass: 0.0 }).collect();
    let mut fixed = Vec::new();
    let (x, y) = (eta.atoms(), nu.atoms());
    for &(i, j, m) in mg.entries() {
        match comps.iter().position(|c| c.contains(x[i])) {
            Some(k) => {
                if !comps[k].contains_closed(y[j], tol) {
                    return Err(Error::Structure(format!(
                        "entry {} -> {} (mass {m:e}) leaves the component ({}, {})",
                        x[i], y[j], comps[k].lo, comps[k].hi
                    )));
                }
                components[k].entries.push((i, j, m));
                components[k].mass += m;
            }
            None => {
                if (x[i] - y[j]).abs() > tol {
                    return Err(Error::Structure(format!(
                        "entry {} -> {} (mass {m:e}) moves mass off the fixed set",
                        x[i], y[j]
                    )));
                }
                fixed.push((i, j, m));
            }
        }
    }
    let boundary_sources = x
        .iter()
        .enumerate()
        .filter(|&(_, &xi)| {
            comps.windows(2).any(|w| (w[0].hi - w[1].lo).abs() <= tol && (xi - w[0].hi).abs() <= tol)
        })
        .map(|(i, _)| i)
        .collect();
    Ok(MartingaleDecomposition { components, fixed, boundary_sources })
}

/// Conditional means of a coupling as a knot list; monotonicity is not
/// enforced.
pub fn barycenter_map(pi: &Coupling) -> Result<MonotoneMap> {
    MonotoneMap::from_values(pi.source().atoms(), &pi.barycenters())
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimalityReport {
    /// largest `|barycenter map − wmr|` over atoms of `μ`
    pub map_gap: f64,
    pub matches_rearrangement: bool,
    /// the second-stage coupling of `(S(μ), ν)` is a martingale coupling
    pub second_stage_martingale: bool,
    pub coupling_cost: f64,
    pub optimal_value: f64,
}

impl OptimalityReport {
    pub fn optimal(&self) -> bool {
        self.matches_rearrangement && self.second_stage_martingale
    }
}

/// Compares the barycenter map of `pi` with the weak monotone rearrangement
/// and checks that `pi` factors through a martingale coupling.
pub fn optimality_certificate(
    pi: &Coupling,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: CostSpec,
    tol: f64,
) -> Result<OptimalityReport> {
    let mtol = ORDER_RTOL * measures::scale(mu, nu);
    if !pi.source().approx_eq(mu, mtol) || !pi.target().approx_eq(nu, mtol) {
        return Err(Error::Coupling("coupling marginals differ from (mu, nu)".into()));
    }
    let s = barycenter_map(pi)?;
    let wmr = wmr::solve_weak_transport(mu, nu, cost)?;
    let map_gap = mu
        .atoms()
        .iter()
        .map(|&x| (s.eval(x) - wmr.map.eval(x)).abs())
        .fold(0.0, f64::max);

    // aggregate rows with a common barycenter into the second stage
    let image = wmr::image_measure(&s, mu)?;
    let bary = pi.barycenters();
    let mut entries = Vec::with_capacity(pi.entries().len());
    for &(i, j, m) in pi.entries() {
        entries.push((index_of(&image, bary[i]), j, m));
    }
    let second_stage_martingale = Coupling::new(image, nu.clone(), entries)
        .and_then(MartingaleCoupling::new)
        .is_ok();
    Ok(OptimalityReport {
        map_gap,
        matches_rearrangement: map_gap <= tol,
        second_stage_martingale,
        coupling_cost: pi.weak_cost(cost),
        optimal_value: wmr.value,
    })
}

/// `int co(supp p) ∩ co(supp q) ≠ ∅` or the same with roles swapped.
pub fn supports_overlap(p: &DiscreteMeasure, q: &DiscreteMeasure) -> bool {
    let meets = |a: &DiscreteMeasure, b: &DiscreteMeasure| a.min() < a.max() && a.min() < b.max() && b.min() < a.max();
    meets(p, q) || meets(q, p)
}

/// The lowest `alpha` mass of `m`, as `(atom, mass)` pairs.
fn lower_mass(m: &DiscreteMeasure, alpha: f64) -> Vec<(f64, f64)> {
    let mut left = alpha;
    let mut out = Vec::new();
    for (x, w) in m.iter() {
        if left <= 0.0 {
            break;
        }
        let take = w.min(left);
        out.push((x, take));
        left -= take;
    }
    out
}

/// `p_α = p̃_α + q̃_{1−α}` and `q_α = p + q − p_α`, with `m̃_a` the lowest
/// mass `a` of `m`.
pub fn competitor_curve(p: &DiscreteMeasure, q: &DiscreteMeasure, alpha: f64) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha {alpha} outside [0, 1]")));
    }
    if alpha == 1.0 {
        return Ok((p.clone(), q.clone()));
    }
    if alpha == 0.0 {
        return Ok((q.clone(), p.clone()));
    }
    let grid = measures::merge_atoms(p, q);
    let slot = |x: f64| grid.partition_point(|&g| g < x);
    let mut total = vec![0.0; grid.len()];
    for (x, w) in p.iter().chain(q.iter()) {
        total[slot(x)] += w;
    }
    let mut first = vec![0.0; grid.len()];
    for (x, w) in lower_mass(p, alpha).into_iter().chain(lower_mass(q, 1.0 - alpha)) {
        first[slot(x)] += w;
    }
    let second: Vec<(f64, f64)> = grid
        .iter()
        .zip(total.iter().zip(&first))
        .map(|(&x, (t, f))| (x, (t - f).max(0.0)))
        .filter(|&(_, w)| w > 1e-15)
        .collect();
    let first: Vec<(f64, f64)> = grid.iter().copied().zip(first).filter(|&(_, w)| w > 1e-15).collect();
    Ok((DiscreteMeasure::from_masses(first, 0.0)?, DiscreteMeasure::from_masses(second, 0.0)?))
}

/// Two conditionals whose exchange along the competitor curve lowers the cost.
#[derive(Debug, Clone, Serialize)]
pub struct CompetitorWitness {
    pub lower_atom: f64,
    pub upper_atom: f64,
    pub alpha: f64,
    pub original_cost: f64,
    pub competitor_cost: f64,
}

/// Searches source pairs `x < y` with `x − S(x) < y − S(y)` and overlapping
/// conditional supports for an `α < 1` at which
/// `θ(x − v_α) + θ(y − w_α) < θ(x − S(x)) + θ(y − S(y))`, where `v_α`, `w_α`
/// are the means of the competitor pair.
pub fn find_cheaper_competitor(pi: &Coupling, cost: CostSpec) -> Result<Option<CompetitorWitness>> {
    let x = pi.source().atoms();
    let s = pi.barycenters();
    let conds: Vec<DiscreteMeasure> = (0..x.len()).map(|i| pi.conditional(i)).collect::<Result<_>>()?;
    for i in 0..x.len() {
        for k in i + 1..x.len() {
            let (di, dk) = (x[i] - s[i], x[k] - s[k]);
            let gap = dk - di;
            if !(gap > 0.0) || !supports_overlap(&conds[i], &conds[k]) {
                continue;
            }
            let original = cost.eval(di) + cost.eval(dk);
            for e in 1..=50 {
                let alpha = 1.0 - 0.5f64.powi(e);
                let (pa, qa) = competitor_curve(&conds[i], &conds[k], alpha)?;
                let (v, w) = (pa.mean(), qa.mean());
                let delta = s[i] - v;
                if delta > 0.0 && delta < gap {
                    let competitor = cost.eval(x[i] - v) + cost.eval(x[k] - w);
                    if competitor < original {
                        return Ok(Some(CompetitorWitness {
                            lower_atom: x[i],
                            upper_atom: x[k],
                            alpha,
                            original_cost: original,
                            competitor_cost: competitor,
                        }));
                    }
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wmr::weak_monotone_rearrangement;

    fn m(pairs: &[(f64, f64)]) -> DiscreteMeasure {
        DiscreteMeasure::from_pairs(pairs.iter().copied()).unwrap()
    }

    fn sym() -> DiscreteMeasure {
        m(&[(-1.0, 0.5), (1.0, 0.5)])
    }

    #[test]
    fn product_and_identity_couplings() {
        let nu = sym();
        let c = build_martingale_coupling(&DiscreteMeasure::dirac(0.0), &nu).unwrap();
        assert_eq!(c.entries(), &[(0, 0, 0.5), (0, 1, 0.5)]);
        let id = build_martingale_coupling(&nu, &nu).unwrap();
        assert_eq!(id.entries(), &[(0, 0, 0.5), (1, 1, 0.5)]);
    }

    #[test]
    fn hand_checked_coupling() {
        let nu = m(&[(-2.0, 0.25), (0.0, 0.5), (2.0, 0.25)]);
        let c = build_martingale_coupling(&sym(), &nu).unwrap();
        let t = c.triplets();
        let expect = [(-1.0, -2.0, 0.25), (-1.0, 0.0, 0.25), (1.0, 0.0, 0.25), (1.0, 2.0, 0.25)];
        assert_eq!(t.len(), 4);
        for (a, b) in t.iter().zip(expect) {
            assert!((a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-15 && (a.2 - b.2).abs() < 1e-14);
        }
    }

    #[test]
    fn order_precondition() {
        assert!(matches!(build_martingale_coupling(&sym(), &DiscreteMeasure::dirac(0.0)), Err(Error::Order(_))));
    }

    #[test]
    fn composition_examples() {
        let mu = m(&[(-2.0, 0.5), (2.0, 0.5)]);
        let nu = sym();
        let half = MonotoneMap::from_fn(mu.atoms(), |x| x / 2.0).unwrap();
        let id = build_martingale_coupling(&nu, &nu).unwrap();
        let c = compose_with_map(&mu, &half, &id).unwrap();
        assert_eq!(c.triplets(), vec![(-2.0, -1.0, 0.5), (2.0, 1.0, 0.5)]);

        let zero = MonotoneMap::from_fn(&[0.0], |_| 0.0).unwrap();
        let prod = build_martingale_coupling(&DiscreteMeasure::dirac(0.0), &nu).unwrap();
        let c = compose_with_map(&DiscreteMeasure::dirac(0.0), &zero, &prod).unwrap();
        assert_eq!(&c, prod.deref());

        let wrong = MonotoneMap::from_fn(mu.atoms(), |x| x / 4.0).unwrap();
        assert!(matches!(compose_with_map(&mu, &wrong, &id), Err(Error::Composition(_))));
    }

    #[test]
    fn decomposition_examples() {
        let nu = sym();
        let d = decompose_martingale(&build_martingale_coupling(&nu, &nu).unwrap()).unwrap();
        assert!(d.components.is_empty());
        assert_eq!(d.fixed.len(), 2);

        let d = decompose_martingale(&build_martingale_coupling(&DiscreteMeasure::dirac(0.0), &nu).unwrap()).unwrap();
        assert_eq!(d.components.len(), 1);
        assert_eq!(d.components[0].interval, Interval { lo: -1.0, hi: 1.0 });
        assert!((d.components[0].mass - 1.0).abs() < 1e-15);

        let eta = m(&[(-2.0, 0.5), (2.0, 0.5)]);
        let wide = DiscreteMeasure::uniform(&[-3.0, -1.0, 1.0, 3.0]).unwrap();
        let mg = build_martingale_coupling(&eta, &wide).unwrap();
        let d = decompose_martingale(&mg).unwrap();
        let got: Vec<(f64, f64, f64)> = d.components.iter().map(|c| (c.interval.lo, c.interval.hi, c.mass)).collect();
        assert_eq!(got, vec![(-3.0, -1.0, 0.5), (1.0, 3.0, 0.5)]);
        assert_eq!(d.reconstruct(), mg.entries());
    }

    #[test]
    fn barycenter_map_examples() {
        let nu = sym();
        let id = build_martingale_coupling(&nu, &nu).unwrap();
        assert_eq!(barycenter_map(&id).unwrap().knots(), &[(-1.0, -1.0), (1.0, 1.0)]);
        let prod = build_martingale_coupling(&DiscreteMeasure::dirac(0.0), &nu).unwrap();
        assert_eq!(barycenter_map(&prod).unwrap().knots(), &[(0.0, 0.0)]);
        let c = Coupling::from_triplets(&[(-2.0, -1.0, 0.5), (2.0, 1.0, 0.5)]).unwrap();
        assert_eq!(barycenter_map(&c).unwrap().knots(), &[(-2.0, -1.0), (2.0, 1.0)]);
    }

    #[test]
    fn certificate_examples() {
        let mu = m(&[(-2.0, 0.5), (2.0, 0.5)]);
        let nu = sym();
        let monotone = Coupling::from_triplets(&[(-2.0, -1.0, 0.5), (2.0, 1.0, 0.5)]).unwrap();
        assert!(optimality_certificate(&monotone, &mu, &nu, CostSpec::Quadratic, 1e-9).unwrap().optimal());
        let antitone = Coupling::from_triplets(&[(-2.0, 1.0, 0.5), (2.0, -1.0, 0.5)]).unwrap();
        assert!(!optimality_certificate(&antitone, &mu, &nu, CostSpec::Quadratic, 1e-9).unwrap().optimal());

        let mu = m(&[(-1.0, 0.5), (0.5, 0.5)]);
        let nu = DiscreteMeasure::uniform(&[-3.0, -1.0, 0.0, 2.0]).unwrap();
        let sol = weak_monotone_rearrangement(&mu, &nu).unwrap();
        let mg = build_martingale_coupling(&sol.pushforward, &nu).unwrap();
        let pi = compose_with_map(&mu, &sol.map, &mg).unwrap();
        let r = optimality_certificate(&pi, &mu, &nu, CostSpec::Quadratic, 1e-9).unwrap();
        assert!(r.optimal());
        assert!((r.coupling_cost - r.optimal_value).abs() < 1e-12);
    }

    #[test]
    fn overlap_examples() {
        assert!(supports_overlap(&m(&[(0.0, 0.5), (2.0, 0.5)]), &m(&[(1.0, 0.5), (3.0, 0.5)])));
        assert!(!supports_overlap(&DiscreteMeasure::dirac(0.0), &DiscreteMeasure::dirac(1.0)));
        assert!(!supports_overlap(&m(&[(0.0, 0.5), (1.0, 0.5)]), &m(&[(2.0, 0.5), (3.0, 0.5)])));
        // a Dirac inside the other hull
        assert!(supports_overlap(&DiscreteMeasure::dirac(0.5), &m(&[(0.0, 0.5), (1.0, 0.5)])));
    }

    #[test]
    fn competitor_curve_examples() {
        let p = m(&[(0.0, 0.5), (2.0, 0.5)]);
        let q = m(&[(1.0, 0.5), (3.0, 0.5)]);
        let (a, b) = competitor_curve(&p, &q, 1.0).unwrap();
        assert_eq!((a, b), (p.clone(), q.clone()));
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..=20 {
            let alpha = 0.5 + 0.025 * k as f64;
            let (pa, qa) = competitor_curve(&p, &q, alpha).unwrap();
            // sum property, atom by atom
            for z in [0.0, 1.0, 2.0, 3.0] {
                let mass = |d: &DiscreteMeasure| d.iter().filter(|a| a.0 == z).map(|a| a.1).sum::<f64>();
                assert!((mass(&pa) + mass(&qa) - mass(&p) - mass(&q)).abs() < 1e-12);
            }
            assert!((pa.mean() - alpha).abs() < 1e-12);
            if let Some((mp, mq)) = prev {
                assert!(pa.mean() > mp && qa.mean() < mq);
            }
            prev = Some((pa.mean(), qa.mean()));
        }
    }

    #[test]
    fn probe_finds_cheaper_pair_for_contracted_map() {
        // S ≡ 0 on ½(δ₋₂+δ₂) with ν = ½(δ₋₁+δ₁): one irreducible interval, slope 0
        let mu = m(&[(-2.0, 0.5), (2.0, 0.5)]);
        let nu = sym();
        let zero = MonotoneMap::from_fn(mu.atoms(), |_| 0.0).unwrap();
        let mg = build_martingale_coupling(&DiscreteMeasure::dirac(0.0), &nu).unwrap();
        let pi = compose_with_map(&mu, &zero, &mg).unwrap();
        let w = find_cheaper_competitor(&pi, CostSpec::Quadratic).unwrap().expect("competitor");
        assert!(w.competitor_cost < w.original_cost);
        // the optimal coupling admits no such pair
        let opt = Coupling::from_triplets(&[(-2.0, -1.0, 0.5), (2.0, 1.0, 0.5)]).unwrap();
        assert!(find_cheaper_competitor(&opt, CostSpec::Quadratic).unwrap().is_none());
    }
}
