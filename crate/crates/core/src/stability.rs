//! Stability experiments along perturbation ladders `(μᵏ, νᵏ) → (μ, ν)` and
//! the approximation steps used to move between nearby instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::martingale::build_martingale_coupling;
use crate::measures::{self, DiscreteMeasure, MERGE_RTOL};
use crate::wmr::{self, CostSpec, MonotoneMap, WeakSolution};

/// Thresholds `ε` of the reported map gaps.
pub const MAP_GAP_EPS: [f64; 3] = [1e-1, 1e-2, 1e-3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Mu,
    Nu,
    Both,
}

/// How rung `k` perturbs the base measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LadderGenerator {
    /// translate by `h[k]`
    Shift { h: Vec<f64> },
    /// empirical measure of `sizes[k]` inverse-CDF samples, stream `seed + k`
    Empirical { sizes: Vec<usize>, seed: u64 },
    /// barycentric binning with width `deltas[k]`
    Quantize { deltas: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationLadder {
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    pub generator: LadderGenerator,
    pub side: Side,
    /// Wasserstein exponent of the convergence `μᵏ → μ`
    pub rho: f64,
}

impl PerturbationLadder {
    pub fn len(&self) -> usize {
        match &self.generator {
            LadderGenerator::Shift { h } => h.len(),
            LadderGenerator::Empirical { sizes, .. } => sizes.len(),
            LadderGenerator::Quantize { deltas } => deltas.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rung `k` (zero based).
    pub fn rung(&self, k: usize) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
        let mut rng = match &self.generator {
            LadderGenerator::Empirical { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64))),
            _ => None,
        };
        let mut perturb = |m: &DiscreteMeasure| -> Result<DiscreteMeasure> {
            match &self.generator {
                LadderGenerator::Shift { h } => Ok(m.shift(h[k])),
                LadderGenerator::Quantize { deltas } => measures::quantize(m, deltas[k]),
                LadderGenerator::Empirical { sizes, .. } => empirical(m, sizes[k], rng.as_mut().expect("seeded")),
            }
        };
        let mu = if self.side != Side::Nu { perturb(&self.mu)? } else { self.mu.clone() };
        let nu = if self.side != Side::Mu { perturb(&self.nu)? } else { self.nu.clone() };
        Ok((mu, nu))
    }
}

/// Empirical measure of `n` inverse-CDF samples of `m`.
pub fn empirical<R: Rng + ?Sized>(m: &DiscreteMeasure, n: usize, rng: &mut R) -> Result<DiscreteMeasure> {
    if n == 0 {
        return Err(Error::Domain("empirical measure needs at least one sample".into()));
    }
    let w = 1.0 / n as f64;
    let mut pairs = Vec::with_capacity(n);
    for _ in 0..n {
        // gen::<f64>() is in [0, 1); quantile levels live in (0, 1]
        let u = 1.0 - rng.gen::<f64>();
        pairs.push((m.quantile(u)?, w));
    }
    DiscreteMeasure::from_pairs(pairs)
}

#[derive(Debug, Clone, Serialize)]
pub struct RungReport {
    /// one based
    pub k: usize,
    pub value: f64,
    pub value_gap: f64,
    pub optimizer_gap_w1: f64,
    /// Lebesgue measure of `{u : |Tᵏ(F_{μᵏ}⁻¹(u)) − T(F_μ⁻¹(u))| > ε}`, one per `MAP_GAP_EPS`
    pub map_gap: Vec<f64>,
    pub map_sup_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub cost: CostSpec,
    pub base_value: f64,
    pub eps: Vec<f64>,
    /// maps are compared at common quantile levels, which reduces to the
    /// atom-wise comparison when `μᵏ = μ`
    pub map_comparison: String,
    pub rungs: Vec<RungReport>,
}

impl StabilityReport {
    /// Minimum value over the last three rungs is at least `limit − tol`.
    pub fn lower_semicontinuity_holds(&self, tol: f64) -> bool {
        let tail = &self.rungs[self.rungs.len().saturating_sub(3)..];
        tail.iter().map(|r| r.value).fold(f64::INFINITY, f64::min) >= self.base_value - tol
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["k".to_string(), "value_gap".into(), "optimizer_gap_W1".into()];
        header.extend(self.eps.iter().map(|e| format!("map_gap@{e:e}")));
        header.extend(["map_sup_gap".to_string(), "value".into()]);
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rungs {
            let mut row = vec![r.k.to_string(), sci(r.value_gap), sci(r.optimizer_gap_w1)];
            row.extend(r.map_gap.iter().map(|&g| sci(g)));
            row.extend([sci(r.map_sup_gap), sci(r.value)]);
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Pieces `(length, Tᵏ(F_{μᵏ}⁻¹), T(F_μ⁻¹))` of the two maps on quantile levels.
fn map_pieces(base: &WeakSolution, mu: &DiscreteMeasure, rung: &WeakSolution, mu_k: &DiscreteMeasure) -> Vec<(f64, f64, f64)> {
    measures::quantile_pairing(mu_k, mu)
        .into_iter()
        .map(|(len, xk, x)| (len, rung.map.eval(xk), base.map.eval(x)))
        .collect()
}

/// Solves every rung and reports value, optimizer and map gaps.
///
/// Fails before solving anything when the cost grows faster than the
/// ladder's Wasserstein exponent allows.
pub fn run_stability_experiment(ladder: &PerturbationLadder, cost: CostSpec) -> Result<StabilityReport> {
    cost.validate()?;
    if !(ladder.rho >= 1.0) {
        return Err(Error::Domain(format!("ladder exponent {} must be >= 1", ladder.rho)));
    }
    if cost.growth_exponent() > ladder.rho {
        return Err(Error::Hypothesis(format!(
            "{} cost grows like |x|^{} but the ladder only converges in W_{}",
            cost.name(),
            cost.growth_exponent(),
            ladder.rho
        )));
    }
    let base = wmr::solve_weak_transport(&ladder.mu, &ladder.nu, cost)?;
    let rungs = (0..ladder.len())
        .into_par_iter()
        .map(|k| -> Result<RungReport> {
            let (mu_k, nu_k) = ladder.rung(k)?;
            let sol = wmr::solve_weak_transport(&mu_k, &nu_k, cost)?;
            let pieces = map_pieces(&base, &ladder.mu, &sol, &mu_k);
            let map_gap = MAP_GAP_EPS
                .iter()
                .map(|&e| pieces.iter().filter(|p| (p.1 - p.2).abs() > e).map(|p| p.0).sum())
                .collect();
            let map_sup_gap = pieces.iter().map(|p| (p.1 - p.2).abs()).fold(0.0, f64::max);
            Ok(RungReport {
                k: k + 1,
                value: sol.value,
                value_gap: (sol.value - base.value).abs(),
                optimizer_gap_w1: measures::wasserstein(&sol.pushforward, &base.pushforward, 1.0)?,
                map_gap,
                map_sup_gap,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityReport {
        cost,
        base_value: base.value,
        eps: MAP_GAP_EPS.to_vec(),
        map_comparison: "quantile-level".into(),
        rungs,
    })
}

/// `Rᵏ(x) = E[z | x]` along `x → y` (a martingale coupling of `(η, ν)`) and
/// `y → z` (the quantile coupling of `(ν, νᵏ)`).
pub fn eta_transfer_map(eta: &DiscreteMeasure, nu: &DiscreteMeasure, nu_k: &DiscreteMeasure) -> Result<MonotoneMap> {
    let mg = build_martingale_coupling(eta, nu)?;
    let mut moment = vec![0.0; nu.len()];
    for (len, y, z) in measures::quantile_pairing(nu, nu_k) {
        let j = nu.atoms().partition_point(|&a| a < y);
        moment[j] += len * z;
    }
    let cond: Vec<f64> = moment.iter().zip(nu.weights()).map(|(m, w)| m / w).collect();
    let mut r = vec![0.0; eta.len()];
    for &(i, j, m) in mg.entries() {
        r[i] += m * cond[j];
    }
    let values: Vec<f64> = r.iter().zip(eta.weights()).map(|(v, w)| v / w).collect();
    MonotoneMap::from_values(eta.atoms(), &values)
}

/// `ηᵏ = Rᵏ(η)`, a measure below `νᵏ` in convex order and close to `η`.
pub fn eta_transfer(eta: &DiscreteMeasure, nu: &DiscreteMeasure, nu_k: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    let r = eta_transfer_map(eta, nu, nu_k)?;
    let tol = MERGE_RTOL * measures::scale(nu, nu_k);
    eta.pushforward(|x| r.eval(x), tol)
}

#[derive(Debug, Clone, Serialize)]
pub struct TransferCheck {
    pub below_target: bool,
    pub w_eta: f64,
    pub w_nu: f64,
    /// largest `|x − Rᵏ(x)|` over atoms of `η`
    pub per_atom_max: f64,
    /// `𝒲₁(ν, νᵏ) / min η`
    pub per_atom_bound: f64,
}

impl TransferCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.below_target && self.w_eta <= self.w_nu + tol && self.per_atom_max <= self.per_atom_bound + tol
    }
}

/// Evaluates the guarantees of [`eta_transfer`].
pub fn check_transfer(eta: &DiscreteMeasure, nu: &DiscreteMeasure, nu_k: &DiscreteMeasure, rho: f64) -> Result<TransferCheck> {
    let r = eta_transfer_map(eta, nu, nu_k)?;
    let eta_k = eta_transfer(eta, nu, nu_k)?;
    let tol = measures::order_tol(&eta_k, nu_k);
    let per_atom_max = eta.atoms().iter().map(|&x| (x - r.eval(x)).abs()).fold(0.0, f64::max);
    Ok(TransferCheck {
        below_target: measures::convex_order_leq(&eta_k, nu_k, tol),
        w_eta: measures::wasserstein(eta, &eta_k, rho)?,
        w_nu: measures::wasserstein(nu, nu_k, rho)?,
        per_atom_max,
        per_atom_bound: measures::wasserstein(nu, nu_k, 1.0)? / eta.min_weight(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Truncation {
    /// `(atom, mass)` of the retained sub-measure, total mass `1 − eps`
    pub sub_measure: Vec<(f64, f64)>,
    pub renormalized: DiscreteMeasure,
    pub removed_low: f64,
    pub removed_high: f64,
}

/// First moment of the lowest `a` mass (or highest, when `from_top`).
fn tail_moment(m: &DiscreteMeasure, a: f64, from_top: bool) -> f64 {
    let mut left = a;
    let mut acc = 0.0;
    let pairs: Vec<(f64, f64)> = m.iter().collect();
    let items: Box<dyn Iterator<Item = &(f64, f64)>> = if from_top { Box::new(pairs.iter().rev()) } else { Box::new(pairs.iter()) };
    for &(x, w) in items {
        if left <= 0.0 {
            break;
        }
        let take = w.min(left);
        acc += take * x;
        left -= take;
    }
    acc
}

fn strip_tails(m: &DiscreteMeasure, low: f64, high: f64) -> Vec<f64> {
    let mut masses = m.weights().to_vec();
    let mut left = low;
    for w in masses.iter_mut() {
        let take = w.min(left);
        *w -= take;
        left -= take;
    }
    let mut left = high;
    for w in masses.iter_mut().rev() {
        let take = w.min(left);
        *w -= take;
        left -= take;
    }
    masses
}

/// Removes mass `eps` from the two tails, split so that the removed part has
/// the same mean as `eta`; the renormalized remainder keeps the mean.
pub fn truncate_mean_preserving(eta: &DiscreteMeasure, eps: f64) -> Result<Truncation> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("truncation mass {eps} outside (0, 1)")));
    }
    if eta.len() == 1 {
        return Ok(Truncation {
            sub_measure: eta.iter().collect(),
            renormalized: eta.clone(),
            removed_low: 0.0,
            removed_high: 0.0,
        });
    }
    let m = eta.mean();
    // decreasing in a: moment of the removed mass minus m·eps
    let g = |a: f64| tail_moment(eta, a, false) + tail_moment(eta, eps - a, true) - m * eps;
    let (mut lo, mut hi) = (0.0, eps);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let low = 0.5 * (lo + hi);
    let high = eps - low;
    let masses = strip_tails(eta, low, high);
    let sub_measure: Vec<(f64, f64)> = eta.atoms().iter().copied().zip(masses).filter(|p| p.1 > 1e-15).collect();
    let total: f64 = sub_measure.iter().map(|p| p.1).sum();
    let renormalized = DiscreteMeasure::from_pairs(sub_measure.iter().map(|&(x, w)| (x, w / total)))?;
    Ok(Truncation { sub_measure, renormalized, removed_low: low, removed_high: high })
}

/// Barycentric binning into `k` equal cells spanning the support, anchored at
/// the smallest atom with the last cell closed.
pub fn finite_support_approx(eta: &DiscreteMeasure, k: usize) -> Result<DiscreteMeasure> {
    if k == 0 {
        return Err(Error::Domain("number of cells must be positive".into()));
    }
    let d = eta.diameter();
    if d == 0.0 {
        return Ok(eta.clone());
    }
    let width = d / k as f64;
    let mut cells = vec![(0.0, 0.0); k];
    for (x, w) in eta.iter() {
        let j = (((x - eta.min()) / width).floor() as usize).min(k - 1);
        cells[j].0 += w;
        cells[j].1 += w * x;
    }
    DiscreteMeasure::from_masses(cells.into_iter().filter(|c| c.0 > 0.0).map(|(w, mom)| (mom / w, w)), 0.0)
}
