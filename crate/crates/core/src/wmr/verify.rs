use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{self, DiscreteMeasure, Interval, MERGE_RTOL};

use super::{MonotoneMap, WeakSolution};

/// Outcome of the three admissibility checks.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub increasing: bool,
    pub one_lipschitz: bool,
    pub below_target: bool,
    /// largest `T(x_i) − T(x_{i+1})` over consecutive atoms
    pub worst_decrease: f64,
    /// largest `(T(x_{i+1}) − T(x_i)) − (x_{i+1} − x_i)`
    pub worst_lipschitz_excess: f64,
    pub mean_gap: f64,
    /// largest `u_{T(μ)} − u_ν` over atoms of `ν`
    pub potential_gap: f64,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.increasing && self.one_lipschitz && self.below_target
    }
}

/// Images of the atoms of `mu` under `map`, as a merged measure.
pub fn image_measure(map: &MonotoneMap, mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    let tol = MERGE_RTOL * measures::scale_of(mu).max(map.values().iter().fold(0.0f64, |m, t| m.max(t.abs())));
    mu.pushforward(|x| map.eval(x), tol)
}

pub fn verify_admissible(map: &MonotoneMap, mu: &DiscreteMeasure, nu: &DiscreteMeasure, tol: f64) -> AdmissibilityReport {
    let xs = mu.atoms();
    let ts: Vec<f64> = xs.iter().map(|&x| map.eval(x)).collect();
    let mut worst_decrease = f64::NEG_INFINITY;
    let mut worst_lipschitz_excess = f64::NEG_INFINITY;
    for i in 1..xs.len() {
        worst_decrease = worst_decrease.max(ts[i - 1] - ts[i]);
        worst_lipschitz_excess = worst_lipschitz_excess.max((ts[i] - ts[i - 1]) - (xs[i] - xs[i - 1]));
    }
    let image = image_measure(map, mu).expect("images of a valid measure form a valid measure");
    let mean_gap = image.mean() - nu.mean();
    let potential_gap = measures::order_violation(&image, nu).0;
    AdmissibilityReport {
        increasing: worst_decrease <= tol,
        one_lipschitz: worst_lipschitz_excess <= tol,
        below_target: mean_gap.abs() <= tol && potential_gap <= tol,
        worst_decrease: worst_decrease.max(0.0),
        worst_lipschitz_excess: worst_lipschitz_excess.max(0.0),
        mean_gap,
        potential_gap,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeViolation {
    pub left_atom: f64,
    pub right_atom: f64,
    /// `(t_{i+1} − t_i) − (x_{i+1} − x_i)`
    pub defect: f64,
    pub interval: Interval,
}

#[derive(Debug, Clone, Serialize)]
pub struct Slope1Report {
    pub admissibility: AdmissibilityReport,
    pub irreducibles: Vec<Interval>,
    pub checked_pairs: usize,
    pub violations: Vec<SlopeViolation>,
}

impl Slope1Report {
    pub fn passed(&self) -> bool {
        self.admissibility.admissible() && self.violations.is_empty()
    }
}

/// Admissibility plus unit slope between consecutive atoms whose images lie
/// in a common irreducible interval of `(T(μ), ν)`.
pub fn verify_slope1_characterization(
    sol: &WeakSolution,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    tol: f64,
) -> Slope1Report {
    let map = &sol.map;
    let admissibility = verify_admissible(map, mu, nu, tol);
    let image = image_measure(map, mu).expect("valid image");
    let irreducibles = if admissibility.below_target {
        measures::irreducible_components(&image, nu, tol).unwrap_or_default()
    } else {
        Vec::new()
    };
    let xs = mu.atoms();
    let ts: Vec<f64> = xs.iter().map(|&x| map.eval(x)).collect();
    let mut checked_pairs = 0;
    let mut violations = Vec::new();
    for i in 1..xs.len() {
        let Some(interval) = irreducibles
            .iter()
            .find(|iv| iv.contains_strictly(ts[i - 1], tol) && iv.contains_strictly(ts[i], tol))
        else {
            continue;
        };
        checked_pairs += 1;
        let defect = (ts[i] - ts[i - 1]) - (xs[i] - xs[i - 1]);
        if defect.abs() > tol {
            violations.push(SlopeViolation { left_atom: xs[i - 1], right_atom: xs[i], defect, interval: *interval });
        }
    }
    Slope1Report { admissibility, irreducibles, checked_pairs, violations }
}

/// `S(μ) ≤_c T(μ)` for an admissible candidate `S`.
pub fn check_maximality(
    candidate: &MonotoneMap,
    sol: &WeakSolution,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<bool> {
    let tol = measures::order_tol(mu, nu);
    let report = verify_admissible(candidate, mu, nu, tol);
    if !report.admissible() {
        return Err(Error::Precondition(format!(
            "candidate map is not admissible (decrease {:e}, Lipschitz excess {:e}, mean gap {:e}, potential gap {:e})",
            report.worst_decrease, report.worst_lipschitz_excess, report.mean_gap, report.potential_gap
        )));
    }
    let image = image_measure(candidate, mu)?;
    Ok(measures::convex_order_leq(&image, &sol.pushforward, tol))
}

/// Closed knot range `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KnotRange {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MapDecomposition {
    /// maximal runs of consecutive unit-slope segments
    pub slope1: Vec<KnotRange>,
    /// segments with slope below one
    pub contractive: Vec<KnotRange>,
}

pub fn map_decomposition(map: &MonotoneMap, tol: f64) -> MapDecomposition {
    let mut slope1: Vec<KnotRange> = Vec::new();
    let mut contractive = Vec::new();
    for w in map.knots().windows(2) {
        let ((x0, t0), (x1, t1)) = (w[0], w[1]);
        if ((t1 - t0) - (x1 - x0)).abs() <= tol {
            match slope1.last_mut() {
                Some(r) if r.hi == x0 => r.hi = x1,
                _ => slope1.push(KnotRange { lo: x0, hi: x1 }),
            }
        } else {
            contractive.push(KnotRange { lo: x0, hi: x1 });
        }
    }
    MapDecomposition { slope1, contractive }
}

/// Strictly increasing perturbation of an increasing 1-Lipschitz map.
///
/// The `k`-th maximal flat run, of length `λ_k`, receives slope
/// `min(ε / (λ_k 2^k), 1)`, integrated from the left; all other segments keep
/// their slope, so the sup distance stays below `ε` and unit-slope runs are
/// unchanged.
pub fn smooth_strictify(map: &MonotoneMap, eps: f64) -> Result<MonotoneMap> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("smoothing parameter {eps} must be positive")));
    }
    let k = map.knots();
    let mut out = Vec::with_capacity(k.len());
    out.push(k[0]);
    let mut lift = 0.0;
    let mut run = 0;
    let mut i = 0;
    while i + 1 < k.len() {
        if k[i + 1].1 == k[i].1 {
            let start = i;
            while i + 1 < k.len() && k[i + 1].1 == k[start].1 {
                i += 1;
            }
            run += 1;
            let length = k[i].0 - k[start].0;
            let slope = (eps / (length * 2f64.powi(run))).min(1.0);
            for j in start + 1..=i {
                out.push((k[j].0, k[j].1 + lift + slope * (k[j].0 - k[start].0)));
            }
            lift += slope * length;
        } else {
            i += 1;
            out.push((k[i].0, k[i].1 + lift));
        }
    }
    MonotoneMap::new(out)
}
