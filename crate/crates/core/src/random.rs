//! Random instance generators for property tests and experiments.
//!
//! Atoms sit on a lattice and weights are normalized small integers, so
//! generated instances have exactly representable structure and frequent
//! ties, which is where convex-order code tends to break.

use rand::seq::index::sample;
use rand::Rng;

use crate::measures::{self, DiscreteMeasure};
use crate::wmr::MonotoneMap;

/// Measure with `n` distinct atoms `lo + k·step` and weights proportional to
/// integers in `1..=9`.
pub fn lattice_measure<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, step: f64, slots: usize) -> DiscreteMeasure {
    assert!(n >= 1 && n <= slots, "need 1 <= n <= slots");
    let mut idx: Vec<usize> = sample(rng, slots, n).into_vec();
    idx.sort_unstable();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=9) as f64).collect();
    let total: f64 = raw.iter().sum();
    DiscreteMeasure::new(idx.iter().map(|&k| lo + k as f64 * step).collect(), raw.iter().map(|w| w / total).collect())
        .expect("lattice measure is valid")
}

/// Measure with up to `n` atoms on the quarter lattice in `[-2, 2]`.
pub fn small_measure<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DiscreteMeasure {
    lattice_measure(rng, n.min(17), -2.0, 0.25, 17)
}

/// Mean-preserving spread: every atom is split with probability `p_split`
/// into two lattice points around it.
pub fn spread<R: Rng + ?Sized>(rng: &mut R, eta: &DiscreteMeasure, step: f64, p_split: f64) -> DiscreteMeasure {
    let mut pairs = Vec::new();
    for (x, w) in eta.iter() {
        if rng.gen_bool(p_split) {
            let a = step * rng.gen_range(1..=4) as f64;
            let b = step * rng.gen_range(1..=4) as f64;
            pairs.push((x - a, w * b / (a + b)));
            pairs.push((x + b, w * a / (a + b)));
        } else {
            pairs.push((x, w));
        }
    }
    DiscreteMeasure::from_pairs(pairs).expect("spread of a valid measure is valid")
}

/// Pair `η ≤_c ν` with `η` on at most `n` atoms.
pub fn ordered_pair<R: Rng + ?Sized>(rng: &mut R, n: usize) -> (DiscreteMeasure, DiscreteMeasure) {
    let eta = small_measure(rng, n);
    let nu = spread(rng, &eta, 0.25, 0.7);
    (eta, nu)
}

/// Increasing 1-Lipschitz map on the given atoms with random slopes in `[0, 1]`.
pub fn lipschitz_map<R: Rng + ?Sized>(rng: &mut R, atoms: &[f64]) -> MonotoneMap {
    let mut t = rng.gen_range(-1.0..1.0);
    let mut knots = vec![(atoms[0], t)];
    for w in atoms.windows(2) {
        let slope = match rng.gen_range(0..4) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen_range(0.0..1.0),
        };
        t += slope * (w[1] - w[0]);
        knots.push((w[1], t));
    }
    MonotoneMap::new(knots).expect("valid knots")
}

/// Recenters `map` on the mean of `nu` and contracts it toward that mean just
/// enough that the image of `mu` is below `nu`; the result is admissible.
///
/// The order test here uses `1e-12 · scale`, well inside the default
/// tolerance, so downstream checks at `1e-9 · scale` have room to spare.
pub fn contract_into_order(map: &MonotoneMap, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> MonotoneMap {
    let m = nu.mean();
    let image_mean: f64 = mu.iter().map(|(x, w)| w * map.eval(x)).sum();
    let centred: Vec<f64> = mu.atoms().iter().map(|&x| map.eval(x) - image_mean).collect();
    let tol = 1e-12 * measures::scale(mu, nu);
    let build = |lambda: f64| {
        MonotoneMap::from_values(mu.atoms(), &centred.iter().map(|c| m + lambda * c).collect::<Vec<_>>())
            .expect("valid knots")
    };
    let fits = |s: &MonotoneMap| {
        let img = mu.pushforward(|x| s.eval(x), 0.0).expect("valid image");
        measures::convex_order_leq(&img, nu, tol)
    };
    let full = build(1.0);
    if fits(&full) {
        return full;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if fits(&build(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    build(lo)
}
