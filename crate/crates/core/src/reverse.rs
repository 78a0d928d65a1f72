//! The reverse problem, where `μ` is relaxed upward to the smallest `ν* ≥_c μ`
//! that an admissible map carries onto `ν`, and the convex-order algebra of
//! increasing maps behind it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{self, DiscreteMeasure, Interval, MERGE_RTOL};
use crate::wmr::{self, CostSpec, MonotoneMap, WeakSolution};

#[derive(Debug, Clone, Serialize)]
pub struct ReverseSolution {
    pub nu_star: DiscreteMeasure,
    pub tilde_map: MonotoneMap,
    pub irreducibles_mu_nustar: Vec<Interval>,
    /// `Σ ν*(z) θ(z − T̃(z))`
    pub value: f64,
    /// displacement `x − T(x)` on each irreducible interval of `(T(μ), ν)`
    pub shifts: Vec<(Interval, f64)>,
    pub forward: WeakSolution,
}

fn potential_dump(a: &DiscreteMeasure, b: &DiscreteMeasure) -> String {
    let (ua, ub) = (a.potential(), b.potential());
    measures::merge_atoms(a, b)
        .iter()
        .map(|&z| format!("{z}: {} vs {}", ua.eval(z), ub.eval(z)))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Builds `ν*` and `T̃` from the weak monotone rearrangement `T` of `(μ, ν)`.
///
/// On each irreducible interval `I` of `(T(μ), ν)` the part of `ν` reached
/// from `T(μ)|_I` is shifted by the constant displacement `c_I`; atoms of
/// `μ` whose image lies on the fixed set are kept. The result is checked
/// against every defining property before it is returned.
pub fn reverse_optimizer(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: CostSpec) -> Result<ReverseSolution> {
    let forward = wmr::solve_weak_transport(mu, nu, cost)?;
    let scale = measures::scale(mu, nu);
    let tol = measures::order_tol(mu, nu);
    let merge = MERGE_RTOL * scale;
    let xs = mu.atoms();
    let ts: Vec<f64> = xs.iter().map(|&x| forward.map.eval(x)).collect();

    // (position, weight, image under T̃)
    let mut pieces: Vec<(f64, f64, f64)> = Vec::new();
    let mut in_block = vec![false; xs.len()];
    let mut shifts = Vec::new();
    for iv in &forward.irreducibles {
        let block: Vec<usize> = (0..xs.len()).filter(|&i| iv.contains_strictly(ts[i], tol)).collect();
        let mass: f64 = block.iter().map(|&i| mu.weights()[i]).sum();
        if block.is_empty() {
            return Err(Error::Consistency(format!(
                "irreducible interval ({}, {}) receives no mass from T(mu)",
                iv.lo, iv.hi
            )));
        }
        let moment: f64 = block.iter().map(|&i| mu.weights()[i] * ts[i]).sum();
        let c = block.iter().map(|&i| mu.weights()[i] * (xs[i] - ts[i])).sum::<f64>() / mass;
        for &i in &block {
            in_block[i] = true;
        }
        let inner: Vec<(f64, f64)> = nu.iter().filter(|&(y, _)| iv.contains_strictly(y, tol)).collect();
        let inner_mass: f64 = inner.iter().map(|p| p.1).sum();
        let inner_moment: f64 = inner.iter().map(|p| p.0 * p.1).sum();
        // endpoint masses from the mass and first-moment balance
        let rest = mass - inner_mass;
        let hi_mass = ((moment - inner_moment) - rest * iv.lo) / iv.length();
        let lo_mass = rest - hi_mass;
        for (y, w) in [(iv.lo, lo_mass), (iv.hi, hi_mass)] {
            if w < -tol {
                return Err(Error::Consistency(format!(
                    "negative endpoint mass {w:e} at {y}; potentials {}",
                    potential_dump(&forward.pushforward, nu)
                )));
            }
            if w > 0.0 {
                pieces.push((y + c, w, y));
            }
        }
        pieces.extend(inner.into_iter().map(|(y, w)| (y + c, w, y)));
        shifts.push((*iv, c));
    }
    for i in (0..xs.len()).filter(|&i| !in_block[i]) {
        pieces.push((xs[i], mu.weights()[i], ts[i]));
    }

    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64, f64)> = Vec::with_capacity(pieces.len());
    for (z, w, img) in pieces {
        match merged.last_mut() {
            Some(last) if z - last.0 <= merge => {
                if (last.2 - img).abs() > tol {
                    return Err(Error::Consistency(format!(
                        "nu* atom {z} has conflicting images {} and {img}",
                        last.2
                    )));
                }
                let total = last.1 + w;
                last.0 = (last.0 * last.1 + z * w) / total;
                last.2 = (last.2 * last.1 + img * w) / total;
                last.1 = total;
            }
            _ => merged.push((z, w, img)),
        }
    }
    merged.retain(|p| p.1 > 0.0);
    let nu_star = DiscreteMeasure::from_pairs(merged.iter().map(|p| (p.0, p.1)))?;
    let tilde_map = MonotoneMap::from_values(nu_star.atoms(), &merged.iter().map(|p| p.2).collect::<Vec<_>>())?;
    let value: f64 = merged.iter().map(|&(z, w, img)| w * cost.eval(z - img)).sum();

    let fail = |what: &str| {
        Error::Consistency(format!(
            "reverse solution failed check: {what}; potentials of (mu, nu*) {}",
            potential_dump(mu, &nu_star)
        ))
    };
    if !measures::convex_order_leq(mu, &nu_star, tol) {
        return Err(fail("mu <=_c nu*"));
    }
    let image = nu_star.pushforward(|z| tilde_map.eval(z), merge)?;
    if !image.approx_eq(nu, tol) {
        return Err(fail("T~(nu*) = nu"));
    }
    if (value - forward.value).abs() > tol.max(1e-12 * forward.value.abs()) {
        return Err(fail("value identity"));
    }
    if !tilde_map.is_increasing(tol) || !tilde_map.is_one_lipschitz(tol) {
        return Err(fail("T~ increasing and 1-Lipschitz"));
    }
    let irreducibles_mu_nustar = measures::irreducible_components(mu, &nu_star, tol)?;
    for w in tilde_map.knots().windows(2) {
        let ((z0, s0), (z1, s1)) = (w[0], w[1]);
        let inside = irreducibles_mu_nustar.iter().any(|iv| iv.contains_closed(z0, tol) && iv.contains_closed(z1, tol));
        if inside && ((s1 - s0) - (z1 - z0)).abs() > tol {
            return Err(fail("slope 1 of T~ on irreducible intervals of (mu, nu*)"));
        }
    }
    if xs.iter().zip(&ts).any(|(&x, &t)| (tilde_map.eval(x) - t).abs() > tol) {
        return Err(fail("T~ = T on supp(mu)"));
    }
    Ok(ReverseSolution { nu_star, tilde_map, irreducibles_mu_nustar, value, shifts, forward })
}

/// Slope jumps below this mass are rounding residue of the potential
/// arithmetic, not atoms.
const DUST: f64 = 1e-12;

/// Block averages of the quantile function of `target` over the cumulative
/// weight blocks of `base`, as a map on the atoms of `base`.
fn quantile_block_map(base: &DiscreteMeasure, target: &DiscreteMeasure) -> Result<MonotoneMap> {
    let g = target.quantile_integral();
    let mut prev = 0.0;
    let mut values = Vec::with_capacity(base.len());
    for (s, w) in base.cumulative().into_iter().zip(base.weights()) {
        values.push((g.eval(s) - g.eval(prev)) / w);
        prev = s;
    }
    MonotoneMap::from_values(base.atoms(), &values)
}

fn check_increasing(map: &MonotoneMap, m: &DiscreteMeasure, tol: f64, name: &str) -> Result<()> {
    let vals: Vec<f64> = m.atoms().iter().map(|&x| map.eval(x)).collect();
    if vals.windows(2).any(|w| w[0] > w[1] + tol) {
        return Err(Error::Precondition(format!("{name} is not increasing on the atoms")));
    }
    Ok(())
}

/// Increasing map `R` with `R(μ) = T(μ) ∨ S(μ)` in convex order.
pub fn convex_order_max_map(t: &MonotoneMap, s: &MonotoneMap, mu: &DiscreteMeasure) -> Result<MonotoneMap> {
    let eta_t = wmr::image_measure(t, mu)?;
    let eta_s = wmr::image_measure(s, mu)?;
    let tol = measures::order_tol(&eta_t, &eta_s).max(measures::order_tol(mu, mu));
    if (eta_t.mean() - eta_s.mean()).abs() > tol {
        return Err(Error::Precondition(format!(
            "maps have different means {} and {}",
            eta_t.mean(),
            eta_s.mean()
        )));
    }
    check_increasing(t, mu, tol, "T")?;
    check_increasing(s, mu, tol, "S")?;
    let upper = eta_t.potential().max(&eta_s.potential());
    let eta_max = DiscreteMeasure::from_potential(&upper, DUST)?;
    let r = quantile_block_map(mu, &eta_max)?;
    let image = wmr::image_measure(&r, mu)?;
    if !measures::convex_order_leq(&image, &eta_max, tol) || !measures::convex_order_leq(&eta_max, &image, tol) {
        return Err(Error::Consistency("maximum in convex order is not an image of mu under an increasing map".into()));
    }
    Ok(r)
}

/// Convex-order minimum `η` of `η₁, η₂` with an increasing `T*`, `T*(η) = ν`.
pub fn convex_order_min_with_maps(
    eta1: &DiscreteMeasure,
    t1: &MonotoneMap,
    eta2: &DiscreteMeasure,
    t2: &MonotoneMap,
) -> Result<(DiscreteMeasure, MonotoneMap)> {
    let nu = wmr::image_measure(t1, eta1)?;
    let nu2 = wmr::image_measure(t2, eta2)?;
    let tol = measures::order_tol(eta1, eta2).max(measures::order_tol(&nu, &nu2));
    if !nu.approx_eq(&nu2, tol) {
        return Err(Error::Precondition("the two maps push to different measures".into()));
    }
    if (eta1.mean() - eta2.mean()).abs() > tol {
        return Err(Error::Precondition(format!(
            "measures have different means {} and {}",
            eta1.mean(),
            eta2.mean()
        )));
    }
    let lower = eta1.potential().lower_convex_envelope_of_min(&eta2.potential());
    let eta = DiscreteMeasure::from_potential(&lower, DUST)?;
    let tstar = quantile_block_map(&eta, &nu)?;
    let image = wmr::image_measure(&tstar, &eta)?;
    if !image.approx_eq(&nu, tol) {
        return Err(Error::Consistency(format!("T* pushes the minimum onto {image:?} instead of {nu:?}")));
    }
    Ok((eta, tstar))
}

/// `(id − T₁)(η₁) ≤_c (id − T₂)(η₂)` under `η₁ ≤_c η₂` and
/// `T₂(η₂) ≤_c T₁(η₁)` with both maps increasing and 1-Lipschitz.
pub fn residual_order_check(
    eta1: &DiscreteMeasure,
    eta2: &DiscreteMeasure,
    t1: &MonotoneMap,
    t2: &MonotoneMap,
) -> Result<bool> {
    let tol = measures::order_tol(eta1, eta2);
    if !measures::convex_order_leq(eta1, eta2, tol) {
        return Err(Error::Precondition("eta1 is not below eta2 in convex order".into()));
    }
    let img1 = wmr::image_measure(t1, eta1)?;
    let img2 = wmr::image_measure(t2, eta2)?;
    if !measures::convex_order_leq(&img2, &img1, tol) {
        return Err(Error::Precondition("T2(eta2) is not below T1(eta1) in convex order".into()));
    }
    for (map, m, name) in [(t1, eta1, "T1"), (t2, eta2, "T2")] {
        let on_atoms = MonotoneMap::from_fn(m.atoms(), |x| map.eval(x))?;
        if !on_atoms.is_increasing(tol) || !on_atoms.is_one_lipschitz(tol) {
            return Err(Error::Precondition(format!("{name} is not increasing and 1-Lipschitz")));
        }
    }
    let merge = MERGE_RTOL * measures::scale(eta1, eta2);
    let r1 = eta1.pushforward(|x| x - t1.eval(x), merge)?;
    let r2 = eta2.pushforward(|x| x - t2.eval(x), merge)?;
    Ok(measures::convex_order_leq(&r1, &r2, tol))
}
