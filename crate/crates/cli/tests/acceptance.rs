//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wmr_core::martingale::{
    build_martingale_coupling, compose_with_map, decompose_martingale, find_cheaper_competitor, optimality_certificate,
};
use wmr_core::measures::{self, convex_order_leq, wasserstein};
use wmr_core::random::{contract_into_order, lattice_measure, lipschitz_map, ordered_pair, small_measure, spread};
use wmr_core::reverse::{convex_order_max_map, convex_order_min_with_maps, residual_order_check, reverse_optimizer};
use wmr_core::stability::{check_transfer, run_stability_experiment, LadderGenerator, PerturbationLadder, Side};
use wmr_core::wmr::{
    check_maximality, image_measure, map_decomposition, oracle_solve, solve_weak_transport, verify_admissible,
    verify_slope1_characterization,
};
use wmr_core::{CostSpec, DiscreteMeasure, MonotoneMap};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    ensure(start.elapsed() <= limit, || format!("took {:.1?}, limit {limit:?}", start.elapsed()))
}

fn instance(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> (DiscreteMeasure, DiscreteMeasure) {
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    (lattice_measure(rng, n, -5.0, 0.25, 41), lattice_measure(rng, m, -4.0, 0.25, 33))
}

/// Potential by definition, independent of the library's sweep.
fn u(m: &DiscreteMeasure, y: f64) -> f64 {
    m.iter().map(|(x, w)| w * (x - y).abs()).sum()
}

fn costs() -> [CostSpec; 3] {
    [CostSpec::Quadratic, CostSpec::Quartic, CostSpec::Power { rho: 3.0 }]
}

fn c1_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for k in 0..200 {
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=4);
        let (mu, nu) = (small_measure(&mut rng, n), small_measure(&mut rng, m));
        let cost = costs()[k % 3];
        let sol = solve_weak_transport(&mu, &nu, cost).map_err(|e| e.to_string())?;
        let oracle = oracle_solve(&mu, &nu, cost, 1e-3).map_err(|e| e.to_string())?;
        let gap = (sol.value - oracle.value).abs();
        ensure(gap <= oracle.bound, || format!("instance {k}: |{} - {}| > {}", sol.value, oracle.value, oracle.bound))?;
        worst = worst.max(gap / oracle.bound.max(f64::MIN_POSITIVE));
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!("200 instances, worst gap/bound {worst:.2e}, {:.1?}", start.elapsed()))
}

fn c2_theta_independence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let (mu, nu) = instance(&mut rng, 20, 20);
        let scale = measures::scale(&mu, &nu);
        let sols = costs()
            .iter()
            .map(|&c| solve_weak_transport(&mu, &nu, c))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        for s in &sols[1..] {
            let d = wasserstein(&sols[0].pushforward, &s.pushforward, 1.0).map_err(|e| e.to_string())?;
            ensure(d <= 1e-6 * scale, || format!("instance {k}: W1 {d:e} under {}", s.cost.name()))?;
            // the non-quadratic solve certifies stationarity for its own cost
            ensure(s.kkt_residual <= 1e-8 * scale, || format!("instance {k}: residual {:e}", s.kkt_residual))?;
            worst = worst.max(d / scale);
        }
    }
    within(start, Duration::from_secs(120))?;
    Ok(format!("100 instances, worst W1/scale {worst:.2e}, {:.1?}", start.elapsed()))
}

fn c3_characterization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for k in 0..200 {
        let (mu, nu) = instance(&mut rng, 20, 20);
        let tol = 1e-7 * measures::scale(&mu, &nu);
        let sol = solve_weak_transport(&mu, &nu, costs()[k % 3]).map_err(|e| e.to_string())?;
        ensure(verify_admissible(&sol.map, &mu, &nu, tol).admissible(), || format!("instance {k} inadmissible"))?;
        let r = verify_slope1_characterization(&sol, &mu, &nu, tol);
        ensure(r.passed(), || format!("instance {k}: {:?}", r.violations))?;
    }

    // converse: contract a unit-slope pair inside an irreducible interval
    let mut certified = 0;
    let mut tried = 0;
    while certified < 50 {
        tried += 1;
        ensure(tried < 5000, || format!("only {certified} perturbable instances found"))?;
        let (mu, nu) = instance(&mut rng, 12, 12);
        let cost = [CostSpec::Quadratic, CostSpec::Quartic][tried % 2];
        let sol = solve_weak_transport(&mu, &nu, cost).map_err(|e| e.to_string())?;
        let (xs, p) = (mu.atoms(), mu.weights());
        let ts: Vec<f64> = xs.iter().map(|&x| sol.map.eval(x)).collect();
        let tol = 1e-9 * measures::scale(&mu, &nu);
        let pair = (0..xs.len().saturating_sub(1)).find(|&i| {
            ((ts[i + 1] - ts[i]) - (xs[i + 1] - xs[i])).abs() <= tol
                && sol.irreducibles.iter().any(|iv| iv.contains_strictly(ts[i], tol) && iv.contains_strictly(ts[i + 1], tol))
        });
        let Some(i) = pair else { continue };
        let c = 0.25 * (xs[i + 1] - xs[i]);
        let mut s = ts.clone();
        s[i] += c * p[i + 1] / (p[i] + p[i + 1]);
        s[i + 1] -= c * p[i] / (p[i] + p[i + 1]);
        let map = MonotoneMap::from_values(xs, &s).map_err(|e| e.to_string())?;
        let image = image_measure(&map, &mu).map_err(|e| e.to_string())?;
        let mg = build_martingale_coupling(&image, &nu).map_err(|e| e.to_string())?;
        let pi = compose_with_map(&mu, &map, &mg).map_err(|e| e.to_string())?;
        let w = find_cheaper_competitor(&pi, cost).map_err(|e| e.to_string())?;
        let w = w.ok_or_else(|| format!("no cheaper competitor for perturbed instance {tried}: {mu:?} {nu:?}"))?;
        ensure(w.competitor_cost < w.original_cost, || format!("{w:?}"))?;
        certified += 1;
    }
    Ok(format!("200 solver outputs verified; 50/50 perturbed maps beaten ({tried} instances drawn)"))
}

fn c4_maximality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for k in 0..100 {
        let (mu, nu) = instance(&mut rng, 15, 15);
        let sol = solve_weak_transport(&mu, &nu, CostSpec::Quadratic).map_err(|e| e.to_string())?;
        let s = contract_into_order(&lipschitz_map(&mut rng, mu.atoms()), &mu, &nu);
        let tol = measures::order_tol(&mu, &nu);
        ensure(verify_admissible(&s, &mu, &nu, tol).admissible(), || format!("generator produced inadmissible map {k}"))?;
        let img_s = image_measure(&s, &mu).map_err(|e| e.to_string())?;
        ensure(convex_order_leq(&img_s, &sol.pushforward, tol), || format!("instance {k}: S(mu) not below T(mu)"))?;
        ensure(check_maximality(&s, &sol, &mu, &nu).map_err(|e| e.to_string())?, || format!("instance {k}"))?;
    }
    Ok("100 random admissible maps below the rearrangement".into())
}

fn c5_closed_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for k in 0..100 {
        let (mu, nu) = ordered_pair(&mut rng, 8);
        for cost in costs() {
            let sol = solve_weak_transport(&mu, &nu, cost).map_err(|e| e.to_string())?;
            ensure(sol.map.knots().iter().all(|&(x, t)| x == t), || format!("instance {k}: map is not the identity"))?;
            ensure(sol.value == cost.eval(0.0), || format!("instance {k}: value {}", sol.value))?;
        }
        let x = rng.gen_range(-3.0..3.0);
        let nu = small_measure(&mut rng, 8);
        for cost in costs() {
            let sol = solve_weak_transport(&DiscreteMeasure::dirac(x), &nu, cost).map_err(|e| e.to_string())?;
            let m = nu.mean();
            ensure((sol.map.eval(x) - m).abs() <= 1e-12, || format!("dirac {k}: T(x) = {}", sol.map.eval(x)))?;
            ensure((sol.value - cost.eval(x - m)).abs() <= 1e-12, || format!("dirac {k}: value {}", sol.value))?;
        }
    }
    Ok("identity on 100 ordered pairs and Dirac sources, three costs".into())
}

/// `η ≥_c ν*` with an increasing 1-Lipschitz `S`, `S(η) = ν`: ν* is
/// dilated by slopes in [2, 3] about its mean, then atoms are split within a
/// quarter of the neighbouring gaps; `S` stays on the split clusters.
fn feasible_competitor(
    rng: &mut ChaCha8Rng,
    nu_star: &DiscreteMeasure,
    tilde: &MonotoneMap,
) -> (DiscreteMeasure, Vec<(f64, f64)>) {
    let ys = nu_star.atoms();
    let mut d = vec![0.0];
    for w in ys.windows(2) {
        let last = *d.last().unwrap();
        d.push(last + rng.gen_range(2.0..3.0) * (w[1] - w[0]));
    }
    let shift = nu_star.mean() - nu_star.weights().iter().zip(&d).map(|(w, z)| w * z).sum::<f64>();
    let mut pairs = Vec::new();
    let mut graph = Vec::new();
    for (j, (&y, &w)) in ys.iter().zip(nu_star.weights()).enumerate() {
        let z = d[j] + shift;
        let room = [j.checked_sub(1).map(|i| ys[j] - ys[i]), ys.get(j + 1).map(|n| n - ys[j])]
            .into_iter()
            .flatten()
            .fold(1.0f64, f64::min)
            * 0.25;
        let t = tilde.eval(y);
        if rng.gen_bool(0.5) {
            let (a, b) = (room * rng.gen_range(0.1..1.0), room * rng.gen_range(0.1..1.0));
            pairs.push((z - a, w * b / (a + b)));
            pairs.push((z + b, w * a / (a + b)));
            graph.push((z - a, t));
            graph.push((z + b, t));
        } else {
            pairs.push((z, w));
            graph.push((z, t));
        }
    }
    (DiscreteMeasure::from_pairs(pairs).unwrap(), graph)
}

fn c6_reverse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    for k in 0..100 {
        let (mu, nu) = instance(&mut rng, 10, 10);
        let scale = measures::scale(&mu, &nu);
        let cost = [CostSpec::Quadratic, CostSpec::Quartic][k % 2];
        let r = reverse_optimizer(&mu, &nu, cost).map_err(|e| format!("instance {k}: {e}"))?;
        let reversed: f64 = r.nu_star.iter().map(|(y, w)| w * cost.eval(y - r.tilde_map.eval(y))).sum();
        ensure((reversed - r.forward.value).abs() <= 1e-8 * scale, || format!("instance {k}: {reversed} vs {}", r.forward.value))?;
        for (x, _) in mu.iter() {
            let gap = (r.tilde_map.eval(x) - r.forward.map.eval(x)).abs();
            ensure(gap <= 1e-8 * scale, || format!("instance {k}: maps differ by {gap:e} at {x}"))?;
        }
        for c in 0..50 {
            let (eta, graph) = feasible_competitor(&mut rng, &r.nu_star, &r.tilde_map);
            let tol = measures::order_tol(&eta, &nu);
            let s = MonotoneMap::new(graph).map_err(|e| e.to_string())?;
            ensure(convex_order_leq(&mu, &eta, tol) && s.is_increasing(tol) && s.is_one_lipschitz(tol), || {
                format!("instance {k}: competitor {c} is not feasible")
            })?;
            ensure(image_measure(&s, &eta).map_err(|e| e.to_string())?.approx_eq(&nu, tol), || {
                format!("instance {k}: competitor {c} does not map onto nu")
            })?;
            ensure(convex_order_leq(&r.nu_star, &eta, tol), || format!("instance {k}: nu* not below competitor {c}"))?;
        }
    }
    Ok("100 instances, 5000 competitors".into())
}

fn c7_martingale() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    for k in 0..100 {
        let (eta, nu) = ordered_pair(&mut rng, 10);
        let scale = measures::scale(&eta, &nu);
        let mg = build_martingale_coupling(&eta, &nu).map_err(|e| e.to_string())?;
        let mut rows = vec![0.0; eta.len()];
        let mut cols = vec![0.0; nu.len()];
        let mut first = vec![0.0; eta.len()];
        for &(i, j, m) in mg.entries() {
            rows[i] += m;
            cols[j] += m;
            first[i] += m * nu.atoms()[j];
        }
        for (i, (x, w)) in eta.iter().enumerate() {
            ensure((rows[i] - w).abs() <= 1e-9 && (first[i] / w - x).abs() <= 1e-9 * scale, || {
                format!("pair {k}: row {i} off")
            })?;
        }
        ensure(cols.iter().zip(nu.weights()).all(|(c, w)| (c - w).abs() <= 1e-9), || format!("pair {k}: columns off"))?;
        let dec = decompose_martingale(&mg).map_err(|e| e.to_string())?;
        let back = dec.reconstruct();
        let mut expect = mg.entries().to_vec();
        expect.sort_by_key(|a| (a.0, a.1));
        ensure(back == expect, || format!("pair {k}: decomposition does not reconstruct"))?;
    }
    for k in 0..100 {
        let (mu, nu) = instance(&mut rng, 12, 12);
        let cost = costs()[k % 3];
        let sol = solve_weak_transport(&mu, &nu, cost).map_err(|e| e.to_string())?;
        let mg = build_martingale_coupling(&sol.pushforward, &nu).map_err(|e| e.to_string())?;
        let pi = compose_with_map(&mu, &sol.map, &mg).map_err(|e| e.to_string())?;
        let tol = 1e-7 * measures::scale(&mu, &nu);
        let cert = optimality_certificate(&pi, &mu, &nu, cost, tol).map_err(|e| e.to_string())?;
        ensure(cert.optimal(), || format!("instance {k}: {cert:?}"))?;
    }
    Ok("100 couplings checked and reconstructed; 100 compositions certified".into())
}

fn lower_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in points {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

fn hull_eval(h: &[(f64, f64)], y: f64) -> f64 {
    let k = h.partition_point(|p| p.0 < y).clamp(1, h.len() - 1);
    let (a, b) = (h[k - 1], h[k]);
    a.1 + (b.1 - a.1) * (y - a.0) / (b.0 - a.0)
}

/// Random η with increasing `T`, `T(η) = ν`, built as a dilated split preimage.
fn preimage(rng: &mut ChaCha8Rng, nu: &DiscreteMeasure, mean: f64) -> (DiscreteMeasure, MonotoneMap) {
    let identity = MonotoneMap::identity(nu.atoms()).unwrap();
    let (eta, graph) = feasible_competitor(rng, nu, &identity);
    let shift = mean - eta.mean();
    let graph: Vec<(f64, f64)> = graph.into_iter().map(|(z, t)| (z + shift, t)).collect();
    (eta.shift(shift), MonotoneMap::new(graph).unwrap())
}

fn c8_lemmas() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    for k in 0..200 {
        let (eta1, eta2) = ordered_pair(&mut rng, 8);
        let t1 = lipschitz_map(&mut rng, eta1.atoms());
        let img1 = image_measure(&t1, &eta1).map_err(|e| e.to_string())?;
        let t2 = contract_into_order(&lipschitz_map(&mut rng, eta2.atoms()), &eta2, &img1);
        let ok = residual_order_check(&eta1, &eta2, &t1, &t2).map_err(|e| format!("instance {k}: {e}"))?;
        ensure(ok, || format!("instance {k}: residual order fails"))?;
    }
    for k in 0..100 {
        let mu = small_measure(&mut rng, 10);
        let t = lipschitz_map(&mut rng, mu.atoms());
        let s0 = lipschitz_map(&mut rng, mu.atoms());
        let (mt, ms) = (image_measure(&t, &mu).unwrap().mean(), image_measure(&s0, &mu).unwrap().mean());
        let s = MonotoneMap::new(s0.knots().iter().map(|&(x, v)| (x, v + mt - ms)).collect()).unwrap();
        let r = convex_order_max_map(&t, &s, &mu).map_err(|e| format!("max {k}: {e}\n{mu:?}\n{t:?}\n{s:?}"))?;
        let (et, es, er) = (image_measure(&t, &mu).unwrap(), image_measure(&s, &mu).unwrap(), image_measure(&r, &mu).unwrap());
        let tol = 1e-9 * measures::scale(&et, &es);
        for &y in et.atoms().iter().chain(es.atoms()).chain(er.atoms()) {
            let gap = (u(&er, y) - u(&et, y).max(u(&es, y))).abs();
            ensure(gap <= tol, || format!("max {k}: potential off by {gap:e} at {y}"))?;
        }
    }
    for k in 0..100 {
        let nu = small_measure(&mut rng, 6);
        let (e1, t1) = preimage(&mut rng, &nu, 0.0);
        let (e2, t2) = preimage(&mut rng, &nu, 0.0);
        let (eta, tstar) = convex_order_min_with_maps(&e1, &t1, &e2, &t2).map_err(|e| format!("min {k}: {e}\n{nu:?}\n{e1:?}\n{t1:?}\n{e2:?}\n{t2:?}"))?;
        let mut ys: Vec<f64> = e1.atoms().iter().chain(e2.atoms()).copied().collect();
        ys.sort_by(f64::total_cmp);
        // crossings of the two potentials between consecutive breakpoints
        let mut grid = vec![ys[0] - 1.0];
        for w in ys.windows(2) {
            grid.push(w[0]);
            let (d0, d1) = (u(&e1, w[0]) - u(&e2, w[0]), u(&e1, w[1]) - u(&e2, w[1]));
            if d0 * d1 < 0.0 {
                grid.push(w[0] + (w[1] - w[0]) * d0 / (d0 - d1));
            }
        }
        grid.push(*ys.last().unwrap());
        grid.push(ys.last().unwrap() + 1.0);
        let pts: Vec<(f64, f64)> = grid.iter().map(|&y| (y, u(&e1, y).min(u(&e2, y)))).collect();
        let hull = lower_hull(&pts);
        let tol = 1e-9 * measures::scale(&e1, &e2);
        for &y in ys.iter().chain(eta.atoms()) {
            let gap = (u(&eta, y) - hull_eval(&hull, y)).abs();
            ensure(gap <= tol, || format!("min {k}: potential off by {gap:e} at {y}"))?;
        }
        let pushed = image_measure(&tstar, &eta).unwrap();
        ensure(pushed.approx_eq(&nu, tol), || format!("min {k}: T*(eta) != nu"))?;
        ensure(tstar.is_increasing(tol), || format!("min {k}: T* not increasing"))?;
    }
    Ok("200 residual checks; 100 maxima and 100 minima against direct potentials".into())
}

fn c9_stability() -> Outcome {
    let sym = DiscreteMeasure::from_pairs([(-1.0, 0.5), (1.0, 0.5)]).unwrap();
    let shift = PerturbationLadder {
        mu: DiscreteMeasure::dirac(0.0),
        nu: sym.clone(),
        generator: LadderGenerator::Shift { h: (1..=100).map(|k| 1.0 / k as f64).collect() },
        side: Side::Nu,
        rho: 2.0,
    };
    let report = run_stability_experiment(&shift, CostSpec::Quadratic).map_err(|e| e.to_string())?;
    for r in &report.rungs {
        let h = 1.0 / r.k as f64;
        ensure((r.value_gap - h * h).abs() <= 1e-10 && (r.map_sup_gap - h).abs() <= 1e-10, || {
            format!("shift rung {}: value gap {}, map gap {}", r.k, r.value_gap, r.map_sup_gap)
        })?;
    }

    let mu = DiscreteMeasure::from_pairs([(-2.0, 0.2), (-0.5, 0.3), (1.0, 0.3), (2.5, 0.2)]).unwrap();
    let nu = DiscreteMeasure::from_pairs([(-1.0, 0.5), (0.5, 0.25), (1.5, 0.25)]).unwrap();
    let empirical = PerturbationLadder {
        mu,
        nu,
        generator: LadderGenerator::Empirical { sizes: (1..=12).map(|k| 1usize << k).collect(), seed: 2024 },
        side: Side::Both,
        rho: 2.0,
    };
    let report = run_stability_experiment(&empirical, CostSpec::Quadratic).map_err(|e| e.to_string())?;
    let (g4, g12) = (report.rungs[3].value_gap, report.rungs[11].value_gap);
    ensure(g12 < g4, || format!("empirical value gap {g12:e} at k=12 not below {g4:e} at k=4"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(109);
    for k in 0..100 {
        let (eta, nu) = ordered_pair(&mut rng, 8);
        let h = rng.gen_range(-0.3..0.3);
        let nu_k = spread(&mut rng, &nu.shift(h), 0.05, 0.5);
        for rho in [1.0, 2.0] {
            let c = check_transfer(&eta, &nu, &nu_k, rho).map_err(|e| format!("instance {k}: {e}"))?;
            ensure(c.holds(1e-12), || format!("instance {k}, rho {rho}: {c:?}"))?;
        }
    }
    Ok(format!("shift ladder k<=100 exact; empirical gap {g4:.3e} -> {g12:.3e}; 100 transfers within bounds"))
}

fn run_cli(args: &[&str]) -> Result<std::process::Output, String> {
    Command::new(env!("CARGO_BIN_EXE_wmr")).args(args).output().map_err(|e| e.to_string())
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn c10_cli() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mu = write(dir.path(), "mu.csv", "atom,weight\n-2,0.5\n2,0.5\n");
    let nu = write(dir.path(), "nu.csv", "atom,weight\n-3,0.25\n-1,0.25\n1,0.25\n3,0.25\n");
    let runs: [&[&str]; 4] = [
        &["wmr", &mu, &nu, "--verify"],
        &["reverse", &mu, &nu, "--cost", "quartic"],
        &["stability", &mu, &nu, "--ladder", "empirical", "--side", "both", "--rungs", "6", "--seed", "7"],
        &["plot", &mu, &nu, "--format", "csv"],
    ];
    for args in runs {
        let a = run_cli(args)?;
        let b = run_cli(args)?;
        ensure(a.status.success(), || format!("{args:?}: {}", String::from_utf8_lossy(&a.stderr)))?;
        ensure(a.stdout == b.stdout, || format!("{args:?}: outputs differ between runs"))?;
    }

    let svg = dir.path().join("plot.svg");
    let out = run_cli(&["plot", &mu, &nu, "--out", svg.to_str().unwrap()])?;
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let table = std::fs::read_to_string(svg.with_extension("csv")).map_err(|e| e.to_string())?;
    let svg_text = std::fs::read_to_string(&svg).map_err(|e| e.to_string())?;

    let mu_m = wmr_core::io::read_measure(Path::new(&mu)).unwrap();
    let nu_m = wmr_core::io::read_measure(Path::new(&nu)).unwrap();
    let sol = solve_weak_transport(&mu_m, &nu_m, CostSpec::Quadratic).unwrap();
    let dec = map_decomposition(&sol.map, 1e-7 * measures::scale(&mu_m, &nu_m));
    let mut components = std::collections::BTreeSet::new();
    for line in table.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (x0, x1): (f64, f64) = (f[3].parse().unwrap(), f[5].parse().unwrap());
        let in_slope1 = dec.slope1.iter().any(|r| r.lo <= x0 && x1 <= r.hi);
        let in_contractive = dec.contractive.iter().any(|r| r.lo < x1 && x0 < r.hi);
        match f[1] {
            "martingale" => {
                ensure(in_slope1 || x0 == x1, || format!("martingale segment {x0}..{x1} off the unit-slope part"))?;
                components.insert(f[2].to_string());
            }
            "contractive" => ensure(!in_slope1 || !in_contractive, || format!("ambiguous segment {x0}..{x1}"))?,
            other => return Err(format!("unknown class {other}")),
        }
        if in_contractive {
            ensure(f[1] == "contractive", || format!("contractive part {x0}..{x1} drawn as martingale"))?;
        }
    }
    ensure(components.len() == 2, || format!("expected two martingale regions, found {components:?}"))?;
    ensure(svg_text.matches("class=\"martingale\"").count() == 2, || "svg martingale polylines".into())?;
    Ok("4 commands byte-identical across runs; plot shows two martingale regions matching the decomposition".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle equivalence", c1_oracle),
        ("cost independence of the optimizer", c2_theta_independence),
        ("geometric characterization", c3_characterization),
        ("maximality", c4_maximality),
        ("trivial closed forms", c5_closed_forms),
        ("reverse identity", c6_reverse),
        ("martingale machinery", c7_martingale),
        ("lemma suite", c8_lemmas),
        ("stability", c9_stability),
        ("cli determinism and plot partition", c10_cli),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg}", k + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg}", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
