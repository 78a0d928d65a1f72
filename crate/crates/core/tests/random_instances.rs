use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wmr_core::martingale::{build_martingale_coupling, compose_with_map, decompose_martingale, optimality_certificate};
use wmr_core::measures::{self, DiscreteMeasure};
use wmr_core::random::{contract_into_order, lattice_measure, lipschitz_map, ordered_pair};
use wmr_core::reverse::reverse_optimizer;
use wmr_core::wmr::{check_maximality, solve_weak_transport, verify_slope1_characterization, weak_monotone_rearrangement};
use wmr_core::CostSpec;

fn instance(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> (DiscreteMeasure, DiscreteMeasure) {
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    (lattice_measure(rng, n, -5.0, 0.25, 41), lattice_measure(rng, m, -4.0, 0.25, 33))
}

#[test]
fn solver_outputs_satisfy_characterization() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let (mu, nu) = instance(&mut rng, 20, 20);
        let sol = weak_monotone_rearrangement(&mu, &nu).unwrap();
        let tol = 1e-7 * measures::scale(&mu, &nu);
        let r = verify_slope1_characterization(&sol, &mu, &nu, tol);
        assert!(r.passed(), "{mu:?} {nu:?} {r:?}");
        assert!(sol.kkt_residual <= 1e-8 * measures::scale(&mu, &nu));
    }
}

#[test]
fn costs_share_the_optimizer() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..30 {
        let (mu, nu) = instance(&mut rng, 20, 20);
        let q = weak_monotone_rearrangement(&mu, &nu).unwrap();
        for cost in [CostSpec::Quartic, CostSpec::Power { rho: 3.0 }] {
            let s = solve_weak_transport(&mu, &nu, cost).unwrap();
            let w = measures::wasserstein(&q.pushforward, &s.pushforward, 1.0).unwrap();
            assert!(w <= 1e-6 * measures::scale(&mu, &nu));
        }
    }
}

#[test]
fn solver_map_is_maximal() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let (mu, nu) = instance(&mut rng, 10, 10);
        let sol = weak_monotone_rearrangement(&mu, &nu).unwrap();
        let s = contract_into_order(&lipschitz_map(&mut rng, mu.atoms()), &mu, &nu);
        assert!(check_maximality(&s, &sol, &mu, &nu).unwrap());
    }
}

#[test]
fn martingale_pipeline() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let (eta, nu) = ordered_pair(&mut rng, 8);
        let mg = build_martingale_coupling(&eta, &nu).unwrap();
        let d = decompose_martingale(&mg).unwrap();
        assert_eq!(d.reconstruct(), mg.entries());
    }
    for _ in 0..50 {
        let (mu, nu) = instance(&mut rng, 8, 8);
        let sol = weak_monotone_rearrangement(&mu, &nu).unwrap();
        let mg = build_martingale_coupling(&sol.pushforward, &nu).unwrap();
        let pi = compose_with_map(&mu, &sol.map, &mg).unwrap();
        let tol = 1e-8 * measures::scale(&mu, &nu);
        let cert = optimality_certificate(&pi, &mu, &nu, CostSpec::Quadratic, tol).unwrap();
        assert!(cert.optimal(), "{cert:?}");
        assert!((cert.coupling_cost - sol.value).abs() <= 1e-9 * measures::scale(&mu, &nu));
    }
}

#[test]
fn reverse_problem_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let (mu, nu) = instance(&mut rng, 12, 12);
        for cost in [CostSpec::Quadratic, CostSpec::Quartic] {
            if let Err(e) = reverse_optimizer(&mu, &nu, cost) {
                panic!("{mu:?}\n{nu:?}\n{e}");
            }
        }
    }
}
