mod support;

use opinet::opinion::weighted_circular_update;
use opinet::{DynGraph, Error, KatzParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::*;

#[test]
fn katz_matches_neumann_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = KatzParams::default();
    for case in 0..50 {
        let n = rng.random_range(2..=10);
        let density = rng.random_range(0.05..0.8);
        let g = random_graph(&mut rng, n, density);
        let got = g.katz_self_weights(&p).unwrap();
        let want = katz_neumann(&g, &p, 200);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-6, "case {case}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn spectral_radius_matches_gelfand() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let n = rng.random_range(1..=12);
        let density = rng.random_range(0.0..0.6);
        let g = random_graph(&mut rng, n, density);
        let want = gelfand_radius(&dense_adjacency(&g));
        let got = g.spectral_radius().unwrap();
        assert!((got - want).abs() <= 1e-8 * want.max(1.0), "{got} vs {want}");
    }
}

#[test]
fn cycle_radius_is_one() {
    let g = DynGraph::from_edges(5, (0..5).map(|k| (k, (k + 1) % 5, 0.5))).unwrap();
    assert!((g.spectral_radius().unwrap() - 1.0).abs() < 1e-9);
    assert!((gelfand_radius(&dense_adjacency(&g)) - 1.0).abs() < 1e-9);
}

#[test]
fn trust_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut compared = 0;
    for _ in 0..200 {
        let n = rng.random_range(3..=8);
        let density = rng.random_range(0.1..0.9);
        let g = random_graph(&mut rng, n, density);
        for j in 0..n {
            for i in 0..n {
                if i == j {
                    continue;
                }
                match (g.nondirect_trust_score(j, i), brute_force_trust(&g, j, i)) {
                    (Ok(a), Some(b)) => {
                        assert!((a - b).abs() <= 1e-12, "{j}->{i}: {a} vs {b}");
                        compared += 1;
                    }
                    (Err(Error::NoPath { .. }), None) => {}
                    (a, b) => panic!("{j}->{i}: {a:?} vs {b:?}"),
                }
            }
        }
    }
    assert!(compared > 1000);
}

#[test]
fn circular_update_matches_direct_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..1000 {
        let k = rng.random_range(1..=12);
        let pairs: Vec<(f64, f64)> = (0..k)
            .map(|_| (rng.random_range(0.001..1.0), rng.random_range(0.0..std::f64::consts::PI)))
            .collect();
        let got = weighted_circular_update(pairs.iter().copied()).unwrap();
        let want = circular_mean_direct(&pairs);
        assert!((got - want).abs() <= 1e-12, "{pairs:?}: {got} vs {want}");
    }
}

proptest! {
    #[test]
    fn trust_oracle_agreement(seed in any::<u64>(), n in 3usize..=8, density in 0.1f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, n, density);
        for j in 0..n {
            for i in (0..n).filter(|&i| i != j) {
                let a = g.nondirect_trust_score(j, i).ok();
                let b = brute_force_trust(&g, j, i);
                prop_assert_eq!(a.is_some(), b.is_some());
                if let (Some(a), Some(b)) = (a, b) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn katz_weights_in_clamp_range(seed in any::<u64>(), n in 1usize..=10, density in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, n, density);
        let p = KatzParams::default();
        let w = g.katz_self_weights(&p).unwrap();
        prop_assert!(w.iter().all(|&x| (p.clamp_min..=p.clamp_max).contains(&x)));
        let want = katz_neumann(&g, &p, 200);
        for (a, b) in w.iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-6);
        }
    }
}
