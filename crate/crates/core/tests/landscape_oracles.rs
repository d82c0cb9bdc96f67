//! Landscape routines against exhaustive evaluations of their definitions.

mod common;

use common::{brute_barrier, brute_elevation_cubic, brute_elevation_quadratic, brute_stable, integer_walk};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sinai_core::env::{sample_brownian, Path};
use sinai_core::landscape::{
    barrier_h, construct_cascade, elevation, elevation_excess, stable_points, update_identity_residuals,
    zeta, zeta_detail,
};

#[test]
fn stable_points_match_definition_on_integer_walks() {
    let mut checked = 0;
    for seed in 0..100u64 {
        let p = integer_walk(400 + (seed as usize * 37) % 1600, seed);
        for h in [1.0, 2.0, 3.0, 5.0] {
            let x_max = p.len() / 2;
            let expect = brute_stable(&p.values, h, x_max);
            // Undecided near the end of a short path leaves nothing to compare.
            if let Ok(dec) = stable_points(&p, h, x_max) {
                assert_eq!(dec.minima, expect, "seed {seed} h {h}");
                checked += 1;
            }
        }
    }
    assert!(checked > 300, "only {checked} decompositions checked");
}

#[test]
fn stable_points_match_definition_on_brownian_paths() {
    for seed in 0..100u64 {
        let len = 1000 + (seed as usize * 41) % 4000;
        let p = sample_brownian(1.0, 0.01, len, seed).unwrap();
        let lnt = 0.5 + (seed % 4) as f64 * 0.25;
        let x_max = len * 3 / 5;
        let expect = brute_stable(&p.values, lnt, x_max);
        if let Ok(dec) = stable_points(&p, lnt, x_max) {
            assert_eq!(dec.minima, expect, "seed {seed}");
            // interleaving
            for i in 0..dec.minima.len() {
                assert!(dec.peaks[i] <= dec.minima[i]);
                if i + 1 < dec.minima.len() {
                    assert!(dec.minima[i] < dec.peaks[i + 1] && dec.peaks[i + 1] < dec.minima[i + 1]);
                }
            }
            // wells partition [0, range_end)
            assert_eq!(dec.wells[0].0, 0);
            for w in dec.wells.windows(2) {
                assert_eq!(w[0].1, w[1].0);
            }
            assert_eq!(dec.wells.last().unwrap().1, dec.range_end);
        }
    }
}

#[test]
fn nesting_of_stable_sets() {
    for seed in 0..100u64 {
        let p = sample_brownian(1.0, 0.01, 20_000, 1000 + seed).unwrap();
        let x_max = 10_000;
        let (Ok(fine), Ok(coarse)) = (stable_points(&p, 1.0, x_max), stable_points(&p, 1.7, x_max))
        else {
            continue;
        };
        assert!(coarse.minima.iter().all(|m| fine.minima.contains(m)), "seed {seed}");
    }
}

#[test]
fn elevation_matches_exhaustive_search() {
    for seed in 0..30u64 {
        let p = integer_walk(40, seed);
        for (a, b) in [(0, 39), (3, 20), (10, 11), (5, 33)] {
            assert_eq!(elevation(&p, a, b).unwrap(), brute_elevation_cubic(&p.values, a, b));
        }
    }
    for seed in 0..100u64 {
        let p = sample_brownian(1.0, 0.01, 5000, 500 + seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rng.random_range(0..4000);
        let b = a + rng.random_range(1..=800);
        let fast = elevation(&p, a, b).unwrap();
        let slow = brute_elevation_quadratic(&p.values, a, b);
        assert!((fast - slow).abs() <= 1e-12, "seed {seed}: {fast} vs {slow}");
        assert!(fast >= 0.0);
    }
}

#[test]
fn barrier_matches_exhaustive_search() {
    let p = Path::from_values(vec![0.0, -2.0, 1.0, -3.0, 0.0]).unwrap();
    let b = barrier_h(&p, 0, 4).unwrap();
    assert_eq!((b.h_plus, b.h_minus), brute_barrier(&p.values, 0, 4));
    assert_eq!(b.h, b.h_plus.min(b.h_minus));
    for seed in 0..100u64 {
        let p = sample_brownian(1.0, 0.01, 5000, 700 + seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rng.random_range(0..4000);
        let b = a + rng.random_range(1..=800);
        let fast = barrier_h(&p, a, b).unwrap();
        let (hp, hm) = brute_barrier(&p.values, a, b);
        assert_eq!((fast.h_plus, fast.h_minus), (hp, hm), "seed {seed}");
        assert_eq!(fast.h, hp.min(hm));
    }
}

#[test]
fn zeta_lower_bound_and_brute_force_points() {
    for seed in 0..100u64 {
        let p = sample_brownian(1.0, 0.01, 60_000, 900 + seed).unwrap();
        for gamma in 2..=3 {
            let Ok(d) = zeta_detail(&p, 2.0, gamma) else { continue };
            assert!(d.zeta >= (gamma * (gamma - 1)) as f64 / 2.0);
            assert!(d.depths.iter().all(|&x| x >= 1.0));
            let brute = brute_stable(&p.values, 2.0, *d.minima.last().unwrap());
            assert_eq!(&brute[..gamma], &d.minima[..]);
        }
    }
}

#[test]
fn zeta_scaling_identity() {
    // W'(x) = lambda W(x / lambda^2) on the grid: values scale by lambda, step by lambda^2.
    for seed in 0..20u64 {
        let p = sample_brownian(1.0, 0.01, 100_000, 40 + seed).unwrap();
        let Ok(base) = zeta(&p, 3.0, 2) else { continue };
        for lambda in [2.0, 0.5, 3.0] {
            let scaled = Path {
                step: p.step * lambda * lambda,
                values: p.values.iter().map(|v| v * lambda).collect(),
                sigma2: p.sigma2,
            };
            let z = zeta(&scaled, 3.0 * lambda, 2).unwrap();
            assert!((z - base).abs() < 1e-12, "lambda {lambda}: {z} vs {base}");
        }
    }
}

#[test]
fn cascade_invariants_on_brownian_paths() {
    let mut runs = 0;
    for seed in 0..100u64 {
        let p = sample_brownian(1.0, 0.01, 200_000, 3000 + seed).unwrap();
        for gamma in [2usize, 3] {
            let lnt = 3.0;
            let Ok(tr) = construct_cascade(&p, lnt, gamma, 0.2) else { continue };
            runs += 1;
            let a = tr.a_sequence();
            assert!(a.windows(2).all(|x| x[0] < x[1]), "seed {seed}: {a:?}");
            assert!(a[tr.n_final - 1] >= 1.0);
            assert!(a[..tr.n_final - 1].iter().all(|&x| x < 1.0));
            let z = zeta(&p, lnt, gamma).unwrap();
            assert!((tr.zeta() - z).abs() <= 1e-12, "seed {seed}");
            // The first gamma-1 points are t-stable; the last one only shares the
            // t-well of the gamma-th t-stable point (no relocation at level N).
            let truth = zeta_detail(&p, lnt, gamma).unwrap().minima;
            let fin = &tr.final_level().points;
            assert_eq!(fin[..gamma - 1], truth[..gamma - 1]);
            assert!(fin[gamma - 1] <= truth[gamma - 1]);
            let between = brute_stable(&p.values, lnt, truth[gamma - 1]);
            assert_eq!(between.len(), gamma, "seed {seed}");
            let excess = elevation_excess(&p, &tr);
            assert!(excess.iter().all(|&e| e <= 1e-9), "seed {seed} gamma {gamma}: {excess:?}");
            let res = update_identity_residuals(&p, &tr);
            assert!(res.iter().all(|&e| e <= 1e-12), "seed {seed} gamma {gamma}: {res:?}");
        }
    }
    assert!(runs >= 150, "{runs}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zeta_translation_invariant(seed in 0u64..10_000, shift in -50i32..50) {
        let p = integer_walk(3000, seed);
        let shifted = Path {
            step: 1.0,
            values: p.values.iter().map(|v| v + shift as f64).collect(),
            sigma2: None,
        };
        prop_assert_eq!(zeta(&p, 4.0, 3).ok(), zeta(&shifted, 4.0, 3).ok());
    }

    #[test]
    fn elevation_nonnegative_and_bounded_by_range(seed in 0u64..10_000, a in 0usize..100, len in 1usize..100) {
        let p = integer_walk(250, seed);
        let e = elevation(&p, a, a + len).unwrap();
        let w = &p.values[a..=a + len];
        let range = w.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - w.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(e >= 0.0 && e <= range);
    }
}
