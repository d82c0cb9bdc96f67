mod common;

use common::simpson;
use sinai_core::lawcheck::{
    cdf_f, density_f, ks_statistic, ks_two_sample, sample_zeta_limit, sample_zeta_limit_many, ZetaLaw,
};

#[test]
fn density_integrates_to_one() {
    for gamma in 2..=6 {
        let f = |x: f64| density_f(gamma, x).unwrap();
        // The slowest exponential has mean gamma - 1; beyond 80 means the tail is below e^-80.
        let upper = 80.0 * (gamma - 1) as f64;
        let total = simpson(&f, 0.0, upper, 1e-12);
        assert!((total - 1.0).abs() < 1e-8, "gamma {gamma}: {total}");
    }
}

#[test]
fn cdf_matches_integrated_density() {
    for gamma in 2..=6 {
        let f = |x: f64| density_f(gamma, x).unwrap();
        for x in [0.3, 1.0, 2.5, 7.0, 15.0] {
            let q = simpson(&f, 0.0, x, 1e-13);
            assert!((cdf_f(gamma, x).unwrap() - q).abs() < 1e-9, "gamma {gamma} x {x}");
            let h = 1e-5;
            let deriv = (cdf_f(gamma, x + h).unwrap() - cdf_f(gamma, x - h).unwrap()) / (2.0 * h);
            assert!((deriv - f(x)).abs() < 1e-6, "gamma {gamma} x {x}");
        }
    }
}

#[test]
fn density_at_origin() {
    // The sum of gamma - 1 exponentials has density ~ x^(gamma-2) near zero.
    assert_eq!(density_f(2, 0.0).unwrap(), 1.0);
    for gamma in 3..=8 {
        assert!(density_f(gamma, 0.0).unwrap().abs() < 1e-9, "gamma {gamma}");
    }
}

#[test]
fn sampler_moments() {
    let n = 200_000;
    for gamma in [2, 3, 5] {
        let law = ZetaLaw::new(gamma).unwrap();
        let xs = sample_zeta_limit_many(gamma, n, 11).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se_mean = (law.excess_variance() / n as f64).sqrt();
        assert!((mean - law.excess_mean()).abs() < 4.0 * se_mean, "gamma {gamma}: mean {mean}");
        assert!((var / law.excess_variance() - 1.0).abs() < 0.03, "gamma {gamma}: var {var}");
    }
}

#[test]
fn sampler_is_deterministic_per_seed() {
    assert_eq!(sample_zeta_limit(4, 9).unwrap(), sample_zeta_limit(4, 9).unwrap());
    assert_ne!(sample_zeta_limit(4, 9).unwrap(), sample_zeta_limit(4, 10).unwrap());
    assert!(sample_zeta_limit(1, 0).is_err());
}

#[test]
fn ks_accepts_true_law_and_rejects_shifted() {
    for gamma in [2, 3, 4] {
        let xs = sample_zeta_limit_many(gamma, 10_000, 3).unwrap();
        let ok = ks_statistic(&xs, |x| cdf_f(gamma, x.max(0.0)).unwrap()).unwrap();
        assert!(ok.passed, "gamma {gamma}: p {}", ok.p_value);
        let shifted: Vec<f64> = xs.iter().map(|x| x * 1.1).collect();
        let bad = ks_statistic(&shifted, |x| cdf_f(gamma, x.max(0.0)).unwrap()).unwrap();
        assert!(!bad.passed, "gamma {gamma}: p {}", bad.p_value);
    }
}

#[test]
fn two_sample_ks() {
    let a = sample_zeta_limit_many(3, 5_000, 1).unwrap();
    let b = sample_zeta_limit_many(3, 4_000, 2).unwrap();
    let r = ks_two_sample(&a, &b, 0.01).unwrap();
    assert!(r.passed, "p {}", r.p_value);
    assert_eq!(r.n, 2222);
    let c = sample_zeta_limit_many(4, 4_000, 2).unwrap();
    assert!(!ks_two_sample(&a, &c, 0.01).unwrap().passed);
    assert!(ks_two_sample(&a[..9], &b, 0.01).is_err());
}

#[test]
fn uniform_p_values_under_null() {
    // Under the null the p-value is roughly uniform: about 10% fall below 0.1.
    let reps = 400;
    let below = (0..reps)
        .filter(|&r| {
            let xs = sample_zeta_limit_many(2, 200, 1000 + r).unwrap();
            ks_statistic(&xs, |x| cdf_f(2, x.max(0.0)).unwrap()).unwrap().p_value < 0.1
        })
        .count();
    let frac = below as f64 / reps as f64;
    assert!((frac - 0.1).abs() < 0.05, "fraction {frac}");
}

#[test]
fn brownian_zeta_is_independent_of_growth_and_bounded_below() {
    use sinai_core::env::sample_brownian;
    use sinai_core::landscape::zeta;
    use sinai_core::lawcheck::{brownian_zeta, brownian_zeta_samples, BrownianSampling};

    let sampling = BrownianSampling { sigma2: 1.0, step: 0.01, max_len: 1 << 22 };
    let z = brownian_zeta(3, &[2.0, 3.0], &sampling, 17).unwrap();
    // A generous fixed-length path with the same seed gives the same values.
    let long = sample_brownian(1.0, 0.01, 1 << 22, 17).unwrap();
    assert_eq!(z[0], zeta(&long, 2.0, 3).unwrap());
    assert_eq!(z[1], zeta(&long, 3.0, 3).unwrap());

    let samples = brownian_zeta_samples(3, &[2.5], &sampling, 50, 4).unwrap();
    assert_eq!(samples.len(), 1);
    assert!(samples[0].iter().all(|&v| v >= 3.0));

    let tiny = BrownianSampling { max_len: 2000, ..sampling };
    assert!(matches!(brownian_zeta(3, &[5.0], &tiny, 1), Err(sinai_core::Error::Feasibility(_))));
}
