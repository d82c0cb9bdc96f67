//! Exhaustive and dense oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sinai_core::env::{Environment, Path, Site};

/// All points `<= x_max` satisfying the stable-point definition, by direct search.
pub fn brute_stable(w: &[f64], h: f64, x_max: usize) -> Vec<usize> {
    let n = w.len();
    let r_of = |m: usize| (m + 1..n).find(|&x| w[x] - w[m] >= h);
    let l_of = |m: usize| (0..m).rev().find(|&x| w[x] - w[m] >= h);
    let first = (0..n).find(|&m| match r_of(m) {
        Some(r) => (0..=r).all(|x| w[x] >= w[m]),
        None => false,
    });
    let Some(first) = first else { return vec![] };
    let mut out = Vec::new();
    if first <= x_max {
        out.push(first);
    }
    for m in first + 1..=x_max.min(n - 1) {
        let (Some(l), Some(r)) = (l_of(m), r_of(m)) else { continue };
        let left_ok = (l..m).all(|x| w[x] > w[m]);
        let right_ok = (m + 1..=r).all(|x| w[x] >= w[m]);
        if left_ok && right_ok {
            out.push(m);
        }
    }
    out
}

pub fn brute_elevation_cubic(w: &[f64], a: usize, b: usize) -> f64 {
    let min = w[a..=b].iter().copied().fold(f64::INFINITY, f64::min);
    let mut best = f64::NEG_INFINITY;
    for x in a..=b {
        for y in a..=b {
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            for z in lo..=hi {
                best = best.max(w[z] - w[x] - w[y] + min);
            }
        }
    }
    best
}

/// Same maximum in O(n^2): for fixed x the inner max over z is a running max.
pub fn brute_elevation_quadratic(w: &[f64], a: usize, b: usize) -> f64 {
    let min = w[a..=b].iter().copied().fold(f64::INFINITY, f64::min);
    let mut best = f64::NEG_INFINITY;
    for x in a..=b {
        let mut zmax = f64::NEG_INFINITY;
        for y in x..=b {
            zmax = zmax.max(w[y]);
            best = best.max(zmax - w[x] - w[y] + min);
        }
        let mut zmax = f64::NEG_INFINITY;
        for y in (a..=x).rev() {
            zmax = zmax.max(w[y]);
            best = best.max(zmax - w[x] - w[y] + min);
        }
    }
    best
}

pub fn brute_barrier(w: &[f64], a: usize, b: usize) -> (f64, f64) {
    let mut hp = f64::NEG_INFINITY;
    let mut hm = f64::NEG_INFINITY;
    for x in a..=b {
        if x > a {
            let mx = (x..=b).map(|y| w[y]).fold(f64::NEG_INFINITY, f64::max);
            let mn = (a..x).map(|y| w[y]).fold(f64::INFINITY, f64::min);
            hp = hp.max(mx - mn);
        }
        if x < b {
            let mx = (a..=x).map(|y| w[y]).fold(f64::NEG_INFINITY, f64::max);
            let mn = (x + 1..=b).map(|y| w[y]).fold(f64::INFINITY, f64::min);
            hm = hm.max(mx - mn);
        }
    }
    (hp.max(0.0), hm.max(0.0))
}

pub fn integer_walk(n: usize, seed: u64) -> Path {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![0.0];
    for _ in 1..n {
        let step = [-1.0, 0.0, 1.0][rng.random_range(0..3)];
        v.push(v.last().unwrap() + step);
    }
    Path::from_values(v).unwrap()
}

pub fn random_env(n: usize, seed: u64) -> Environment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites = (0..n)
        .map(|_| Site { wp: rng.random_range(0.2..5.0), wm: rng.random_range(0.2..5.0) })
        .collect();
    Environment::from_sites(sites, 5.0).unwrap()
}

/// Solves `h(a) = 0`, `h(b) = 1`, `(p+q) h(x) = p h(x+1) + q h(x-1)` by the Thomas algorithm.
pub fn harmonic_oracle(env: &Environment, a: usize, b: usize) -> Vec<f64> {
    let m = b - a - 1;
    let (mut lower, mut diag, mut upper, mut rhs) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    for k in 0..m {
        let x = a + 1 + k;
        let (p, q) = (env.up(x), env.down(x));
        diag[k] = p + q;
        lower[k] = -q;
        upper[k] = -p;
        if k + 1 == m {
            rhs[k] = p;
        }
    }
    for k in 1..m {
        let f = lower[k] / diag[k - 1];
        diag[k] -= f * upper[k - 1];
        rhs[k] -= f * rhs[k - 1];
    }
    let mut h = vec![0.0; m];
    for k in (0..m).rev() {
        let next = if k + 1 < m { upper[k] * h[k + 1] } else { 0.0 };
        h[k] = (rhs[k] - next) / diag[k];
    }
    h
}


/// Gaussian walk with increments rounded to multiples of 2^-20, so that sums and
/// differences of its values are exact in floating point.
pub fn dyadic_walk(n: usize, seed: u64) -> Path {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (1u64 << 20) as f64;
    let mut v = vec![0.0];
    for _ in 1..n {
        let z: f64 = rng.sample(StandardNormal);
        v.push(v.last().unwrap() + (z * 0.1 * scale).round() / scale);
    }
    Path::from_values(v).unwrap()
}

/// Adaptive Simpson on `[a, b]`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            left + right + diff / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}
