//! The limiting law of the depth functional and Kolmogorov-Smirnov tests.
//!
//! For `gamma` walks the excess `zeta - gamma (gamma - 1) / 2` is distributed as a
//! sum of independent exponentials with means `1, 2, ..., gamma - 1`. Its density
//! has the closed form
//!
//! `f(x) = sum_{i=1}^{gamma-1} (-1)^{gamma-1-i} i^{gamma-2} / (i! (gamma-1-i)!) e^{-x/i}`.
//!
//! The terms alternate and their coefficients grow quickly with `gamma`, so the
//! closed form is only offered up to [`MAX_GAMMA`].

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::GrowingBrownian;
use crate::error::{Error, Result};
use crate::landscape::zeta;
use crate::rng::{derive_seed, stream_rng};

/// Largest `gamma` for which the alternating closed form is evaluated.
pub const MAX_GAMMA: usize = 12;

fn check_gamma(gamma: usize) -> Result<()> {
    if (2..=MAX_GAMMA).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::domain(format!("gamma must lie in 2..={MAX_GAMMA}, got {gamma}")))
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n as u64).product::<u64>() as f64
}

/// Signed coefficients of `e^{-x/i}`, `i = 1..gamma-1`.
fn coefficients(gamma: usize) -> impl Iterator<Item = (f64, f64)> {
    (1..gamma).map(move |i| {
        let sign = if (gamma - 1 - i).is_multiple_of(2) { 1.0 } else { -1.0 };
        let c = sign * (i as u64).pow(gamma as u32 - 2) as f64 / (factorial(i) * factorial(gamma - 1 - i));
        (i as f64, c)
    })
}

/// Density of `zeta - gamma (gamma - 1) / 2` at `x >= 0`.
pub fn density_f(gamma: usize, x: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(x >= 0.0) {
        return Err(Error::domain(format!("density needs x >= 0, got {x}")));
    }
    let v: f64 = coefficients(gamma).map(|(i, c)| c * (-x / i).exp()).sum();
    Ok(v.max(0.0))
}

/// Distribution function, integrating each term: `int_0^x e^{-u/i} du = i (1 - e^{-x/i})`.
pub fn cdf_f(gamma: usize, x: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(x >= 0.0) {
        return Err(Error::domain(format!("distribution function needs x >= 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let v: f64 = coefficients(gamma).map(|(i, c)| -c * i * (-x / i).exp_m1()).sum();
    Ok(v.clamp(0.0, 1.0))
}

/// The limit law of `zeta` for a given number of walks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaLaw {
    pub gamma: usize,
    /// `gamma (gamma - 1) / 2`, the left end of the support of `zeta`.
    pub offset: f64,
}

impl ZetaLaw {
    pub fn new(gamma: usize) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self { gamma, offset: (gamma * (gamma - 1) / 2) as f64 })
    }

    /// Density of `zeta` itself; zero left of the offset.
    pub fn density(&self, z: f64) -> f64 {
        if z < self.offset {
            0.0
        } else {
            density_f(self.gamma, z - self.offset).unwrap_or(0.0)
        }
    }

    /// Distribution function of `zeta` itself.
    pub fn cdf(&self, z: f64) -> f64 {
        if z <= self.offset {
            0.0
        } else {
            cdf_f(self.gamma, z - self.offset).unwrap_or(1.0)
        }
    }

    /// Mean of the excess, `sum_k k = gamma (gamma - 1) / 2`.
    pub fn excess_mean(&self) -> f64 {
        self.offset
    }

    /// Variance of the excess, `sum_k k^2`.
    pub fn excess_variance(&self) -> f64 {
        let g = self.gamma as f64;
        (g - 1.0) * g * (2.0 * g - 1.0) / 6.0
    }
}

fn draw_excess(gamma: usize, rng: &mut impl Rng) -> f64 {
    (1..gamma).map(|i| (gamma - i) as f64 * rng.sample::<f64, _>(Exp1)).sum()
}

/// One draw of `zeta - gamma (gamma - 1) / 2` from the limit law.
pub fn sample_zeta_limit(gamma: usize, seed: u64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(draw_excess(gamma, &mut stream_rng(seed, 0)))
}

/// `n` independent draws from one stream.
pub fn sample_zeta_limit_many(gamma: usize, n: usize, seed: u64) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    let mut rng = stream_rng(seed, 0);
    Ok((0..n).map(|_| draw_excess(gamma, &mut rng)).collect())
}

/// How Brownian landscapes are sampled when drawing `zeta` empirically.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrownianSampling {
    pub sigma2: f64,
    pub step: f64,
    /// Longest path (in grid points) before giving up.
    pub max_len: usize,
}

impl Default for BrownianSampling {
    fn default() -> Self {
        Self { sigma2: 1.0, step: 1e-3, max_len: 1 << 25 }
    }
}

/// `zeta` at each of `lnts` on one Brownian path.
///
/// The path starts a few well widths long and is doubled until every requested
/// scale has its `gamma` stable points, so the result does not depend on the
/// starting length.
pub fn brownian_zeta(gamma: usize, lnts: &[f64], sampling: &BrownianSampling, seed: u64) -> Result<Vec<f64>> {
    let scale = lnts.iter().copied().fold(0.0_f64, f64::max);
    if lnts.is_empty() || !scale.is_finite() {
        return Err(Error::config("need at least one finite lnt"));
    }
    let well_width = scale * scale / sampling.sigma2 / sampling.step;
    let mut len = ((2 * gamma) as f64 * well_width).ceil().max(1024.0).min(sampling.max_len as f64) as usize;
    let mut grower = GrowingBrownian::new(sampling.sigma2, sampling.step, len, seed)?;
    loop {
        let attempt: Result<Vec<f64>> = lnts.iter().map(|&lnt| zeta(grower.path(), lnt, gamma)).collect();
        match attempt {
            Err(Error::Horizon { .. }) if len < sampling.max_len => {
                len = (2 * len).min(sampling.max_len);
                grower.extend_to(len);
            }
            Err(Error::Horizon { context, .. }) => {
                return Err(Error::feasibility(format!(
                    "path of {len} points still too short ({context}); raise max_len or lower lnt"
                )))
            }
            other => return other,
        }
    }
}

/// `zeta` on `n_paths` independent paths; path `i` uses seed `derive_seed(master_seed, i)`.
/// The result is indexed `[lnt][path]`.
pub fn brownian_zeta_samples(
    gamma: usize,
    lnts: &[f64],
    sampling: &BrownianSampling,
    n_paths: usize,
    master_seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let per_path: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|i| brownian_zeta(gamma, lnts, sampling, derive_seed(master_seed, i as u64)))
        .collect::<Result<_>>()?;
    Ok((0..lnts.len()).map(|k| per_path.iter().map(|z| z[k]).collect()).collect())
}

/// Outcome of a Kolmogorov-Smirnov test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub n: usize,
    pub ks_stat: f64,
    pub p_value: f64,
    /// Significance level the verdict refers to.
    pub level: f64,
    pub passed: bool,
}

/// Level used when none is given.
pub const DEFAULT_LEVEL: f64 = 0.01;

const MIN_SAMPLES: usize = 10;

/// Asymptotic Kolmogorov tail `P[K > lambda]`.
///
/// Uses the alternating series for large `lambda` and the Jacobi-transformed
/// series for small `lambda`, where the former converges slowly.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=20).map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp()).sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// Small-sample correction of the scaled statistic.
fn scaled(n_eff: f64, d: f64) -> f64 {
    let s = n_eff.sqrt();
    (s + 0.12 + 0.11 / s) * d
}

/// One-sample test of `samples` against a continuous distribution function.
/// The samples need not be sorted.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<GofReport> {
    ks_test(samples, cdf, DEFAULT_LEVEL)
}

pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64, level: f64) -> Result<GofReport> {
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(Error::domain(format!("KS test needs at least {MIN_SAMPLES} samples, got {n}")));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::domain("KS test samples contain NaN"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut d = 0.0_f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf);
    }
    let p_value = kolmogorov_tail(scaled(nf, d));
    Ok(GofReport { n, ks_stat: d, p_value, level, passed: p_value > level })
}

/// Two-sample test; `n` in the report is the effective size `n1 n2 / (n1 + n2)`, rounded.
pub fn ks_two_sample(a: &[f64], b: &[f64], level: f64) -> Result<GofReport> {
    if a.len() < MIN_SAMPLES || b.len() < MIN_SAMPLES {
        return Err(Error::domain(format!(
            "KS test needs at least {MIN_SAMPLES} samples per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0_f64;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] == v {
            i += 1;
        }
        while j < y.len() && y[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    let n_eff = n1 * n2 / (n1 + n2);
    let p_value = kolmogorov_tail(scaled(n_eff, d));
    Ok(GofReport { n: n_eff.round() as usize, ks_stat: d, p_value, level, passed: p_value > level })
}
