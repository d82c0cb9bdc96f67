//! Exact quenched survival `P[T_gamma > t]` by uniformisation.
//!
//! With `P = I + Q / lambda` the sub-stochastic jump matrix of the killed tuple
//! chain, `P[T > t] = sum_k Poisson(k; lambda t) |v P^k|`. All requested times
//! share one sequence of vectors `v P^k`. The vector is rescaled whenever its
//! mass gets small and the scale is carried in log space, so survival
//! probabilities far below the smallest double are still reported through
//! `log_p`.

use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::oracle::tuple::{fast_sum, tuple_state_count, PairGrid, Propagator, TupleChain};
use crate::simulate::WalkerConfig;

/// Size limits of the exact computation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleLimits {
    /// Largest truncation site for two walks.
    pub max_l_pair: usize,
    /// Largest number of tuple states for three or more walks.
    pub max_tuple_states: usize,
    /// Largest number of uniformisation steps.
    pub max_steps: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        // 287_980 = C(121, 3): three walks with L = 120.
        Self { max_l_pair: 3000, max_tuple_states: 287_980, max_steps: 50_000_000 }
    }
}

/// Options of the exact survival computation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalOptions {
    pub backend: Backend,
    pub limits: OracleLimits,
    /// Try smaller truncations first (see [`exact_survival_with`]).
    pub adaptive: bool,
}

impl Default for SurvivalOptions {
    fn default() -> Self {
        Self { backend: Backend::Auto, limits: OracleLimits::default(), adaptive: true }
    }
}

/// Smallest truncation tried by the adaptive scheme.
const ADAPTIVE_FIRST_L: usize = 64;
/// Series tolerance of adaptive trials, relative to the requested one.
const TRIAL_SERIES_FACTOR: f64 = 1e-4;

/// How the chain is represented.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Dense stencil for two walks, sparse tuples otherwise.
    #[default]
    Auto,
    Sparse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRecord {
    pub t: f64,
    pub p: f64,
    pub log_p: f64,
    /// Upper bound on the expected number of entries of the last walk into the
    /// truncation site before `t` and before a meeting; it bounds the
    /// probability that the truncation was ever felt.
    pub boundary_mass: f64,
    /// Requested truncation site.
    #[serde(rename = "L")]
    pub l: usize,
    /// Truncation actually used; smaller than `L` only when certified.
    pub l_used: usize,
    pub tol: f64,
    /// Uniformisation steps used for this time.
    pub steps: usize,
}

/// `P[T_gamma > t]` for walks reflected at 0 and at `L`.
pub fn exact_survival(env: &Environment, cfg: &WalkerConfig, t: f64, l: usize, tol: f64) -> Result<SurvivalRecord> {
    let mut out = exact_survival_grid(env, cfg, &[t], l, tol)?;
    Ok(out.remove(0))
}

/// [`exact_survival`] at several times in one pass.
pub fn exact_survival_grid(
    env: &Environment,
    cfg: &WalkerConfig,
    t_grid: &[f64],
    l: usize,
    tol: f64,
) -> Result<Vec<SurvivalRecord>> {
    exact_survival_with(env, cfg, t_grid, l, tol, &SurvivalOptions::default())
}

/// [`exact_survival_grid`] with explicit options.
///
/// With `adaptive` set, truncations `L' = 64, 128, ...` below `L` are tried
/// first. Walks truncated at `L'` and at `L` can be coupled to agree until the
/// last walk first reaches `L'`, so the two survival probabilities differ by at
/// most the boundary mass at `L'`. A smaller truncation is accepted when that
/// bound is below `tol / 2` times the estimate at every requested time, and the
/// Poisson series is then cut at `tol / 2`; the total error against the
/// `L`-truncated chain stays within `tol` relative to the estimate. The trial
/// runs cut the series much tighter than `tol / 2` because the boundary bound
/// also charges the mass left beyond the cut.
pub fn exact_survival_with(
    env: &Environment,
    cfg: &WalkerConfig,
    t_grid: &[f64],
    l: usize,
    tol: f64,
    opts: &SurvivalOptions,
) -> Result<Vec<SurvivalRecord>> {
    if cfg.gamma < 2 || cfg.starts.len() != cfg.gamma || cfg.starts.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::config("starting sites must be gamma >= 2 strictly increasing sites"));
    }
    if cfg.starts[cfg.gamma - 1] >= l {
        return Err(Error::config(format!("all starting sites must lie below L = {l}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::config(format!("tol must lie in (0, 1), got {tol}")));
    }
    if t_grid.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
        return Err(Error::config("times must be finite and non-negative"));
    }
    // Caps apply to the requested truncation even if a smaller one suffices.
    if cfg.gamma == 2 && opts.backend == Backend::Auto {
        if l > opts.limits.max_l_pair {
            return Err(Error::feasibility(format!(
                "L = {l} exceeds the two-walk cap of {}",
                opts.limits.max_l_pair
            )));
        }
    } else {
        let count = tuple_state_count(l, cfg.gamma);
        if count > opts.limits.max_tuple_states as u64 {
            return Err(Error::feasibility(format!(
                "{count} tuple states for gamma = {}, L = {l} exceed the cap of {}",
                cfg.gamma, opts.limits.max_tuple_states
            )));
        }
    }
    let solve = |l_used: usize, series_tol: f64| -> Result<Vec<SurvivalRecord>> {
        let mut out = if cfg.gamma == 2 && opts.backend == Backend::Auto {
            let grid = PairGrid::new(env, l_used, opts.limits.max_l_pair)?;
            run(&grid, &cfg.starts, t_grid, l_used, series_tol, opts.limits.max_steps)?
        } else {
            let chain = TupleChain::new(env, cfg.gamma, l_used, opts.limits.max_tuple_states)?;
            run(&chain, &cfg.starts, t_grid, l_used, series_tol, opts.limits.max_steps)?
        };
        for r in &mut out {
            r.l = l;
            r.tol = tol;
        }
        Ok(out)
    };
    if opts.adaptive {
        let first_start = cfg.starts[cfg.gamma - 1] + 1;
        let mut l_try = ADAPTIVE_FIRST_L.max(2 * first_start);
        while l_try < l {
            // Too many tuple states at this size: fall through to the full solve.
            let Ok(out) = solve(l_try, TRIAL_SERIES_FACTOR * tol) else { break };
            if out.iter().all(|r| r.boundary_mass <= 0.5 * tol * r.p) {
                return Ok(out);
            }
            l_try *= 2;
        }
    }
    solve(l, tol)
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Relative log weights below this are dropped from a Poisson window.
const LOG_WEIGHT_FLOOR: f64 = -800.0;

/// Normalised Poisson weights on the window `[first, first + w.len())`.
struct PoissonWindow {
    first: usize,
    log_w: Vec<f64>,
    /// `tail[i] = P[N > first + i]`.
    tail: Vec<f64>,
    /// `tail_sum[i] = sum_{j >= i} tail[j]`.
    tail_sum: Vec<f64>,
}

impl PoissonWindow {
    fn new(mean: f64, max_steps: usize) -> Result<Self> {
        let mode = mean.floor() as usize;
        if mode >= max_steps {
            return Err(Error::feasibility(format!(
                "lambda * t = {mean:.3e} needs more than the {max_steps} allowed uniformisation steps"
            )));
        }
        let ln_mean = mean.ln();
        // log(w_k / w_mode) by the ratio recurrence in both directions.
        let mut left = Vec::new();
        let mut acc = 0.0;
        let mut k = mode;
        while k > 0 {
            acc += (k as f64).ln() - ln_mean;
            if acc < LOG_WEIGHT_FLOOR {
                break;
            }
            left.push(acc);
            k -= 1;
        }
        let first = mode - left.len();
        let mut log_w: Vec<f64> = left.into_iter().rev().collect();
        log_w.push(0.0);
        let mut acc = 0.0;
        let mut k = mode + 1;
        loop {
            acc += ln_mean - (k as f64).ln();
            if acc < LOG_WEIGHT_FLOOR {
                break;
            }
            if k >= max_steps {
                return Err(Error::feasibility(format!(
                    "Poisson window for lambda * t = {mean:.3e} exceeds {max_steps} steps"
                )));
            }
            log_w.push(acc);
            k += 1;
        }
        let log_z = log_w.iter().fold(f64::NEG_INFINITY, |s, &x| log_add(s, x));
        log_w.iter_mut().for_each(|x| *x -= log_z);
        let mut tail = vec![0.0; log_w.len()];
        let mut run = 0.0;
        for i in (0..log_w.len()).rev() {
            tail[i] = run;
            run += log_w[i].exp();
        }
        let mut tail_sum = vec![0.0; log_w.len()];
        let mut run = 0.0;
        for i in (0..log_w.len()).rev() {
            run += tail[i];
            tail_sum[i] = run;
        }
        Ok(Self { first, log_w, tail, tail_sum })
    }

    fn last(&self) -> usize {
        self.first + self.log_w.len() - 1
    }

    fn log_weight(&self, k: usize) -> f64 {
        if k < self.first || k > self.last() {
            f64::NEG_INFINITY
        } else {
            self.log_w[k - self.first]
        }
    }

    /// `E[(N - k)^+] = sum_{j >= k} P[N > j]`.
    fn excess(&self, k: usize) -> f64 {
        if k < self.first {
            // Terms below the window have P[N > j] = 1 to double precision.
            (self.first - k) as f64 + self.tail_sum[0]
        } else if k > self.last() {
            0.0
        } else {
            self.tail_sum[k - self.first]
        }
    }

    /// `P[N > k]`.
    fn tail(&self, k: usize) -> f64 {
        if k < self.first {
            1.0
        } else if k > self.last() {
            0.0
        } else {
            self.tail[k - self.first]
        }
    }
}

struct Pending {
    window: PoissonWindow,
    log_acc: f64,
    boundary: f64,
    done: Option<usize>,
}

/// Mass below which the working vector is rescaled.
const RESCALE_BELOW: f64 = 1e-150;

fn run<P: Propagator>(
    prop: &P,
    starts: &[usize],
    t_grid: &[f64],
    l: usize,
    tol: f64,
    max_steps: usize,
) -> Result<Vec<SurvivalRecord>> {
    let lambda = prop.lambda();
    let mut pending: Vec<Option<Pending>> = t_grid
        .iter()
        .map(|&t| {
            if t == 0.0 || lambda == 0.0 {
                Ok(None)
            } else {
                PoissonWindow::new(lambda * t, max_steps)
                    .map(|window| Some(Pending { window, log_acc: f64::NEG_INFINITY, boundary: 0.0, done: None }))
            }
        })
        .collect::<Result<_>>()?;
    let log_tol = tol.ln();

    let mut v = prop.initial(starts);
    let mut next = vec![0.0; prop.len()];
    let mut log_scale = 0.0;
    let mut k = 0usize;
    let mut mass = fast_sum(&v);
    loop {
        let log_mass = if mass > 0.0 { mass.ln() + log_scale } else { f64::NEG_INFINITY };
        let mut active = false;
        for p in pending.iter_mut().flatten().filter(|p| p.done.is_none()) {
            let lw = p.window.log_weight(k);
            if lw > f64::NEG_INFINITY && log_mass > f64::NEG_INFINITY {
                p.log_acc = log_add(p.log_acc, lw + log_mass);
            }
            // Remaining terms are bounded by P[N > k] times the current mass.
            let tail = p.window.tail(k);
            let finished = k >= p.window.last()
                || log_mass == f64::NEG_INFINITY
                || (k >= p.window.first && tail.ln() + log_mass <= log_tol + p.log_acc);
            if finished {
                // Later entries into the boundary column number at most the
                // current mass per step.
                if log_mass > f64::NEG_INFINITY {
                    p.boundary += log_mass.exp() * p.window.excess(k);
                }
                p.done = Some(k);
            } else {
                active = true;
            }
        }
        if !active {
            break;
        }
        let (inflow, new_mass) = prop.step(&v, &mut next);
        mass = new_mass;
        std::mem::swap(&mut v, &mut next);
        if inflow > 0.0 {
            let inflow = inflow * log_scale.exp();
            for p in pending.iter_mut().flatten().filter(|p| p.done.is_none()) {
                p.boundary += p.window.tail(k) * inflow;
            }
        }
        k += 1;
        if mass > 0.0 && mass < RESCALE_BELOW {
            let s = 1.0 / mass;
            v.iter_mut().for_each(|x| *x *= s);
            log_scale += mass.ln();
            mass = 1.0;
        }
    }

    Ok(t_grid
        .iter()
        .zip(&pending)
        .map(|(&t, p)| match p {
            None => SurvivalRecord { t, p: 1.0, log_p: 0.0, boundary_mass: 0.0, l, l_used: l, tol, steps: 0 },
            Some(p) => {
                let log_p = p.log_acc.min(0.0);
                SurvivalRecord {
                    t,
                    p: log_p.exp(),
                    log_p,
                    boundary_mass: p.boundary,
                    l,
                    l_used: l,
                    tol,
                    steps: p.done.unwrap_or(0),
                }
            }
        })
        .collect())
}

/// Per-time exponents `e(t) = -ln P[T > t] / ln t` and the least-squares slope
/// of `-ln P` against `ln t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailExponent {
    pub t: Vec<f64>,
    pub log_p: Vec<f64>,
    pub e: Vec<f64>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub records: Vec<SurvivalRecord>,
}

pub fn tail_exponent(
    env: &Environment,
    cfg: &WalkerConfig,
    t_grid: &[f64],
    l: usize,
    tol: f64,
) -> Result<TailExponent> {
    if t_grid.iter().any(|&t| !(t > 1.0)) || t_grid.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::config("tail exponents need an increasing grid of times above 1"));
    }
    let records = exact_survival_grid(env, cfg, t_grid, l, tol)?;
    let log_p: Vec<f64> = records.iter().map(|r| r.log_p).collect();
    let e: Vec<f64> = t_grid.iter().zip(&log_p).map(|(t, lp)| -lp / t.ln()).collect();
    let (slope, intercept) = if t_grid.len() >= 2 {
        let xs: Vec<f64> = t_grid.iter().map(|t| t.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = log_p.iter().map(|y| -y).sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&log_p).map(|(x, y)| (x - mx) * (-y - my)).sum();
        let b = sxy / sxx;
        (Some(b), Some(my - b * mx))
    } else {
        (None, None)
    };
    Ok(TailExponent { t: t_grid.to_vec(), log_p, e, slope, intercept, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_zero_is_one() {
        let env = Environment::flat(40, 1.0).unwrap();
        let r = exact_survival(&env, &WalkerConfig::with_starts(vec![1, 2], 1.0), 0.0, 30, 1e-12).unwrap();
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn poisson_window_is_normalised() {
        for mean in [0.3, 5.0, 1234.5, 2e5] {
            let w = PoissonWindow::new(mean, 10_000_000).unwrap();
            let total: f64 = w.log_w.iter().map(|x| x.exp()).sum();
            assert!((total - 1.0).abs() < 1e-12);
            let mean_hat: f64 = w.log_w.iter().enumerate().map(|(i, x)| (w.first + i) as f64 * x.exp()).sum();
            assert!((mean_hat - mean).abs() < 1e-9 * mean.max(1.0));
        }
    }

    #[test]
    fn survival_decreases_and_truncation_is_invisible() {
        let env = Environment::flat(100, 1.0).unwrap();
        let cfg = WalkerConfig::with_starts(vec![1, 2], 1.0);
        let grid = [0.5, 1.0, 2.0, 4.0];
        let a = exact_survival_grid(&env, &cfg, &grid, 30, 1e-13).unwrap();
        let b = exact_survival_grid(&env, &cfg, &grid, 60, 1e-13).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.p - y.p).abs() < 1e-8);
        }
        assert!(a.windows(2).all(|w| w[0].p > w[1].p));
    }
}
