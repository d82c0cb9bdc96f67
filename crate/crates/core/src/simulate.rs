//! Exact event-driven simulation of independent walks in a fixed environment.
//!
//! Every walk owns a ChaCha8 stream. After each of its jumps a walk draws its
//! next holding time and direction from that stream only, so the trajectory of
//! walk `i` is a function of its own stream and is identical in all three
//! measurement modes. Because clocks are memoryless, keeping the other walks'
//! pending jump times is exact.
//!
//! In the coalescing mode a merged cluster keeps the clock of one member: walk
//! `0` when present, otherwise walk `gamma - 1`, otherwise the lowest label.
//! The two extreme walks therefore follow their free trajectories until they
//! meet, which makes full coalescence pathwise equal to their pair meeting time.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkerConfig {
    pub gamma: usize,
    /// Strictly increasing starting sites, one per walk.
    pub starts: Vec<usize>,
    /// Censoring horizon; runs never extend past it.
    pub t_max: f64,
}

impl WalkerConfig {
    /// Walks started at sites `1, 2, ..., gamma`.
    pub fn new(gamma: usize, t_max: f64) -> Self {
        Self { gamma, starts: (1..=gamma).collect(), t_max }
    }

    pub fn with_starts(starts: Vec<usize>, t_max: f64) -> Self {
        Self { gamma: starts.len(), starts, t_max }
    }

    pub fn validate(&self, env: &Environment) -> Result<()> {
        if self.gamma < 2 {
            return Err(Error::config(format!("gamma must be at least 2, got {}", self.gamma)));
        }
        if self.starts.len() != self.gamma {
            return Err(Error::config(format!(
                "{} starting sites given for gamma = {}",
                self.starts.len(),
                self.gamma
            )));
        }
        if self.starts.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::config("starting sites must be strictly increasing"));
        }
        let last = env.len() - 1;
        if self.starts[self.gamma - 1] >= last {
            return Err(Error::config(format!(
                "starting sites must lie below the last environment site {last}"
            )));
        }
        if !(self.t_max >= 0.0) || !self.t_max.is_finite() {
            return Err(Error::config(format!("t_max must be finite and non-negative, got {}", self.t_max)));
        }
        Ok(())
    }
}

/// What ended a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Met,
    Censored,
    /// A walk reached the last site of the finite environment before the event.
    Boundary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeetingOutcome {
    pub kind: OutcomeKind,
    /// Event time, `t_max` when censored.
    pub time: f64,
    pub meeting_site: Option<usize>,
    /// Zero-based labels of the walks (or cluster clocks) that met.
    pub pair: Option<(usize, usize)>,
    pub jumps: u64,
}

/// Which stopping time a run measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// First meeting of any pair.
    Meeting,
    /// Walks merge on contact; stops when a single cluster remains.
    Coalescing,
    /// Independent walks; stops when all occupy one site.
    Simultaneous,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "meeting" => Ok(Mode::Meeting),
            "coalescing" => Ok(Mode::Coalescing),
            "simultaneous" => Ok(Mode::Simultaneous),
            other => Err(Error::config(format!(
                "unknown mode {other:?} (expected meeting, coalescing or simultaneous)"
            ))),
        }
    }
}

struct Walker {
    pos: usize,
    next_time: f64,
    rng: ChaCha8Rng,
    /// Clock holder of the cluster this walk belongs to (coalescing mode).
    alive: bool,
}

impl Walker {
    fn schedule(&mut self, env: &Environment, now: f64) {
        let rate = exit_rate(env, self.pos);
        let e: f64 = self.rng.sample(Exp1);
        self.next_time = now + e / rate;
    }

    fn jump(&mut self, env: &Environment) {
        let up = env.up(self.pos);
        let rate = exit_rate(env, self.pos);
        let u: f64 = self.rng.random();
        if self.pos == 0 || u * rate < up {
            self.pos += 1;
        } else {
            self.pos -= 1;
        }
    }
}

#[inline]
fn exit_rate(env: &Environment, x: usize) -> f64 {
    if x == 0 {
        env.up(0)
    } else {
        env.up(x) + env.down(x)
    }
}

/// Runs walks with explicit stream ids: walk `i` starts at `starts[i]` and uses
/// stream `streams[i]` of `seed`.
///
/// The public samplers are this function with streams `0..gamma`; exposing the
/// ids lets a sub-system be replayed with exactly the same randomness.
pub fn run_with_streams(
    env: &Environment,
    starts: &[usize],
    streams: &[u64],
    t_max: f64,
    seed: u64,
    mode: Mode,
) -> Result<MeetingOutcome> {
    let cfg = WalkerConfig::with_starts(starts.to_vec(), t_max);
    cfg.validate(env)?;
    if streams.len() != starts.len() {
        return Err(Error::config("one stream id per walk is required"));
    }
    Ok(run_unchecked(env, starts, streams, t_max, seed, mode))
}

fn run_unchecked(
    env: &Environment,
    starts: &[usize],
    streams: &[u64],
    t_max: f64,
    seed: u64,
    mode: Mode,
) -> MeetingOutcome {
    let g = starts.len();
    let last = env.len() - 1;
    let mut walkers: Vec<Walker> = starts
        .iter()
        .zip(streams)
        .map(|(&pos, &s)| {
            let mut w = Walker { pos, next_time: 0.0, rng: stream_rng(seed, s), alive: true };
            w.schedule(env, 0.0);
            w
        })
        .collect();
    let mut clusters = g;
    let mut jumps = 0u64;

    loop {
        let (i, now) = walkers
            .iter()
            .enumerate()
            .filter(|(_, w)| w.alive)
            .map(|(i, w)| (i, w.next_time))
            .fold((usize::MAX, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
        if now > t_max {
            return MeetingOutcome {
                kind: OutcomeKind::Censored,
                time: t_max,
                meeting_site: None,
                pair: None,
                jumps,
            };
        }
        walkers[i].jump(env);
        jumps += 1;
        let site = walkers[i].pos;

        match mode {
            Mode::Meeting => {
                if let Some(j) = walkers.iter().enumerate().position(|(j, w)| j != i && w.pos == site) {
                    return MeetingOutcome {
                        kind: OutcomeKind::Met,
                        time: now,
                        meeting_site: Some(site),
                        pair: Some((i.min(j), i.max(j))),
                        jumps,
                    };
                }
                debug_assert!(walkers.windows(2).all(|p| p[0].pos < p[1].pos), "walk order broken");
            }
            Mode::Simultaneous => {
                if walkers.iter().all(|w| w.pos == site) {
                    return MeetingOutcome {
                        kind: OutcomeKind::Met,
                        time: now,
                        meeting_site: Some(site),
                        pair: None,
                        jumps,
                    };
                }
            }
            Mode::Coalescing => {
                let other = walkers.iter().enumerate().position(|(j, w)| j != i && w.alive && w.pos == site);
                if let Some(j) = other {
                    let (left, right) = (i.min(j), i.max(j));
                    // Clock rule: keep walk 0, else walk g-1, else the lower label.
                    let keep = if right == g - 1 && left != 0 { right } else { left };
                    let drop = left + right - keep;
                    walkers[drop].alive = false;
                    clusters -= 1;
                    if clusters == 1 {
                        return MeetingOutcome {
                            kind: OutcomeKind::Met,
                            time: now,
                            meeting_site: Some(site),
                            pair: Some((left, right)),
                            jumps,
                        };
                    }
                }
            }
        }

        if site == last {
            return MeetingOutcome {
                kind: OutcomeKind::Boundary,
                time: now,
                meeting_site: None,
                pair: None,
                jumps,
            };
        }
        walkers[i].schedule(env, now);
    }
}

fn default_streams(g: usize) -> Vec<u64> {
    (0..g as u64).collect()
}

/// First meeting time `T_gamma` of any pair.
pub fn sample_meeting(env: &Environment, cfg: &WalkerConfig, seed: u64) -> Result<MeetingOutcome> {
    sample(env, cfg, seed, Mode::Meeting)
}

/// Coalescence time `T'_gamma` of all walks.
pub fn sample_coalescing(env: &Environment, cfg: &WalkerConfig, seed: u64) -> Result<MeetingOutcome> {
    sample(env, cfg, seed, Mode::Coalescing)
}

/// First time `T''_gamma` at which all walks share a site.
pub fn sample_simultaneous(env: &Environment, cfg: &WalkerConfig, seed: u64) -> Result<MeetingOutcome> {
    sample(env, cfg, seed, Mode::Simultaneous)
}

pub fn sample(env: &Environment, cfg: &WalkerConfig, seed: u64, mode: Mode) -> Result<MeetingOutcome> {
    cfg.validate(env)?;
    Ok(run_unchecked(env, &cfg.starts, &default_streams(cfg.gamma), cfg.t_max, seed, mode))
}

/// One outcome per replica; replica `r` runs with seed `derive_seed(master_seed, r)`.
///
/// Runs on the current rayon pool. The result does not depend on the pool size.
pub fn sample_replicas(
    env: &Environment,
    cfg: &WalkerConfig,
    n_replicas: usize,
    master_seed: u64,
    mode: Mode,
) -> Result<Vec<MeetingOutcome>> {
    cfg.validate(env)?;
    let streams = default_streams(cfg.gamma);
    Ok((0..n_replicas as u64)
        .into_par_iter()
        .map(|r| run_unchecked(env, &cfg.starts, &streams, cfg.t_max, derive_seed(master_seed, r), mode))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub t_grid: Vec<f64>,
    pub p: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_replicas: usize,
    pub seed: u64,
    /// Replicas stopped by the finite environment; counted as survivors.
    pub n_boundary: usize,
}

impl SurvivalCurve {
    /// Aggregates outcomes: `p[k]` is the fraction with event time `> t_grid[k]`.
    /// Censored and boundary outcomes count as survivors at every grid point.
    pub fn from_outcomes(t_grid: &[f64], outcomes: &[MeetingOutcome], seed: u64) -> Self {
        let n = outcomes.len();
        let mut survivors = vec![0usize; t_grid.len()];
        let mut n_boundary = 0;
        for o in outcomes {
            match o.kind {
                OutcomeKind::Met => {
                    for (k, &t) in t_grid.iter().enumerate() {
                        if o.time > t {
                            survivors[k] += 1;
                        }
                    }
                }
                OutcomeKind::Boundary => {
                    n_boundary += 1;
                    survivors.iter_mut().for_each(|s| *s += 1);
                }
                OutcomeKind::Censored => survivors.iter_mut().for_each(|s| *s += 1),
            }
        }
        let nf = n as f64;
        let p: Vec<f64> = survivors.iter().map(|&s| s as f64 / nf).collect();
        let stderr = p.iter().map(|&q| (q * (1.0 - q) / nf).sqrt()).collect();
        Self { t_grid: t_grid.to_vec(), p, stderr, n_replicas: n, seed, n_boundary }
    }
}

fn check_grid(cfg: &WalkerConfig, t_grid: &[f64], n_replicas: usize) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::config("empty time grid"));
    }
    if t_grid.windows(2).any(|p| p[0] >= p[1]) || t_grid[0] < 0.0 {
        return Err(Error::config("time grid must be non-negative and strictly increasing"));
    }
    if n_replicas == 0 {
        return Err(Error::config("n_replicas must be at least 1"));
    }
    let t_last = t_grid[t_grid.len() - 1];
    if cfg.t_max < t_last {
        return Err(Error::config(format!(
            "t_max = {} is below the last grid time {t_last}",
            cfg.t_max
        )));
    }
    Ok(())
}

/// Monte Carlo estimate of `P[T_gamma > t]` on `t_grid`.
pub fn survival_curve(
    env: &Environment,
    cfg: &WalkerConfig,
    t_grid: &[f64],
    n_replicas: usize,
    master_seed: u64,
) -> Result<SurvivalCurve> {
    survival_curve_mode(env, cfg, t_grid, n_replicas, master_seed, Mode::Meeting)
}

/// [`survival_curve`] for any of the three stopping times.
pub fn survival_curve_mode(
    env: &Environment,
    cfg: &WalkerConfig,
    t_grid: &[f64],
    n_replicas: usize,
    master_seed: u64,
    mode: Mode,
) -> Result<SurvivalCurve> {
    survival_with_outcomes(env, cfg, t_grid, n_replicas, master_seed, mode).map(|(curve, _)| curve)
}

/// [`survival_curve_mode`] that also returns the per-replica outcomes.
pub fn survival_with_outcomes(
    env: &Environment,
    cfg: &WalkerConfig,
    t_grid: &[f64],
    n_replicas: usize,
    master_seed: u64,
    mode: Mode,
) -> Result<(SurvivalCurve, Vec<MeetingOutcome>)> {
    cfg.validate(env)?;
    check_grid(cfg, t_grid, n_replicas)?;
    let outcomes = sample_replicas(env, cfg, n_replicas, master_seed, mode)?;
    Ok((SurvivalCurve::from_outcomes(t_grid, &outcomes, master_seed), outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_horizon_is_censored_at_zero() {
        let env = Environment::flat(10, 1.0).unwrap();
        let o = sample_meeting(&env, &WalkerConfig::new(2, 0.0), 1).unwrap();
        assert_eq!(o.kind, OutcomeKind::Censored);
        assert_eq!(o.time, 0.0);
        assert_eq!(o.jumps, 0);
    }

    #[test]
    fn seed_determinism() {
        let env = Environment::flat(50, 1.0).unwrap();
        let cfg = WalkerConfig::new(3, 100.0);
        for mode in [Mode::Meeting, Mode::Coalescing, Mode::Simultaneous] {
            assert_eq!(sample(&env, &cfg, 9, mode).unwrap(), sample(&env, &cfg, 9, mode).unwrap());
        }
    }

    #[test]
    fn bad_configs() {
        let env = Environment::flat(10, 1.0).unwrap();
        assert!(sample_meeting(&env, &WalkerConfig::with_starts(vec![2, 2], 1.0), 0).is_err());
        assert!(sample_meeting(&env, &WalkerConfig::with_starts(vec![1, 9], 1.0), 0).is_err());
        assert!(sample_meeting(&env, &WalkerConfig::with_starts(vec![1], 1.0), 0).is_err());
        let cfg = WalkerConfig::new(2, 1.0);
        assert!(survival_curve(&env, &cfg, &[0.5, 2.0], 10, 0).is_err());
        assert!(survival_curve(&env, &cfg, &[0.5, 0.2], 10, 0).is_err());
    }

    #[test]
    fn boundary_is_reported() {
        let env = Environment::flat(4, 1.0).unwrap();
        let o = sample_meeting(&env, &WalkerConfig::with_starts(vec![0, 2], 1e9), 3).unwrap();
        assert!(matches!(o.kind, OutcomeKind::Met | OutcomeKind::Boundary));
        let any_boundary = (0..200).any(|s| {
            sample_meeting(&env, &WalkerConfig::with_starts(vec![0, 2], 1e9), s).unwrap().kind
                == OutcomeKind::Boundary
        });
        assert!(any_boundary);
    }

    #[test]
    fn grid_at_zero_is_one() {
        let env = Environment::flat(20, 1.0).unwrap();
        let c = survival_curve(&env, &WalkerConfig::new(2, 1.0), &[0.0], 1000, 4).unwrap();
        assert_eq!(c.p, vec![1.0]);
    }
}
