//! Multiscale cascade that grows the stability threshold from `alpha * lnt` up to
//! `lnt` while tracking `gamma` wells.
//!
//! Level `n` holds `gamma` points `m_1, ..., m_{gamma-1}, m'_gamma`, the leftmost
//! argmax peaks `h_j` between consecutive points, and the normalised depths
//! `r_j = (W(h_j) - W(m_j)) / lnt` and `l_j = (W(h_j) - W(m_{j+1})) / lnt`. The
//! smallest of these, `a_n`, is the next stability exponent. While `a_n < 1` the
//! shallowest barrier is removed: the point it protects merges into its neighbour
//! and the rightmost walk is pushed into the next `t^{a_n}`-stable well. The
//! cascade stops at the first level with `a_N >= 1`, where the points are the
//! first `gamma` t-stable points.
//!
//! Thresholds are kept as raw path differences (not `a_n * lnt`) so a barrier of
//! exactly `a_n * lnt` passes the `>=` stability test at that scale.

use serde::{Deserialize, Serialize};

use crate::env::Path;
use crate::error::{Error, Result};
use crate::landscape::functional::elevation_unchecked;
use crate::landscape::stable::{argmax_open, check_lnt, first_minima, MinimaScanner};

/// Which barrier attained `a_n` and how the points were updated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "index", rename_all = "snake_case")]
pub enum StepRule {
    /// `a_n = l_{gamma-1}`: the last point loses its left protection.
    LastLeft,
    /// `a_n = r_i` (1-based `i`): `m_i` is absorbed to the right.
    Right(usize),
    /// `a_n = l_i` with `i <= gamma - 2`: `m_{i+1}` is absorbed to the left.
    Left(usize),
}

/// Auxiliary quantities of the transition out of a level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeStep {
    pub rule: StepRule,
    /// Whether `m'_gamma(n)` is itself `t^{a_n}`-stable.
    pub last_was_stable: bool,
    /// `m_gamma(n)`: `m'_gamma(n)` when stable, otherwise the stable point of its well.
    pub m_gamma: usize,
    /// `m_{gamma+1}(n)`, the next `t^{a_n}`-stable point (absent in the unstable `LastLeft` branch).
    pub m_next: Option<usize>,
    pub h_gamma: Option<usize>,
    pub r_gamma: Option<f64>,
    pub l_gamma: Option<f64>,
    /// Peak between `m'_gamma(n)` and `m_gamma(n)` when the former is not stable.
    pub h_star: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeLevel {
    pub a: f64,
    /// `m_1, ..., m_{gamma-1}, m'_gamma`.
    pub points: Vec<usize>,
    pub peaks: Vec<usize>,
    pub r: Vec<f64>,
    pub l: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<CascadeStep>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeTrace {
    pub lnt: f64,
    pub gamma: usize,
    pub alpha: f64,
    pub levels: Vec<CascadeLevel>,
    /// Terminal level `N` (1-based), the first with `a_N >= 1`.
    #[serde(rename = "N")]
    pub n_final: usize,
}

impl CascadeTrace {
    pub fn a_sequence(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.a).collect()
    }

    pub fn final_level(&self) -> &CascadeLevel {
        &self.levels[self.n_final - 1]
    }

    /// `sum_i (gamma - i) r_i(N)`.
    pub fn zeta(&self) -> f64 {
        let last = self.final_level();
        last.r.iter().enumerate().map(|(i, r)| (self.gamma - 1 - i) as f64 * r).sum()
    }
}

struct LevelRaw {
    points: Vec<usize>,
    peaks: Vec<usize>,
    r_raw: Vec<f64>,
    l_raw: Vec<f64>,
}

impl LevelRaw {
    fn from_points(w: &[f64], points: Vec<usize>) -> Self {
        let peaks: Vec<usize> = points.windows(2).map(|p| argmax_open(w, p[0], p[1])).collect();
        let r_raw = peaks.iter().zip(&points).map(|(&h, &m)| w[h] - w[m]).collect();
        let l_raw = peaks.iter().zip(&points[1..]).map(|(&h, &m)| w[h] - w[m]).collect();
        Self { points, peaks, r_raw, l_raw }
    }

    fn min_raw(&self) -> f64 {
        self.r_raw.iter().chain(&self.l_raw).copied().fold(f64::INFINITY, f64::min)
    }

    /// Attaining barrier under the fixed order r_1..r_{g-1}, l_1..l_{g-1}.
    fn rule(&self, min: f64) -> StepRule {
        let g1 = self.r_raw.len();
        if let Some(i) = self.r_raw.iter().position(|&v| v == min) {
            return StepRule::Right(i + 1);
        }
        let j = self.l_raw.iter().position(|&v| v == min).expect("minimum is attained");
        if j + 1 == g1 {
            StepRule::LastLeft
        } else {
            StepRule::Left(j + 1)
        }
    }
}

/// Where the last point sits at a given threshold.
struct Relocation {
    stable: bool,
    m_gamma: usize,
    m_next: Option<usize>,
}

fn relocate_last(
    w: &[f64],
    threshold: f64,
    last: usize,
    need_next: bool,
    level: usize,
) -> Result<Relocation> {
    let mut scan = MinimaScanner::new(w, threshold);
    let horizon = |scan: &MinimaScanner, what: &str| {
        scan.horizon_error(format!("cascade level {level}: {what} at threshold {threshold}"))
    };
    let mut prev: Option<usize> = None;
    let host = loop {
        let s = scan.next_min().ok_or_else(|| horizon(&scan, "no stable point at or after the last point"))?;
        if s == last {
            break (true, s);
        }
        if s > last {
            // The well of `s` starts at the peak separating it from `prev`.
            if let Some(p) = prev {
                let sep = argmax_open(w, p, s);
                if last < sep {
                    return Err(Error::domain(format!(
                        "cascade level {level}: point {last} falls in the well of {p} to its left"
                    )));
                }
            }
            break (false, s);
        }
        prev = Some(s);
    };
    let (stable, m_gamma) = host;
    let m_next = if need_next {
        Some(scan.next_min().ok_or_else(|| horizon(&scan, "no stable point after the last well"))?)
    } else {
        None
    };
    Ok(Relocation { stable, m_gamma, m_next })
}

/// Runs the cascade from the first `gamma` `t^alpha`-stable points.
pub fn construct_cascade(path: &Path, lnt: f64, gamma: usize, alpha: f64) -> Result<CascadeTrace> {
    check_lnt(lnt)?;
    if gamma < 2 {
        return Err(Error::config(format!("gamma must be at least 2, got {gamma}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let w = &path.values;
    let start = first_minima(w, alpha * lnt, gamma).map_err(|e| match e {
        Error::Horizon { context, deepest_index, deepest_value } => Error::Horizon {
            context: format!("cascade level 1: {context}"),
            deepest_index,
            deepest_value,
        },
        other => other,
    })?;

    let mut levels = Vec::new();
    let mut cur = LevelRaw::from_points(w, start);
    // Each step removes one point from the list or moves the last point right,
    // so the number of levels is bounded by the path length.
    for n in 1..=w.len() {
        let min = cur.min_raw();
        let mut level = CascadeLevel {
            a: min / lnt,
            points: cur.points.clone(),
            peaks: cur.peaks.clone(),
            r: cur.r_raw.iter().map(|v| v / lnt).collect(),
            l: cur.l_raw.iter().map(|v| v / lnt).collect(),
            step: None,
        };
        if min >= lnt {
            levels.push(level);
            return Ok(CascadeTrace { lnt, gamma, alpha, levels, n_final: n });
        }

        let rule = cur.rule(min);
        let last = cur.points[gamma - 1];
        let probe = relocate_last(w, min, last, false, n)?;
        let need_next = !matches!(rule, StepRule::LastLeft) || probe.stable;
        let reloc = if need_next { relocate_last(w, min, last, true, n)? } else { probe };
        let h_star = (!reloc.stable).then(|| argmax_open(w, last, reloc.m_gamma));
        let (h_gamma, r_gamma, l_gamma) = match reloc.m_next {
            Some(nx) => {
                let h = argmax_open(w, reloc.m_gamma, nx);
                (Some(h), Some((w[h] - w[reloc.m_gamma]) / lnt), Some((w[h] - w[nx]) / lnt))
            }
            None => (None, None, None),
        };
        let r_gamma = match (rule, reloc.stable) {
            (StepRule::LastLeft, false) => h_star.map(|h| (w[h] - w[last]) / lnt),
            _ => r_gamma,
        };

        let head = &cur.points[..gamma - 1];
        let next_points: Vec<usize> = match (rule, reloc.m_next) {
            (StepRule::LastLeft, Some(nx)) => head.iter().copied().chain([nx]).collect(),
            (StepRule::LastLeft, None) => head.iter().copied().chain([reloc.m_gamma]).collect(),
            (StepRule::Right(i), Some(nx)) | (StepRule::Left(i), Some(nx)) => {
                let drop = if matches!(rule, StepRule::Right(_)) { i - 1 } else { i };
                let mut full: Vec<usize> =
                    head.iter().copied().chain([reloc.m_gamma, nx]).collect();
                full.remove(drop);
                full
            }
            _ => unreachable!("next point is always located outside the unstable LastLeft branch"),
        };

        level.step = Some(CascadeStep {
            rule,
            last_was_stable: reloc.stable,
            m_gamma: reloc.m_gamma,
            m_next: reloc.m_next,
            h_gamma,
            r_gamma,
            l_gamma,
            h_star,
        });
        levels.push(level);
        cur = LevelRaw::from_points(w, next_points);
    }
    Err(Error::domain("cascade failed to terminate"))
}

/// Largest excess of a level's interval elevations over `a_{n-1} lnt` (with `a_0 = alpha`).
/// Non-positive values mean the bound holds; one entry per level.
pub fn elevation_excess(path: &Path, trace: &CascadeTrace) -> Vec<f64> {
    let w = &path.values;
    let mut prev_a = trace.alpha;
    trace
        .levels
        .iter()
        .map(|lvl| {
            let mut worst = f64::NEG_INFINITY;
            for (j, &h) in lvl.peaks.iter().enumerate() {
                let e1 = elevation_unchecked(w, lvl.points[j], h);
                let e2 = elevation_unchecked(w, h, lvl.points[j + 1]);
                worst = worst.max(e1.max(e2) - prev_a * trace.lnt);
            }
            prev_a = lvl.a;
            worst
        })
        .collect()
}

/// Residuals of the closed-form update identities between consecutive levels.
///
/// For every transition the depths of the next level are predicted from the
/// current level and the step's auxiliary quantities; the maximum absolute
/// difference to the recomputed depths is returned per transition.
pub fn update_identity_residuals(path: &Path, trace: &CascadeTrace) -> Vec<f64> {
    let w = &path.values;
    let g1 = trace.gamma - 1;
    let lnt = trace.lnt;
    trace
        .levels
        .windows(2)
        .map(|pair| {
            let (cur, next) = (&pair[0], &pair[1]);
            let step = cur.step.as_ref().expect("non-terminal level has a step");
            let (r, l) = (&cur.r, &cur.l);
            let mut pr = r.clone();
            let mut pl = l.clone();
            let last_left = (w[cur.peaks[g1 - 1]] - w[step.m_gamma]) / lnt;
            match step.rule {
                StepRule::LastLeft if step.last_was_stable => {
                    pr[g1 - 1] = r[g1 - 1] - l[g1 - 1] + step.r_gamma.unwrap();
                    pl[g1 - 1] = step.l_gamma.unwrap();
                }
                StepRule::LastLeft => {
                    pl[g1 - 1] = last_left;
                }
                StepRule::Right(i) => {
                    let i = i - 1;
                    if i > 0 {
                        let right_of_i = if i + 1 == g1 { last_left } else { l[i] };
                        pl[i - 1] = l[i - 1] - r[i] + right_of_i;
                    }
                    for j in i..g1 {
                        pr[j] = if j + 1 < g1 { r[j + 1] } else { step.r_gamma.unwrap() };
                    }
                    if i < g1.saturating_sub(2) {
                        pl[i..g1 - 2].copy_from_slice(&l[i + 1..g1 - 1]);
                    }
                    if g1 >= 2 && i < g1 - 1 {
                        pl[g1 - 2] = last_left;
                    }
                    pl[g1 - 1] = step.l_gamma.unwrap();
                }
                StepRule::Left(i) => {
                    let i = i - 1;
                    pr[i] = r[i] - l[i] + r[i + 1];
                    for j in i + 1..g1 {
                        pr[j] = if j + 1 < g1 { r[j + 1] } else { step.r_gamma.unwrap() };
                    }
                    pl[i..g1 - 2].copy_from_slice(&l[i + 1..g1 - 1]);
                    pl[g1 - 2] = last_left;
                    pl[g1 - 1] = step.l_gamma.unwrap();
                }
            }
            pr.iter()
                .zip(&next.r)
                .chain(pl.iter().zip(&next.l))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}
