//! Raw goodness metrics of a landscape at time scale `t`.
//!
//! The cascade is run with `alpha = lnt^(-5/6)` and wells are counted at the
//! slightly finer scale `t^(a_n - eps)` with `eps = lnt^(-11/12)`. The metrics are
//! reported as numbers only: the constants that would turn them into a yes/no
//! verdict are not known.

use serde::{Deserialize, Serialize};

use crate::env::Path;
use crate::error::{Error, Result};
use crate::landscape::cascade::{construct_cascade, CascadeLevel, CascadeTrace};
use crate::landscape::stable::minima_up_to;

/// The five goodness quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodnessMetrics {
    /// Terminal cascade level `N`.
    pub n_levels: usize,
    /// Position of `m'_gamma(N)`.
    pub final_last_point: f64,
    /// Position of `m'_gamma(1)`.
    pub initial_last_point: f64,
    /// Per level `i = 1..=N`: stable wells at scale `t^(a_i - eps)` inside the
    /// intervals `[m_k(i), h_k(i)]` and `[h_k(i), m_{k+1}(i)]`, `k = 1..=gamma`.
    pub well_counts: Vec<usize>,
    /// `max |W|` over the part of the path the cascade inspected.
    pub max_abs_potential: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub lnt: f64,
    pub gamma: usize,
    pub alpha: f64,
    pub epsilon: f64,
    /// Last grid index inspected (inclusive).
    pub scanned_end: usize,
    pub metrics: GoodnessMetrics,
}

/// Closed intervals `[m_k, h_k]`, `[h_k, m_{k+1}]` used for the well counts of a level.
pub(crate) fn count_intervals(level: &CascadeLevel) -> Vec<(usize, usize)> {
    let g = level.points.len();
    let mut pts = level.points.clone();
    let mut peaks = level.peaks.clone();
    if let Some(step) = &level.step {
        pts[g - 1] = step.m_gamma;
        if let (Some(h), Some(nx)) = (step.h_gamma, step.m_next) {
            pts.push(nx);
            peaks.push(h);
        }
    }
    let mut out = Vec::with_capacity(2 * peaks.len());
    for (k, &h) in peaks.iter().enumerate() {
        out.push((pts[k], h));
        out.push((h, pts[k + 1]));
    }
    out
}

fn scanned_end(trace: &CascadeTrace) -> usize {
    trace
        .levels
        .iter()
        .flat_map(|lvl| {
            let step_pts = lvl.step.iter().flat_map(|s| [Some(s.m_gamma), s.m_next]).flatten();
            lvl.points.iter().copied().chain(step_pts)
        })
        .max()
        .unwrap_or(0)
}

pub fn t_good_diagnostics(path: &Path, lnt: f64, gamma: usize) -> Result<DiagnosticsReport> {
    if !(lnt > 1.0) {
        return Err(Error::config(format!("diagnostics need lnt > 1, got {lnt}")));
    }
    let alpha = lnt.powf(-5.0 / 6.0);
    let epsilon = lnt.powf(-11.0 / 12.0);
    let trace = construct_cascade(path, lnt, gamma, alpha)?;
    let w = &path.values;

    let mut well_counts = Vec::with_capacity(trace.levels.len());
    for (i, lvl) in trace.levels.iter().enumerate() {
        let intervals = count_intervals(lvl);
        let right = intervals.iter().map(|iv| iv.1).max().unwrap_or(0);
        let threshold = (lvl.a - epsilon) * lnt;
        let minima = minima_up_to(w, threshold, right).map_err(|e| match e {
            Error::Horizon { context, deepest_index, deepest_value } => Error::Horizon {
                context: format!("well count at level {}: {context}", i + 1),
                deepest_index,
                deepest_value,
            },
            other => other,
        })?;
        let count = intervals
            .iter()
            .map(|&(a, b)| minima.iter().filter(|&&m| a <= m && m <= b).count())
            .sum();
        well_counts.push(count);
    }

    let end = scanned_end(&trace);
    let max_abs_potential = w[..=end].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let last = gamma - 1;
    let metrics = GoodnessMetrics {
        n_levels: trace.n_final,
        final_last_point: path.position(trace.final_level().points[last]),
        initial_last_point: path.position(trace.levels[0].points[last]),
        well_counts,
        max_abs_potential,
    };
    Ok(DiagnosticsReport { lnt, gamma, alpha, epsilon, scanned_end: end, metrics })
}
