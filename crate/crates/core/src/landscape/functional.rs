//! Functionals of a landscape on an interval: elevation, barrier heights and the
//! weighted depth sum of the first stable wells.

use serde::{Deserialize, Serialize};

use crate::env::Path;
use crate::error::{Error, Result};
use crate::landscape::stable::{argmax_open, check_lnt, first_minima};

fn check_interval(path: &Path, a: usize, b: usize) -> Result<()> {
    if a < b && b < path.len() {
        Ok(())
    } else {
        Err(Error::domain(format!("interval [{a}, {b}] invalid for path of length {}", path.len())))
    }
}

/// Elevation of `[a, b]`: the highest climb needed to reach the interval minimum
/// from any of its points, `max_{x,y} max_{z in [x,y]} W(z) - W(x) - W(y) + min W`.
///
/// The outer maximum is attained with `y` at the (leftmost) global minimum, so a
/// running-max sweep outward from the minimum suffices.
pub fn elevation(path: &Path, a: usize, b: usize) -> Result<f64> {
    check_interval(path, a, b)?;
    Ok(elevation_unchecked(&path.values, a, b))
}

pub(crate) fn elevation_unchecked(w: &[f64], a: usize, b: usize) -> f64 {
    let g = (a..=b).fold(a, |g, i| if w[i] < w[g] { i } else { g });
    let mut best = 0.0_f64;
    let mut run = w[g];
    for x in (a..g).rev() {
        run = run.max(w[x]);
        best = best.max(run - w[x]);
    }
    run = w[g];
    for &v in &w[g + 1..=b] {
        run = run.max(v);
        best = best.max(run - v);
    }
    best
}

/// Barrier heights of an interval for escapes to the right (`h_plus`) and left (`h_minus`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Barrier {
    pub h_plus: f64,
    pub h_minus: f64,
    pub h: f64,
}

/// `H+ = max_x (max_{[x,b]} W - min_{[a,x)} W)`, `H- = max_x (max_{[a,x]} W - min_{(x,b]} W)`,
/// `H = min(H+, H-)`. Terms with an empty inner range are skipped and values are
/// floored at zero.
pub fn barrier_h(path: &Path, a: usize, b: usize) -> Result<Barrier> {
    check_interval(path, a, b)?;
    let w = &path.values;
    let n = b - a + 1;

    // suffix_max[k] = max W on [a+k, b]; prefix_min over [a, a+k)
    let mut suffix_max = vec![f64::NEG_INFINITY; n];
    let mut run = f64::NEG_INFINITY;
    for k in (0..n).rev() {
        run = run.max(w[a + k]);
        suffix_max[k] = run;
    }
    let mut h_plus = f64::NEG_INFINITY;
    let mut pmin = f64::INFINITY;
    for k in 1..n {
        pmin = pmin.min(w[a + k - 1]);
        h_plus = h_plus.max(suffix_max[k] - pmin);
    }

    // suffix_min over (x, b], prefix max over [a, x]
    let mut suffix_min = vec![f64::INFINITY; n];
    let mut run = f64::INFINITY;
    for k in (0..n).rev() {
        suffix_min[k] = run;
        run = run.min(w[a + k]);
    }
    let mut h_minus = f64::NEG_INFINITY;
    let mut pmax = f64::NEG_INFINITY;
    for k in 0..n - 1 {
        pmax = pmax.max(w[a + k]);
        h_minus = h_minus.max(pmax - suffix_min[k]);
    }

    let h_plus = h_plus.max(0.0);
    let h_minus = h_minus.max(0.0);
    Ok(Barrier { h_plus, h_minus, h: h_plus.min(h_minus) })
}

/// The first `gamma` stable points, the peaks between them, and the weighted depth sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaDetail {
    pub lnt: f64,
    pub gamma: usize,
    pub minima: Vec<usize>,
    pub peaks: Vec<usize>,
    /// `(W(peak_i) - W(min_i)) / lnt`, each at least 1.
    pub depths: Vec<f64>,
    pub zeta: f64,
}

/// `sum_{i<gamma} (gamma - i) (W(h_i) - W(m_i)) / lnt` over the first `gamma` t-stable points.
pub fn zeta(path: &Path, lnt: f64, gamma: usize) -> Result<f64> {
    zeta_detail(path, lnt, gamma).map(|d| d.zeta)
}

pub fn zeta_detail(path: &Path, lnt: f64, gamma: usize) -> Result<ZetaDetail> {
    check_lnt(lnt)?;
    if gamma < 2 {
        return Err(Error::config(format!("gamma must be at least 2, got {gamma}")));
    }
    let w = &path.values;
    let minima = first_minima(w, lnt, gamma)?;
    let peaks: Vec<usize> = minima.windows(2).map(|p| argmax_open(w, p[0], p[1])).collect();
    let depths: Vec<f64> = peaks.iter().zip(&minima).map(|(&h, &m)| (w[h] - w[m]) / lnt).collect();
    let zeta = depths.iter().enumerate().map(|(i, d)| (gamma - 1 - i) as f64 * d).sum();
    Ok(ZetaDetail { lnt, gamma, minima, peaks, depths, zeta })
}
