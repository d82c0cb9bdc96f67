//! Stable points (h-minima) of a grid landscape and the wells they induce.
//!
//! A point `m` is stable at threshold `h` when the landscape rises by at least `h`
//! on both sides of `m` before dipping below `W(m)`. The first stable point is
//! only protected on the right, since the walks are reflected at the origin.
//! Ties go to the leftmost index.
//!
//! Everything here compares differences `W(x) - W(m) >= h` so that a threshold
//! taken from an exact difference of two path values reproduces that difference
//! bit for bit.

use serde::{Deserialize, Serialize};

use crate::env::Path;
use crate::error::{Error, Result};

/// Online detector of alternating h-minima and h-maxima.
#[derive(Clone, Debug)]
pub(crate) struct MinimaScanner<'a> {
    w: &'a [f64],
    h: f64,
    next: usize,
    seeking_min: bool,
    cand: usize,
}

impl<'a> MinimaScanner<'a> {
    pub(crate) fn new(w: &'a [f64], h: f64) -> Self {
        debug_assert!(h > 0.0);
        Self { w, h, next: 1, seeking_min: true, cand: 0 }
    }

    /// Next confirmed stable point, or `None` when the path ends first.
    pub(crate) fn next_min(&mut self) -> Option<usize> {
        while self.next < self.w.len() {
            let x = self.next;
            self.next += 1;
            let wx = self.w[x];
            let wc = self.w[self.cand];
            if self.seeking_min {
                if wx < wc {
                    self.cand = x;
                } else if wx - wc >= self.h {
                    let m = self.cand;
                    self.seeking_min = false;
                    self.cand = x;
                    return Some(m);
                }
            } else if wx > wc {
                self.cand = x;
            } else if wc - wx >= self.h {
                self.seeking_min = true;
                self.cand = x;
            }
        }
        None
    }

    /// No stable point not yet returned lies at or before this index.
    pub(crate) fn pending_lower_bound(&self) -> usize {
        if self.seeking_min {
            self.cand
        } else {
            self.cand + 1
        }
    }

    /// Lowest point among the current minimum candidates; used in error reports.
    pub(crate) fn deepest(&self) -> (usize, f64) {
        if self.seeking_min {
            (self.cand, self.w[self.cand])
        } else {
            let (i, v) = self.w[..self.next]
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
            (i, v)
        }
    }

    pub(crate) fn horizon_error(&self, context: impl Into<String>) -> Error {
        let (deepest_index, deepest_value) = self.deepest();
        Error::Horizon { context: context.into(), deepest_index, deepest_value }
    }
}

/// Leftmost argmax of `w` over the open index interval `(a, b)`.
pub(crate) fn argmax_open(w: &[f64], a: usize, b: usize) -> usize {
    debug_assert!(b > a + 1, "empty open interval ({a}, {b})");
    let mut best = a + 1;
    for i in a + 2..b {
        if w[i] > w[best] {
            best = i;
        }
    }
    best
}

/// The first `count` stable points at threshold `h`, with the separating peaks.
pub(crate) fn first_minima(w: &[f64], h: f64, count: usize) -> Result<Vec<usize>> {
    let mut scan = MinimaScanner::new(w, h);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        match scan.next_min() {
            Some(m) => out.push(m),
            None => {
                return Err(scan.horizon_error(format!(
                    "found {} of {count} stable points at threshold {h}",
                    out.len()
                )))
            }
        }
    }
    Ok(out)
}

/// All stable points at threshold `h` that are `<= x_max`.
pub(crate) fn minima_up_to(w: &[f64], h: f64, x_max: usize) -> Result<Vec<usize>> {
    let mut scan = MinimaScanner::new(w, h);
    let mut out = Vec::new();
    while scan.pending_lower_bound() <= x_max {
        match scan.next_min() {
            Some(m) if m <= x_max => out.push(m),
            Some(_) => break,
            None => {
                return Err(scan.horizon_error(format!(
                    "cannot decide stable points up to index {x_max} at threshold {h} ({} confirmed)",
                    out.len()
                )))
            }
        }
    }
    Ok(out)
}

/// Peaks separating consecutive minima, preceded by the origin.
pub(crate) fn separating_peaks(w: &[f64], minima: &[usize]) -> Vec<usize> {
    let mut peaks = Vec::with_capacity(minima.len());
    peaks.push(0);
    peaks.extend(minima.windows(2).map(|p| argmax_open(w, p[0], p[1])));
    peaks.truncate(minima.len().max(1));
    peaks
}

/// Ordered stable points, their separating peaks and the analysed range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableDecomposition {
    pub lnt: f64,
    pub minima: Vec<usize>,
    /// `peaks[0] = 0`; `peaks[i]` is the leftmost argmax between `minima[i-1]` and `minima[i]`.
    pub peaks: Vec<usize>,
    /// Exclusive right end of the last well.
    pub range_end: usize,
    pub wells: Vec<(usize, usize)>,
}

/// The first t-stable point to the right of the origin (grid index).
pub fn first_stable_point(path: &Path, lnt: f64) -> Result<usize> {
    check_lnt(lnt)?;
    let mut scan = MinimaScanner::new(&path.values, lnt);
    scan.next_min().ok_or_else(|| scan.horizon_error("no first stable point"))
}

/// Every t-stable point `<= x_max` together with the separating peaks and wells.
pub fn stable_points(path: &Path, lnt: f64, x_max: usize) -> Result<StableDecomposition> {
    check_lnt(lnt)?;
    let w = &path.values;
    let minima = minima_up_to(w, lnt, x_max)?;
    if minima.is_empty() {
        // The scan proved that nothing qualifies before x_max.
        let scan = MinimaScanner::new(w, lnt);
        return Err(scan.horizon_error(format!("no stable point at or before index {x_max}")));
    }
    let peaks = separating_peaks(w, &minima);
    let range_end = x_max.max(minima[minima.len() - 1] + 1);
    let mut dec = StableDecomposition { lnt, minima, peaks, range_end, wells: Vec::new() };
    dec.wells = wells(&dec);
    Ok(dec)
}

/// Half-open wells `[peaks[i], peaks[i+1])`; the last one ends at `range_end`.
pub fn wells(dec: &StableDecomposition) -> Vec<(usize, usize)> {
    let k = dec.peaks.len();
    (0..k)
        .map(|i| {
            let right = if i + 1 < k { dec.peaks[i + 1] } else { dec.range_end };
            (dec.peaks[i], right)
        })
        .collect()
}

pub(crate) fn check_lnt(lnt: f64) -> Result<()> {
    if lnt > 0.0 && lnt.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("lnt must be positive and finite, got {lnt}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(v: &[f64]) -> Path {
        Path::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn worked_example() {
        let p = path(&[0.0, -3.0, 1.0, -5.0, 2.0]);
        assert_eq!(first_stable_point(&p, 2.0).unwrap(), 1);
        let dec = stable_points(&p, 2.0, 4).unwrap();
        assert_eq!(dec.minima, vec![1, 3]);
        assert_eq!(dec.peaks, vec![0, 2]);
        assert_eq!(dec.wells, vec![(0, 2), (2, 4)]);
    }

    #[test]
    fn increasing_path_starts_at_origin() {
        let p = path(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(first_stable_point(&p, 4.0).unwrap(), 0);
        assert_eq!(first_stable_point(&p, 2.5).unwrap(), 0);
    }

    #[test]
    fn horizon_errors() {
        let p = path(&[0.0, -3.0, 1.0, -5.0, 2.0]);
        match first_stable_point(&p, 10.0) {
            Err(Error::Horizon { deepest_index, deepest_value, .. }) => {
                assert_eq!(deepest_index, 3);
                assert_eq!(deepest_value, -5.0);
            }
            other => panic!("expected horizon error, got {other:?}"),
        }
        let flat = path(&[0.0; 20]);
        assert!(matches!(stable_points(&flat, 1.0, 10), Err(Error::Horizon { .. })));
    }

    #[test]
    fn single_point_single_well() {
        let p = path(&[0.0, -2.0, -3.0, 0.0, 1.0]);
        let dec = stable_points(&p, 2.0, 3).unwrap();
        assert_eq!(dec.minima, vec![2]);
        assert_eq!(dec.wells, vec![(0, 3)]);
        // Index 4 could still turn out stable once the path continues.
        assert!(matches!(stable_points(&p, 2.0, 4), Err(Error::Horizon { .. })));
    }

    #[test]
    fn every_point_inside_its_well() {
        let p = path(&[0.0, -3.0, 1.0, -5.0, 2.0, -1.0, 4.0, 0.5, 7.0]);
        let dec = stable_points(&p, 2.0, 7).unwrap();
        for (m, (a, b)) in dec.minima.iter().zip(&dec.wells) {
            assert!(a <= m && m < b, "{m} not in [{a},{b})");
        }
    }
}
