//! One walk on an interval: exit probabilities, reversible measure and spectral gap.

use crate::env::Environment;
use crate::error::{Error, Result};

/// Probability that the walk started at `x` reaches `b` before `a`.
///
/// Closed form for a birth-death chain:
/// `sum_{y=a+1}^{x} e^{V(y)} / sum_{y=a+1}^{b} e^{V(y)}` with `V` the potential.
/// Exponents are shifted by the maximum of `V` on `(a, b]` so the sums cannot
/// overflow. The endpoints follow the usual convention: `x = a` gives 0 and
/// `x = b` gives 1.
pub fn hit_before(env: &Environment, a: usize, x: usize, b: usize) -> Result<f64> {
    if !(a <= x && x <= b && a < b && b < env.len()) {
        return Err(Error::domain(format!(
            "hit_before needs a <= x <= b < {} with a < b, got a={a}, x={x}, b={b}",
            env.len()
        )));
    }
    if x == a {
        return Ok(0.0);
    }
    if x == b {
        return Ok(1.0);
    }
    // V(y) - V(a+1) for y in (a, b].
    let mut v = Vec::with_capacity(b - a);
    let mut acc = 0.0;
    v.push(acc);
    for y in a + 1..b {
        acc += (env.down(y) / env.up(y)).ln();
        v.push(acc);
    }
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let terms: Vec<f64> = v.iter().map(|&e| (e - top).exp()).collect();
    let num: f64 = terms[..x - a].iter().sum();
    let den: f64 = num + terms[x - a..].iter().sum::<f64>();
    Ok(num / den)
}

/// The walk restricted to `[a, b]` with reflection at both ends.
#[derive(Clone, Copy, Debug)]
pub struct ReflectedInterval<'e> {
    pub env: &'e Environment,
    pub a: usize,
    pub b: usize,
}

impl<'e> ReflectedInterval<'e> {
    pub fn new(env: &'e Environment, a: usize, b: usize) -> Result<Self> {
        if a < b && b < env.len() {
            Ok(Self { env, a, b })
        } else {
            Err(Error::domain(format!(
                "interval [{a}, {b}] invalid for an environment of {} sites",
                env.len()
            )))
        }
    }

    pub fn len(&self) -> usize {
        self.b - self.a + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Up rate at local index `i`, zero at the right end.
    pub fn up(&self, i: usize) -> f64 {
        if self.a + i < self.b {
            self.env.up(self.a + i)
        } else {
            0.0
        }
    }

    /// Down rate at local index `i`, zero at the left end.
    pub fn down(&self, i: usize) -> f64 {
        if i > 0 {
            self.env.down(self.a + i)
        } else {
            0.0
        }
    }
}

/// Reversible probability measure of the reflected walk on `[a, b]`,
/// from detailed balance `mu(i) w+_i = mu(i+1) w-_{i+1}` accumulated in log space.
pub fn invariant_measure(ri: &ReflectedInterval) -> Vec<f64> {
    let n = ri.len();
    let mut log_mu = Vec::with_capacity(n);
    log_mu.push(0.0);
    for i in 0..n - 1 {
        let prev = log_mu[i];
        log_mu.push(prev + ri.up(i).ln() - ri.down(i + 1).ln());
    }
    let top = log_mu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut mu: Vec<f64> = log_mu.iter().map(|&l| (l - top).exp()).collect();
    let z: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|m| *m /= z);
    mu
}

/// Largest interval accepted by [`spectral_gap`].
pub const DEFAULT_GAP_CAP: usize = 2000;

/// Smallest non-zero eigenvalue of minus the generator of the reflected walk.
///
/// Writing the generator as `M^{-1} D^T C D` (difference operator `D`, edge
/// conductances `C`, measure `M`) its non-zero spectrum equals that of the
/// `(n-1) x (n-1)` edge matrix `C D M^{-1} D^T`. After the same square-root
/// symmetrisation that reversibility allows for the generator itself, this is a
/// positive definite tridiagonal matrix with diagonal `w+_i + w-_{i+1}` and
/// off-diagonal `sqrt(w+_{i+1} w-_{i+1})`, whose lowest eigenvalue is found by
/// Sturm-sequence bisection.
pub fn spectral_gap(ri: &ReflectedInterval) -> Result<f64> {
    spectral_gap_capped(ri, DEFAULT_GAP_CAP)
}

pub fn spectral_gap_capped(ri: &ReflectedInterval, cap: usize) -> Result<f64> {
    let n = ri.len();
    if n > cap {
        return Err(Error::feasibility(format!("interval of {n} sites exceeds the gap cap {cap}")));
    }
    let m = n - 1;
    let diag: Vec<f64> = (0..m).map(|i| ri.up(i) + ri.down(i + 1)).collect();
    let off2: Vec<f64> = (0..m.saturating_sub(1)).map(|i| ri.up(i + 1) * ri.down(i + 1)).collect();
    Ok(lowest_eigenvalue(&diag, &off2))
}

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix with the
/// given diagonal and squared off-diagonal.
fn count_below(diag: &[f64], off2: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let qq = if q == 0.0 { f64::EPSILON * (diag[i - 1].abs() + 1.0) } else { q };
        q = diag[i] - x - off2[i - 1] / qq;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn lowest_eigenvalue(diag: &[f64], off2: &[f64]) -> f64 {
    // Gershgorin interval; the matrix is positive definite so 0 is a valid floor.
    let mut hi = f64::NEG_INFINITY;
    for i in 0..diag.len() {
        let left = if i > 0 { off2[i - 1].sqrt() } else { 0.0 };
        let right = if i < off2.len() { off2[i].sqrt() } else { 0.0 };
        hi = hi.max(diag[i] + left + right);
    }
    let mut lo = 0.0_f64;
    while hi - lo > 4.0 * f64::EPSILON * hi.abs().max(f64::MIN_POSITIVE) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(diag, off2, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
