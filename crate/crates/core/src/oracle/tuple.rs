//! State spaces of ordered walk positions truncated at a reflecting site `L`.
//!
//! Two propagators are provided. [`TupleChain`] stores the generator of any
//! number of walks in sparse form, indexing tuples `x_1 < ... < x_gamma <= L`
//! by their colex rank. [`PairGrid`] handles two walks with a packed
//! triangular stencil, which is several times faster and is what the
//! survival oracle uses for `gamma = 2`.

use crate::env::Environment;
use crate::error::{Error, Result};

/// One step `v -> v P` of the uniformised chain `P = I + Q / lambda`.
pub(crate) trait Propagator {
    fn len(&self) -> usize;
    fn lambda(&self) -> f64;
    fn initial(&self, starts: &[usize]) -> Vec<f64>;
    /// Writes `src P` into `dst`. Returns the mass that entered a state whose
    /// last walk sits at `L`, and the total mass of `dst`.
    fn step(&self, src: &[f64], dst: &mut [f64]) -> (f64, f64);
}

/// Per-site rates of one walk reflected at 0 and at `l`.
fn site_rates(env: &Environment, l: usize) -> (Vec<f64>, Vec<f64>) {
    let up = (0..=l).map(|x| if x < l { env.up(x) } else { 0.0 }).collect();
    let down = (0..=l).map(|x| if x > 0 { env.down(x) } else { 0.0 }).collect();
    (up, down)
}

fn binomial_table(n: usize, k: usize) -> Vec<Vec<u64>> {
    let mut c = vec![vec![0u64; k + 1]; n + 1];
    for i in 0..=n {
        c[i][0] = 1;
        for j in 1..=k.min(i) {
            c[i][j] = c[i - 1][j - 1].saturating_add(if j < i { c[i - 1][j] } else { 0 });
        }
    }
    c
}

/// Number of tuples `x_1 < ... < x_gamma <= l`, saturating.
pub(crate) fn tuple_state_count(l: usize, gamma: usize) -> u64 {
    binomial_table(l + 1, gamma)[l + 1][gamma]
}

/// Marker for a transition into the absorbing set.
const ABSORBED: u32 = u32::MAX;

/// Sparse generator of `gamma` walks on `{0..=L}`, killed when two meet.
#[derive(Clone, Debug)]
pub struct TupleChain {
    gamma: usize,
    l: usize,
    binom: Vec<Vec<u64>>,
    row_ptr: Vec<usize>,
    targets: Vec<u32>,
    rates: Vec<f64>,
    exit: Vec<f64>,
    /// Whether a transition moves the last walk onto `L`.
    to_boundary: Vec<bool>,
    lambda: f64,
}

impl TupleChain {
    /// Builds the chain, refusing state spaces larger than `max_states`.
    pub fn new(env: &Environment, gamma: usize, l: usize, max_states: usize) -> Result<Self> {
        if gamma < 2 {
            return Err(Error::config(format!("gamma must be at least 2, got {gamma}")));
        }
        if l >= env.len() || l < gamma {
            return Err(Error::config(format!(
                "truncation site L = {l} must satisfy gamma <= L < {}",
                env.len()
            )));
        }
        let binom = binomial_table(l + 1, gamma);
        let count = binom[l + 1][gamma];
        if count > max_states as u64 || count >= ABSORBED as u64 {
            return Err(Error::feasibility(format!(
                "{count} tuple states for gamma = {gamma}, L = {l} exceed the cap of {max_states}"
            )));
        }
        let n = count as usize;
        let (up, down) = site_rates(env, l);
        let mut chain = Self {
            gamma,
            l,
            binom,
            row_ptr: Vec::with_capacity(n + 1),
            targets: Vec::with_capacity(2 * gamma * n),
            rates: Vec::with_capacity(2 * gamma * n),
            exit: Vec::with_capacity(n),
            to_boundary: Vec::with_capacity(2 * gamma * n),
            lambda: 0.0,
        };
        chain.row_ptr.push(0);
        let mut x: Vec<usize> = (0..gamma).collect();
        let mut y = x.clone();
        for s in 0..n {
            debug_assert_eq!(chain.rank(&x), s);
            let mut exit = 0.0;
            for k in 0..gamma {
                if up[x[k]] > 0.0 {
                    exit += up[x[k]];
                    let hit = k + 1 < gamma && x[k + 1] == x[k] + 1;
                    let target = if hit {
                        ABSORBED
                    } else {
                        y.copy_from_slice(&x);
                        y[k] += 1;
                        chain.rank(&y) as u32
                    };
                    chain.push(target, up[x[k]], k + 1 == gamma && x[k] + 1 == l);
                }
                if down[x[k]] > 0.0 {
                    exit += down[x[k]];
                    let hit = k > 0 && x[k - 1] + 1 == x[k];
                    let target = if hit {
                        ABSORBED
                    } else {
                        y.copy_from_slice(&x);
                        y[k] -= 1;
                        chain.rank(&y) as u32
                    };
                    chain.push(target, down[x[k]], false);
                }
            }
            chain.exit.push(exit);
            chain.lambda = chain.lambda.max(exit);
            chain.row_ptr.push(chain.targets.len());
            if s + 1 < n {
                next_colex(&mut x, l);
            }
        }
        Ok(chain)
    }

    fn push(&mut self, target: u32, rate: f64, boundary: bool) {
        self.targets.push(target);
        self.rates.push(rate);
        self.to_boundary.push(boundary);
    }

    pub fn gamma(&self) -> usize {
        self.gamma
    }

    pub fn truncation(&self) -> usize {
        self.l
    }

    pub fn n_states(&self) -> usize {
        self.exit.len()
    }

    /// Colex rank of a strictly increasing tuple, `sum_i C(x_i, i + 1)`.
    pub fn rank(&self, x: &[usize]) -> usize {
        x.iter().enumerate().map(|(i, &xi)| self.binom[xi][i + 1] as usize).sum()
    }

    /// Inverse of [`rank`](Self::rank).
    pub fn state(&self, mut r: usize) -> Vec<usize> {
        let mut x = vec![0; self.gamma];
        let mut hi = self.l;
        for i in (0..self.gamma).rev() {
            while self.binom[hi][i + 1] as usize > r {
                hi -= 1;
            }
            x[i] = hi;
            r -= self.binom[hi][i + 1] as usize;
            hi = hi.saturating_sub(1);
        }
        x
    }

    /// Total jump rate out of state `s`, including jumps that end in a meeting.
    pub fn exit_rate(&self, s: usize) -> f64 {
        self.exit[s]
    }

    /// Outgoing jumps of `s` as `(target, rate)`; `None` marks a meeting.
    pub fn transitions(&self, s: usize) -> impl Iterator<Item = (Option<usize>, f64)> + '_ {
        let range = self.row_ptr[s]..self.row_ptr[s + 1];
        self.targets[range.clone()]
            .iter()
            .zip(&self.rates[range])
            .map(|(&t, &r)| ((t != ABSORBED).then_some(t as usize), r))
    }
}

/// Advances a strictly increasing tuple bounded by `l` to its colex successor.
fn next_colex(x: &mut [usize], l: usize) {
    let g = x.len();
    for i in 0..g {
        let limit = if i + 1 < g { x[i + 1] } else { l + 1 };
        if x[i] + 1 < limit {
            x[i] += 1;
            for (j, xj) in x[..i].iter_mut().enumerate() {
                *xj = j;
            }
            return;
        }
    }
    unreachable!("no colex successor of the last tuple");
}

impl Propagator for TupleChain {
    fn len(&self) -> usize {
        self.n_states()
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn initial(&self, starts: &[usize]) -> Vec<f64> {
        let mut v = vec![0.0; self.n_states()];
        v[self.rank(starts)] = 1.0;
        v
    }

    fn step(&self, src: &[f64], dst: &mut [f64]) -> (f64, f64) {
        let inv = 1.0 / self.lambda;
        for (d, (&s, &e)) in dst.iter_mut().zip(src.iter().zip(&self.exit)) {
            *d = s * (1.0 - e * inv);
        }
        let mut inflow = 0.0;
        for d in dst.iter_mut() {
            *d = flush(*d);
        }
        for (s, &mass) in src.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for k in self.row_ptr[s]..self.row_ptr[s + 1] {
                let t = self.targets[k];
                if t != ABSORBED {
                    let m = mass * self.rates[k] * inv;
                    dst[t as usize] += m;
                    if self.to_boundary[k] {
                        inflow += m;
                    }
                }
            }
        }
        (inflow, fast_sum(dst))
    }
}

/// Two walks stored as a packed upper triangle: row `i` holds the cells
/// `(i, j)` for `j = i+1..=L`.
#[derive(Clone, Debug)]
pub struct PairGrid {
    l: usize,
    /// `up / lambda`, `down / lambda` and `exit / lambda` per site.
    up: Vec<f64>,
    down: Vec<f64>,
    exit: Vec<f64>,
    row_start: Vec<usize>,
    lambda: f64,
}

impl PairGrid {
    pub fn new(env: &Environment, l: usize, max_l: usize) -> Result<Self> {
        if l >= env.len() || l < 2 {
            return Err(Error::config(format!(
                "truncation site L = {l} must satisfy 2 <= L < {}",
                env.len()
            )));
        }
        if l > max_l {
            return Err(Error::feasibility(format!("L = {l} exceeds the two-walk cap of {max_l}")));
        }
        let (up, down) = site_rates(env, l);
        let exit: Vec<f64> = up.iter().zip(&down).map(|(u, d)| u + d).collect();
        // The two largest single-walk rates at distinct sites.
        let (mut first, mut second) = (0.0_f64, 0.0_f64);
        for &e in &exit {
            if e > first {
                second = first;
                first = e;
            } else if e > second {
                second = e;
            }
        }
        let lambda = first + second;
        let scale = |v: Vec<f64>| v.into_iter().map(|r| r / lambda).collect::<Vec<_>>();
        let mut row_start = Vec::with_capacity(l + 1);
        let mut acc = 0;
        for i in 0..=l {
            row_start.push(acc);
            acc += l - i;
        }
        Ok(Self { l, up: scale(up), down: scale(down), exit: scale(exit), row_start, lambda })
    }

    /// Storage index of the cell `(i, j)`, `i < j <= L`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j <= self.l);
        self.row_start[i] + (j - i - 1)
    }

    fn row<'v>(&self, v: &'v [f64], i: usize) -> &'v [f64] {
        &v[self.row_start[i]..self.row_start[i] + (self.l - i)]
    }
}

impl Propagator for PairGrid {
    fn len(&self) -> usize {
        self.l * (self.l + 1) / 2
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn initial(&self, starts: &[usize]) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        v[self.index(starts[0], starts[1])] = 1.0;
        v
    }

    fn step(&self, src: &[f64], dst: &mut [f64]) -> (f64, f64) {
        let l = self.l;
        let (up, down, exit) = (&self.up[..], &self.down[..], &self.exit[..]);
        let mut mass = 0.0;
        for i in 0..l {
            // Row i covers columns j = i+1..=L at offsets k = j - i - 1.
            let n = l - i;
            let row = self.row(src, i);
            let stay_i = 1.0 - exit[i];
            let from_below = down[i + 1];
            let start = self.row_start[i];
            let out = &mut dst[start..start + n];

            // Rates indexed by column j = i + 1 + k.
            let ex = &exit[i + 1..=l];
            let up_left = &up[i..l]; // up rate of the walk at j - 1
            // Vertical neighbours: (i+1, j) sits at offset k - 1 of row i+1 and
            // (i-1, j) at offset k + 1 of row i-1.
            let below = if i + 1 < l { self.row(src, i + 1) } else { &[][..] };
            let above = if i > 0 { Some((self.row(src, i - 1), up[i - 1])) } else { None };

            // k = 0: the cell (i, i+1); both (i, i) and (i+1, i+1) are excluded.
            {
                let mut v = row[0] * (stay_i - ex[0]);
                if n > 1 {
                    v += row[1] * down[i + 2];
                }
                if let Some((a, ua)) = above {
                    v += a[1] * ua;
                }
                out[0] = flush(v);
            }
            if n > 1 {
                // 1 <= k < n - 1: interior cells.
                let m = n - 2;
                let mid = &row[1..n - 1];
                let left = &row[0..m];
                let right = &row[2..n];
                let bel = &below[0..m];
                let exm = &ex[1..n - 1];
                let ul = &up_left[1..n - 1];
                let dr = &down[i + 3..=l];
                let o = &mut out[1..n - 1];
                match above {
                    Some((a, ua)) => {
                        let ab = &a[2..n];
                        for k in 0..m {
                            o[k] = flush(
                                mid[k] * (stay_i - exm[k])
                                    + left[k] * ul[k]
                                    + right[k] * dr[k]
                                    + bel[k] * from_below
                                    + ab[k] * ua,
                            );
                        }
                    }
                    None => {
                        for k in 0..m {
                            o[k] = flush(
                                mid[k] * (stay_i - exm[k])
                                    + left[k] * ul[k]
                                    + right[k] * dr[k]
                                    + bel[k] * from_below,
                            );
                        }
                    }
                }
                // k = n - 1: column L, no right neighbour.
                let k = n - 1;
                let mut v = row[k] * (stay_i - ex[k]) + row[k - 1] * up_left[k] + below[k - 1] * from_below;
                if let Some((a, ua)) = above {
                    v += a[k + 1] * ua;
                }
                out[k] = flush(v);
            }
            mass += fast_sum(out);
        }
        // Entries into column L come from column L-1 through an up jump.
        let mut inflow = 0.0;
        for i in 0..l - 1 {
            inflow += src[self.index(i, l - 1)];
        }
        (inflow * up[l - 1], mass)
    }
}

/// Entries this small relative to a unit-mass vector are set to zero. Left
/// alone they decay into subnormal numbers, which slow the arithmetic down by
/// orders of magnitude; the discarded mass is below `1e-280` per entry.
const FLUSH_BELOW: f64 = 1e-280;

#[inline(always)]
fn flush(x: f64) -> f64 {
    if x < FLUSH_BELOW {
        0.0
    } else {
        x
    }
}

/// Sum of a vector with eight independent accumulators.
pub(crate) fn fast_sum(v: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let chunks = v.chunks_exact(8);
    let rest = chunks.remainder();
    for c in chunks {
        for k in 0..8 {
            acc[k] += c[k];
        }
    }
    acc.iter().sum::<f64>() + rest.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_round_trip_and_count() {
        let env = Environment::flat(20, 1.0).unwrap();
        let chain = TupleChain::new(&env, 3, 9, 10_000).unwrap();
        assert_eq!(chain.n_states(), 120);
        for s in 0..chain.n_states() {
            let x = chain.state(s);
            assert!(x.windows(2).all(|p| p[0] < p[1]) && x[2] <= 9);
            assert_eq!(chain.rank(&x), s);
        }
    }

    #[test]
    fn state_cap() {
        let env = Environment::flat(200, 1.0).unwrap();
        assert!(matches!(TupleChain::new(&env, 3, 150, 287_980), Err(Error::Feasibility(_))));
        assert!(matches!(PairGrid::new(&env, 150, 100), Err(Error::Feasibility(_))));
    }

    #[test]
    fn generator_rows_are_substochastic() {
        let env = Environment::flat(30, 1.0).unwrap();
        let chain = TupleChain::new(&env, 2, 12, 10_000).unwrap();
        for s in 0..chain.n_states() {
            let kept: f64 = chain.transitions(s).filter_map(|(t, r)| t.map(|_| r)).sum();
            assert!(kept <= chain.exit_rate(s) + 1e-15);
            assert!(chain.transitions(s).all(|(_, r)| r >= 0.0));
        }
    }

    #[test]
    fn grid_and_sparse_steps_agree() {
        let sites = (0..40)
            .map(|x| crate::env::Site { wp: 1.0 + 0.3 * ((x * 7) % 5) as f64, wm: 0.6 + 0.2 * ((x * 3) % 4) as f64 })
            .collect();
        let env = Environment::from_sites(sites, 3.0).unwrap();
        let l = 15;
        let chain = TupleChain::new(&env, 2, l, 10_000).unwrap();
        let grid = PairGrid::new(&env, l, 100).unwrap();
        assert!((chain.lambda() - grid.lambda()).abs() < 1e-14);
        let mut a = chain.initial(&[3, 5]);
        let mut b = grid.initial(&[3, 5]);
        let (mut a2, mut b2) = (vec![0.0; a.len()], vec![0.0; b.len()]);
        for _ in 0..60 {
            let (fa, ma) = chain.step(&a, &mut a2);
            let (fb, mb) = grid.step(&b, &mut b2);
            assert!((ma - mb).abs() < 1e-14);
            std::mem::swap(&mut a, &mut a2);
            std::mem::swap(&mut b, &mut b2);
            assert!((fa - fb).abs() < 1e-14);
            for (s, &value) in a.iter().enumerate().take(chain.n_states()) {
                let x = chain.state(s);
                assert!((value - b[grid.index(x[0], x[1])]).abs() < 1e-14);
            }
        }
    }
}
