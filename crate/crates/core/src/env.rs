//! Random environments, their laws, and the potential they induce.
//!
//! A site `x` carries a pair of jump rates `(w_plus, w_minus)`: the walk at `x`
//! moves to `x + 1` at rate `w_plus` and to `x - 1` at rate `w_minus` (the latter
//! is suppressed at the origin). The potential is the cumulative sum of
//! `ln(w_minus / w_plus)`, so valleys of the potential are where walks get trapped.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// One row of a user-supplied site law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub wp: f64,
    pub wm: f64,
    pub prob: f64,
}

/// Marginal law of a single site. All kinds are i.i.d. across sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LawKind {
    /// `(w_plus, w_minus)` is `(rho, 1/rho)` or `(1/rho, rho)` with probability 1/2 each,
    /// so `ln(w_plus / w_minus) = ±2 ln rho`.
    BernoulliSymmetric,
    /// `ln(w_plus / w_minus)` uniform on `[-ln rho, ln rho]`, rates `exp(±X/2)`.
    UniformLogratio,
    /// Finite table of rate pairs with probabilities.
    CustomTable { entries: Vec<TableEntry> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentLaw {
    #[serde(flatten)]
    pub kind: LawKind,
    /// Log-ratio magnitude parameter; NaN (stored as `null`) for `custom-table`.
    #[serde(deserialize_with = "null_as_nan")]
    pub rho: f64,
    /// Ellipticity bound: every rate must lie in `[1/kappa, kappa]`.
    pub kappa: f64,
}

fn null_as_nan<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Outcome of checking a law against the zero-drift, finite-variance and
/// uniform-ellipticity requirements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `E[ln(w_plus / w_minus)]`, evaluated in closed form for the law.
    pub mean_log_ratio: f64,
    /// `E[ln^2(w_plus / w_minus)]`.
    pub sigma2: f64,
    /// Zero mean and `sigma2` in `(0, inf)`.
    pub zero_drift: bool,
    /// `kappa > 1` and every producible rate lies in `[1/kappa, kappa]`.
    pub kappa_feasible: bool,
    pub problems: Vec<String>,
}

impl ConditionReport {
    pub fn ok(&self) -> bool {
        self.zero_drift && self.kappa_feasible
    }
}

const TABLE_TOL: f64 = 1e-12;

impl EnvironmentLaw {
    pub fn bernoulli(rho: f64, kappa: f64) -> Self {
        Self { kind: LawKind::BernoulliSymmetric, rho, kappa }
    }

    pub fn uniform(rho: f64, kappa: f64) -> Self {
        Self { kind: LawKind::UniformLogratio, rho, kappa }
    }

    pub fn table(entries: Vec<TableEntry>, kappa: f64) -> Self {
        Self { kind: LawKind::CustomTable { entries }, rho: f64::NAN, kappa }
    }

    /// Smallest and largest rate the law can produce.
    fn rate_range(&self) -> (f64, f64) {
        match &self.kind {
            LawKind::BernoulliSymmetric => (1.0 / self.rho, self.rho),
            LawKind::UniformLogratio => {
                let s = self.rho.sqrt();
                (1.0 / s, s)
            }
            LawKind::CustomTable { entries } => entries.iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), e| (lo.min(e.wp).min(e.wm), hi.max(e.wp).max(e.wm)),
            ),
        }
    }

    /// Closed-form mean and second moment of `ln(w_plus / w_minus)`.
    fn log_ratio_moments(&self) -> (f64, f64) {
        match &self.kind {
            LawKind::BernoulliSymmetric => {
                let x = 2.0 * self.rho.ln();
                (0.0, x * x)
            }
            LawKind::UniformLogratio => {
                let c = self.rho.ln();
                (0.0, c * c / 3.0)
            }
            LawKind::CustomTable { entries } => entries.iter().fold((0.0, 0.0), |(m, s), e| {
                let x = (e.wp / e.wm).ln();
                (m + e.prob * x, s + e.prob * x * x)
            }),
        }
    }

    pub fn conditions(&self) -> ConditionReport {
        let mut problems = Vec::new();
        let parametric = !matches!(self.kind, LawKind::CustomTable { .. });
        if parametric && !(self.rho > 1.0) {
            problems.push(format!("rho must exceed 1, got {}", self.rho));
        }
        if let LawKind::CustomTable { entries } = &self.kind {
            if entries.is_empty() {
                problems.push("custom table is empty".into());
            }
            if entries.iter().any(|e| !(e.prob > 0.0) || !(e.wp > 0.0) || !(e.wm > 0.0)) {
                problems.push("custom table needs positive rates and probabilities".into());
            }
            let total: f64 = entries.iter().map(|e| e.prob).sum();
            if (total - 1.0).abs() > TABLE_TOL {
                problems.push(format!("custom table probabilities sum to {total}, not 1"));
            }
        }

        let (mean, sigma2) = self.log_ratio_moments();
        let zero_drift = problems.is_empty()
            && mean.abs() <= TABLE_TOL
            && sigma2 > 0.0
            && sigma2.is_finite();
        if problems.is_empty() && !zero_drift {
            problems.push(format!(
                "need E ln(w+/w-) = 0 and 0 < E ln^2(w+/w-) < inf, got mean {mean}, sigma2 {sigma2}"
            ));
        }

        let mut kappa_feasible = self.kappa > 1.0;
        if !kappa_feasible {
            problems.push(format!(
                "uniform ellipticity (Condition B) requires kappa > 1, got {}",
                self.kappa
            ));
        } else {
            let (lo, hi) = self.rate_range();
            if !(lo >= 1.0 / self.kappa && hi <= self.kappa) {
                kappa_feasible = false;
                problems.push(format!(
                    "uniform ellipticity (Condition B) violated: rates span [{lo}, {hi}] but kappa = {} allows [{}, {}]",
                    self.kappa,
                    1.0 / self.kappa,
                    self.kappa
                ));
            }
        }

        ConditionReport { mean_log_ratio: mean, sigma2, zero_drift, kappa_feasible, problems }
    }

    fn validate(&self) -> Result<()> {
        let report = self.conditions();
        if report.ok() {
            Ok(())
        } else {
            Err(Error::config(report.problems.join("; ")))
        }
    }

    fn draw(&self, rng: &mut impl Rng) -> Site {
        match &self.kind {
            LawKind::BernoulliSymmetric => {
                if rng.random::<bool>() {
                    Site { wp: self.rho, wm: 1.0 / self.rho }
                } else {
                    Site { wp: 1.0 / self.rho, wm: self.rho }
                }
            }
            LawKind::UniformLogratio => {
                let c = self.rho.ln();
                let x = c * (2.0 * rng.random::<f64>() - 1.0);
                Site { wp: (0.5 * x).exp(), wm: (-0.5 * x).exp() }
            }
            LawKind::CustomTable { entries } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for e in entries {
                    acc += e.prob;
                    if u < acc {
                        return Site { wp: e.wp, wm: e.wm };
                    }
                }
                let last = entries.last().expect("validated non-empty");
                Site { wp: last.wp, wm: last.wm }
            }
        }
    }
}

/// Checks a law without generating anything.
pub fn validate_conditions(law: &EnvironmentLaw) -> ConditionReport {
    law.conditions()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub wp: f64,
    pub wm: f64,
}

/// A quenched environment on sites `0..len()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<EnvironmentLaw>,
    pub kappa: f64,
    pub seed: u64,
    pub sites: Vec<Site>,
}

impl Environment {
    /// Builds an environment from explicit rates, checking the ellipticity bound.
    pub fn from_sites(sites: Vec<Site>, kappa: f64) -> Result<Self> {
        let env = Self { law: None, kappa, seed: 0, sites };
        env.validate()?;
        Ok(env)
    }

    /// Every site has rates `(rate, rate)`; the potential is identically zero.
    pub fn flat(n_sites: usize, rate: f64) -> Result<Self> {
        let kappa = 2.0 * rate.max(1.0 / rate);
        Self::from_sites(vec![Site { wp: rate, wm: rate }; n_sites], kappa)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites.len() < 2 {
            return Err(Error::config("an environment needs at least 2 sites"));
        }
        if !(self.kappa > 1.0) {
            return Err(Error::config(format!(
                "uniform ellipticity (Condition B) requires kappa > 1, got {}",
                self.kappa
            )));
        }
        let lo = 1.0 / self.kappa;
        for (x, s) in self.sites.iter().enumerate() {
            for w in [s.wp, s.wm] {
                if !(w >= lo && w <= self.kappa) {
                    return Err(Error::config(format!(
                        "site {x}: rate {w} outside [{lo}, {}]",
                        self.kappa
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    #[inline]
    pub fn up(&self, x: usize) -> f64 {
        self.sites[x].wp
    }

    #[inline]
    pub fn down(&self, x: usize) -> f64 {
        self.sites[x].wm
    }

    pub fn min_rate(&self) -> f64 {
        self.sites.iter().fold(f64::INFINITY, |m, s| m.min(s.wp).min(s.wm))
    }

    pub fn max_rate(&self) -> f64 {
        self.sites.iter().fold(0.0, |m: f64, s| m.max(s.wp).max(s.wm))
    }
}

/// Draws `n_sites` i.i.d. sites from `law`. Deterministic in `(law, n_sites, seed)`.
pub fn gen_environment(law: &EnvironmentLaw, n_sites: usize, seed: u64) -> Result<Environment> {
    if n_sites < 2 {
        return Err(Error::config("n_sites must be at least 2"));
    }
    law.validate()?;
    let mut rng = stream_rng(seed, 0);
    let sites = (0..n_sites).map(|_| law.draw(&mut rng)).collect();
    Ok(Environment { law: Some(law.clone()), kappa: law.kappa, seed, sites })
}

/// A real-valued landscape sampled on the grid `x_i = i * step`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub step: f64,
    pub values: Vec<f64>,
    /// Diffusion constant for Brownian samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
}

impl Path {
    pub fn new(step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::config(format!("path step must be positive, got {step}")));
        }
        match values.first() {
            None => return Err(Error::config("path must have at least one value")),
            Some(&v0) if v0 != 0.0 => {
                return Err(Error::config(format!("path must start at 0, got {v0}")))
            }
            _ => {}
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("path values must be finite"));
        }
        Ok(Self { step, values, sigma2: None })
    }

    /// Unit-step path from raw values (convenience for tests and the CLI).
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(1.0, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Real position of grid index `i`.
    pub fn position(&self, i: usize) -> f64 {
        i as f64 * self.step
    }
}

/// `V(x) = sum_{i<x} ln(w_minus_i / w_plus_i)` on `x = 0..=n_sites`.
pub fn potential(env: &Environment) -> Path {
    let mut values = Vec::with_capacity(env.len() + 1);
    let mut acc = 0.0;
    values.push(acc);
    for s in &env.sites {
        acc += (s.wm / s.wp).ln();
        values.push(acc);
    }
    Path { step: 1.0, values, sigma2: None }
}

/// Brownian motion with `Var W(x) = sigma2 * x` sampled at `length` grid points.
///
/// The increments are drawn sequentially from one stream, so a longer path with
/// the same seed extends a shorter one.
pub fn sample_brownian(sigma2: f64, step: f64, length: usize, seed: u64) -> Result<Path> {
    Ok(GrowingBrownian::new(sigma2, step, length, seed)?.into_path())
}

/// A Brownian path that can be lengthened in place. Its values always equal
/// those of [`sample_brownian`] with the same parameters and seed.
pub struct GrowingBrownian {
    path: Path,
    rng: ChaCha8Rng,
    sd: f64,
}

impl GrowingBrownian {
    pub fn new(sigma2: f64, step: f64, length: usize, seed: u64) -> Result<Self> {
        if !(sigma2 > 0.0) || !(step > 0.0) || length == 0 {
            return Err(Error::config(format!(
                "sample_brownian needs sigma2 > 0, step > 0, length > 0 (got {sigma2}, {step}, {length})"
            )));
        }
        let mut grower = Self {
            path: Path { step, values: vec![0.0], sigma2: Some(sigma2) },
            rng: stream_rng(seed, 0),
            sd: (sigma2 * step).sqrt(),
        };
        grower.extend_to(length);
        Ok(grower)
    }

    /// Appends increments until the path has `length` points; never shortens.
    pub fn extend_to(&mut self, length: usize) {
        let values = &mut self.path.values;
        values.reserve(length.saturating_sub(values.len()));
        let mut acc = *values.last().expect("path is never empty");
        while values.len() < length {
            let z: f64 = self.rng.sample(StandardNormal);
            acc += self.sd * z;
            values.push(acc);
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn into_path(self) -> Path {
        self.path
    }
}
