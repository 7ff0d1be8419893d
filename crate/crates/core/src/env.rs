//! Site-weight laws and the random environments built from them.
//!
//! Weights are never stored: each `η(k, x)` is a pure function of the seed,
//! the time step and the site, produced by a counter-based SplitMix64 hash.
//! Any sub-window or translated view therefore regenerates identically.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{LabError, Result};
use crate::lattice::l1_ball;
use crate::numeric::{golden_section_max, log_add_exp, log_sum_exp, ExtReal};

/// Law of a single site weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub enum DistributionModel {
    Bernoulli { p: f64 },
    Gaussian { mean: f64, variance: f64 },
    FiniteDiscrete { values: Vec<f64>, probs: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
enum RawModel {
    Bernoulli { p: f64 },
    Gaussian { mean: f64, variance: f64 },
    FiniteDiscrete { values: Vec<f64>, probs: Vec<f64> },
}

impl TryFrom<RawModel> for DistributionModel {
    type Error = LabError;

    fn try_from(raw: RawModel) -> Result<Self> {
        match raw {
            RawModel::Bernoulli { p } => DistributionModel::bernoulli(p),
            RawModel::Gaussian { mean, variance } => DistributionModel::gaussian(mean, variance),
            RawModel::FiniteDiscrete { values, probs } => {
                DistributionModel::finite_discrete(values, probs)
            }
        }
    }
}

impl From<DistributionModel> for RawModel {
    fn from(m: DistributionModel) -> Self {
        match m {
            DistributionModel::Bernoulli { p } => RawModel::Bernoulli { p },
            DistributionModel::Gaussian { mean, variance } => RawModel::Gaussian { mean, variance },
            DistributionModel::FiniteDiscrete { values, probs } => {
                RawModel::FiniteDiscrete { values, probs }
            }
        }
    }
}

const CONJUGATE_BRACKET: f64 = 50.0;
const CONJUGATE_TOL: f64 = 1e-10;

impl DistributionModel {
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(LabError::InvalidModel(format!(
                "Bernoulli parameter must lie in (0,1), got {p}"
            )));
        }
        Ok(DistributionModel::Bernoulli { p })
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !(variance > 0.0 && variance.is_finite()) {
            return Err(LabError::InvalidModel(format!(
                "Gaussian needs finite mean and positive variance, got ({mean}, {variance})"
            )));
        }
        Ok(DistributionModel::Gaussian { mean, variance })
    }

    pub fn finite_discrete(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(LabError::InvalidModel(
                "finite-discrete law needs matching, nonempty values and probs".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::InvalidModel("values must be finite".into()));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(LabError::InvalidModel("probabilities must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(LabError::InvalidModel(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        for (i, a) in values.iter().enumerate() {
            if values[i + 1..].contains(a) {
                return Err(LabError::InvalidModel(format!("duplicate value {a}")));
            }
        }
        Ok(DistributionModel::FiniteDiscrete { values, probs })
    }

    /// Point mass at `c`.
    pub fn degenerate(c: f64) -> Result<Self> {
        Self::finite_discrete(vec![c], vec![1.0])
    }

    /// Symmetric `±1` weights.
    pub fn rademacher() -> Self {
        DistributionModel::FiniteDiscrete {
            values: vec![-1.0, 1.0],
            probs: vec![0.5, 0.5],
        }
    }

    /// `m = Q[η]`.
    pub fn mean(&self) -> f64 {
        match self {
            DistributionModel::Bernoulli { p } => *p,
            DistributionModel::Gaussian { mean, .. } => *mean,
            DistributionModel::FiniteDiscrete { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| v * p).sum()
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            DistributionModel::Bernoulli { p } => p * (1.0 - p),
            DistributionModel::Gaussian { variance, .. } => *variance,
            DistributionModel::FiniteDiscrete { values, probs } => {
                let m = self.mean();
                values.iter().zip(probs).map(|(v, p)| p * (v - m) * (v - m)).sum()
            }
        }
    }

    /// Log-moment generating function `λ(β) = log Q[e^{βη}]`.
    pub fn log_mgf(&self, beta: f64) -> f64 {
        match self {
            DistributionModel::Bernoulli { p } => log_add_exp((1.0 - p).ln(), p.ln() + beta),
            DistributionModel::Gaussian { mean, variance } => {
                mean * beta + 0.5 * variance * beta * beta
            }
            DistributionModel::FiniteDiscrete { values, probs } => {
                let terms: Vec<f64> = values
                    .iter()
                    .zip(probs)
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(v, p)| p.ln() + beta * v)
                    .collect();
                log_sum_exp(&terms)
            }
        }
    }

    /// Closed interval carrying the law, `None` when unbounded.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            DistributionModel::Bernoulli { .. } => Some((0.0, 1.0)),
            DistributionModel::Gaussian { .. } => None,
            DistributionModel::FiniteDiscrete { values, probs } => {
                let charged = values.iter().zip(probs).filter(|(_, p)| **p > 0.0);
                let lo = charged.clone().map(|(v, _)| *v).fold(f64::INFINITY, f64::min);
                let hi = charged.map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
                Some((lo, hi))
            }
        }
    }

    /// Whether every atom is an integer, so exact path counting applies
    /// without quantization.
    pub fn is_integer_valued(&self) -> bool {
        match self {
            DistributionModel::Bernoulli { .. } => true,
            DistributionModel::Gaussian { .. } => false,
            DistributionModel::FiniteDiscrete { values, .. } => {
                values.iter().all(|v| v.fract() == 0.0)
            }
        }
    }

    /// Legendre conjugate `λ*(ρ) = sup_β (ρβ − λ(β))`.
    pub fn log_mgf_conjugate(&self, rho: f64) -> ExtReal {
        match self {
            DistributionModel::Bernoulli { p } => {
                if !(0.0..=1.0).contains(&rho) {
                    return ExtReal::PosInfinity;
                }
                ExtReal::Finite(xlogy(rho, rho / p) + xlogy(1.0 - rho, (1.0 - rho) / (1.0 - p)))
            }
            DistributionModel::Gaussian { mean, variance } => {
                ExtReal::Finite((rho - mean) * (rho - mean) / (2.0 * variance))
            }
            DistributionModel::FiniteDiscrete { values, probs } => {
                let (lo, hi) = self.support().expect("finite support");
                if rho < lo || rho > hi {
                    return ExtReal::PosInfinity;
                }
                if rho == lo || rho == hi {
                    let mass: f64 = values
                        .iter()
                        .zip(probs)
                        .filter(|(v, _)| **v == rho)
                        .map(|(_, p)| *p)
                        .sum();
                    return ExtReal::Finite(-mass.ln());
                }
                let (_, best) = golden_section_max(
                    |b| rho * b - self.log_mgf(b),
                    -CONJUGATE_BRACKET,
                    CONJUGATE_BRACKET,
                    CONJUGATE_TOL,
                );
                ExtReal::Finite(best.max(0.0))
            }
        }
    }

    /// Maps a uniform `u ∈ (0,1)` to a draw of the law. One uniform per site.
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            DistributionModel::Bernoulli { p } => {
                if u < *p {
                    1.0
                } else {
                    0.0
                }
            }
            DistributionModel::Gaussian { mean, variance } => Normal::new(*mean, variance.sqrt())
                .expect("validated parameters")
                .inverse_cdf(u),
            DistributionModel::FiniteDiscrete { values, probs } => {
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                // rounding left the cumulative sum just below 1
                let last = probs.iter().rposition(|p| *p > 0.0).unwrap_or(values.len() - 1);
                values[last]
            }
        }
    }
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// SplitMix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn absorb(state: u64, word: u64) -> u64 {
    splitmix64(state ^ word)
}

const SITE_DOMAIN: u64 = 0x5349_5445_5f4b_4559;
const REPLICA_DOMAIN: u64 = 0x5245_504c_4943_4153;

/// Hash of `(seed, k, x)`; the key of a single site weight.
pub fn site_key(seed: u64, step: usize, site: &[i64]) -> u64 {
    let mut h = absorb(splitmix64(seed), SITE_DOMAIN);
    h = absorb(h, step as u64);
    for &c in site {
        h = absorb(h, c as u64);
    }
    h
}

/// Seed of replica `index` under a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    absorb(absorb(splitmix64(master), REPLICA_DOMAIN), index)
}

/// Top 53 bits mapped to the open interval (0, 1).
pub fn unit_open(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Read access to a space-time weight field `η(k, x)`, `k ≥ 1`.
pub trait Environment {
    fn dim(&self) -> usize;

    /// Largest time step available.
    fn horizon(&self) -> usize;

    fn weight(&self, step: usize, site: &[i64]) -> Result<f64>;
}

impl<E: Environment + ?Sized> Environment for &E {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn horizon(&self) -> usize {
        (**self).horizon()
    }

    fn weight(&self, step: usize, site: &[i64]) -> Result<f64> {
        (**self).weight(step, site)
    }
}

fn l1(site: &[i64]) -> i64 {
    site.iter().map(|c| c.abs()).sum()
}

/// IID weights on `{(k, x) : 1 ≤ k ≤ n_max, |x|₁ ≤ k + margin}` derived from a
/// seed.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeEnvironment {
    model: DistributionModel,
    dim: usize,
    n_max: usize,
    seed: u64,
    margin: usize,
}

/// Draws an environment. `margin` defaults to zero; widen it with
/// [`LatticeEnvironment::with_margin`] to start walks away from the origin.
pub fn sample_environment(
    model: &DistributionModel,
    d: usize,
    n_max: usize,
    seed: u64,
) -> Result<LatticeEnvironment> {
    if d < 1 {
        return Err(LabError::InvalidArgument("dimension must be at least 1".into()));
    }
    if n_max < 1 {
        return Err(LabError::InvalidArgument("horizon must be at least 1".into()));
    }
    Ok(LatticeEnvironment {
        model: model.clone(),
        dim: d,
        n_max,
        seed,
        margin: 0,
    })
}

impl LatticeEnvironment {
    pub fn with_margin(mut self, margin: usize) -> Self {
        self.margin = margin;
        self
    }

    pub fn model(&self) -> &DistributionModel {
        &self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn contains(&self, step: usize, site: &[i64]) -> bool {
        step >= 1
            && step <= self.n_max
            && site.len() == self.dim
            && l1(site) <= (step + self.margin) as i64
    }

    pub fn descriptor(&self) -> EnvironmentDescriptor {
        EnvironmentDescriptor {
            model: self.model.clone(),
            d: self.dim,
            n_max: self.n_max,
            seed: self.seed,
        }
    }
}

impl Environment for LatticeEnvironment {
    fn dim(&self) -> usize {
        self.dim
    }

    fn horizon(&self) -> usize {
        self.n_max
    }

    fn weight(&self, step: usize, site: &[i64]) -> Result<f64> {
        if !self.contains(step, site) {
            return Err(LabError::OutOfWindow {
                step,
                site: site.to_vec(),
            });
        }
        Ok(self
            .model
            .quantile(unit_open(site_key(self.seed, step, site))))
    }
}

/// On-disk description of an environment. Weights are regenerated, never
/// stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentDescriptor {
    pub model: DistributionModel,
    pub d: usize,
    pub n_max: usize,
    pub seed: u64,
}

impl EnvironmentDescriptor {
    pub fn build(&self) -> Result<LatticeEnvironment> {
        sample_environment(&self.model, self.d, self.n_max, self.seed)
    }
}

/// Read-only shifted view `(τ_{k,x}∘η)(i, y) = η(k + i, x + y)`.
#[derive(Debug, Clone)]
pub struct Translated<'a, E: ?Sized> {
    inner: &'a E,
    step: usize,
    shift: Vec<i64>,
}

pub fn translate<'a, E: Environment + ?Sized>(
    env: &'a E,
    k: usize,
    x: &[i64],
) -> Result<Translated<'a, E>> {
    if x.len() != env.dim() {
        return Err(LabError::InvalidArgument(format!(
            "shift has {} coordinates, environment has dimension {}",
            x.len(),
            env.dim()
        )));
    }
    if k > env.horizon() {
        return Err(LabError::HorizonExceeded {
            requested: k,
            horizon: env.horizon(),
        });
    }
    Ok(Translated {
        inner: env,
        step: k,
        shift: x.to_vec(),
    })
}

impl<E: Environment + ?Sized> Environment for Translated<'_, E> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn horizon(&self) -> usize {
        self.inner.horizon() - self.step
    }

    fn weight(&self, step: usize, site: &[i64]) -> Result<f64> {
        let out = || LabError::OutOfWindow {
            step,
            site: site.to_vec(),
        };
        if step == 0 || step > self.horizon() || site.len() != self.shift.len() {
            return Err(out());
        }
        let moved: Vec<i64> = site.iter().zip(&self.shift).map(|(a, b)| a + b).collect();
        self.inner
            .weight(self.step + step, &moved)
            .map_err(|_| out())
    }
}

/// Weight field with `η ↦ −η`; the maximal weight of the negated field gives
/// `max(−H_n)`.
#[derive(Debug, Clone)]
pub struct Negated<E>(pub E);

impl<E: Environment> Environment for Negated<E> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn horizon(&self) -> usize {
        self.0.horizon()
    }

    fn weight(&self, step: usize, site: &[i64]) -> Result<f64> {
        self.0.weight(step, site).map(|w| -w)
    }
}

/// Explicitly tabulated weights on `{|x|₁ ≤ k}`; used for hand-set
/// instances.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedEnvironment {
    dim: usize,
    horizon: usize,
    weights: HashMap<(usize, Vec<i64>), f64>,
}

impl FixedEnvironment {
    pub fn from_fn(dim: usize, horizon: usize, mut f: impl FnMut(usize, &[i64]) -> f64) -> Self {
        let mut weights = HashMap::new();
        for k in 1..=horizon {
            for site in l1_ball(dim, k, None) {
                let w = f(k, &site);
                weights.insert((k, site), w);
            }
        }
        FixedEnvironment {
            dim,
            horizon,
            weights,
        }
    }

    pub fn constant(dim: usize, horizon: usize, c: f64) -> Self {
        Self::from_fn(dim, horizon, |_, _| c)
    }

    /// Copies every weight of `env` on `{|x|₁ ≤ k}` up to `horizon`.
    pub fn capture<E: Environment + ?Sized>(env: &E, horizon: usize) -> Result<Self> {
        let mut weights = HashMap::new();
        for k in 1..=horizon {
            for site in l1_ball(env.dim(), k, None) {
                let w = env.weight(k, &site)?;
                weights.insert((k, site), w);
            }
        }
        Ok(FixedEnvironment {
            dim: env.dim(),
            horizon,
            weights,
        })
    }

    pub fn set(&mut self, step: usize, site: &[i64], w: f64) -> Result<()> {
        match self.weights.get_mut(&(step, site.to_vec())) {
            Some(slot) => {
                *slot = w;
                Ok(())
            }
            None => Err(LabError::OutOfWindow {
                step,
                site: site.to_vec(),
            }),
        }
    }
}

impl Environment for FixedEnvironment {
    fn dim(&self) -> usize {
        self.dim
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn weight(&self, step: usize, site: &[i64]) -> Result<f64> {
        self.weights
            .get(&(step, site.to_vec()))
            .copied()
            .ok_or_else(|| LabError::OutOfWindow {
                step,
                site: site.to_vec(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn models() -> Vec<DistributionModel> {
        vec![
            DistributionModel::bernoulli(0.5).unwrap(),
            DistributionModel::bernoulli(0.2).unwrap(),
            DistributionModel::gaussian(0.0, 1.0).unwrap(),
            DistributionModel::gaussian(0.3, 2.0).unwrap(),
            DistributionModel::rademacher(),
            DistributionModel::finite_discrete(vec![-1.0, 0.0, 2.0], vec![0.2, 0.5, 0.3]).unwrap(),
        ]
    }

    #[test]
    fn log_mgf_examples() {
        let b = DistributionModel::bernoulli(0.5).unwrap();
        assert_eq!(b.log_mgf(0.0), 0.0);
        assert!((b.log_mgf(3f64.ln()) - 2f64.ln()).abs() < 1e-15);
        let g = DistributionModel::gaussian(0.0, 1.0).unwrap();
        assert!((g.log_mgf(2.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_log_mgf_matches_quadrature() {
        // trapezoid rule on a wide window; the integrand is analytic and
        // decays like a Gaussian so the rule converges geometrically
        let (m, s2, beta) = (0.3, 2.0, 1.1);
        let g = DistributionModel::gaussian(m, s2).unwrap();
        let h = 1e-3;
        let sd = s2.sqrt();
        let mut acc = 0.0;
        let steps = 60_000;
        for i in -steps..=steps {
            let x = m + beta * s2 + i as f64 * h;
            let dens = (-(x - m) * (x - m) / (2.0 * s2)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
            acc += dens * (beta * x).exp();
        }
        assert!(((acc * h).ln() - g.log_mgf(beta)).abs() < 1e-9);
    }

    #[test]
    fn conjugate_examples() {
        let b = DistributionModel::bernoulli(0.5).unwrap();
        assert_eq!(b.log_mgf_conjugate(0.5), ExtReal::Finite(0.0));
        assert_eq!(b.log_mgf_conjugate(1.5), ExtReal::PosInfinity);
        assert_eq!(b.log_mgf_conjugate(1.0), ExtReal::Finite(2f64.ln()));
        let g = DistributionModel::gaussian(0.0, 1.0).unwrap();
        assert_eq!(g.log_mgf_conjugate(1.0), ExtReal::Finite(0.5));
    }

    #[test]
    fn finite_discrete_conjugate_matches_bernoulli_closed_form() {
        let fd = DistributionModel::finite_discrete(vec![0.0, 1.0], vec![0.7, 0.3]).unwrap();
        let b = DistributionModel::bernoulli(0.3).unwrap();
        for i in 0..=20 {
            let rho = i as f64 / 20.0;
            let a = fd.log_mgf_conjugate(rho).finite().unwrap();
            let c = b.log_mgf_conjugate(rho).finite().unwrap();
            // close to the endpoints the maximizer runs past the bracket
            let tol = if (0.05..=0.95).contains(&rho) { 1e-8 } else { 1e-6 };
            assert!((a - c).abs() < tol, "rho={rho}: {a} vs {c}");
        }
        assert_eq!(fd.log_mgf_conjugate(-0.1), ExtReal::PosInfinity);
        assert_eq!(fd.log_mgf_conjugate(0.0), ExtReal::Finite(-(0.7f64.ln())));
    }

    #[test]
    fn means() {
        assert_eq!(DistributionModel::bernoulli(0.3).unwrap().mean(), 0.3);
        assert_eq!(DistributionModel::gaussian(-1.5, 2.0).unwrap().mean(), -1.5);
        assert_eq!(DistributionModel::rademacher().mean(), 0.0);
    }

    #[test]
    fn invalid_models_are_rejected() {
        assert!(DistributionModel::bernoulli(0.0).is_err());
        assert!(DistributionModel::bernoulli(1.0).is_err());
        assert!(DistributionModel::gaussian(0.0, 0.0).is_err());
        assert!(DistributionModel::finite_discrete(vec![1.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(DistributionModel::finite_discrete(vec![1.0, 2.0], vec![0.5, 0.6]).is_err());
        assert!(DistributionModel::finite_discrete(vec![1.0, 2.0], vec![-0.5, 1.5]).is_err());
        let bad: std::result::Result<DistributionModel, _> =
            serde_json::from_str(r#"{"type":"bernoulli","p":1.5}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn model_json_round_trip() {
        for m in models() {
            let s = serde_json::to_string(&m).unwrap();
            let back: DistributionModel = serde_json::from_str(&s).unwrap();
            assert_eq!(back, m);
        }
        let m: DistributionModel =
            serde_json::from_str(r#"{"type":"gaussian","mean":0,"variance":1}"#).unwrap();
        assert_eq!(m, DistributionModel::gaussian(0.0, 1.0).unwrap());
    }

    #[test]
    fn log_mgf_is_convex_with_zero_at_origin_and_mean_slope() {
        for m in models() {
            assert!(m.log_mgf(0.0).abs() < 1e-15);
            let h = 1e-5;
            let slope = (m.log_mgf(h) - m.log_mgf(-h)) / (2.0 * h);
            assert!((slope - m.mean()).abs() < 1e-6, "{m:?}");
            for i in -20..20 {
                let (b1, b2) = (i as f64 * 0.37, i as f64 * 0.37 + 1.3);
                for t in [0.1, 0.5, 0.9] {
                    let mid = m.log_mgf(t * b1 + (1.0 - t) * b2);
                    assert!(mid <= t * m.log_mgf(b1) + (1.0 - t) * m.log_mgf(b2) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn conjugate_is_nonnegative_zero_at_mean_and_satisfies_fenchel_young() {
        for m in models() {
            let at_mean = m.log_mgf_conjugate(m.mean()).finite().unwrap();
            assert!(at_mean.abs() < 1e-9, "{m:?}: {at_mean}");
            for i in -30..=30 {
                let rho = i as f64 * 0.1;
                let conj = m.log_mgf_conjugate(rho);
                if let Some(c) = conj.finite() {
                    assert!(c >= 0.0);
                    for j in -40..=40 {
                        let beta = j as f64 * 0.25;
                        assert!(rho * beta <= m.log_mgf(beta) + c + 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn sampling_is_a_pure_function_of_seed_step_and_site() {
        let m = DistributionModel::gaussian(0.0, 1.0).unwrap();
        let a = sample_environment(&m, 2, 6, 17).unwrap();
        let b = sample_environment(&m, 2, 6, 17).unwrap();
        for k in 1..=6 {
            for x in l1_ball(2, k, None) {
                let wa = a.weight(k, &x).unwrap();
                assert_eq!(wa.to_bits(), a.weight(k, &x).unwrap().to_bits());
                assert_eq!(wa.to_bits(), b.weight(k, &x).unwrap().to_bits());
            }
        }
        assert!(sample_environment(&m, 0, 6, 1).is_err());
        assert!(sample_environment(&m, 1, 0, 1).is_err());
    }

    #[test]
    fn bernoulli_sample_mean_within_four_standard_errors() {
        let m = DistributionModel::bernoulli(0.5).unwrap();
        let env = sample_environment(&m, 1, 400, 2024).unwrap();
        let mut total = 0.0;
        let mut count = 0usize;
        'outer: for k in 1..=400usize {
            for x in -(k as i64)..=(k as i64) {
                total += env.weight(k, &[x]).unwrap();
                count += 1;
                if count == 100_000 {
                    break 'outer;
                }
            }
        }
        let se = (0.25 / count as f64).sqrt();
        assert_eq!(count, 100_000);
        assert!((total / count as f64 - 0.5).abs() < 4.0 * se);
    }

    #[test]
    fn distinct_seeds_give_distinct_fields() {
        let m = DistributionModel::bernoulli(0.5).unwrap();
        let a = sample_environment(&m, 1, 10, 1).unwrap();
        let b = sample_environment(&m, 1, 10, 2).unwrap();
        let mut differs = false;
        let mut sites = 0;
        for k in 1..=10usize {
            for x in -(k as i64)..=(k as i64) {
                if sites < 100 {
                    differs |= a.weight(k, &[x]).unwrap() != b.weight(k, &[x]).unwrap();
                    sites += 1;
                }
            }
        }
        assert!(differs);
    }

    #[test]
    fn out_of_window_lookups_are_errors() {
        let m = DistributionModel::bernoulli(0.5).unwrap();
        let env = sample_environment(&m, 1, 3, 1).unwrap();
        assert!(env.weight(0, &[0]).is_err());
        assert!(env.weight(4, &[0]).is_err());
        assert!(env.weight(2, &[3]).is_err());
        assert!(env.clone().with_margin(1).weight(2, &[3]).is_ok());
    }

    #[test]
    fn translation_examples() {
        let m = DistributionModel::gaussian(0.0, 1.0).unwrap();
        let env = sample_environment(&m, 2, 8, 9).unwrap();
        let id = translate(&env, 0, &[0, 0]).unwrap();
        assert_eq!(id.weight(3, &[1, 0]).unwrap(), env.weight(3, &[1, 0]).unwrap());
        let t = translate(&env, 1, &[1, 0]).unwrap();
        assert_eq!(t.weight(1, &[0, 0]).unwrap(), env.weight(2, &[1, 0]).unwrap());
        assert_eq!(t.horizon(), 7);
        assert!(matches!(t.weight(8, &[0, 0]), Err(LabError::OutOfWindow { .. })));
        assert!(translate(&env, 9, &[0, 0]).is_err());
    }

    #[test]
    fn translations_compose() {
        let m = DistributionModel::bernoulli(0.4).unwrap();
        let env = sample_environment(&m, 2, 12, 3).unwrap();
        for seed in 0..20u64 {
            let r = splitmix64(seed);
            let j = (r % 3) as usize;
            let k = ((r >> 8) % 3) as usize;
            let y = [((r >> 16) % 3) as i64 - 1, 0];
            let x = [0, ((r >> 24) % 3) as i64 - 1];
            let inner = translate(&env, j, &y).unwrap();
            let composed = translate(&inner, k, &x).unwrap();
            let direct = translate(&env, k + j, &[x[0] + y[0], x[1] + y[1]]).unwrap();
            for i in 1..=4 {
                for z in l1_ball(2, i, None) {
                    match (composed.weight(i, &z), direct.weight(i, &z)) {
                        (Ok(a), Ok(b)) => assert_eq!(a, b),
                        (Err(_), Err(_)) => {}
                        other => panic!("views disagree on availability: {other:?}"),
                    }
                }
            }
        }
    }
}
