//! Exponentially smoothed distance-to-level functionals
//!
//! ```text
//! V^(λ)_n(x, a; η) = log P^x[e^{−λ|H_n − a|}]
//! ```
//!
//! their environment averages `v^(λ)_n(a)`, the sub-rates `I^(λ)` read off
//! `−v^(λ)_n(nξ)/n`, and the finite-n inequalities that tie them to `ν_n`.
//!
//! Everything is evaluated exactly from weight histograms
//! ([`WeightCountTable`]); real-valued environments are quantized first and
//! carry the coupling error `λ·nΔ/2` on every value.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::count::{count_table, quantize_environment, WeightCountTable};
use crate::env::{derive_seed, sample_environment, translate, DistributionModel, Environment};
use crate::error::{LabError, Result};
use crate::free_energy::validate_n_list;
use crate::numeric::{float_or_tag, log_sum_exp, pooled_se, Summary};
use crate::report::Check;

/// Quantization step applied to real-valued weight laws.
pub const DEFAULT_QUANTUM: f64 = 0.01;

/// Slack allowed on every exact inequality.
pub const EXACT_SLACK: f64 = 1e-9;

/// `V^(λ)_n(x, a; η)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothedValue {
    pub lambda: f64,
    pub n: usize,
    pub start: Vec<i64>,
    pub center: f64,
    pub value: f64,
    /// `λ·nΔ/2` when the environment was quantized with step `Δ`, else 0.
    pub quantization_error: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(LabError::InvalidArgument(format!("λ must be positive, got {lambda}")));
    }
    Ok(())
}

/// `log Σ_h P(H_n = h) e^{−λ|scale·h − a|}` from a histogram whose weights
/// are `scale`-multiples.
pub fn smoothed_log_moment(table: &WeightCountTable, scale: f64, lambda: f64, a: f64) -> f64 {
    let terms: Vec<f64> = table
        .log_weight_probs()
        .into_iter()
        .map(|(h, lp)| lp - lambda * (scale * h as f64 - a).abs())
        .collect();
    log_sum_exp(&terms)
}

/// `V^(λ)` from a table built for walks started at `start`.
pub fn smoothed_from_table(
    table: &WeightCountTable,
    scale: f64,
    lambda: f64,
    a: f64,
    start: &[i64],
) -> SmoothedValue {
    SmoothedValue {
        lambda,
        n: table.n(),
        start: start.to_vec(),
        center: a,
        value: smoothed_log_moment(table, scale, lambda, a),
        quantization_error: if scale == 1.0 {
            0.0
        } else {
            lambda * table.n() as f64 * scale / 2.0
        },
    }
}

/// `V^(λ)_n(x, a; η)` for an integer-valued environment, via the identity
/// `V(x, a; η) = V(0, a; τ_{0,x}∘η)`.
pub fn smoothed_value<E: Environment + ?Sized>(
    env: &E,
    n: usize,
    lambda: f64,
    a: f64,
    x: &[i64],
) -> Result<SmoothedValue> {
    check_lambda(lambda)?;
    let view = translate(env, 0, x)?;
    let table = count_table(&view, n)?;
    Ok(smoothed_from_table(&table, 1.0, lambda, a, x))
}

/// As [`smoothed_value`] for real-valued weights, quantized with `step`.
pub fn smoothed_value_quantized<E: Environment + ?Sized>(
    env: &E,
    step: f64,
    n: usize,
    lambda: f64,
    a: f64,
    x: &[i64],
) -> Result<SmoothedValue> {
    check_lambda(lambda)?;
    let view = translate(env, 0, x)?;
    let q = quantize_environment(view, step)?;
    let table = count_table(&q, n)?;
    Ok(smoothed_from_table(&table, step, lambda, a, x))
}

/// `σ_n(y) ∝ P^x[e^{−λ|H_n − b|} 1{S_n = y}]`, normalized by `e^{V}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaMeasure {
    pub n: usize,
    pub b: f64,
    pub lambda: f64,
    pub start: Vec<i64>,
    /// Endpoints `y` in the environment's coordinates.
    pub sites: Vec<Vec<i64>>,
    pub probs: Vec<f64>,
    /// `V^(λ)_n(x, b; η)`, the log normalizer.
    pub log_normalizer: f64,
    /// `log P^x[e^{−λ|H_n − b|} 1{S_n = y}]`, aligned with `sites`.
    #[serde(skip)]
    pub log_weights: Vec<f64>,
}

impl SigmaMeasure {
    pub fn prob(&self, site: &[i64]) -> f64 {
        self.sites
            .iter()
            .position(|s| s == site)
            .map_or(0.0, |i| self.probs[i])
    }
}

fn sigma_from_table(table: &WeightCountTable, lambda: f64, b: f64, start: &[i64]) -> SigmaMeasure {
    let log_weights: Vec<f64> = (0..table.sites().len())
        .map(|i| {
            let terms: Vec<f64> = table
                .log_joint_probs(i)
                .into_iter()
                .map(|(h, lp)| lp - lambda * (h as f64 - b).abs())
                .collect();
            log_sum_exp(&terms)
        })
        .collect();
    let log_normalizer = log_sum_exp(&log_weights);
    SigmaMeasure {
        n: table.n(),
        b,
        lambda,
        start: start.to_vec(),
        sites: table
            .sites()
            .iter()
            .map(|y| y.iter().zip(start).map(|(u, v)| u + v).collect())
            .collect(),
        probs: log_weights.iter().map(|w| (w - log_normalizer).exp()).collect(),
        log_normalizer,
        log_weights,
    }
}

pub fn sigma_measure<E: Environment + ?Sized>(
    env: &E,
    n: usize,
    b: f64,
    lambda: f64,
    x: &[i64],
) -> Result<SigmaMeasure> {
    check_lambda(lambda)?;
    let view = translate(env, 0, x)?;
    let table = count_table(&view, n)?;
    Ok(sigma_from_table(&table, lambda, b, x))
}

/// Both sides of the pathwise gluing inequality
/// `V_{n+m}(0, a+b; η) ≥ V_n(0, b; η) + Σ_y σ_n(y) V_m(0, a; τ_{n,y}∘η)`
/// together with the intermediate quantity
/// `log P[e^{−λ|H_n − b|} e^{−λ|(H_{n+m} − H_n) − a|}]`.
#[derive(Debug, Clone, Serialize)]
pub struct PathwiseReport {
    pub n: usize,
    pub m: usize,
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub lhs: f64,
    pub split: f64,
    pub rhs: f64,
    /// triangle step (lhs ≥ split), Jensen step (split ≥ rhs), overall.
    pub checks: Vec<Check>,
    pub pass: bool,
}

pub fn superadditivity_check_pathwise<E: Environment + ?Sized>(
    env: &E,
    n: usize,
    m: usize,
    a: f64,
    b: f64,
    lambda: f64,
) -> Result<PathwiseReport> {
    check_lambda(lambda)?;
    if n + m > env.horizon() {
        return Err(LabError::HorizonExceeded {
            requested: n + m,
            horizon: env.horizon(),
        });
    }
    let origin = vec![0i64; env.dim()];
    let lhs = smoothed_value(env, n + m, lambda, a + b, &origin)?.value;
    let head = count_table(env, n)?;
    let sigma = sigma_from_table(&head, lambda, b, &origin);
    let tails: Vec<f64> = sigma
        .sites
        .iter()
        .map(|y| {
            let shifted = translate(env, n, y)?;
            Ok(smoothed_log_moment(&count_table(&shifted, m)?, 1.0, lambda, a))
        })
        .collect::<Result<_>>()?;
    let split = log_sum_exp(
        &sigma
            .log_weights
            .iter()
            .zip(&tails)
            .map(|(w, t)| w + t)
            .collect::<Vec<_>>(),
    );
    let rhs = sigma.log_normalizer
        + sigma
            .probs
            .iter()
            .zip(&tails)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, t)| p * t)
            .sum::<f64>();
    let checks = vec![
        Check::at_least("triangle_split", lhs, split, EXACT_SLACK),
        Check::at_least("jensen_split", split, rhs, EXACT_SLACK),
        Check::at_least("pathwise_superadditivity", lhs, rhs, EXACT_SLACK),
    ];
    let pass = checks.iter().all(|c| c.pass);
    Ok(PathwiseReport {
        n,
        m,
        a,
        b,
        lambda,
        lhs,
        split,
        rhs,
        checks,
        pass,
    })
}

/// Histogram of a replica started at the origin, quantizing real weights.
fn replica_table(
    model: &DistributionModel,
    d: usize,
    horizon: usize,
    seed: u64,
    n: usize,
) -> Result<(WeightCountTable, f64)> {
    let env = sample_environment(model, d, horizon, seed)?;
    if model.is_integer_valued() {
        Ok((count_table(&env, n)?, 1.0))
    } else {
        let q = quantize_environment(&env, DEFAULT_QUANTUM)?;
        Ok((count_table(&q, n)?, DEFAULT_QUANTUM))
    }
}

fn quantization_error(model: &DistributionModel, lambda: f64, n: usize) -> f64 {
    if model.is_integer_valued() {
        0.0
    } else {
        lambda * n as f64 * DEFAULT_QUANTUM / 2.0
    }
}

/// Monte Carlo check of `v_{n+m}(a+b) ≥ v_n(a) + v_m(b)`.
#[derive(Debug, Clone, Serialize)]
pub struct MeanSuperadditivityReport {
    pub n: usize,
    pub m: usize,
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub samples: usize,
    pub joint: Summary,
    pub head: Summary,
    pub tail: Summary,
    pub pooled_se: f64,
    pub quantization_error: f64,
    pub check: Check,
}

#[allow(clippy::too_many_arguments)]
pub fn superadditivity_check_mean(
    model: &DistributionModel,
    d: usize,
    n: usize,
    m: usize,
    a: f64,
    b: f64,
    lambda: f64,
    samples: usize,
    seed: u64,
) -> Result<MeanSuperadditivityReport> {
    check_lambda(lambda)?;
    if samples < 2 {
        return Err(LabError::InvalidArgument("need at least 2 samples".into()));
    }
    let horizon = (n + m).max(1);
    let per: Vec<(f64, f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, i as u64);
            let v = |steps: usize, center: f64| -> Result<f64> {
                let (t, scale) = replica_table(model, d, horizon, s, steps)?;
                Ok(smoothed_log_moment(&t, scale, lambda, center))
            };
            Ok((v(n + m, a + b)?, v(n, a)?, v(m, b)?))
        })
        .collect::<Result<_>>()?;
    let joint = Summary::of(&per.iter().map(|p| p.0).collect::<Vec<_>>());
    let head = Summary::of(&per.iter().map(|p| p.1).collect::<Vec<_>>());
    let tail = Summary::of(&per.iter().map(|p| p.2).collect::<Vec<_>>());
    let pooled = pooled_se(&[joint.se, head.se, tail.se]);
    let qerr = quantization_error(model, lambda, n + m)
        + quantization_error(model, lambda, n)
        + quantization_error(model, lambda, m);
    let check = Check::at_least(
        "mean_superadditivity",
        joint.mean,
        head.mean + tail.mean,
        3.0 * pooled + qerr + EXACT_SLACK,
    );
    Ok(MeanSuperadditivityReport {
        n,
        m,
        a,
        b,
        lambda,
        samples,
        joint,
        head,
        tail,
        pooled_se: pooled,
        quantization_error: qerr,
        check,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RateLambdaRow {
    pub n: usize,
    /// `−v̂_n(nξ)/n`.
    pub value: f64,
    pub se: f64,
    /// `λ·Q E|H_n/n − ξ|`, an upper bound on `value` by Jensen.
    pub jensen_ceiling: f64,
    pub jensen_ceiling_se: f64,
}

/// The sequence `−v̂^(λ)_n(nξ)/n` and its last term as the `I^(λ)(ξ)`
/// estimate.
#[derive(Debug, Clone, Serialize)]
pub struct RateLambdaEstimate {
    pub xi: f64,
    pub lambda: f64,
    pub samples: usize,
    pub rows: Vec<RateLambdaRow>,
    pub estimate: f64,
    pub estimate_se: f64,
    /// Every term minus 3 SE stays above the last term minus 6 SE: the
    /// sequence approaches its limit from above, as superadditivity implies.
    pub trend_ok: bool,
    pub quantization_error: f64,
}

pub fn rate_lambda_estimate(
    model: &DistributionModel,
    d: usize,
    xi: f64,
    lambda: f64,
    n_list: &[usize],
    samples: usize,
    seed: u64,
) -> Result<RateLambdaEstimate> {
    Ok(rate_lambda_sweep(model, d, xi, &[lambda], n_list, samples, seed)?
        .pop()
        .expect("one λ in, one estimate out"))
}

/// [`rate_lambda_estimate`] for several λ on shared replicas.
pub fn rate_lambda_sweep(
    model: &DistributionModel,
    d: usize,
    xi: f64,
    lambdas: &[f64],
    n_list: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Vec<RateLambdaEstimate>> {
    validate_n_list(n_list)?;
    for &l in lambdas {
        check_lambda(l)?;
    }
    if samples < 2 {
        return Err(LabError::InvalidArgument("need at least 2 samples".into()));
    }
    let horizon = *n_list.last().expect("validated");
    // per replica, per n: (−V/n for each λ, E|H_n/n − ξ|)
    let per: Vec<Vec<(Vec<f64>, f64)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, i as u64);
            n_list
                .iter()
                .map(|&n| {
                    let (t, scale) = replica_table(model, d, horizon, s, n)?;
                    let a = n as f64 * xi;
                    let rates = lambdas
                        .iter()
                        .map(|&l| -smoothed_log_moment(&t, scale, l, a) / n as f64)
                        .collect();
                    let mad = t.expected_abs_deviation(a / scale) * scale / n as f64;
                    Ok((rates, mad))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    Ok(lambdas
        .iter()
        .enumerate()
        .map(|(li, &lambda)| {
            let rows: Vec<RateLambdaRow> = n_list
                .iter()
                .enumerate()
                .map(|(ni, &n)| {
                    let vals: Vec<f64> = per.iter().map(|r| r[ni].0[li]).collect();
                    let ceil: Vec<f64> = per.iter().map(|r| lambda * r[ni].1).collect();
                    let s = Summary::of(&vals);
                    let c = Summary::of(&ceil);
                    RateLambdaRow {
                        n,
                        value: s.mean,
                        se: s.se,
                        jensen_ceiling: c.mean,
                        jensen_ceiling_se: c.se,
                    }
                })
                .collect();
            let last = rows.last().expect("nonempty");
            let (estimate, estimate_se) = (last.value, last.se);
            let trend_ok = rows
                .iter()
                .all(|r| r.value - 3.0 * r.se >= estimate - 6.0 * estimate_se);
            RateLambdaEstimate {
                xi,
                lambda,
                samples,
                rows,
                estimate,
                estimate_se,
                trend_ok,
                quantization_error: quantization_error(model, lambda, horizon) / horizon as f64,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct TailRow {
    pub u: f64,
    pub empirical: f64,
    /// `2 exp(−u²/(2λ²n))`, from the Lipschitz constant `λ√n`.
    pub bound: f64,
    /// `2 exp(−λ²u²/(2n))`, reported alongside, not enforced.
    pub alt_bound: f64,
    pub binomial_se: f64,
    pub pass: bool,
}

/// Fluctuations of `V^(λ)_n(0, a; η)` across environments against Gaussian
/// concentration.
#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub a: f64,
    pub lambda: f64,
    pub samples: usize,
    pub mean: f64,
    pub sd: f64,
    pub quantization_error: f64,
    pub rows: Vec<TailRow>,
    pub pass: bool,
}

impl ConcentrationReport {
    /// CSV rows `(u, empirical, bound, alt_bound, binomial_se, pass)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub const DEFAULT_TAIL_GRID: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

#[allow(clippy::too_many_arguments)]
pub fn concentration_experiment(
    model: &DistributionModel,
    d: usize,
    n: usize,
    a: f64,
    lambda: f64,
    samples: usize,
    seed: u64,
    u_grid: &[f64],
) -> Result<ConcentrationReport> {
    check_lambda(lambda)?;
    if samples < 100 {
        return Err(LabError::InvalidArgument(
            "concentration experiment needs at least 100 samples".into(),
        ));
    }
    if n == 0 {
        return Err(LabError::InvalidArgument("n must be positive".into()));
    }
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let (t, scale) = replica_table(model, d, n, derive_seed(seed, i as u64), n)?;
            Ok(smoothed_log_moment(&t, scale, lambda, a))
        })
        .collect::<Result<_>>()?;
    let s = Summary::of(&values);
    let sd = s.se * (samples as f64).sqrt();
    let rows: Vec<TailRow> = u_grid
        .iter()
        .map(|&u| {
            let hits = values.iter().filter(|v| (*v - s.mean).abs() >= u).count();
            let empirical = hits as f64 / samples as f64;
            let bound = 2.0 * (-u * u / (2.0 * lambda * lambda * n as f64)).exp();
            let alt_bound = 2.0 * (-lambda * lambda * u * u / (2.0 * n as f64)).exp();
            let p = bound.min(1.0);
            let binomial_se = (p * (1.0 - p) / samples as f64).sqrt();
            TailRow {
                u,
                empirical,
                bound,
                alt_bound,
                binomial_se,
                pass: bound >= 1.0 || empirical <= bound + 3.0 * binomial_se,
            }
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    Ok(ConcentrationReport {
        n,
        a,
        lambda,
        samples,
        mean: s.mean,
        sd,
        quantization_error: quantization_error(model, lambda, n),
        rows,
        pass,
    })
}

/// Exact per-environment evaluation of the two bounds sandwiching
/// `ν_n` around `ξ`:
///
/// ```text
/// ν_n([ξ−δ, ξ+δ]) ≤ e^{λnδ} P[e^{−λ|H_n − nξ|}]
/// ν_n((ξ−δ, ξ+δ)) ≥ P[e^{−λ|H_n − nξ|}] − e^{−λnδ}
/// ```
#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub n: usize,
    pub xi: f64,
    pub delta: f64,
    pub lambda: f64,
    #[serde(with = "float_or_tag")]
    pub log_closed_mass: f64,
    #[serde(with = "float_or_tag")]
    pub log_open_mass: f64,
    /// `V^(λ)_n(0, nξ)`.
    pub log_smoothed: f64,
    /// `−λnδ`.
    pub log_penalty: f64,
    pub upper: Check,
    pub lower: Check,
    pub pass: bool,
}

impl SandwichReport {
    /// `−(1/n) log` of the upper bound: a finite-n proxy for the rate at ξ.
    pub fn upper_rate(&self) -> f64 {
        -(self.log_smoothed - self.log_penalty) / self.n as f64
    }
}

pub fn sandwich_bounds(table: &WeightCountTable, xi: f64, delta: f64, lambda: f64) -> Result<SandwichReport> {
    check_lambda(lambda)?;
    if !(delta > 0.0) {
        return Err(LabError::InvalidArgument(format!("δ must be positive, got {delta}")));
    }
    let n = table.n();
    if n == 0 {
        return Err(LabError::InvalidArgument("n must be positive".into()));
    }
    let probs = table.log_weight_probs();
    let center = n as f64 * xi;
    let radius = n as f64 * delta;
    let closed: Vec<f64> = probs
        .iter()
        .filter(|(h, _)| (*h as f64 - center).abs() <= radius)
        .map(|(_, lp)| *lp)
        .collect();
    let open: Vec<f64> = probs
        .iter()
        .filter(|(h, _)| (*h as f64 - center).abs() < radius)
        .map(|(_, lp)| *lp)
        .collect();
    let log_closed_mass = log_sum_exp(&closed);
    let log_open_mass = log_sum_exp(&open);
    let log_smoothed = smoothed_log_moment(table, 1.0, lambda, center);
    let log_penalty = -lambda * radius;
    let upper = Check::at_most(
        "sandwich_upper",
        log_closed_mass,
        log_smoothed - log_penalty,
        EXACT_SLACK,
    );
    let lower = Check::at_least(
        "sandwich_lower",
        log_open_mass.exp(),
        log_smoothed.exp() - log_penalty.exp(),
        EXACT_SLACK,
    );
    let pass = upper.pass && lower.pass;
    Ok(SandwichReport {
        n,
        xi,
        delta,
        lambda,
        log_closed_mass,
        log_open_mass,
        log_smoothed,
        log_penalty,
        upper,
        lower,
        pass,
    })
}
