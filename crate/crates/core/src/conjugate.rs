//! Grid Legendre transforms and what is read off them: rate functions, the
//! set where the quenched and annealed rates agree, the extreme growth rates
//! `ρ±`, and the growth rate of the percolation counts `N_n(ρ)`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::count::{count_table, log_count_threshold};
use crate::env::{derive_seed, sample_environment, DistributionModel, Environment, Negated};
use crate::error::{LabError, Result};
use crate::free_energy::{validate_n_list, FreeEnergyCurve, FINITE_N_NOTE};
use crate::numeric::{float_or_tag, ExtReal, Summary};
use crate::transfer::max_path_weight;

/// `t ↦ max_i (t·xᵢ − yᵢ)` evaluated at every point of `at`.
pub fn grid_conjugate(xs: &[f64], ys: &[f64], at: &[f64]) -> Vec<f64> {
    at.iter()
        .map(|&t| {
            xs.iter()
                .zip(ys)
                .map(|(x, y)| t * x - y)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Where a rate grid came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSource {
    pub label: String,
    pub n: Option<usize>,
}

/// `I(ρ) = max_β (ρβ − p(β))` over a finite β grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFunctionGrid {
    pub rhos: Vec<f64>,
    pub values: Vec<f64>,
    /// Standard error of the source value at the maximizing β.
    pub se: Vec<f64>,
    pub argmax: Vec<f64>,
    /// `[min slope, max slope]` of the source curve.
    pub validity: (f64, f64),
    pub extrapolated: Vec<bool>,
    pub source: RateSource,
    betas: Vec<f64>,
    source_values: Vec<f64>,
    source_se: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub rho: f64,
    #[serde(rename = "I")]
    pub rate: f64,
    pub flagged_extrapolated: bool,
    pub se: f64,
}

/// Secant slopes of `(xs, ys)`, sorted, duplicates removed.
pub fn secant_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
        .collect();
    s.sort_by(f64::total_cmp);
    s.dedup();
    s
}

fn validate(betas: &[f64], values: &[f64], se: &[f64]) -> Result<()> {
    if betas.len() < 2 {
        return Err(LabError::InvalidArgument(
            "Legendre transform needs at least 2 grid points".into(),
        ));
    }
    if betas.len() != values.len() || se.len() != values.len() {
        return Err(LabError::InvalidArgument("grid and values differ in length".into()));
    }
    if betas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(LabError::InvalidArgument("grid must be strictly increasing".into()));
    }
    if values.iter().chain(betas).any(|v| !v.is_finite()) {
        return Err(LabError::InvalidArgument("grid and values must be finite".into()));
    }
    Ok(())
}

/// Legendre transform on the default ρ grid: the secant slopes of the input.
pub fn legendre(betas: &[f64], values: &[f64]) -> Result<RateFunctionGrid> {
    legendre_with_se(betas, values, &vec![0.0; values.len()])
}

pub fn legendre_with_se(betas: &[f64], values: &[f64], se: &[f64]) -> Result<RateFunctionGrid> {
    validate(betas, values, se)?;
    let rhos = secant_slopes(betas, values);
    legendre_at(betas, values, se, &rhos)
}

/// Legendre transform evaluated on a caller-chosen ρ grid.
pub fn legendre_at(betas: &[f64], values: &[f64], se: &[f64], rhos: &[f64]) -> Result<RateFunctionGrid> {
    validate(betas, values, se)?;
    let slopes = secant_slopes(betas, values);
    let validity = (slopes[0], *slopes.last().expect("at least one slope"));
    let mut grid = RateFunctionGrid {
        rhos: rhos.to_vec(),
        values: Vec::with_capacity(rhos.len()),
        se: Vec::with_capacity(rhos.len()),
        argmax: Vec::with_capacity(rhos.len()),
        validity,
        extrapolated: Vec::with_capacity(rhos.len()),
        source: RateSource {
            label: "grid".into(),
            n: None,
        },
        betas: betas.to_vec(),
        source_values: values.to_vec(),
        source_se: se.to_vec(),
    };
    for &rho in rhos {
        let (value, se, beta) = grid.evaluate(rho);
        grid.values.push(value);
        grid.se.push(se);
        grid.argmax.push(beta);
        grid.extrapolated.push(rho < validity.0 || rho > validity.1);
    }
    Ok(grid)
}

/// Rate function of the curve's mean at size `n`.
pub fn rate_from_curve(curve: &FreeEnergyCurve, n: usize) -> Result<RateFunctionGrid> {
    let ni = curve
        .n_index(n)
        .ok_or_else(|| LabError::InvalidArgument(format!("curve has no n = {n}")))?;
    let mut grid = legendre_with_se(&curve.betas, &curve.mean[ni], &curve.se[ni])?;
    grid.source = RateSource {
        label: "free-energy curve".into(),
        n: Some(n),
    };
    Ok(grid)
}

impl RateFunctionGrid {
    /// Exact grid conjugate at any ρ: `(value, se at argmax, argmax β)`.
    pub fn evaluate(&self, rho: f64) -> (f64, f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0, f64::NAN);
        for ((b, v), s) in self.betas.iter().zip(&self.source_values).zip(&self.source_se) {
            let cand = rho * b - v;
            if cand > best.0 {
                best = (cand, *s, *b);
            }
        }
        best
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn rows(&self) -> Vec<RateRow> {
        (0..self.rhos.len())
            .map(|i| RateRow {
                rho: self.rhos[i],
                rate: self.values[i],
                flagged_extrapolated: self.extrapolated[i],
                se: self.se[i],
            })
            .collect()
    }

    /// CSV rows `(rho, I, flagged_extrapolated, se)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in self.rows() {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Conjugate of this grid back on `betas`.
    pub fn biconjugate(&self, betas: &[f64]) -> Vec<f64> {
        grid_conjugate(&self.rhos, &self.values, betas)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VSetRow {
    pub rho: f64,
    pub rate: f64,
    pub annealed: ExtReal,
    pub se: f64,
    pub flagged: bool,
}

/// Levels where the quenched rate is indistinguishable from `λ*`.
#[derive(Debug, Clone, Serialize)]
pub struct VSetScan {
    pub tol: f64,
    pub rows: Vec<VSetRow>,
    pub note: &'static str,
}

impl VSetScan {
    pub fn flagged(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| r.flagged).map(|r| r.rho).collect()
    }
}

/// Flags ρ with `|I(ρ) − λ*(ρ)| ≤ max(tol, se)`.
pub fn v_set_scan(rate: &RateFunctionGrid, model: &DistributionModel, tol: f64) -> VSetScan {
    scan_levels(rate, model, tol, &rate.rhos)
}

/// [`v_set_scan`] on arbitrary levels, evaluating the rate exactly there.
pub fn v_set_scan_at(rate: &RateFunctionGrid, model: &DistributionModel, tol: f64, rhos: &[f64]) -> VSetScan {
    scan_levels(rate, model, tol, rhos)
}

fn scan_levels(rate: &RateFunctionGrid, model: &DistributionModel, tol: f64, rhos: &[f64]) -> VSetScan {
    let rows = rhos
        .iter()
        .map(|&rho| {
            let (value, se, _) = rate.evaluate(rho);
            let annealed = model.log_mgf_conjugate(rho);
            let flagged = annealed
                .finite()
                .is_some_and(|a| (value - a).abs() <= tol.max(se));
            VSetRow {
                rho,
                rate: value,
                annealed,
                se,
                flagged,
            }
        })
        .collect();
    VSetScan {
        tol,
        rows,
        note: FINITE_N_NOTE,
    }
}

/// One side of the `ρ±` estimate.
#[derive(Debug, Clone, Serialize)]
pub struct RhoSide {
    /// `|β|` used for the slope estimator.
    pub beta: f64,
    /// `p̂(±β)/β`.
    pub from_curve: f64,
    pub curve_se: f64,
    /// Mean of `max_ω ±H_n/n`.
    pub direct: f64,
    pub direct_se: f64,
    /// `direct − from_curve`; lies in `[0, log(2d)/β]` for every environment.
    pub gap: f64,
    pub entropy_slack: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RhoEstimate {
    pub n: usize,
    pub plus: RhoSide,
    pub minus: RhoSide,
    /// False for unbounded weights, where the slope estimator keeps growing
    /// with β and only the direct estimator is meaningful.
    pub bounded_weights: bool,
}

/// Estimates `ρ±` from the extreme slopes of the curve and from maximal path
/// weights of `envs` at the curve's largest `n`.
pub fn rho_pm<E: Environment + Sync>(curve: &FreeEnergyCurve, envs: &[E]) -> Result<RhoEstimate> {
    let b_hi = *curve.betas.last().expect("nonempty grid");
    let b_lo = curve.betas[0];
    if !(b_hi > 0.0 && b_lo < 0.0) {
        return Err(LabError::InvalidArgument(
            "curve needs β points of both signs to estimate ρ±".into(),
        ));
    }
    if envs.len() < 2 {
        return Err(LabError::InvalidArgument("need at least 2 environments".into()));
    }
    let ni = curve.largest_n_index();
    let n = curve.n_list[ni];
    let maxima: Vec<(f64, f64)> = envs
        .par_iter()
        .map(|env| {
            Ok((
                max_path_weight(env, n)? / n as f64,
                max_path_weight(&Negated(env), n)? / n as f64,
            ))
        })
        .collect::<Result<_>>()?;
    let plus_direct = Summary::of(&maxima.iter().map(|m| m.0).collect::<Vec<_>>());
    let minus_direct = Summary::of(&maxima.iter().map(|m| m.1).collect::<Vec<_>>());
    let slack = |b: f64| ((2 * curve.d) as f64).ln() / b;
    let last = curve.betas.len() - 1;
    let side = |beta: f64, bi: usize, direct: Summary| {
        let from_curve = curve.mean[ni][bi] / beta;
        RhoSide {
            beta,
            from_curve,
            curve_se: curve.se[ni][bi] / beta,
            direct: direct.mean,
            direct_se: direct.se,
            gap: direct.mean - from_curve,
            entropy_slack: slack(beta),
        }
    };
    Ok(RhoEstimate {
        n,
        plus: side(b_hi, last, plus_direct),
        minus: side(-b_lo, 0, minus_direct),
        bounded_weights: curve.model.support().is_some(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CorollaryRow {
    pub n: usize,
    pub samples: usize,
    /// Environments with `N_n(ρ) = 0`; excluded from the mean.
    pub zero_samples: usize,
    #[serde(with = "float_or_tag")]
    pub mean_log_count_rate: f64,
    #[serde(with = "float_or_tag")]
    pub se: f64,
    #[serde(with = "float_or_tag")]
    pub abs_diff: f64,
}

/// `(1/n) log N_n(ρ)` against `log(2d) − I(ρ)` along a sequence of `n`.
#[derive(Debug, Clone, Serialize)]
pub struct CorollaryReport {
    pub rho: f64,
    pub mean_weight: f64,
    pub d: usize,
    pub rate_at_rho: f64,
    pub rate_se: f64,
    pub target: f64,
    /// Whether ρ lies inside the rate grid's validity interval.
    pub in_window: bool,
    pub rows: Vec<CorollaryRow>,
    /// `|difference|` never increases along `n`.
    pub nonincreasing: bool,
}

pub fn corollary_check(
    model: &DistributionModel,
    d: usize,
    rho: f64,
    n_list: &[usize],
    samples: usize,
    seed: u64,
    rate: &RateFunctionGrid,
) -> Result<CorollaryReport> {
    if !model.is_integer_valued() {
        return Err(LabError::InvalidArgument(
            "exact percolation counts need an integer-valued model".into(),
        ));
    }
    validate_n_list(n_list)?;
    if samples < 1 {
        return Err(LabError::InvalidArgument("need at least 1 sample".into()));
    }
    let m = model.mean();
    let n_max = *n_list.last().expect("validated");
    // log N_n(ρ) per replica per n; None when the count vanishes
    let per_replica: Vec<Vec<Option<f64>>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let env = sample_environment(model, d, n_max, derive_seed(seed, i as u64))?;
            n_list
                .iter()
                .map(|&n| {
                    let log_count = log_count_threshold(&count_table(&env, n)?, rho, m);
                    Ok((log_count > f64::NEG_INFINITY).then(|| log_count / n as f64))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let (rate_at_rho, rate_se, _) = rate.evaluate(rho);
    let target = ((2 * d) as f64).ln() - rate_at_rho;
    let rows: Vec<CorollaryRow> = n_list
        .iter()
        .enumerate()
        .map(|(ni, &n)| {
            let hits: Vec<f64> = per_replica.iter().filter_map(|r| r[ni]).collect();
            let s = Summary::of(&hits);
            CorollaryRow {
                n,
                samples,
                zero_samples: samples - hits.len(),
                mean_log_count_rate: s.mean,
                se: s.se,
                abs_diff: (s.mean - target).abs(),
            }
        })
        .collect();
    let nonincreasing = rows.windows(2).all(|w| w[1].abs_diff <= w[0].abs_diff);
    Ok(CorollaryReport {
        rho,
        mean_weight: m,
        d,
        rate_at_rho,
        rate_se,
        target,
        in_window: rho >= rate.validity.0 && rho <= rate.validity.1,
        rows,
        nonincreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free_energy::estimate_free_energy;

    fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    }

    #[test]
    fn quadratic_conjugate() {
        let betas = grid(-5.0, 5.0, 0.01);
        let vals: Vec<f64> = betas.iter().map(|b| b * b / 2.0).collect();
        let rate = legendre(&betas, &vals).unwrap();
        assert!((rate.evaluate(1.0).0 - 0.5).abs() < 1e-3);
        assert!(rate.validity.0 < -4.9 && rate.validity.1 > 4.9);
    }

    #[test]
    fn bernoulli_conjugate_matches_relative_entropy() {
        let m = DistributionModel::bernoulli(0.5).unwrap();
        let betas = grid(-10.0, 10.0, 0.01);
        let vals: Vec<f64> = betas.iter().map(|&b| m.log_mgf(b)).collect();
        let rate = legendre(&betas, &vals).unwrap();
        for (rho, val) in rate.rhos.iter().zip(&rate.values) {
            if (0.1..=0.9).contains(rho) {
                let exact = m.log_mgf_conjugate(*rho).finite().unwrap();
                assert!((val - exact).abs() < 1e-3);
            }
        }
        assert!(rate.evaluate(0.5).0.abs() <= 1e-6);
    }

    #[test]
    fn rejects_short_or_unsorted_grids() {
        assert!(legendre(&[1.0], &[1.0]).is_err());
        assert!(legendre(&[1.0, 0.0], &[1.0, 2.0]).is_err());
        assert!(legendre(&[0.0, 1.0], &[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn biconjugate_of_convex_input_is_identity_on_grid() {
        let betas = grid(-3.0, 3.0, 0.1);
        let vals: Vec<f64> = betas.iter().map(|b| (b * 1.3f64).cosh().ln() + 0.2 * b).collect();
        let rate = legendre(&betas, &vals).unwrap();
        let back = rate.biconjugate(&betas);
        for (a, b) in back.iter().zip(&vals) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rate_is_monotone_on_each_side_of_its_minimizer() {
        let m = DistributionModel::bernoulli(0.3).unwrap();
        let betas = grid(-6.0, 6.0, 0.05);
        let vals: Vec<f64> = betas.iter().map(|&b| m.log_mgf(b)).collect();
        let rate = legendre(&betas, &vals).unwrap();
        let argmin = rate
            .values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        for i in 1..rate.values.len() {
            if i <= argmin {
                assert!(rate.values[i] <= rate.values[i - 1] + 1e-12);
            } else {
                assert!(rate.values[i] >= rate.values[i - 1] - 1e-12);
            }
        }
    }

    #[test]
    fn curve_rate_and_v_set() {
        let m = DistributionModel::bernoulli(0.5).unwrap();
        let c = estimate_free_energy(&m, 1, &grid(-4.0, 4.0, 0.25), &[32], 60, 8).unwrap();
        let rate = rate_from_curve(&c, 32).unwrap();
        assert_eq!(rate.source.n, Some(32));
        assert!(rate.min_value() >= -1e-12);
        assert!(rate.min_value() <= 3.0 * rate.se.iter().cloned().fold(0.0, f64::max) + 1e-9);
        // p̂ ≤ λ pointwise reverses under conjugation
        for (rho, (val, se)) in rate.rhos.iter().zip(rate.values.iter().zip(&rate.se)) {
            if let Some(a) = m.log_mgf_conjugate(*rho).finite() {
                let lam_grid: Vec<f64> = c.betas.iter().map(|&b| m.log_mgf(b)).collect();
                let annealed_grid = grid_conjugate(&c.betas, &lam_grid, &[*rho])[0];
                assert!(*val >= annealed_grid - 3.0 * se - 1e-12);
                assert!(annealed_grid <= a + 1e-12);
            }
        }
        let scan = v_set_scan_at(&rate, &m, 1e-3, &[0.5]);
        assert!(scan.rows[0].flagged);
    }

    #[test]
    fn rho_pm_on_degenerate_weights() {
        let m = DistributionModel::degenerate(0.7).unwrap();
        let c = estimate_free_energy(&m, 1, &[-20.0, 0.0, 20.0], &[10], 2, 1).unwrap();
        let envs: Vec<_> = (0..3).map(|s| sample_environment(&m, 1, 10, s).unwrap()).collect();
        let r = rho_pm(&c, &envs).unwrap();
        assert!((r.plus.from_curve - 0.7).abs() < 1e-12);
        assert!((r.plus.direct - 0.7).abs() < 1e-12);
        assert!((r.minus.from_curve + 0.7).abs() < 1e-12);
        assert!((r.minus.direct + 0.7).abs() < 1e-12);
    }

    #[test]
    fn rho_plus_bracketing_for_bernoulli() {
        let m = DistributionModel::bernoulli(0.5).unwrap();
        let seed = 17;
        let c = estimate_free_energy(&m, 1, &[-8.0, 0.0, 8.0], &[32], 50, seed).unwrap();
        let envs: Vec<_> = (0..50u64)
            .map(|i| sample_environment(&m, 1, 32, derive_seed(seed, i)).unwrap())
            .collect();
        let r = rho_pm(&c, &envs).unwrap();
        assert!(r.plus.from_curve <= 1.0);
        assert!(r.plus.from_curve >= c.mean[0][2] / 8.0 - 1e-12);
        // same replicas on both sides: the pathwise bracket survives averaging
        assert!(r.plus.gap >= -1e-12);
        assert!(r.plus.gap <= r.plus.entropy_slack + 1e-12);
        assert!(r.bounded_weights);
    }

    #[test]
    fn corollary_edge_cases() {
        let m = DistributionModel::degenerate(1.0).unwrap();
        let betas = grid(-2.0, 2.0, 0.5);
        let vals: Vec<f64> = betas.iter().map(|&b| m.log_mgf(b)).collect();
        let rate = legendre(&betas, &vals).unwrap();
        // at ρ = c every path has H_n = nρ, counted by the inclusive upper tail
        let r = corollary_check(&m, 1, 1.0, &[4, 8], 3, 2, &rate).unwrap();
        for row in &r.rows {
            assert!((row.mean_log_count_rate - 2f64.ln()).abs() < 1e-12);
            assert!(row.abs_diff < 1e-12);
        }

        let b = DistributionModel::bernoulli(0.5).unwrap();
        let vals: Vec<f64> = betas.iter().map(|&x| b.log_mgf(x)).collect();
        let rate = legendre(&betas, &vals).unwrap();
        let r = corollary_check(&b, 1, 1.01, &[4, 8], 5, 2, &rate).unwrap();
        assert!(r.rows.iter().all(|row| row.zero_samples == 5));
        assert!(corollary_check(&DistributionModel::gaussian(0.0, 1.0).unwrap(), 1, 0.5, &[4], 2, 1, &rate).is_err());
    }
}
