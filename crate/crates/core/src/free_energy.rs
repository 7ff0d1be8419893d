//! Monte Carlo estimation of the quenched free energy `(1/n) Q[log Z_n(β)]`.
//!
//! Every replica environment is used for the whole β grid (common random
//! numbers), so the estimated curves inherit the exact convexity in β of each
//! `log Z_n(·)`. Replicas run in parallel and are aggregated in index order.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::env::{derive_seed, sample_environment, DistributionModel};
use crate::error::{LabError, Result};
use crate::lattice::PathLattice;
use crate::numeric::Summary;
use crate::transfer::log_partition_profile;

/// Estimates of `(1/n) Q[log Z_n(β)]` on a β grid, for several `n`.
#[derive(Debug, Clone)]
pub struct FreeEnergyCurve {
    pub model: DistributionModel,
    pub d: usize,
    pub betas: Vec<f64>,
    pub n_list: Vec<usize>,
    pub samples: usize,
    pub master_seed: u64,
    /// `mean[n_idx][beta_idx]`
    pub mean: Vec<Vec<f64>>,
    pub se: Vec<Vec<f64>>,
    /// `λ(β)` on the grid.
    pub annealed: Vec<f64>,
    values: Vec<Vec<Vec<f64>>>,
}

/// One CSV row of a curve export.
#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub beta: f64,
    pub n: usize,
    #[serde(rename = "M")]
    pub samples: usize,
    pub mean: f64,
    pub se: f64,
    pub lambda: f64,
}

/// Experiment manifest for a curve.
#[derive(Debug, Clone, Serialize)]
pub struct CurveManifest {
    pub model: DistributionModel,
    pub d: usize,
    pub grid: Vec<f64>,
    pub n_list: Vec<usize>,
    #[serde(rename = "M")]
    pub samples: usize,
    pub master_seed: u64,
}

pub(crate) fn validate_beta_grid(betas: &[f64]) -> Result<()> {
    if betas.is_empty() {
        return Err(LabError::InvalidArgument("β grid is empty".into()));
    }
    if betas.iter().any(|b| !b.is_finite()) || betas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::InvalidArgument(
            "β grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

pub(crate) fn validate_n_list(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() || n_list[0] == 0 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::InvalidArgument(
            "n list must be nonempty, positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

pub fn estimate_free_energy(
    model: &DistributionModel,
    d: usize,
    beta_grid: &[f64],
    n_list: &[usize],
    samples: usize,
    seed: u64,
) -> Result<FreeEnergyCurve> {
    validate_beta_grid(beta_grid)?;
    validate_n_list(n_list)?;
    if samples < 2 {
        return Err(LabError::InvalidArgument("need at least 2 samples".into()));
    }
    let n_max = *n_list.last().expect("validated nonempty");
    let lattice = PathLattice::new(d, n_max)?;

    // per replica: [beta_idx][n_idx] of (1/n) log Z_n(β)
    let per_replica: Vec<Vec<Vec<f64>>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let env = sample_environment(model, d, n_max, derive_seed(seed, i as u64))?;
            let field = lattice.materialize(&env)?;
            Ok(beta_grid
                .iter()
                .map(|&beta| {
                    log_partition_profile(&lattice, &field, beta, n_list)
                        .into_iter()
                        .zip(n_list)
                        .map(|(lz, &n)| lz / n as f64)
                        .collect()
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let values: Vec<Vec<Vec<f64>>> = (0..n_list.len())
        .map(|ni| {
            (0..beta_grid.len())
                .map(|bi| per_replica.iter().map(|r| r[bi][ni]).collect())
                .collect()
        })
        .collect();
    let summaries: Vec<Vec<Summary>> = values
        .iter()
        .map(|row| row.iter().map(|v: &Vec<f64>| Summary::of(v)).collect())
        .collect();

    Ok(FreeEnergyCurve {
        model: model.clone(),
        d,
        betas: beta_grid.to_vec(),
        n_list: n_list.to_vec(),
        samples,
        master_seed: seed,
        mean: summaries.iter().map(|r| r.iter().map(|s| s.mean).collect()).collect(),
        se: summaries.iter().map(|r| r.iter().map(|s| s.se).collect()).collect(),
        annealed: beta_grid.iter().map(|&b| model.log_mgf(b)).collect(),
        values,
    })
}

impl FreeEnergyCurve {
    pub fn n_index(&self, n: usize) -> Option<usize> {
        self.n_list.iter().position(|&m| m == n)
    }

    pub fn beta_index(&self, beta: f64) -> Option<usize> {
        self.betas.iter().position(|&b| (b - beta).abs() < 1e-12)
    }

    pub fn largest_n_index(&self) -> usize {
        self.n_list.len() - 1
    }

    /// Per-replica values of `(1/n) log Z_n(β)`, in replica order.
    pub fn replica_values(&self, n_idx: usize, beta_idx: usize) -> &[f64] {
        &self.values[n_idx][beta_idx]
    }

    /// Summary of a per-replica linear combination `Σ cᵢ · value(βᵢ)`.
    /// Replicas are shared across β, so this is the paired standard error.
    pub fn combination(&self, n_idx: usize, terms: &[(usize, f64)]) -> Summary {
        let combined: Vec<f64> = (0..self.samples)
            .map(|r| {
                terms
                    .iter()
                    .map(|&(bi, c)| c * self.values[n_idx][bi][r])
                    .sum()
            })
            .collect();
        Summary::of(&combined)
    }

    pub fn points(&self) -> Vec<CurvePoint> {
        let mut rows = Vec::new();
        for (ni, &n) in self.n_list.iter().enumerate() {
            for (bi, &beta) in self.betas.iter().enumerate() {
                rows.push(CurvePoint {
                    beta,
                    n,
                    samples: self.samples,
                    mean: self.mean[ni][bi],
                    se: self.se[ni][bi],
                    lambda: self.annealed[bi],
                });
            }
        }
        rows
    }

    /// CSV rows `(beta, n, M, mean, se, lambda)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in self.points() {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn manifest(&self) -> CurveManifest {
        CurveManifest {
            model: self.model.clone(),
            d: self.d,
            grid: self.betas.clone(),
            n_list: self.n_list.clone(),
            samples: self.samples,
            master_seed: self.master_seed,
        }
    }
}

/// `λ(β) − (1/n) Q[log Z_n(β)]` at the largest `n`.
#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub beta: f64,
    pub lambda: f64,
    pub estimate: f64,
    pub gap: f64,
    pub se: f64,
}

pub fn jensen_gap(curve: &FreeEnergyCurve) -> Vec<GapRow> {
    let ni = curve.largest_n_index();
    curve
        .betas
        .iter()
        .enumerate()
        .map(|(bi, &beta)| GapRow {
            beta,
            lambda: curve.annealed[bi],
            estimate: curve.mean[ni][bi],
            gap: curve.annealed[bi] - curve.mean[ni][bi],
            se: curve.se[ni][bi],
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalRow {
    pub beta: f64,
    pub gap: f64,
    pub se: f64,
    pub flagged: bool,
}

/// β values whose Jensen gap is indistinguishable from zero at the largest
/// simulated `n`.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalScan {
    pub n: usize,
    pub tol: f64,
    pub rows: Vec<CriticalRow>,
    pub note: &'static str,
}

impl CriticalScan {
    pub fn flagged(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| r.flagged).map(|r| r.beta).collect()
    }
}

pub const FINITE_N_NOTE: &str =
    "finite-n heuristic: compares estimates at a fixed n, not the n→∞ limit";

/// Flags β with `|gap| ≤ max(tol, 3·SE)`.
pub fn critical_region_scan(curve: &FreeEnergyCurve, tol: f64) -> CriticalScan {
    let rows = jensen_gap(curve)
        .into_iter()
        .map(|g| CriticalRow {
            beta: g.beta,
            gap: g.gap,
            se: g.se,
            flagged: g.gap.abs() <= tol.max(3.0 * g.se),
        })
        .collect();
    CriticalScan {
        n: curve.n_list[curve.largest_n_index()],
        tol,
        rows,
        note: FINITE_N_NOTE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    }

    #[test]
    fn zero_beta_is_exactly_zero() {
        let m = DistributionModel::gaussian(0.0, 1.0).unwrap();
        let c = estimate_free_energy(&m, 1, &[-1.0, 0.0, 1.0], &[4, 8], 5, 1).unwrap();
        for ni in 0..2 {
            assert_eq!(c.mean[ni][1], 0.0);
            assert_eq!(c.se[ni][1], 0.0);
        }
    }

    #[test]
    fn invalid_inputs() {
        let m = DistributionModel::bernoulli(0.5).unwrap();
        assert!(estimate_free_energy(&m, 1, &[], &[4], 5, 1).is_err());
        assert!(estimate_free_energy(&m, 1, &[1.0, 0.0], &[4], 5, 1).is_err());
        assert!(estimate_free_energy(&m, 1, &[1.0], &[8, 4], 5, 1).is_err());
        assert!(estimate_free_energy(&m, 1, &[1.0], &[4], 1, 1).is_err());
    }

    #[test]
    fn jensen_bound_and_superadditivity() {
        let m = DistributionModel::bernoulli(0.5).unwrap();
        let c = estimate_free_energy(&m, 1, &[1.0], &[16, 32], 200, 11).unwrap();
        assert!(c.mean[1][0] <= m.log_mgf(1.0) + 3.0 * c.se[1][0]);
        let pooled = (c.se[0][0].powi(2) + c.se[1][0].powi(2)).sqrt();
        assert!(c.mean[1][0] >= c.mean[0][0] - 3.0 * pooled);
    }

    #[test]
    fn curves_are_convex_and_slope_at_zero_is_the_mean() {
        let m = DistributionModel::finite_discrete(vec![-1.0, 0.0, 2.0], vec![0.3, 0.3, 0.4]).unwrap();
        let betas = grid(-1.0, 1.0, 0.25);
        let c = estimate_free_energy(&m, 1, &betas, &[8, 16], 60, 5).unwrap();
        for ni in 0..2 {
            for bi in 1..betas.len() - 1 {
                let s = c.combination(ni, &[(bi - 1, 1.0), (bi, -2.0), (bi + 1, 1.0)]);
                assert!(s.mean >= -3.0 * s.se - 1e-12);
            }
        }
        let h = 1e-4;
        let c = estimate_free_energy(&m, 1, &[-h, 0.0, h], &[16], 100, 6).unwrap();
        let slope = c.combination(0, &[(2, 0.5 / h), (0, -0.5 / h)]);
        assert!((slope.mean - m.mean()).abs() <= 3.0 * slope.se + 1e-6);
    }

    #[test]
    fn symmetric_model_gives_symmetric_curve() {
        let m = DistributionModel::rademacher();
        let c = estimate_free_energy(&m, 1, &[-1.5, -0.5, 0.5, 1.5], &[20], 100, 3).unwrap();
        for (lo, hi) in [(0, 3), (1, 2)] {
            let pooled = (c.se[0][lo].powi(2) + c.se[0][hi].powi(2)).sqrt();
            assert!((c.mean[0][lo] - c.mean[0][hi]).abs() <= 3.0 * pooled);
        }
    }

    #[test]
    fn same_seed_same_curve() {
        let m = DistributionModel::bernoulli(0.3).unwrap();
        let a = estimate_free_energy(&m, 2, &[0.5, 1.0], &[6], 20, 99).unwrap();
        let b = estimate_free_energy(&m, 2, &[0.5, 1.0], &[6], 20, 99).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.se, b.se);
        let mut x = Vec::new();
        let mut y = Vec::new();
        a.write_csv(&mut x).unwrap();
        b.write_csv(&mut y).unwrap();
        assert_eq!(x, y);
        assert!(String::from_utf8(x).unwrap().starts_with("beta,n,M,mean,se,lambda"));
    }

    #[test]
    fn gap_and_scan_at_zero() {
        let m = DistributionModel::bernoulli(0.5).unwrap();
        let c = estimate_free_energy(&m, 1, &[0.0, 2.0], &[32], 50, 4).unwrap();
        let gaps = jensen_gap(&c);
        assert_eq!(gaps[0].gap, 0.0);
        let scan = critical_region_scan(&c, 1e-3);
        assert!(scan.rows[0].flagged);
        assert!(!scan.rows[1].flagged);
    }
}
