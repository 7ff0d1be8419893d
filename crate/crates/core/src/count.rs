//! Exact path counting for integer-valued environments.
//!
//! `C_k(x, h)` is the number of length-`k` paths from the origin that end at
//! `x` having collected total weight `h`:
//!
//! ```text
//! C_0(0, 0) = 1
//! C_k(x, h) = Σ_{|y−x|₁=1} C_{k−1}(y, h − η(k, x))
//! ```
//!
//! Counts are held in `u128` while `(2d)^n < 2^127` and otherwise in log-space
//! floats, in which case the table is flagged approximate.

use std::io::Write;

use serde::Serialize;

use crate::env::Environment;
use crate::error::{LabError, Result};
use crate::lattice::{PathLattice, NO_SITE};
use crate::numeric::{decimal_u128, log_add_exp, log_sum_exp};
use crate::report::Check;
use crate::transfer::partition_log;

#[derive(Debug, Clone, PartialEq)]
enum Counts {
    Exact(Vec<u128>),
    LogSpace(Vec<f64>),
}

/// Joint histogram of `(S_n, H_n)` over all `(2d)^n` paths.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightCountTable {
    n: usize,
    dim: usize,
    sites: Vec<Vec<i64>>,
    h_min: i64,
    width: usize,
    counts: Counts,
}

fn integer_level(step: usize, site: &[i64], w: f64) -> Result<i64> {
    if w.is_finite() && w.fract() == 0.0 && w.abs() < 9.0e15 {
        Ok(w as i64)
    } else {
        Err(LabError::NonIntegerWeight {
            step,
            site: site.to_vec(),
            value: w,
        })
    }
}

fn fits_exact(dim: usize, n: usize) -> bool {
    (2 * dim as u128)
        .checked_pow(n as u32)
        .is_some_and(|total| total <= i128::MAX as u128)
}

/// Builds the count table. Exact in `u128` when `(2d)^n < 2^127`, flagged
/// approximate otherwise.
pub fn count_table<E: Environment + ?Sized>(env: &E, n: usize) -> Result<WeightCountTable> {
    build(env, n, !fits_exact(env.dim(), n))
}

/// Same recursion carried out in log-space regardless of size.
pub fn count_table_log_space<E: Environment + ?Sized>(env: &E, n: usize) -> Result<WeightCountTable> {
    build(env, n, true)
}

fn build<E: Environment + ?Sized>(env: &E, n: usize, log_space: bool) -> Result<WeightCountTable> {
    if n > env.horizon() {
        return Err(LabError::HorizonExceeded {
            requested: n,
            horizon: env.horizon(),
        });
    }
    let lattice = PathLattice::new(env.dim(), n)?;
    let field = lattice.materialize(env)?;

    // integer levels per slice, with the running weight window
    let mut levels: Vec<Vec<i64>> = vec![Vec::new()];
    let mut windows = vec![(0i64, 0i64)];
    for k in 1..=n {
        let slice = lattice.slice(k);
        let row = field
            .row(k)
            .iter()
            .enumerate()
            .map(|(i, &w)| integer_level(k, slice.site(i), w))
            .collect::<Result<Vec<i64>>>()?;
        let lo = row.iter().copied().min().unwrap_or(0);
        let hi = row.iter().copied().max().unwrap_or(0);
        let (plo, phi) = windows[k - 1];
        windows.push((plo + lo, phi + hi));
        levels.push(row);
    }

    let counts = if log_space {
        Counts::LogSpace(run(&lattice, &levels, &windows, f64::NEG_INFINITY, 0.0, |a, b| {
            log_add_exp(a, b)
        }))
    } else {
        Counts::Exact(run(&lattice, &levels, &windows, 0u128, 1u128, |a, b| a + b))
    };
    let (h_min, h_max) = windows[n];
    Ok(WeightCountTable {
        n,
        dim: env.dim(),
        sites: lattice.slice(n).sites().map(<[i64]>::to_vec).collect(),
        h_min,
        width: (h_max - h_min + 1) as usize,
        counts,
    })
}

fn run<T: Copy>(
    lattice: &PathLattice,
    levels: &[Vec<i64>],
    windows: &[(i64, i64)],
    zero: T,
    one: T,
    add: impl Fn(T, T) -> T,
) -> Vec<T> {
    let mut prev = vec![one];
    let mut prev_width = 1usize;
    for k in 1..levels.len() {
        let slice = lattice.slice(k);
        let (lo, hi) = windows[k];
        let (plo, _) = windows[k - 1];
        let width = (hi - lo + 1) as usize;
        let mut next = vec![zero; slice.len() * width];
        for (i, &w) in levels[k].iter().enumerate() {
            // C_{k-1}(y, h') feeds C_k(x, h' + w)
            let offset = (plo + w - lo) as usize;
            let row = &mut next[i * width..(i + 1) * width];
            for &p in slice.preds(i) {
                if p == NO_SITE {
                    continue;
                }
                let src = &prev[p as usize * prev_width..(p as usize + 1) * prev_width];
                for (j, &c) in src.iter().enumerate() {
                    row[offset + j] = add(row[offset + j], c);
                }
            }
        }
        prev = next;
        prev_width = width;
    }
    prev
}

impl WeightCountTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.counts, Counts::Exact(_))
    }

    /// Endpoint sites, in the coordinates of the environment the table was
    /// built from.
    pub fn sites(&self) -> &[Vec<i64>] {
        &self.sites
    }

    /// Inclusive range of weights the recursion allowed for.
    pub fn weight_window(&self) -> (i64, i64) {
        (self.h_min, self.h_min + self.width as i64 - 1)
    }

    fn heights(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.width as i64).map(move |j| self.h_min + j)
    }

    /// `ln (2d)^n`.
    pub fn log_path_total(&self) -> f64 {
        self.n as f64 * ((2 * self.dim) as f64).ln()
    }

    pub fn count(&self, site: &[i64], h: i64) -> Result<u128> {
        let Counts::Exact(c) = &self.counts else {
            return Err(LabError::InexactCounts);
        };
        let Some(i) = self.sites.iter().position(|s| s == site) else {
            return Ok(0);
        };
        if h < self.h_min || h >= self.h_min + self.width as i64 {
            return Ok(0);
        }
        Ok(c[i * self.width + (h - self.h_min) as usize])
    }

    fn log_cell(&self, i: usize, j: usize) -> f64 {
        match &self.counts {
            Counts::Exact(c) => {
                let v = c[i * self.width + j];
                if v == 0 {
                    f64::NEG_INFINITY
                } else {
                    (v as f64).ln()
                }
            }
            Counts::LogSpace(c) => c[i * self.width + j],
        }
    }

    /// `Σ_{x,h} C_n(x, h)`.
    pub fn total(&self) -> Result<u128> {
        match &self.counts {
            Counts::Exact(c) => Ok(c.iter().sum()),
            Counts::LogSpace(_) => Err(LabError::InexactCounts),
        }
    }

    /// `h ↦ Σ_x C_n(x, h)`, nonzero entries only.
    pub fn weight_counts(&self) -> Result<Vec<(i64, u128)>> {
        let Counts::Exact(c) = &self.counts else {
            return Err(LabError::InexactCounts);
        };
        Ok(self
            .heights()
            .enumerate()
            .map(|(j, h)| (h, (0..self.sites.len()).map(|i| c[i * self.width + j]).sum::<u128>()))
            .filter(|(_, c)| *c > 0)
            .collect())
    }

    /// `x ↦ Σ_h C_n(x, h)`, aligned with [`sites`](Self::sites).
    pub fn endpoint_counts(&self) -> Result<Vec<u128>> {
        let Counts::Exact(c) = &self.counts else {
            return Err(LabError::InexactCounts);
        };
        Ok(c.chunks_exact(self.width).map(|row| row.iter().sum()).collect())
    }

    /// `log P(H_n = h)` under simple random walk; available for exact and
    /// log-space tables alike. Atoms of zero mass are skipped.
    pub fn log_weight_probs(&self) -> Vec<(i64, f64)> {
        let norm = self.log_path_total();
        self.heights()
            .enumerate()
            .map(|(j, h)| {
                let col: Vec<f64> = (0..self.sites.len()).map(|i| self.log_cell(i, j)).collect();
                (h, log_sum_exp(&col) - norm)
            })
            .filter(|(_, l)| *l > f64::NEG_INFINITY)
            .collect()
    }

    /// `log P(S_n = x_i, H_n = h)` for endpoint index `i`.
    pub fn log_joint_probs(&self, i: usize) -> Vec<(i64, f64)> {
        let norm = self.log_path_total();
        self.heights()
            .enumerate()
            .map(|(j, h)| (h, self.log_cell(i, j) - norm))
            .filter(|(_, l)| *l > f64::NEG_INFINITY)
            .collect()
    }

    /// `E|H_n − a|` under simple random walk.
    pub fn expected_abs_deviation(&self, a: f64) -> f64 {
        self.log_weight_probs()
            .into_iter()
            .map(|(h, lp)| lp.exp() * (h as f64 - a).abs())
            .sum()
    }
}

/// One atom `h/n` of `ν_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Atom {
    pub h: i64,
    #[serde(serialize_with = "decimal_u128::serialize")]
    pub count: u128,
    pub log_mass: f64,
}

/// `ν_n`: the law of `H_n/n` when the path is uniform on `Ω_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    pub n: usize,
    /// `(2d)^n`, the common denominator of every mass.
    pub total: u128,
    pub atoms: Vec<Atom>,
}

impl EmpiricalMeasure {
    pub fn location(&self, atom: &Atom) -> f64 {
        atom.h as f64 / self.n as f64
    }

    /// Exact count of paths whose atom satisfies `keep`.
    pub fn count_where(&self, mut keep: impl FnMut(f64) -> bool) -> u128 {
        self.atoms
            .iter()
            .filter(|a| keep(self.location(a)))
            .map(|a| a.count)
            .sum()
    }

    /// Rows `(h, count, log_mass)`, counts as decimal strings.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for atom in &self.atoms {
            w.serialize(atom)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `ν_n({h/n}) = Σ_x C_n(x, h) / (2d)^n`.
pub fn empirical_measure(table: &WeightCountTable) -> Result<EmpiricalMeasure> {
    let total = table.total()?;
    let log_total = table.log_path_total();
    let atoms = table
        .weight_counts()?
        .into_iter()
        .map(|(h, count)| Atom {
            h,
            count,
            log_mass: (count as f64).ln() - log_total,
        })
        .collect();
    Ok(EmpiricalMeasure {
        n: table.n,
        total,
        atoms,
    })
}

/// Tolerance deciding that `nρ` is meant as an integer.
const LEVEL_SNAP: f64 = 1e-9;

fn snapped(t: f64) -> Option<i64> {
    let r = t.round();
    ((t - r).abs() <= LEVEL_SNAP * t.abs().max(1.0)).then_some(r as i64)
}

/// Smallest integer `h` with `h ≥ nρ`.
pub fn upper_cut(n: usize, rho: f64) -> i64 {
    let t = n as f64 * rho;
    snapped(t).unwrap_or_else(|| t.ceil() as i64)
}

/// Largest integer `h` with `h ≤ nρ`.
pub fn lower_cut(n: usize, rho: f64) -> i64 {
    let t = n as f64 * rho;
    snapped(t).unwrap_or_else(|| t.floor() as i64)
}

/// `N_n(ρ)`: paths with `H_n ≥ nρ` when `ρ ≥ m`, paths with `H_n ≤ nρ` when
/// `ρ < m`. Both comparisons are inclusive.
pub fn count_threshold(table: &WeightCountTable, rho: f64, mean: f64) -> Result<u128> {
    let counts = table.weight_counts()?;
    let n = table.n;
    Ok(if rho >= mean {
        let cut = upper_cut(n, rho);
        counts.iter().filter(|(h, _)| *h >= cut).map(|(_, c)| c).sum()
    } else {
        let cut = lower_cut(n, rho);
        counts.iter().filter(|(h, _)| *h <= cut).map(|(_, c)| c).sum()
    })
}

/// `log N_n(ρ)` from either kind of table; `-inf` when no path qualifies.
pub fn log_count_threshold(table: &WeightCountTable, rho: f64, mean: f64) -> f64 {
    let n = table.n;
    let keep: Box<dyn Fn(i64) -> bool> = if rho >= mean {
        let cut = upper_cut(n, rho);
        Box::new(move |h| h >= cut)
    } else {
        let cut = lower_cut(n, rho);
        Box::new(move |h| h <= cut)
    };
    let terms: Vec<f64> = table
        .log_weight_probs()
        .into_iter()
        .filter(|(h, _)| keep(*h))
        .map(|(_, lp)| lp)
        .collect();
    log_sum_exp(&terms) + table.log_path_total()
}

/// Compares `log ∫ e^{βnx} dν_n(x)` with `log Z_n(β)` from the transfer
/// recursion; the two are computed by unrelated recursions.
pub fn verify_partition_identity<E: Environment + ?Sized>(
    table: &WeightCountTable,
    env: &E,
    beta: f64,
) -> Result<Check> {
    let terms: Vec<f64> = table
        .log_weight_probs()
        .into_iter()
        .map(|(h, lp)| lp + beta * h as f64)
        .collect();
    let lhs = log_sum_exp(&terms);
    let rhs = partition_log(env, table.n, beta)?.log_z;
    Ok(Check::close("partition_identity", lhs, rhs, 1e-9))
}

/// `∫ e^{βn|x|} dν_n ≤ Z_n(β) + Z_n(−β)`, compared in log-space.
pub fn verify_tightness_bound<E: Environment + ?Sized>(
    table: &WeightCountTable,
    env: &E,
    beta: f64,
) -> Result<Check> {
    if !(beta > 0.0) {
        return Err(LabError::InvalidArgument("tightness bound needs beta > 0".into()));
    }
    let terms: Vec<f64> = table
        .log_weight_probs()
        .into_iter()
        .map(|(h, lp)| lp + beta * (h as f64).abs())
        .collect();
    let lhs = log_sum_exp(&terms);
    let rhs = log_add_exp(
        partition_log(env, table.n, beta)?.log_z,
        partition_log(env, table.n, -beta)?.log_z,
    );
    Ok(Check::at_most("exponential_tightness", lhs, rhs, 1e-10))
}

/// Integer levels `round(η/Δ)` of a real-valued environment.
#[derive(Debug, Clone)]
pub struct Quantized<E> {
    inner: E,
    step: f64,
}

/// `round(η/Δ)·Δ`: the quantized field on the original scale.
#[derive(Debug, Clone)]
pub struct Dequantized<'a, E> {
    source: &'a Quantized<E>,
}

pub fn quantize_environment<E: Environment>(env: E, step: f64) -> Result<Quantized<E>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(LabError::InvalidArgument(format!(
            "quantization step must be positive, got {step}"
        )));
    }
    Ok(Quantized { inner: env, step })
}

impl<E: Environment> Quantized<E> {
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Uniform coupling bound `|Δ·H_n(levels) − H_n| ≤ nΔ/2`.
    pub fn path_error_bound(&self, n: usize) -> f64 {
        n as f64 * self.step / 2.0
    }

    pub fn dequantized(&self) -> Dequantized<'_, E> {
        Dequantized { source: self }
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }
}

impl<E: Environment> Environment for Quantized<E> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    fn weight(&self, step: usize, site: &[i64]) -> Result<f64> {
        self.inner.weight(step, site).map(|w| (w / self.step).round())
    }
}

impl<E: Environment> Environment for Dequantized<'_, E> {
    fn dim(&self) -> usize {
        self.source.dim()
    }

    fn horizon(&self) -> usize {
        self.source.horizon()
    }

    fn weight(&self, step: usize, site: &[i64]) -> Result<f64> {
        self.source
            .weight(step, site)
            .map(|level| level * self.source.step)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{sample_environment, DistributionModel, FixedEnvironment};
    use crate::transfer::enumerate_paths;
    use std::collections::BTreeMap;

    fn bern(seed: u64, d: usize, n: usize) -> crate::env::LatticeEnvironment {
        sample_environment(&DistributionModel::bernoulli(0.5).unwrap(), d, n, seed).unwrap()
    }

    fn binomial(n: u32, k: u32) -> u128 {
        (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
    }

    #[test]
    fn zero_environment_counts_random_walk_paths() {
        let env = FixedEnvironment::constant(1, 9, 0.0);
        let t = count_table(&env, 9).unwrap();
        assert_eq!(t.total().unwrap(), 512);
        for x in t.sites().to_vec() {
            let up = ((9 + x[0]) / 2) as u32;
            assert_eq!(t.count(&x, 0).unwrap(), binomial(9, up));
        }
        let nu = empirical_measure(&t).unwrap();
        assert_eq!(nu.atoms.len(), 1);
        assert_eq!(nu.atoms[0].h, 0);
        assert_eq!(nu.atoms[0].count, 512);
        assert_eq!(count_threshold(&t, 0.5, 0.0).unwrap(), 0);
    }

    #[test]
    fn one_step_instance() {
        let mut env = FixedEnvironment::constant(1, 1, 0.0);
        env.set(1, &[1], 1.0).unwrap();
        let t = count_table(&env, 1).unwrap();
        assert_eq!(t.count(&[1], 1).unwrap(), 1);
        assert_eq!(t.count(&[-1], 0).unwrap(), 1);
        assert_eq!(t.count(&[1], 0).unwrap(), 0);
        let nu = empirical_measure(&t).unwrap();
        assert_eq!(nu.total, 2);
        let masses: Vec<(i64, u128)> = nu.atoms.iter().map(|a| (a.h, a.count)).collect();
        assert_eq!(masses, vec![(0, 1), (1, 1)]);
        assert_eq!(count_threshold(&t, 1.0, 0.5).unwrap(), 1);
    }

    #[test]
    fn table_matches_enumeration() {
        let env = bern(31, 1, 6);
        let t = count_table(&env, 6).unwrap();
        let mut seen = BTreeMap::<(i64, i64), u128>::new();
        enumerate_paths(&env, 6, |p| *seen.entry((p.endpoint()[0], p.weight() as i64)).or_default() += 1)
            .unwrap();
        let (lo, hi) = t.weight_window();
        for x in t.sites().to_vec() {
            for h in lo..=hi {
                assert_eq!(t.count(&x, h).unwrap(), seen.get(&(x[0], h)).copied().unwrap_or(0));
            }
        }
    }

    #[test]
    fn non_integer_weights_are_rejected_with_site() {
        let env = sample_environment(&DistributionModel::gaussian(0.0, 1.0).unwrap(), 1, 3, 1).unwrap();
        match count_table(&env, 3) {
            Err(LabError::NonIntegerWeight { step, .. }) => assert_eq!(step, 1),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn total_conservation_up_to_sixty_steps() {
        let env = bern(5, 1, 60);
        for n in [1usize, 7, 33, 60] {
            let t = count_table(&env, n).unwrap();
            assert!(t.is_exact());
            assert_eq!(t.total().unwrap(), 1u128 << n);
        }
    }

    #[test]
    fn endpoint_marginal_is_binomial() {
        let env = bern(8, 1, 40);
        let t = count_table(&env, 40).unwrap();
        let ends = t.endpoint_counts().unwrap();
        for (x, c) in t.sites().iter().zip(ends) {
            assert_eq!(c, binomial(40, ((40 + x[0]) / 2) as u32));
        }
    }

    #[test]
    fn large_tables_fall_back_to_log_space() {
        let env = bern(2, 1, 130);
        let t = count_table(&env, 130).unwrap();
        assert!(!t.is_exact());
        assert!(matches!(t.total(), Err(LabError::InexactCounts)));
        let mass: Vec<f64> = t.log_weight_probs().into_iter().map(|(_, l)| l).collect();
        assert!(log_sum_exp(&mass).abs() < 1e-10);
    }

    #[test]
    fn log_space_agrees_with_exact() {
        let env = bern(12, 2, 10);
        let exact = count_table(&env, 10).unwrap();
        let approx = count_table_log_space(&env, 10).unwrap();
        for ((h1, a), (h2, b)) in exact.log_weight_probs().into_iter().zip(approx.log_weight_probs()) {
            assert_eq!(h1, h2);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn threshold_semantics_are_inclusive_at_integer_levels() {
        assert_eq!(upper_cut(10, 0.7), 7);
        assert_eq!(lower_cut(10, 0.7), 7);
        assert_eq!(upper_cut(10, 0.71), 8);
        assert_eq!(lower_cut(10, 0.71), 7);
        assert_eq!(upper_cut(3, -0.5), -1);
        assert_eq!(lower_cut(3, -0.5), -2);
    }

    #[test]
    fn lower_tail_counts_below_the_mean() {
        let env = bern(21, 1, 12);
        let t = count_table(&env, 12).unwrap();
        let nu = empirical_measure(&t).unwrap();
        let below = count_threshold(&t, 0.25, 0.5).unwrap();
        assert_eq!(below, nu.count_where(|x| x <= 0.25));
    }

    #[test]
    fn log_threshold_matches_exact_counts() {
        let env = bern(8, 2, 10);
        let exact = count_table(&env, 10).unwrap();
        let approx = count_table_log_space(&env, 10).unwrap();
        for rho in [0.1, 0.3, 0.5, 0.7, 1.0, 1.2] {
            let c = count_threshold(&exact, rho, 0.5).unwrap();
            for t in [&exact, &approx] {
                let l = log_count_threshold(t, rho, 0.5);
                if c == 0 {
                    assert_eq!(l, f64::NEG_INFINITY);
                } else {
                    assert!((l - (c as f64).ln()).abs() < 1e-10);
                }
            }
        }
        // beyond u128 the log route still answers
        let long = bern(8, 1, 140);
        let t = count_table(&long, 140).unwrap();
        assert!(!t.is_exact());
        let both = crate::numeric::log_add_exp(
            log_count_threshold(&t, 0.5, 0.5),
            log_count_threshold(&t, 0.499, 0.5),
        );
        assert!((both - 140.0 * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn identity_and_tightness_on_trivial_environments() {
        let zero = FixedEnvironment::constant(1, 10, 0.0);
        let t = count_table(&zero, 10).unwrap();
        let c = verify_partition_identity(&t, &zero, 0.0).unwrap();
        assert!(c.pass && c.lhs.abs() < 1e-15 && c.rhs == 0.0);
        let tight = verify_tightness_bound(&t, &zero, 1.0).unwrap();
        assert!(tight.pass);
        assert!((tight.lhs - 0.0).abs() < 1e-15 && (tight.rhs - 2f64.ln()).abs() < 1e-15);

        let ones = FixedEnvironment::constant(1, 10, 1.0);
        let t = count_table(&ones, 10).unwrap();
        for beta in [-2.0, 0.5, 3.0] {
            let c = verify_partition_identity(&t, &ones, beta).unwrap();
            assert!((c.lhs - 10.0 * beta).abs() < 1e-10 && (c.rhs - 10.0 * beta).abs() < 1e-10);
        }
    }

    #[test]
    fn tightness_is_strict_for_symmetric_weights() {
        let env = sample_environment(&DistributionModel::rademacher(), 1, 14, 4).unwrap();
        let t = count_table(&env, 14).unwrap();
        for beta in [0.5, 1.0, 2.0] {
            let c = verify_tightness_bound(&t, &env, beta).unwrap();
            assert!(c.pass && c.slack > 0.0, "{c:?}");
        }
    }

    #[test]
    fn csv_export_writes_decimal_counts() {
        let mut env = FixedEnvironment::constant(1, 1, 0.0);
        env.set(1, &[1], 1.0).unwrap();
        let nu = empirical_measure(&count_table(&env, 1).unwrap()).unwrap();
        let mut buf = Vec::new();
        nu.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("h,count,log_mass"));
        assert!(lines.next().unwrap().starts_with("0,1,"));
    }

    #[test]
    fn quantization_examples() {
        let ints = bern(3, 1, 8);
        let q = quantize_environment(&ints, 1.0).unwrap();
        for k in 1..=8usize {
            for x in -(k as i64)..=(k as i64) {
                assert_eq!(q.weight(k, &[x]).unwrap(), ints.weight(k, &[x]).unwrap());
            }
        }
        assert!(quantize_environment(&ints, 0.0).is_err());

        let g = sample_environment(&DistributionModel::gaussian(0.0, 1.0).unwrap(), 1, 20, 8).unwrap();
        let q = quantize_environment(&g, 0.01).unwrap();
        assert!((q.path_error_bound(20) - 0.1).abs() < 1e-15);
        let deq = q.dequantized();
        let mut worst: f64 = 0.0;
        enumerate_paths(&g, 12, |p| {
            let coarse: f64 = (1..=12).map(|k| deq.weight(k, p.site(k)).unwrap()).sum();
            worst = worst.max((coarse - p.weight()).abs());
        })
        .unwrap();
        assert!(worst <= q.path_error_bound(12) + 1e-12);
    }

    #[test]
    fn quantized_partition_function_within_lipschitz_bound() {
        for seed in 0..10 {
            let g = sample_environment(&DistributionModel::gaussian(0.0, 1.0).unwrap(), 1, 20, seed).unwrap();
            let q = quantize_environment(&g, 0.05).unwrap();
            for beta in [0.5, 2.0] {
                let a = partition_log(&q.dequantized(), 20, beta).unwrap().log_z;
                let b = partition_log(&g, 20, beta).unwrap().log_z;
                assert!((a - b).abs() <= beta * q.path_error_bound(20) + 1e-12);
            }
        }
    }
}
