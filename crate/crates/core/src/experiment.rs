//! Config-driven experiment runs and the fixed-size invariant suite.
//!
//! A run is described by one JSON document ([`ExperimentConfig`]). It is
//! validated in full before anything touches the disk; results are computed
//! in memory and only then written to the output directory as
//! `manifest.json`, data CSVs and `summary.json`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::conjugate::{corollary_check, legendre, legendre_at, rate_from_curve, rho_pm, v_set_scan, RateSource};
use crate::count::{count_table, verify_partition_identity, verify_tightness_bound};
use crate::env::{derive_seed, sample_environment, DistributionModel, FixedEnvironment};
use crate::error::{LabError, Result};
use crate::free_energy::{critical_region_scan, estimate_free_energy, jensen_gap, FreeEnergyCurve};
use crate::numeric::pooled_se;
use crate::report::Check;
use crate::smoothed::{
    concentration_experiment, rate_lambda_sweep, sandwich_bounds, sigma_measure, smoothed_value,
    superadditivity_check_pathwise, DEFAULT_TAIL_GRID, EXACT_SLACK,
};
use crate::transfer::{brute_force_partition, enumerate_paths, partition_log};

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Environments per run on which exact per-environment inequalities are
/// evaluated.
const EXACT_REPLICAS: usize = 8;

/// Largest `n` used for exact pathwise gluing checks inside a run.
const PATHWISE_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    FreeEnergy,
    RateFunction,
    Corollary,
    Smoothed,
    Verify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub model: Option<DistributionModel>,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub betas: Vec<f64>,
    /// Levels ρ for rate-function and corollary runs; levels ξ for smoothed
    /// runs.
    #[serde(default)]
    pub rhos: Vec<f64>,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub samples: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
}

fn default_d() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Every violated field, or `Ok` when the config can run.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let needs_model = self.kind != ExperimentKind::Verify;
        if self.seed.is_none() {
            errs.push("seed: missing".to_string());
        }
        if !needs_model {
            return finish(errs);
        }
        match &self.model {
            None => errs.push("model: missing".into()),
            Some(m) if self.kind == ExperimentKind::Corollary && !m.is_integer_valued() => {
                errs.push("model: corollary runs need an integer-valued law".into())
            }
            Some(_) => {}
        }
        if self.d == 0 {
            errs.push("d: must be at least 1".into());
        }
        if self.n_list.is_empty() {
            errs.push("n_list: empty".into());
        } else if self.n_list[0] == 0 || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            errs.push("n_list: must be positive and strictly increasing".into());
        }
        let needs_betas = matches!(
            self.kind,
            ExperimentKind::FreeEnergy | ExperimentKind::RateFunction | ExperimentKind::Corollary
        );
        if needs_betas {
            if self.betas.is_empty() {
                errs.push("betas: empty".into());
            } else if self.betas.iter().any(|b| !b.is_finite())
                || self.betas.windows(2).any(|w| w[0] >= w[1])
            {
                errs.push("betas: must be finite and strictly increasing".into());
            }
        }
        if self.rhos.iter().any(|r| !r.is_finite()) {
            errs.push("rhos: must be finite".into());
        }
        let min_samples = match self.kind {
            ExperimentKind::Smoothed => 100,
            ExperimentKind::Corollary => 1,
            _ => 2,
        };
        if self.samples < min_samples {
            errs.push(format!("samples: need at least {min_samples}, got {}", self.samples));
        }
        match self.kind {
            ExperimentKind::Corollary => {
                if self.rhos.len() != 1 {
                    errs.push("rhos: corollary runs take exactly one level".into());
                }
            }
            ExperimentKind::Smoothed => {
                if self.rhos.is_empty() {
                    errs.push("rhos: empty (levels ξ)".into());
                }
                if self.lambdas.is_empty() {
                    errs.push("lambdas: empty".into());
                } else if self.lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                    errs.push("lambdas: must be positive".into());
                }
                if self.deltas.is_empty() {
                    errs.push("deltas: empty".into());
                } else if self.deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
                    errs.push("deltas: must be positive".into());
                }
            }
            _ => {}
        }
        finish(errs)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    fn model(&self) -> &DistributionModel {
        self.model.as_ref().expect("validated")
    }
}

fn finish(errs: Vec<String>) -> Result<()> {
    if errs.is_empty() {
        Ok(())
    } else {
        Err(LabError::InvalidConfig(errs))
    }
}

/// Pass/fail record of a run, written as `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub kind: ExperimentKind,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    version: &'static str,
    started_unix: u64,
    wall_seconds: f64,
}

/// Named in-memory output file.
struct Artifact {
    name: &'static str,
    bytes: Vec<u8>,
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// Validates, computes, then writes every output file.
pub fn run(config: &ExperimentConfig) -> Result<Summary> {
    config.validate()?;
    let started = Instant::now();
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let (checks, artifacts) = match config.kind {
        ExperimentKind::FreeEnergy => free_energy_run(config)?,
        ExperimentKind::RateFunction => rate_function_run(config)?,
        ExperimentKind::Corollary => corollary_run(config)?,
        ExperimentKind::Smoothed => smoothed_run(config)?,
        ExperimentKind::Verify => {
            let ledger = verify_suite(config.seed())?;
            let bytes = json_bytes(&ledger)?;
            (ledger.checks, vec![Artifact { name: "verify.json", bytes }])
        }
    };
    let summary = Summary {
        kind: config.kind,
        pass: checks.iter().all(|c| c.pass),
        checks,
        files: artifacts.iter().map(|a| a.name.to_string()).collect(),
    };
    let manifest = Manifest {
        config,
        version: env!("CARGO_PKG_VERSION"),
        started_unix,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    write_outputs(&config.output_dir, &manifest, &summary, &artifacts)?;
    Ok(summary)
}

fn write_outputs(dir: &Path, manifest: &Manifest, summary: &Summary, artifacts: &[Artifact]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for a in artifacts {
        fs::write(dir.join(a.name), &a.bytes)?;
    }
    fs::write(dir.join("manifest.json"), json_bytes(manifest)?)?;
    fs::write(dir.join("summary.json"), json_bytes(summary)?)?;
    Ok(())
}

type RunOutput = (Vec<Check>, Vec<Artifact>);

fn curve_of(config: &ExperimentConfig) -> Result<FreeEnergyCurve> {
    estimate_free_energy(
        config.model(),
        config.d,
        &config.betas,
        &config.n_list,
        config.samples,
        config.seed(),
    )
}

fn jensen_checks(curve: &FreeEnergyCurve) -> Vec<Check> {
    jensen_gap(curve)
        .into_iter()
        .map(|g| Check::at_most(format!("jensen_bound(beta={})", g.beta), g.estimate, g.lambda, 3.0 * g.se))
        .collect()
}

fn free_energy_run(config: &ExperimentConfig) -> Result<RunOutput> {
    let curve = curve_of(config)?;
    let scan = critical_region_scan(&curve, 1e-3);
    let artifacts = vec![
        Artifact {
            name: "free_energy.csv",
            bytes: csv_bytes(|b| curve.write_csv(b))?,
        },
        Artifact {
            name: "curve.json",
            bytes: json_bytes(&curve.manifest())?,
        },
        Artifact {
            name: "critical_scan.json",
            bytes: json_bytes(&scan)?,
        },
    ];
    Ok((jensen_checks(&curve), artifacts))
}

fn rate_function_run(config: &ExperimentConfig) -> Result<RunOutput> {
    let curve = curve_of(config)?;
    let ni = curve.largest_n_index();
    let n = curve.n_list[ni];
    let rate = if config.rhos.is_empty() {
        rate_from_curve(&curve, n)?
    } else {
        let mut g = legendre_at(&curve.betas, &curve.mean[ni], &curve.se[ni], &config.rhos)?;
        g.source = RateSource {
            label: "free-energy curve".into(),
            n: Some(n),
        };
        g
    };
    let mut checks = jensen_checks(&curve);
    // f** ≤ f holds exactly for any grid conjugate
    let back = rate.biconjugate(&curve.betas);
    for ((b, f), g) in curve.betas.iter().zip(&curve.mean[ni]).zip(&back) {
        checks.push(Check::at_most(format!("biconjugate_below_input(beta={b})"), *g, *f, EXACT_SLACK));
    }
    let scan = v_set_scan(&rate, config.model(), 1e-3);
    let mut artifacts = vec![
        Artifact {
            name: "free_energy.csv",
            bytes: csv_bytes(|b| curve.write_csv(b))?,
        },
        Artifact {
            name: "rate_function.csv",
            bytes: csv_bytes(|b| rate.write_csv(b))?,
        },
        Artifact {
            name: "v_set.json",
            bytes: json_bytes(&scan)?,
        },
    ];
    let signs = (curve.betas[0] < 0.0, *curve.betas.last().expect("nonempty") > 0.0);
    if signs == (true, true) {
        let envs: Vec<_> = (0..config.samples)
            .map(|i| sample_environment(config.model(), config.d, n, derive_seed(config.seed(), i as u64)))
            .collect::<Result<_>>()?;
        let est = rho_pm(&curve, &envs)?;
        artifacts.push(Artifact {
            name: "rho_pm.json",
            bytes: json_bytes(&est)?,
        });
    }
    Ok((checks, artifacts))
}

fn corollary_run(config: &ExperimentConfig) -> Result<RunOutput> {
    let curve = curve_of(config)?;
    let rate = rate_from_curve(&curve, *curve.n_list.last().expect("nonempty"))?;
    let report = corollary_check(
        config.model(),
        config.d,
        config.rhos[0],
        &config.n_list,
        config.samples,
        config.seed(),
        &rate,
    )?;
    let checks = report
        .rows
        .windows(2)
        .map(|w| {
            Check::at_most(
                format!("corollary_gap_nonincreasing(n={}->{})", w[0].n, w[1].n),
                w[1].abs_diff,
                w[0].abs_diff,
                0.0,
            )
        })
        .collect();
    let artifacts = vec![
        Artifact {
            name: "free_energy.csv",
            bytes: csv_bytes(|b| curve.write_csv(b))?,
        },
        Artifact {
            name: "rate_function.csv",
            bytes: csv_bytes(|b| rate.write_csv(b))?,
        },
        Artifact {
            name: "corollary.json",
            bytes: json_bytes(&report)?,
        },
    ];
    Ok((checks, artifacts))
}

#[derive(Debug, Serialize)]
struct RateLambdaCsvRow {
    xi: f64,
    lambda: f64,
    n: usize,
    value: f64,
    se: f64,
    jensen_ceiling: f64,
    jensen_ceiling_se: f64,
}

fn smoothed_run(config: &ExperimentConfig) -> Result<RunOutput> {
    let model = config.model();
    let seed = config.seed();
    let n_max = *config.n_list.last().expect("nonempty");
    let mut lambdas = config.lambdas.clone();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();

    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for &xi in &config.rhos {
        let sweep = rate_lambda_sweep(model, config.d, xi, &lambdas, &config.n_list, config.samples, seed)?;
        for est in &sweep {
            let floor = est
                .rows
                .iter()
                .map(|r| r.value - 3.0 * r.se)
                .fold(f64::INFINITY, f64::min);
            checks.push(Check::at_least(
                format!("rate_lambda_trend(xi={xi},lambda={})", est.lambda),
                floor,
                est.estimate - 6.0 * est.estimate_se,
                0.0,
            ));
            for r in &est.rows {
                checks.push(Check::at_most(
                    format!("rate_lambda_jensen(xi={xi},lambda={},n={})", est.lambda, r.n),
                    r.value,
                    r.jensen_ceiling,
                    EXACT_SLACK,
                ));
                rows.push(RateLambdaCsvRow {
                    xi,
                    lambda: est.lambda,
                    n: r.n,
                    value: r.value,
                    se: r.se,
                    jensen_ceiling: r.jensen_ceiling,
                    jensen_ceiling_se: r.jensen_ceiling_se,
                });
            }
        }
        for w in sweep.windows(2) {
            checks.push(Check::at_most(
                format!("rate_lambda_monotone(xi={xi},lambda={}->{})", w[0].lambda, w[1].lambda),
                w[0].estimate,
                w[1].estimate,
                3.0 * pooled_se(&[w[0].estimate_se, w[1].estimate_se]),
            ));
        }
    }

    let a = n_max as f64 * config.rhos[0];
    let conc = concentration_experiment(model, config.d, n_max, a, lambdas[0], config.samples, seed, &DEFAULT_TAIL_GRID)?;
    for r in &conc.rows {
        checks.push(Check::at_most(
            format!("concentration(u={})", r.u),
            r.empirical,
            r.bound,
            3.0 * r.binomial_se,
        ));
    }

    if model.is_integer_valued() {
        let head = n_max.min(PATHWISE_MAX_N) / 2;
        let tail = n_max.min(PATHWISE_MAX_N) - head;
        for i in 0..EXACT_REPLICAS.min(config.samples) {
            let env = sample_environment(model, config.d, n_max, derive_seed(seed, i as u64))?;
            let table = count_table(&env, n_max)?;
            for &xi in &config.rhos {
                for &delta in &config.deltas {
                    for &lambda in &lambdas {
                        let s = sandwich_bounds(&table, xi, delta, lambda)?;
                        checks.push(s.upper);
                        checks.push(s.lower);
                    }
                }
            }
            if head > 0 {
                let xi = config.rhos[0];
                for &lambda in &lambdas {
                    let r = superadditivity_check_pathwise(
                        &env,
                        head,
                        tail,
                        tail as f64 * xi,
                        head as f64 * xi,
                        lambda,
                    )?;
                    checks.extend(r.checks);
                }
            }
        }
    }

    let artifacts = vec![
        Artifact {
            name: "rate_lambda.csv",
            bytes: csv_bytes(|b| {
                let mut w = csv::Writer::from_writer(b);
                for r in &rows {
                    w.serialize(r)?;
                }
                w.flush()?;
                Ok(())
            })?,
        },
        Artifact {
            name: "concentration.csv",
            bytes: csv_bytes(|b| conc.write_csv(b))?,
        },
    ];
    Ok((checks, artifacts))
}

/// Outcome of [`verify_suite`].
#[derive(Debug, Clone, Serialize)]
pub struct VerifyLedger {
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
}

/// Every exact identity and pathwise inequality at small sizes (`n ≤ 20`).
/// Deterministic for a given seed.
pub fn verify_suite(seed: u64) -> Result<VerifyLedger> {
    let bern = DistributionModel::bernoulli(0.5)?;
    let mut checks = Vec::new();

    // partition identity and tightness against the transfer recursion
    for (i, n) in [10usize, 20].into_iter().enumerate() {
        let env = sample_environment(&bern, 1, n, derive_seed(seed, i as u64))?;
        let table = count_table(&env, n)?;
        for beta in [-2.0, -0.5, 0.0, 1.0, 3.0] {
            let mut c = verify_partition_identity(&table, &env, beta)?;
            c.name = format!("partition_identity(n={n},beta={beta})");
            checks.push(c);
        }
        for beta in [0.5, 1.0, 3.0] {
            let mut c = verify_tightness_bound(&table, &env, beta)?;
            c.name = format!("exponential_tightness(n={n},beta={beta})");
            checks.push(c);
        }
    }

    // transfer recursion, histogram and smoothed values against enumeration
    for d in [1usize, 2] {
        let n = if d == 1 { 8 } else { 6 };
        let env = sample_environment(&bern, d, n, derive_seed(seed, 10 + d as u64))?;
        for beta in [-1.0, 0.7] {
            checks.push(Check::close(
                format!("transfer_vs_enumeration(d={d},beta={beta})"),
                partition_log(&env, n, beta)?.log_z,
                brute_force_partition(&env, n, beta)?,
                1e-10,
            ));
        }
        let table = count_table(&env, n)?;
        let mut hist = vec![0u128; n + 1];
        let mut smooth = 0.0;
        let (a, lambda) = (n as f64 * 0.4, 1.3);
        enumerate_paths(&env, n, |p| {
            hist[p.weight() as usize] += 1;
            smooth += (-lambda * (p.weight() - a).abs()).exp();
        })?;
        let counted: Vec<(i64, u128)> = table.weight_counts()?;
        let matches = counted.iter().all(|&(h, c)| hist[h as usize] == c)
            && hist.iter().sum::<u128>() == table.total()?;
        checks.push(Check::close(
            format!("histogram_vs_enumeration(d={d})"),
            if matches { 0.0 } else { 1.0 },
            0.0,
            0.0,
        ));
        let paths = ((2 * d) as f64).powi(n as i32);
        checks.push(Check::close(
            format!("smoothed_vs_enumeration(d={d})"),
            smoothed_value(&env, n, lambda, a, &vec![0; d])?.value,
            (smooth / paths).ln(),
            1e-10,
        ));
    }

    // smoothed functionals on integer environments
    let env = sample_environment(&bern, 1, 20, derive_seed(seed, 20))?.with_margin(4);
    for lambda in [0.5, 1.0, 5.0] {
        let v1 = smoothed_value(&env, 12, lambda, 5.0, &[0])?.value;
        let v2 = smoothed_value(&env, 12, lambda, 7.5, &[0])?.value;
        checks.push(Check::at_most(format!("smoothed_nonpositive(lambda={lambda})"), v1, 0.0, 0.0));
        checks.push(Check::at_most(
            format!("smoothed_lipschitz(lambda={lambda})"),
            (v1 - v2).abs(),
            lambda * 2.5,
            1e-10,
        ));
        let s = sigma_measure(&env, 12, 6.0, lambda, &[2])?;
        checks.push(Check::close(
            format!("sigma_normalized(lambda={lambda})"),
            s.probs.iter().sum(),
            1.0,
            1e-10,
        ));
        let r = superadditivity_check_pathwise(&env, 10, 10, 4.5, 5.5, lambda)?;
        for mut c in r.checks {
            c.name = format!("{}(lambda={lambda})", c.name);
            checks.push(c);
        }
    }
    let flat = FixedEnvironment::constant(1, 10, 2.0);
    let r = superadditivity_check_pathwise(&flat, 6, 4, 8.0, 12.0, 1.5)?;
    checks.push(Check::close("pathwise_equality_degenerate", r.lhs, r.rhs, 1e-10));

    let table = count_table(&env, 20)?;
    for (xi, delta) in [(0.5, 0.1), (0.6, 0.05), (0.8, 0.2), (3.0, 0.1)] {
        for lambda in [1.0, 5.0, 20.0] {
            let s = sandwich_bounds(&table, xi, delta, lambda)?;
            for mut c in [s.upper, s.lower] {
                c.name = format!("{}(xi={xi},delta={delta},lambda={lambda})", c.name);
                checks.push(c);
            }
        }
    }

    // Legendre round trip on analytic log-MGFs
    let gauss = DistributionModel::gaussian(0.0, 1.0)?;
    for (label, model) in [("bernoulli", &bern), ("gaussian", &gauss)] {
        let betas: Vec<f64> = (0..=400).map(|i| -10.0 + 0.05 * i as f64).collect();
        let values: Vec<f64> = betas.iter().map(|&b| model.log_mgf(b)).collect();
        let grid = legendre(&betas, &values)?;
        let (lo, hi) = grid.validity;
        let worst = (1..10)
            .map(|k| {
                let rho = lo + (hi - lo) * (0.1 + 0.08 * k as f64);
                let want = model.log_mgf_conjugate(rho).to_f64();
                (grid.evaluate(rho).0 - want).abs()
            })
            .fold(0.0, f64::max);
        checks.push(Check::at_most(format!("legendre_round_trip({label})"), worst, 1e-3, 0.0));
    }

    let pass = checks.iter().all(|c| c.pass);
    Ok(VerifyLedger { seed, pass, checks })
}

/// Synthesized config for the flag-driven subcommands.
pub fn shortcut_config(kind: ExperimentKind, model: DistributionModel, output_dir: PathBuf) -> ExperimentConfig {
    let betas: Vec<f64> = (0..=24).map(|i| -3.0 + 0.25 * i as f64).collect();
    let (n_list, rhos, lambdas, deltas, samples) = match kind {
        ExperimentKind::Corollary => (vec![16, 32, 64], vec![0.75], vec![], vec![], 50),
        ExperimentKind::Smoothed => (
            vec![8, 16, 32],
            vec![0.6, 0.75],
            vec![0.5, 1.0, 2.0, 4.0],
            vec![0.05, 0.1, 0.2],
            100,
        ),
        _ => (vec![16, 32, 64], vec![], vec![], vec![], 200),
    };
    ExperimentConfig {
        kind,
        model: Some(model),
        d: 1,
        n_list,
        betas,
        rhos,
        lambdas,
        deltas,
        samples,
        seed: Some(DEFAULT_SEED),
        output_dir,
    }
}
