//! Path weights, partition functions and polymer endpoint laws.
//!
//! The partition function is computed by the log-space transfer recursion
//!
//! ```text
//! L_0 = {0: 0}
//! L_k(x) = β η(k,x) + log[(2d)^{-1} Σ_{|y−x|₁=1} e^{L_{k−1}(y)}]
//! ```
//!
//! so that `L_k(x) = log E[e^{βH_k} 1{S_k = x}]` under simple random walk and
//! `Z_n(β) = Σ_x e^{L_n(x)}`. The brute-force enumerators here are the test
//! oracles for every recursion in the crate.

use serde::Serialize;

use crate::env::Environment;
use crate::error::{LabError, Result};
use crate::lattice::{DenseField, PathLattice, NO_SITE};
use crate::numeric::{log_sum_exp, LogSumExp};

/// Largest number of paths the enumerators will visit.
pub const ENUMERATION_LIMIT: f64 = 1e7;

/// `H_n(ω, η) = Σ_{k=1}^n η(k, ω_k)` for a path `ω_0 = 0, ω_1, …, ω_n`.
pub fn path_weight<E: Environment + ?Sized>(env: &E, path: &[Vec<i64>]) -> Result<f64> {
    let d = env.dim();
    let Some(start) = path.first() else {
        return Err(LabError::InvalidPath("empty path".into()));
    };
    if start.len() != d || start.iter().any(|&c| c != 0) {
        return Err(LabError::InvalidPath(format!("path starts at {start:?}")));
    }
    let n = path.len() - 1;
    if n > env.horizon() {
        return Err(LabError::HorizonExceeded {
            requested: n,
            horizon: env.horizon(),
        });
    }
    let mut total = 0.0;
    for (k, pair) in path.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        if b.len() != d {
            return Err(LabError::InvalidPath(format!("site {b:?} has wrong dimension")));
        }
        let step: i64 = a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum();
        if step != 1 {
            return Err(LabError::InvalidPath(format!(
                "step {} from {a:?} to {b:?} is not nearest-neighbour",
                k + 1
            )));
        }
        total += env.weight(k + 1, b)?;
    }
    Ok(total)
}

/// Endpoint law of the polymer measure, `μ_n(S_n = x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointLaw {
    pub sites: Vec<Vec<i64>>,
    pub probs: Vec<f64>,
}

impl EndpointLaw {
    pub fn prob(&self, site: &[i64]) -> f64 {
        self.sites
            .iter()
            .position(|s| s == site)
            .map_or(0.0, |i| self.probs[i])
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionResult {
    pub log_z: f64,
    pub n: usize,
    pub beta: f64,
    pub endpoint: Option<EndpointLaw>,
}

fn check_horizon<E: Environment + ?Sized>(env: &E, n: usize) -> Result<()> {
    if n > env.horizon() {
        return Err(LabError::HorizonExceeded {
            requested: n,
            horizon: env.horizon(),
        });
    }
    Ok(())
}

/// Runs the transfer recursion and hands every slice `L_k` to `visit`.
fn sweep(lattice: &PathLattice, field: &DenseField, beta: f64, mut visit: impl FnMut(usize, &[f64])) {
    let log_moves = lattice.log_moves();
    let mut prev = vec![0.0];
    visit(0, &prev);
    let mut buf = Vec::with_capacity(2 * lattice.dim());
    for k in 1..=lattice.steps() {
        let slice = lattice.slice(k);
        let weights = field.row(k);
        let mut next = Vec::with_capacity(slice.len());
        for (i, &w) in weights.iter().enumerate() {
            buf.clear();
            buf.extend(
                slice
                    .preds(i)
                    .iter()
                    .filter(|&&p| p != NO_SITE)
                    .map(|&p| prev[p as usize]),
            );
            let acc = log_sum_exp(&buf);
            next.push(beta * w + acc - log_moves);
        }
        visit(k, &next);
        prev = next;
    }
}

/// `log Z_k(β)` for every requested `k` in one sweep. `Z_k(0) = 1` exactly.
pub fn log_partition_profile(
    lattice: &PathLattice,
    field: &DenseField,
    beta: f64,
    steps: &[usize],
) -> Vec<f64> {
    if beta == 0.0 {
        return vec![0.0; steps.len()];
    }
    let mut out = vec![f64::NAN; steps.len()];
    sweep(lattice, field, beta, |k, slice| {
        for (slot, &want) in out.iter_mut().zip(steps) {
            if want == k {
                *slot = log_sum_exp(slice);
            }
        }
    });
    out
}

fn final_slice(lattice: &PathLattice, field: &DenseField, beta: f64) -> Vec<f64> {
    let mut last = Vec::new();
    let n = lattice.steps();
    sweep(lattice, field, beta, |k, slice| {
        if k == n {
            last = slice.to_vec();
        }
    });
    last
}

/// `log Z_n(β)` where `Z_n(β) = (2d)^{-n} Σ_ω e^{βH_n(ω)}`.
pub fn partition_log<E: Environment + ?Sized>(env: &E, n: usize, beta: f64) -> Result<PartitionResult> {
    check_horizon(env, n)?;
    let lattice = PathLattice::new(env.dim(), n)?;
    let field = lattice.materialize(env)?;
    let log_z = log_partition_profile(&lattice, &field, beta, &[n])[0];
    Ok(PartitionResult {
        log_z,
        n,
        beta,
        endpoint: None,
    })
}

/// Partition function together with the polymer endpoint law.
pub fn polymer_partition<E: Environment + ?Sized>(env: &E, n: usize, beta: f64) -> Result<PartitionResult> {
    check_horizon(env, n)?;
    let lattice = PathLattice::new(env.dim(), n)?;
    let field = lattice.materialize(env)?;
    let last = final_slice(&lattice, &field, beta);
    let log_z = log_sum_exp(&last);
    let slice = lattice.slice(n);
    let endpoint = EndpointLaw {
        sites: slice.sites().map(<[i64]>::to_vec).collect(),
        probs: last.iter().map(|l| (l - log_z).exp()).collect(),
    };
    Ok(PartitionResult {
        log_z: if beta == 0.0 { 0.0 } else { log_z },
        n,
        beta,
        endpoint: Some(endpoint),
    })
}

/// `μ_n(S_n = x) = e^{L_n(x)} / Σ_y e^{L_n(y)}`.
pub fn endpoint_distribution<E: Environment + ?Sized>(env: &E, n: usize, beta: f64) -> Result<EndpointLaw> {
    Ok(polymer_partition(env, n, beta)?
        .endpoint
        .expect("polymer_partition always fills the endpoint law"))
}

/// `max_ω H_n(ω)` by the tropical recursion
/// `M_k(x) = η(k,x) + max_{|y−x|₁=1} M_{k−1}(y)`.
pub fn max_path_weight<E: Environment + ?Sized>(env: &E, n: usize) -> Result<f64> {
    check_horizon(env, n)?;
    let lattice = PathLattice::new(env.dim(), n)?;
    let field = lattice.materialize(env)?;
    Ok(max_path_weight_on(&lattice, &field))
}

pub fn max_path_weight_on(lattice: &PathLattice, field: &DenseField) -> f64 {
    let mut prev = vec![0.0];
    for k in 1..=lattice.steps() {
        let slice = lattice.slice(k);
        prev = field
            .row(k)
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let best = slice
                    .preds(i)
                    .iter()
                    .filter(|&&p| p != NO_SITE)
                    .map(|&p| prev[p as usize])
                    .fold(f64::NEG_INFINITY, f64::max);
                w + best
            })
            .collect();
    }
    prev.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// One fully enumerated path handed to an enumeration visitor.
#[derive(Debug)]
pub struct PathVisit<'a> {
    dim: usize,
    /// `(n+1)·d` coordinates, `ω_0 … ω_n`.
    pub sites: &'a [i64],
    /// `η(k, ω_k)` for `k = 1..=n`.
    pub increments: &'a [f64],
}

impl PathVisit<'_> {
    pub fn site(&self, k: usize) -> &[i64] {
        &self.sites[k * self.dim..(k + 1) * self.dim]
    }

    pub fn endpoint(&self) -> &[i64] {
        self.site(self.increments.len())
    }

    /// Weight collected on steps `from+1 ..= to`.
    pub fn weight_between(&self, from: usize, to: usize) -> f64 {
        self.increments[from..to].iter().sum()
    }

    pub fn weight(&self) -> f64 {
        self.increments.iter().sum()
    }
}

/// Visits all `(2d)^n` paths from the origin. Refuses above
/// [`ENUMERATION_LIMIT`].
pub fn enumerate_paths<E: Environment + ?Sized>(
    env: &E,
    n: usize,
    mut visit: impl FnMut(&PathVisit<'_>),
) -> Result<()> {
    check_horizon(env, n)?;
    let d = env.dim();
    let paths = ((2 * d) as f64).powi(n as i32);
    if paths > ENUMERATION_LIMIT {
        return Err(LabError::EnumerationTooLarge {
            paths,
            limit: ENUMERATION_LIMIT,
        });
    }

    fn dfs<E: Environment + ?Sized>(
        env: &E,
        d: usize,
        n: usize,
        sites: &mut Vec<i64>,
        incs: &mut Vec<f64>,
        visit: &mut dyn FnMut(&PathVisit<'_>),
    ) -> Result<()> {
        let k = incs.len();
        if k == n {
            visit(&PathVisit {
                dim: d,
                sites,
                increments: incs,
            });
            return Ok(());
        }
        let here = sites[k * d..(k + 1) * d].to_vec();
        for axis in 0..d {
            for delta in [-1i64, 1] {
                let mut next = here.clone();
                next[axis] += delta;
                let w = env.weight(k + 1, &next)?;
                sites.extend_from_slice(&next);
                incs.push(w);
                dfs(env, d, n, sites, incs, visit)?;
                incs.pop();
                sites.truncate(sites.len() - d);
            }
        }
        Ok(())
    }

    let mut sites = vec![0i64; d];
    let mut incs = Vec::with_capacity(n);
    dfs(env, d, n, &mut sites, &mut incs, &mut visit)
}

/// `log Z_n(β)` by explicit enumeration of every path.
pub fn brute_force_partition<E: Environment + ?Sized>(env: &E, n: usize, beta: f64) -> Result<f64> {
    let mut acc = LogSumExp::new();
    enumerate_paths(env, n, |p| acc.push(beta * p.weight()))?;
    Ok(acc.value() - n as f64 * ((2 * env.dim()) as f64).ln())
}
