//! Geometry of directed nearest-neighbour paths from the origin.
//!
//! Slice `k` holds every site reachable in exactly `k` steps: `|x|₁ ≤ k` and
//! `Σ xᵢ ≡ k (mod 2)`. Sites are stored densely in a fixed order and each
//! site keeps the indices of its `2d` neighbours in the previous slice, so
//! every recursion in the lab is a flat sweep over index arrays.

use std::collections::HashMap;

use crate::env::Environment;
use crate::error::{LabError, Result};

/// All `x ∈ Z^d` with `|x|₁ ≤ r`, optionally restricted to a parity of
/// `Σ xᵢ`. Lexicographic order.
pub fn l1_ball(d: usize, r: usize, parity: Option<usize>) -> Vec<Vec<i64>> {
    fn rec(d: usize, budget: i64, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if prefix.len() == d {
            out.push(prefix.clone());
            return;
        }
        for c in -budget..=budget {
            prefix.push(c);
            rec(d, budget - c.abs(), prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, r as i64, &mut Vec::with_capacity(d), &mut out);
    if let Some(par) = parity {
        out.retain(|x| (x.iter().sum::<i64>().rem_euclid(2)) as usize == par % 2);
    }
    out
}

pub(crate) const NO_SITE: u32 = u32::MAX;

/// Sites reachable at one time step.
#[derive(Debug, Clone)]
pub struct Slice {
    dim: usize,
    coords: Vec<i64>,
    preds: Vec<u32>,
}

impl Slice {
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn site(&self, i: usize) -> &[i64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn sites(&self) -> impl Iterator<Item = &[i64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Neighbours of site `i` in the previous slice (`NO_SITE` when the
    /// neighbour is out of reach).
    pub(crate) fn preds(&self, i: usize) -> &[u32] {
        let w = 2 * self.dim;
        &self.preds[i * w..(i + 1) * w]
    }

    pub fn position(&self, site: &[i64]) -> Option<usize> {
        self.sites().position(|s| s == site)
    }
}

/// Slices `0..=n` of the reachable cone.
#[derive(Debug, Clone)]
pub struct PathLattice {
    dim: usize,
    slices: Vec<Slice>,
}

impl PathLattice {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim < 1 {
            return Err(LabError::InvalidArgument("dimension must be at least 1".into()));
        }
        let origin = Slice {
            dim,
            coords: vec![0; dim],
            preds: vec![NO_SITE; 2 * dim],
        };
        let mut slices = vec![origin];
        let mut prev_index: HashMap<Vec<i64>, u32> = HashMap::from([(vec![0; dim], 0)]);
        for k in 1..=n {
            let sites = l1_ball(dim, k, Some(k));
            let mut preds = Vec::with_capacity(sites.len() * 2 * dim);
            let mut probe = vec![0i64; dim];
            for x in &sites {
                for axis in 0..dim {
                    for delta in [-1i64, 1] {
                        probe.copy_from_slice(x);
                        probe[axis] += delta;
                        preds.push(prev_index.get(&probe).copied().unwrap_or(NO_SITE));
                    }
                }
            }
            prev_index = sites
                .iter()
                .enumerate()
                .map(|(i, x)| (x.clone(), i as u32))
                .collect();
            slices.push(Slice {
                dim,
                coords: sites.concat(),
                preds,
            });
        }
        Ok(PathLattice { dim, slices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of steps covered.
    pub fn steps(&self) -> usize {
        self.slices.len() - 1
    }

    pub fn slice(&self, k: usize) -> &Slice {
        &self.slices[k]
    }

    /// `ln(2d)`, the log of the number of one-step moves.
    pub fn log_moves(&self) -> f64 {
        ((2 * self.dim) as f64).ln()
    }

    /// Reads `η(k, x)` for every reachable `(k, x)`, `1 ≤ k ≤ steps`.
    pub fn materialize<E: Environment + ?Sized>(&self, env: &E) -> Result<DenseField> {
        if env.dim() != self.dim {
            return Err(LabError::InvalidArgument(format!(
                "environment dimension {} does not match lattice dimension {}",
                env.dim(),
                self.dim
            )));
        }
        if env.horizon() < self.steps() {
            return Err(LabError::HorizonExceeded {
                requested: self.steps(),
                horizon: env.horizon(),
            });
        }
        let mut weights = vec![Vec::new()];
        for k in 1..=self.steps() {
            let slice = &self.slices[k];
            let row = slice
                .sites()
                .map(|x| env.weight(k, x))
                .collect::<Result<Vec<f64>>>()?;
            weights.push(row);
        }
        Ok(DenseField { weights })
    }
}

/// Weights aligned with the slices of a [`PathLattice`]; `row(k)[i]` is the
/// weight of site `i` of slice `k`.
#[derive(Debug, Clone)]
pub struct DenseField {
    weights: Vec<Vec<f64>>,
}

impl DenseField {
    pub fn row(&self, k: usize) -> &[f64] {
        &self.weights[k]
    }

    pub fn steps(&self) -> usize {
        self.weights.len() - 1
    }
}
