//! Directed polymers in random environment and last passage percolation on
//! `N × Z^d`.
//!
//! The crate computes, for a fixed realization of the environment, the
//! partition function `Z_n(β)`, the exact histogram of path weights (hence
//! the empirical measure `ν_n` and the percolation counts `N_n(ρ)`), and the
//! exponentially smoothed functionals `V^(λ)` used to connect the two. On top
//! of these it estimates the quenched free energy by Monte Carlo, turns it
//! into a rate function by a grid Legendre transform, and checks the finite-n
//! identities and inequalities linking all of them.
//!
//! Module map:
//!
//! - [`env`]: weight laws, `λ(β)` and `λ*(ρ)`, counter-based environments,
//!   translation views.
//! - [`lattice`]: the reachable cone of directed paths as dense slices.
//! - [`transfer`]: `H_n`, `Z_n(β)`, polymer endpoint laws, maximal weights,
//!   brute-force enumerators.
//! - [`count`]: exact weight histograms, `ν_n`, `N_n(ρ)`, quantization.
//! - [`free_energy`]: Monte Carlo free-energy curves and annealed comparisons.
//! - [`conjugate`]: Legendre transforms, `ρ±`, percolation growth rates.
//! - [`smoothed`]: `V^(λ)`, `σ_n`, superadditivity, concentration and
//!   sandwich bounds.
//! - [`experiment`]: config-driven runs, file outputs and the verification
//!   suite behind the `polymer-lab` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conjugate;
pub mod count;
pub mod env;
pub mod error;
pub mod experiment;
pub mod free_energy;
pub mod lattice;
pub mod numeric;
pub mod report;
pub mod smoothed;
pub mod transfer;

pub use env::{
    sample_environment, translate, DistributionModel, Environment, EnvironmentDescriptor,
    FixedEnvironment, LatticeEnvironment, Negated,
};
pub use error::{LabError, Result};
pub use numeric::ExtReal;
