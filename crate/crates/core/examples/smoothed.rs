//! Smoothed distance-to-level functionals: one environment's V and σ, the
//! pathwise gluing inequality, the sub-rates I^(λ)(ξ) for growing λ, and
//! the concentration of V across environments.
//!
//! cargo run --release --example smoothed

use polymer_lab::smoothed::{
    concentration_experiment, rate_lambda_sweep, sandwich_bounds, sigma_measure, smoothed_value,
    superadditivity_check_pathwise, DEFAULT_TAIL_GRID,
};
use polymer_lab::count::count_table;
use polymer_lab::{sample_environment, DistributionModel};

fn main() -> polymer_lab::Result<()> {
    let model = DistributionModel::bernoulli(0.5)?;
    let env = sample_environment(&model, 1, 24, 5)?;

    let v = smoothed_value(&env, 12, 1.0, 8.0, &[0])?;
    println!("V(0, 8) over 12 steps = {:.5}", v.value);
    let sigma = sigma_measure(&env, 12, 8.0, 1.0, &[0])?;
    let mode = sigma.sites.iter().zip(&sigma.probs).max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    println!("σ mode at {:?} with mass {:.4}", mode.0, mode.1);

    let glue = superadditivity_check_pathwise(&env, 12, 12, 7.0, 8.0, 2.0)?;
    for c in &glue.checks {
        println!("{:<26} {:>10.5} ≥ {:>10.5}  slack {:.2e}", c.name, c.lhs, c.rhs, c.slack);
    }

    let table = count_table(&env, 24)?;
    for xi in [0.625, 0.75, 0.875] {
        let s = sandwich_bounds(&table, xi, 0.005, 20.0)?;
        println!("ξ = {xi}: log ν_24 = {:.4}, upper rate proxy {:.4}", s.log_closed_mass, s.upper_rate());
    }

    println!("\nI^(λ)(0.75) with shared replicas:");
    for est in rate_lambda_sweep(&model, 1, 0.75, &[0.5, 1.0, 2.0, 4.0, 8.0], &[8, 16, 32], 100, 9)? {
        println!("  λ = {:>4}: {:.5} ± {:.5}  trend ok: {}", est.lambda, est.estimate, est.estimate_se, est.trend_ok);
    }

    let conc = concentration_experiment(&model, 1, 16, 8.0, 1.0, 1000, 1, &DEFAULT_TAIL_GRID)?;
    println!("\nV spread: sd = {:.4}", conc.sd);
    conc.write_csv(std::io::stdout())?;
    Ok(())
}
