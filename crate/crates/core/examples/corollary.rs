//! Growth rate of the number of paths beating a level ρ, against
//! log(2d) − I(ρ) from the free-energy curve.
//!
//! cargo run --release --example corollary -- [rho]

use polymer_lab::conjugate::{corollary_check, rate_from_curve};
use polymer_lab::free_energy::estimate_free_energy;
use polymer_lab::DistributionModel;

fn main() -> polymer_lab::Result<()> {
    let rho: f64 = std::env::args().nth(1).map_or(0.75, |s| s.parse().expect("rho"));
    let model = DistributionModel::bernoulli(0.5)?;
    let betas: Vec<f64> = (0..=24).map(|i| -3.0 + 0.25 * i as f64).collect();
    let n_list = [16, 32, 64, 128];

    let curve = estimate_free_energy(&model, 1, &betas, &[128], 50, 11)?;
    let rate = rate_from_curve(&curve, 128)?;
    let report = corollary_check(&model, 1, rho, &n_list, 50, 11, &rate)?;

    println!("I({rho}) = {:.5}, target log 2 − I = {:.5}", report.rate_at_rho, report.target);
    for row in &report.rows {
        println!(
            "n = {:>4}: (1/n) log N_n = {:.5} ± {:.5}   |diff| = {:.5}",
            row.n, row.mean_log_count_rate, row.se, row.abs_diff
        );
    }
    println!("nonincreasing: {}", report.nonincreasing);
    Ok(())
}
