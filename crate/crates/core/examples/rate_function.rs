//! Rate function as the Legendre transform of an estimated free-energy
//! curve, compared with the annealed rate λ*, plus the ρ± estimates.
//!
//! cargo run --release --example rate_function

use polymer_lab::conjugate::{rate_from_curve, rho_pm, v_set_scan_at};
use polymer_lab::env::derive_seed;
use polymer_lab::free_energy::estimate_free_energy;
use polymer_lab::{sample_environment, DistributionModel};

fn main() -> polymer_lab::Result<()> {
    let model = DistributionModel::bernoulli(0.5)?;
    let betas: Vec<f64> = (0..=40).map(|i| -5.0 + 0.25 * i as f64).collect();
    let (n, samples, seed) = (64, 100, 3);
    let curve = estimate_free_energy(&model, 1, &betas, &[n], samples, seed)?;
    let rate = rate_from_curve(&curve, n)?;
    println!("validity interval: [{:.4}, {:.4}]", rate.validity.0, rate.validity.1);

    let levels: Vec<f64> = (1..20).map(|i| 0.05 * i as f64).collect();
    let scan = v_set_scan_at(&rate, &model, 1e-3, &levels);
    println!("{:>6} {:>10} {:>10}  I≈λ*", "rho", "I", "lambda*");
    for row in &scan.rows {
        println!("{:>6.2} {:>10.5} {:>10.5}  {}", row.rho, row.rate, row.annealed.to_f64(), row.flagged);
    }

    let envs: Vec<_> = (0..samples)
        .map(|i| sample_environment(&model, 1, n, derive_seed(seed, i as u64)))
        .collect::<polymer_lab::Result<_>>()?;
    let pm = rho_pm(&curve, &envs)?;
    println!(
        "rho+ ≈ {:.4} (curve) / {:.4} (max path);  rho- ≈ {:.4} / {:.4}",
        pm.plus.from_curve, pm.plus.direct, pm.minus.from_curve, pm.minus.direct
    );
    Ok(())
}
