//! Quenched free energy against the annealed bound, with the Jensen gap and
//! the finite-n critical-region scan.
//!
//! cargo run --release --example free_energy -- [d] [samples]

use polymer_lab::free_energy::{critical_region_scan, estimate_free_energy};
use polymer_lab::DistributionModel;

fn main() -> polymer_lab::Result<()> {
    let mut args = std::env::args().skip(1);
    let d: usize = args.next().map_or(1, |s| s.parse().expect("d"));
    let samples: usize = args.next().map_or(100, |s| s.parse().expect("samples"));

    let betas: Vec<f64> = (0..=16).map(|i| -2.0 + 0.25 * i as f64).collect();
    let model = DistributionModel::bernoulli(0.5)?;
    let curve = estimate_free_energy(&model, d, &betas, &[16, 32, 64], samples, 42)?;

    let scan = critical_region_scan(&curve, 1e-3);
    println!("n = {}, d = {d}, M = {samples}", scan.n);
    println!("{:>6} {:>10} {:>10} {:>10}  flagged", "beta", "estimate", "lambda", "gap");
    let last = curve.largest_n_index();
    for (b, row) in scan.rows.iter().enumerate() {
        println!(
            "{:>6.2} {:>10.5} {:>10.5} {:>10.5}  {}",
            row.beta, curve.mean[last][b], curve.annealed[b], row.gap, row.flagged
        );
    }
    println!("{}", scan.note);
    Ok(())
}
