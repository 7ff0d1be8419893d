//! Exact weight histogram of all 2^n paths in a Bernoulli environment,
//! the empirical measure ν_n as CSV, and the percolation counts N_n(ρ).
//!
//! cargo run --example exact_counts -- [n] [seed]

use polymer_lab::count::{count_table, count_threshold, empirical_measure, verify_partition_identity};
use polymer_lab::{sample_environment, DistributionModel};

fn main() -> polymer_lab::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(40, |s| s.parse().expect("n"));
    let seed: u64 = args.next().map_or(7, |s| s.parse().expect("seed"));

    let model = DistributionModel::bernoulli(0.5)?;
    let env = sample_environment(&model, 1, n, seed)?;
    let table = count_table(&env, n)?;
    println!("{} paths, exact = {}", table.total()?, table.is_exact());

    for rho in [0.3, 0.5, 0.6, 0.75, 0.9] {
        let c = count_threshold(&table, rho, model.mean())?;
        println!("N_{n}({rho}) = {c}");
    }
    for beta in [-1.0, 2.0] {
        let check = verify_partition_identity(&table, &env, beta)?;
        println!("beta = {beta}: histogram {:.12}, transfer {:.12}", check.lhs, check.rhs);
    }

    println!("\nν_n:");
    empirical_measure(&table)?.write_csv(std::io::stdout())?;
    Ok(())
}
