//! Point-to-line partition function, polymer endpoint law and the
//! maximal path weight for one sampled environment.
//!
//! cargo run --example partition -- [d] [n] [beta] [seed]

use polymer_lab::transfer::{max_path_weight, polymer_partition};
use polymer_lab::{sample_environment, DistributionModel};

fn main() -> polymer_lab::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let d: usize = arg(0, "1").parse().expect("d");
    let n: usize = arg(1, "50").parse().expect("n");
    let beta: f64 = arg(2, "1.0").parse().expect("beta");
    let seed: u64 = arg(3, "1").parse().expect("seed");

    let model = DistributionModel::gaussian(0.0, 1.0)?;
    let env = sample_environment(&model, d, n, seed)?;
    let z = polymer_partition(&env, n, beta)?;
    println!("log Z_{n}({beta}) = {:.6}", z.log_z);
    println!("(1/n) log Z     = {:.6}   annealed λ(β) = {:.6}", z.log_z / n as f64, model.log_mgf(beta));
    println!("max H_n / n     = {:.6}", max_path_weight(&env, n)? / n as f64);

    let law = z.endpoint.expect("endpoint law requested");
    let mut top: Vec<_> = law.sites.iter().zip(&law.probs).collect();
    top.sort_by(|a, b| b.1.total_cmp(a.1));
    println!("most likely endpoints:");
    for (site, p) in top.into_iter().take(5) {
        println!("  {site:?}  {p:.4}");
    }
    Ok(())
}
