//! Runs the invariant suite and prints the ledger.
//!
//! cargo run --example verify -- [seed]

use polymer_lab::experiment::{verify_suite, DEFAULT_SEED};

fn main() -> polymer_lab::Result<()> {
    let seed = std::env::args().nth(1).map_or(DEFAULT_SEED, |s| s.parse().expect("seed"));
    let ledger = verify_suite(seed)?;
    for c in &ledger.checks {
        println!("{:>4}  {:<55} slack {:.3e}", if c.pass { "ok" } else { "FAIL" }, c.name, c.slack);
    }
    println!("{} checks, all pass: {}", ledger.checks.len(), ledger.pass);
    Ok(())
}
