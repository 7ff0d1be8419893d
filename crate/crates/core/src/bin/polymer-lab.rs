use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polymer_lab::experiment::{self, shortcut_config, ExperimentConfig, ExperimentKind, DEFAULT_SEED};
use polymer_lab::{DistributionModel, LabError};

#[derive(Parser)]
#[command(name = "polymer-lab", version, about = "Directed polymer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON experiment config (path, or `-` for stdin).
    Run { config: String },
    /// Run the invariant suite and print the ledger.
    Verify {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Quenched free-energy curve with Jensen checks.
    FreeEnergy(Common),
    /// Free-energy curve plus its Legendre transform.
    Rate {
        #[command(flatten)]
        common: Common,
        /// Levels ρ; defaults to the secant slopes of the curve.
        #[arg(long, value_delimiter = ',')]
        rho: Vec<f64>,
    },
    /// Path counts above a level against the rate function.
    Corollary {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.75)]
        rho: f64,
    },
    /// Smoothed functionals: sub-rates, concentration, sandwich bounds.
    Smoothed {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        xi: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        lambda: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        delta: Vec<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// `bernoulli:P`, `gaussian:MEAN:VAR`, `rademacher` or a JSON model.
    #[arg(long, default_value = "bernoulli:0.5")]
    model: String,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    beta: Vec<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Print the synthesized config instead of running it.
    #[arg(long)]
    print_config: bool,
}

fn parse_model(text: &str) -> Result<DistributionModel, LabError> {
    if text.trim_start().starts_with('{') {
        return Ok(serde_json::from_str(text)?);
    }
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| LabError::InvalidModel(format!("bad number {s:?} in {text:?}")))
    };
    match parts.as_slice() {
        ["bernoulli", p] => DistributionModel::bernoulli(num(p)?),
        ["gaussian", m, v] => DistributionModel::gaussian(num(m)?, num(v)?),
        ["rademacher"] => Ok(DistributionModel::rademacher()),
        _ => Err(LabError::InvalidModel(format!("unrecognized model {text:?}"))),
    }
}

impl Common {
    fn config(&self, kind: ExperimentKind) -> Result<(ExperimentConfig, bool), LabError> {
        let mut c = shortcut_config(kind, parse_model(&self.model)?, self.out.clone());
        if let Some(d) = self.d {
            c.d = d;
        }
        if !self.n.is_empty() {
            c.n_list = self.n.clone();
        }
        if !self.beta.is_empty() {
            c.betas = self.beta.clone();
        }
        if let Some(m) = self.samples {
            c.samples = m;
        }
        if let Some(s) = self.seed {
            c.seed = Some(s);
        }
        Ok((c, self.print_config))
    }
}

fn synthesize(command: Command) -> Result<(ExperimentConfig, bool), LabError> {
    Ok(match command {
        Command::Run { config } => {
            let text = if config == "-" {
                let mut s = String::new();
                std::io::stdin().read_to_string(&mut s)?;
                s
            } else {
                std::fs::read_to_string(&config)?
            };
            (ExperimentConfig::from_json(&text)?, false)
        }
        Command::Verify { .. } => unreachable!("handled directly"),
        Command::FreeEnergy(common) => common.config(ExperimentKind::FreeEnergy)?,
        Command::Rate { common, rho } => {
            let (mut c, p) = common.config(ExperimentKind::RateFunction)?;
            c.rhos = rho;
            (c, p)
        }
        Command::Corollary { common, rho } => {
            let (mut c, p) = common.config(ExperimentKind::Corollary)?;
            c.rhos = vec![rho];
            (c, p)
        }
        Command::Smoothed { common, xi, lambda, delta } => {
            let (mut c, p) = common.config(ExperimentKind::Smoothed)?;
            if !xi.is_empty() {
                c.rhos = xi;
            }
            if !lambda.is_empty() {
                c.lambdas = lambda;
            }
            if !delta.is_empty() {
                c.deltas = delta;
            }
            (c, p)
        }
    })
}

fn usage_error(e: &LabError) -> bool {
    matches!(
        e,
        LabError::InvalidConfig(_) | LabError::InvalidModel(_) | LabError::InvalidArgument(_) | LabError::Io(_)
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify { seed } => experiment::verify_suite(seed).map(|ledger| {
            for c in &ledger.checks {
                println!("{} {}  slack={:e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.slack);
            }
            ledger.pass
        }),
        command => synthesize(command).and_then(|(config, print_only)| {
            if print_only {
                println!("{}", serde_json::to_string_pretty(&config)?);
                return Ok(true);
            }
            let summary = experiment::run(&config)?;
            let failed = summary.checks.iter().filter(|c| !c.pass).count();
            println!(
                "{} checks, {} failed; outputs in {}",
                summary.checks.len(),
                failed,
                config.output_dir.display()
            );
            for c in summary.checks.iter().filter(|c| !c.pass) {
                println!("FAIL {}  lhs={} rhs={} slack={}", c.name, c.lhs, c.rhs, c.slack);
            }
            Ok(summary.pass)
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if usage_error(&e) { 2 } else { 1 })
        }
    }
}
