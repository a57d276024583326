use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mdescent_cli::config::{ExperimentConfig, Format, Overrides};
use mdescent_cli::{cmd_compare, cmd_simulate, cmd_spectrum, cmd_theory, CliError};

#[derive(Parser)]
#[command(name = "mdescent", version, about = "Analytic and simulated learning curves of kernel ridge regression on the sphere")]
struct Cli {
    /// Worker threads for trials and kernel rows (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form learning curve over the configured m grid.
    Theory(RunArgs),
    /// Monte Carlo test error of kernel ridge regression over the m grid.
    Simulate(RunArgs),
    /// Eigenvalues of a degree-r Gram matrix against Marchenko-Pastur.
    Spectrum {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Relative deviation between a theory.csv and an empirical.csv.
    Compare {
        theory: PathBuf,
        empirical: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Points below this m are left out of the median.
        #[arg(long, default_value_t = 1)]
        m_floor: usize,
        #[arg(long, value_delimiter = ',', default_value = "json")]
        format: Vec<Format>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    /// Refuse runs whose estimated cost exceeds this many seconds.
    #[arg(long, default_value_t = 1800.0)]
    budget_seconds: f64,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            seed: self.seed,
            trials: self.trials,
            formats: self.format.clone(),
            degree: None,
            m: None,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let written = match cli.command {
        Command::Theory(args) => cmd_theory(&ExperimentConfig::load(&args.config)?.resolve(&args.overrides())?)?,
        Command::Simulate(args) => {
            let exp = ExperimentConfig::load(&args.config)?.resolve(&args.overrides())?;
            cmd_simulate(&exp, Some(args.budget_seconds))?
        }
        Command::Spectrum { run, degree, m } => {
            let overrides = Overrides {
                degree,
                m,
                ..run.overrides()
            };
            let exp = ExperimentConfig::load(&run.config)?.resolve(&overrides)?;
            cmd_spectrum(&exp, Some(run.budget_seconds))?
        }
        Command::Compare {
            theory,
            empirical,
            out,
            m_floor,
            format,
        } => {
            let report = cmd_compare(&theory, &empirical, &out, m_floor, &format)?;
            match report.median_relative_deviation {
                Some(med) => println!("median relative deviation (m >= {m_floor}): {med:.4}"),
                None => println!("no relative deviations at m >= {m_floor}"),
            }
            vec![out.join("compare.json")]
        }
    };
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
