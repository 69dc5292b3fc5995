use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use netform::harness::{self, ExperimentConfig};
use netform::Error;

#[derive(Parser)]
#[command(
    name = "netform",
    version,
    about = "Network formation with misclassified links: simulation and inference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the test level.
    #[arg(long, global = true)]
    alpha: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the equilibrium and simulate true and observed networks.
    Simulate,
    /// Cell estimates, moment, variance and statistic at the configured parameter.
    Estimate,
    /// Confidence set over the configured grid.
    Ci,
    /// Monte Carlo null distribution and coverage.
    McCoverage,
    /// Semiparametric identified-set membership over the configured grid.
    SpSet,
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(alpha) = cli.alpha {
        cfg.alpha = alpha;
    }
    let out = &cli.out;
    match cli.command {
        Command::Simulate => {
            let s = harness::run_simulate(&cfg, out)?;
            println!(
                "simulated n={} (residual {:.2e}): {} true links, {} observed",
                s.n, s.equilibrium_residual, s.true_links, s.observed_links
            );
        }
        Command::Estimate => {
            let s = harness::run_estimate(&cfg, out)?;
            match s.statistic {
                Some(t) => println!("T_n = {t:.6}"),
                None => println!("T_n unavailable: {}", s.error.unwrap_or_default()),
            }
        }
        Command::Ci => {
            let (_, s) = harness::run_ci(&cfg, out)?;
            println!(
                "accepted {} of {} grid points (critical value {:.4}, {} degenerate)",
                s.accepted, s.grid_points, s.critical_value, s.degenerate
            );
        }
        Command::McCoverage => {
            let report = harness::run_mc_coverage(&cfg)?;
            harness::write_run_report(&report, out)?;
            println!(
                "coverage {:.4}, rejection rate {:.4}, KS distance {:.4}, {} failures of {}",
                report.coverage,
                report.rejection_rate,
                report.ks_distance,
                report.failures,
                report.replications
            );
        }
        Command::SpSet => {
            let (_, s) = harness::run_sp_set(&cfg, out)?;
            println!("{} of {} grid points are members", s.members, s.grid_points);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
