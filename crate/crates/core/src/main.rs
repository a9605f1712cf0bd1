use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use entrostab::cli::{self, CliError};
use entrostab::config::RunConfig;

#[derive(Parser)]
#[command(name = "entrostab", version, about = "Entropy-stable k-epsilon algebra checks and flat-plate runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file of `section.key = value` lines.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.directory`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides `run.seed`).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Symmetry and definiteness of the coefficient matrices on random states.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Number of sampled states (overrides `run.samples`).
        #[arg(long)]
        samples: Option<usize>,
    },
    /// March the flat-plate boundary layer and write stations, profiles and the field.
    Flatplate {
        #[command(flatten)]
        common: Common,
    },
    /// Entropy-production budgets of a saved field.
    Budget {
        #[command(flatten)]
        common: Common,
        /// `field.csv` from a flat-plate run; defaults to the one in the output directory.
        #[arg(long)]
        field: Option<PathBuf>,
        /// Only the stations nearest these Re_theta values.
        #[arg(long, value_delimiter = ',')]
        re_theta: Vec<f64>,
    },
    /// Tabulate the Karman-Schoenherr skin-friction correlation.
    Correlate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        re_theta: Vec<f64>,
    },
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf), CliError> {
    let mut cfg = RunConfig::from_file(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    let out = cfg.output_dir.clone();
    Ok((cfg, out))
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Verify { common, samples } => {
            let (mut cfg, out) = load(&common)?;
            if let Some(n) = samples {
                cfg.samples = n;
            }
            if cfg.samples == 0 {
                eprintln!("warning: zero samples requested; nothing is checked");
            }
            let report = cli::run_verify(&cfg, &out)?;
            for r in &report {
                let eig = if r.min_eigenvalue.is_nan() {
                    String::from("-")
                } else {
                    format!("{:.3e} (relative {:.3e})", r.min_eigenvalue, r.min_eigenvalue_relative)
                };
                println!(
                    "{:<3} samples {:>6}  asymmetry {:.3e}  min eigenvalue {eig}  {}",
                    r.family,
                    r.samples,
                    r.worst_asymmetry,
                    if r.pass { "ok" } else { "FAIL" }
                );
            }
            cli::verify_status(&report)
        }
        Command::Flatplate { common } => {
            let (cfg, out) = load(&common)?;
            let report = cli::run_flatplate(&cfg, &out)?;
            for s in &report.field.stations {
                let d = &s.diagnostics;
                println!(
                    "x {:8.4} m  Re_theta {:8.1}  Cf {:.4e}  Cf/Cf_KS {:.3}",
                    d.x,
                    d.re_theta,
                    d.cf,
                    d.cf / d.cf_correlation
                );
            }
            println!("outputs in {}", out.display());
            Ok(())
        }
        Command::Budget { common, field, re_theta } => {
            let (cfg, out) = load(&common)?;
            let field = field.unwrap_or_else(|| out.join("field.csv"));
            let written = cli::run_budget(&cfg, &field, &re_theta, &out)?;
            println!("{} budget files in {}", written.len(), out.display());
            Ok(())
        }
        Command::Correlate { common, re_theta } => {
            let (_, out) = load(&common)?;
            let points = if re_theta.is_empty() { cli::default_correlation_points() } else { re_theta };
            for (r, cf) in cli::run_correlate(&points, &out)? {
                println!("{r:10.1}  {cf:.6e}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
