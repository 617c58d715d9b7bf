use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mixopt_cli::config::MixtureSection;
use mixopt_cli::{ExperimentConfig, HarnessError, Kind, Preset};

/// Mixture-weight estimation and co-component ERM experiments.
#[derive(Parser)]
#[command(name = "mixopt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate mixture weights by corrected descent-ascent.
    Mixture(MixtureArgs),
    /// Solve a batch of weighted ERMs and audit w*(alpha).
    Coerm(CommonArgs),
    /// Train the two-layer ReLU predictor of w*(alpha).
    Wstar(CommonArgs),
    /// Run the label-efficient online regressor on a uniform stream.
    Online(CommonArgs),
    /// Grouped classification: learned vs uniform vs target-only ERM.
    Grouped(CommonArgs),
    /// Cost of solving M ERMs against learning a predictor.
    Phase(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Run this single seed instead of the file's seed list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: the file's `out`, else mixopt-out].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MixtureArgs {
    #[arg(long, required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the `[mixture]` table with a built-in instance.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
}

fn load(path: Option<&PathBuf>) -> Result<ExperimentConfig, HarnessError> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, cfg) = match cli.command {
        Command::Mixture(a) => {
            let cfg = load(a.config.as_ref()).map(|mut c| {
                if a.preset == Some(Preset::QuadraticMatch) {
                    c.mixture = MixtureSection::quadratic_match();
                }
                c.with_overrides(a.seed, a.out)
            });
            (Kind::Mixture, cfg)
        }
        Command::Coerm(a) => (Kind::Coerm, common(a)),
        Command::Wstar(a) => (Kind::Wstar, common(a)),
        Command::Online(a) => (Kind::Online, common(a)),
        Command::Grouped(a) => (Kind::Grouped, common(a)),
        Command::Phase(a) => (Kind::Phase, common(a)),
    };
    let result = cfg.and_then(|cfg| {
        let out = cfg
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from("mixopt-out"));
        mixopt_cli::run(kind, &cfg, out)
    });
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("mixopt {}: {e}", kind.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn common(a: CommonArgs) -> Result<ExperimentConfig, HarnessError> {
    load(Some(&a.config)).map(|c| c.with_overrides(a.seed, a.out))
}
