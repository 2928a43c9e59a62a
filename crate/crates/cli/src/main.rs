mod commands;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use commands::{GibbsArgs, IgmrfArgs, LindleyArgs, QVagueArgs, StoneFigureArgs};
use output::{sidecar, write_json, RunManifest};

/// Reproduces the improper-prior examples as CSV tables.
///
/// Every run writes `<out>.manifest.json` next to its CSV; `--manifest`
/// repeats such a run. Exit codes: 0 success, 1 numerical failure, 2 usage
/// error.
#[derive(Debug, Parser)]
#[command(name = "improper", version, args_conflicts_with_subcommands = true)]
struct Cli {
    /// Rerun from a manifest written by an earlier run.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output path for a manifest rerun [default: the manifest's].
    #[arg(long, requires = "manifest")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    StoneFigure(StoneFigureArgs),
    Gibbs(GibbsArgs),
    Lindley(LindleyArgs),
    Qvague(QVagueArgs),
    Igmrf(IgmrfArgs),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numerical(#[from] improper::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use improper::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(
                E::InvalidSize(_)
                | E::InvalidConfig(_)
                | E::InvalidDomain(_)
                | E::DomainError(_)
                | E::DimensionMismatch { .. }
                | E::ZeroFirstIncrement,
            ) => 2,
            _ => 1,
        }
    }
}

fn execute<A: Serialize>(
    name: &str,
    args: &A,
    out: Option<PathBuf>,
    run: fn(&A, &Path) -> Result<Vec<String>, CliError>,
) -> Result<(), CliError> {
    let out = out.unwrap_or_else(|| PathBuf::from(format!("{name}.csv")));
    let manifest = RunManifest::new(name, args, &out)?;
    for line in run(args, &out)? {
        println!("{line}");
    }
    write_json(&sidecar(&out, "manifest.json"), &manifest)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(path) = cli.manifest {
        let m = RunManifest::read(&path)?;
        let out = Some(cli.out.unwrap_or_else(|| PathBuf::from(&m.output_path)));
        return match m.subcommand.as_str() {
            "stone-figure" => execute(&m.subcommand, &m.parameters::<StoneFigureArgs>()?, out, commands::stone_figure),
            "gibbs" => execute(&m.subcommand, &m.parameters::<GibbsArgs>()?, out, commands::gibbs),
            "lindley" => execute(&m.subcommand, &m.parameters::<LindleyArgs>()?, out, commands::lindley),
            "qvague" => execute(&m.subcommand, &m.parameters::<QVagueArgs>()?, out, commands::qvague),
            "igmrf" => execute(&m.subcommand, &m.parameters::<IgmrfArgs>()?, out, commands::igmrf),
            other => Err(CliError::Usage(format!("unknown subcommand in manifest: {other}"))),
        };
    }
    match cli.command {
        Some(Command::StoneFigure(a)) => execute("stone-figure", &a, a.out.clone(), commands::stone_figure),
        Some(Command::Gibbs(a)) => execute("gibbs", &a, a.out.clone(), commands::gibbs),
        Some(Command::Lindley(a)) => execute("lindley", &a, a.out.clone(), commands::lindley),
        Some(Command::Qvague(a)) => execute("qvague", &a, a.out.clone(), commands::qvague),
        Some(Command::Igmrf(a)) => execute("igmrf", &a, a.out.clone(), commands::igmrf),
        None => Err(CliError::Usage("a subcommand or --manifest is required".into())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
