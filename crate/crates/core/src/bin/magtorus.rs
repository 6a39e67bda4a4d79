use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use magtorus::commands::{self, CommandError, IndexTarget, Report};

#[derive(Parser)]
#[command(name = "magtorus", version, about = "Periodic orbits of magnetic flows on flat tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; the bundled perturbed example when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `search.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Certify non-resonance and print the predicted ranks.
    Check,
    /// Search for periodic orbits and write a catalog.
    Find {
        /// Output directory; defaults to `output_dir` from the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Morse and Conley-Zehnder indices of a constant loop or an orbit file.
    Index {
        /// Position of a constant loop, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "orbit")]
        constant: Option<Vec<f64>>,
        /// Orbit sample file written by `find`.
        #[arg(long, required_unless_present = "constant")]
        orbit: Option<PathBuf>,
    },
    /// Run the self-check suite.
    Verify {
        /// Skip every check that runs an orbit search.
        #[arg(long)]
        quick: bool,
    },
}

#[cfg(not(feature = "parallel"))]
fn init_threads() -> anyhow::Result<()> {
    Ok(())
}

#[cfg(feature = "parallel")]
fn init_threads() -> anyhow::Result<()> {
    use anyhow::Context;
    let Ok(raw) = std::env::var("MAGTORUS_THREADS") else { return Ok(()) };
    let n: usize = raw.trim().parse().with_context(|| format!("MAGTORUS_THREADS={raw:?} is not a count"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().context("thread pool")?;
    Ok(())
}

fn run(cli: Cli) -> Result<Report, CommandError> {
    let resolved = commands::load_config(cli.config.as_deref(), cli.seed)?;
    match cli.command {
        Command::Check => commands::check(&resolved),
        Command::Find { output } => {
            let dir = output.unwrap_or_else(|| PathBuf::from(&resolved.config.output_dir));
            commands::find(&resolved, &dir)
        }
        Command::Index { constant, orbit } => {
            let target = match (constant, orbit) {
                (Some(x), _) => IndexTarget::Constant(x),
                (None, Some(p)) => IndexTarget::orbit_file(&p, resolved.config.tau)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            commands::index(&resolved, &target)
        }
        Command::Verify { quick } => Ok(commands::verify(&resolved, quick)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    match run(cli) {
        Ok(r) => {
            print!("{}", r.text);
            ExitCode::from(r.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
