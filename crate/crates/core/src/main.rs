use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use symbio_ee::cli::{
    cmd_boundary, cmd_convergence, cmd_corners, cmd_validate, load_config, write_outputs, CliError,
    CommandOutput, Overrides,
};

#[derive(Parser)]
#[command(
    name = "symbio-ee",
    version,
    about = "Energy-efficiency region of MISO symbiotic radio"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON); defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir` from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of evenly spaced EE profiles.
    #[arg(long, global = true)]
    alpha_count: Option<usize>,
    /// Do not print the summary.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form design points (PT EE, BD EE and PT rate maxima).
    Corners,
    /// Pareto boundary of the EE region.
    Boundary,
    /// SCA convergence trace for one profile and ray scale.
    Convergence {
        /// EE profile (defaults to 0.5).
        #[arg(long)]
        alpha: Option<f64>,
        /// Ray scale (defaults to 99% of the boundary value).
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Property checks on the configured scenario.
    Validate,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        seed: cli.common.seed,
        alpha_count: cli.common.alpha_count,
        output_dir: cli.common.out.clone(),
    };
    let file = load_config(cli.common.config.as_deref(), &overrides)?;
    let cfg = file.resolve().map_err(CliError::Config)?;

    let emit = |out: &CommandOutput| -> Result<(), CliError> {
        let written = write_outputs(&cfg, out)?;
        if !cli.common.quiet {
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let mut stdout = std::io::stdout().lock();
            let _ = write!(stdout, "{}", out.report);
            for path in written {
                let _ = writeln!(stdout, "wrote {}", path.display());
            }
        }
        Ok(())
    };

    match cli.command {
        Command::Corners => emit(&cmd_corners(&cfg)?),
        Command::Boundary => emit(&cmd_boundary(&cfg)?),
        Command::Convergence { alpha, eta } => emit(&cmd_convergence(&cfg, alpha, eta)?),
        Command::Validate => {
            let (out, results) = cmd_validate(&cfg)?;
            emit(&out)?;
            match results.iter().filter(|r| !r.passed).count() {
                0 => Ok(()),
                n => Err(CliError::Checks(n)),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("symbio-ee: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
