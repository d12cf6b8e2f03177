use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nvpol::config::RunConfig;
use nvpol_cli::{cmd_angle_sweep, cmd_simulate, cmd_validate, print_defaults, CliError, OutputFormat};

/// Simulator of optically induced dynamic nuclear polarization from NV
/// centers to 13C nuclear spins in diamond.
#[derive(Parser)]
#[command(name = "nvpol", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration file (TOML key-value); defaults are used if omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the master seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores). Results are identical at any
    /// thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory for result files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Which result bodies to write.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Both)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Both,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Both => OutputFormat::Both,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured protocol and write trace/result files.
    Simulate,
    /// Run the enhancement curve over the configured misalignment angles.
    AngleSweep {
        /// Disable the resonator bandwidth filter (hwhm → ∞).
        #[arg(long)]
        no_resonator: bool,
    },
    /// Run the built-in oracle suite and report pass/fail per check.
    Validate,
    /// Print the default configuration as a ready-to-edit config file.
    PrintDefaults,
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        None => RunConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Validation(format!("cannot read config {}: {e}", path.display()))
            })?;
            RunConfig::from_toml(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
        }
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::PrintDefaults => {
            print!("{}", print_defaults());
            Ok(())
        }
        Command::Simulate => {
            let config = load_config(cli)?;
            let artifacts = cmd_simulate(&config, &cli.out, cli.format.into())?;
            for f in &artifacts.files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::AngleSweep { no_resonator } => {
            let config = load_config(cli)?;
            let artifacts = cmd_angle_sweep(&config, &cli.out, cli.format.into(), *no_resonator)?;
            for f in &artifacts.files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Validate => {
            let config = load_config(cli)?;
            let checks = cmd_validate(&config)?;
            let mut failed = 0;
            for c in &checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                println!("{status} {}: {}", c.name, c.detail);
                if !c.passed {
                    failed += 1;
                }
            }
            if failed > 0 {
                Err(CliError::Oracle(format!("{failed} of {} checks failed", checks.len())))
            } else {
                println!("all {} checks passed", checks.len());
                Ok(())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
