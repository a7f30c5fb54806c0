use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use tartar_cli::output::to_json;
use tartar_cli::{commands, CliError, CliResult, RunConfig};

/// Laminates, energies, scaling sweeps and cone bootstraps for the
/// four-well Tartar square.
#[derive(Parser)]
#[command(name = "tartar", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set build.n=512`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory (same as `--set out=DIR`).
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Build a laminate: field dump, rectangle list, energy summary.
    Build,
    /// Evaluate the energy of a dumped phase field.
    Energy,
    /// Scaling sweep over eps with fit and plot.
    Sweep,
    /// Cone bootstrap on a field or inline laminate.
    Bootstrap,
    /// Run the property suites; nonzero exit on any failure.
    Verify,
    /// Refit a column of an existing sweep CSV.
    Fit,
    /// Print the normalized configuration.
    Config,
}

#[derive(Serialize)]
struct Failure<'a> {
    kind: &'a str,
    message: String,
}

fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("TARTAR_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("TARTAR_THREADS=`{raw}` is not a count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: Cli) -> CliResult<String> {
    init_threads()?;
    let mut overrides = cli.overrides;
    if let Some(out) = cli.out {
        overrides.push(format!("out={}", toml::Value::String(out.display().to_string())));
    }
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    Ok(match cli.command {
        Command::Build => to_json(&commands::build(&cfg)?),
        Command::Energy => to_json(&commands::energy(&cfg)?),
        Command::Sweep => to_json(&commands::sweep(&cfg)?),
        Command::Bootstrap => {
            let r = commands::bootstrap_cmd(&cfg)?;
            format!(
                "{{\"termination_m\":{},\"steps\":{},\"empirical_c0\":{}}}",
                r.termination_m,
                r.steps.len(),
                to_json(&r.empirical_c0)
            )
        }
        Command::Verify => to_json(&commands::verify_cmd(&cfg)?),
        Command::Fit => to_json(&commands::fit(&cfg)?),
        Command::Config => return Ok(cfg.normalized()),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            println!("{}", text.trim_end());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let failure = Failure { kind: e.kind(), message: e.to_string() };
            eprintln!("{}", to_json(&failure));
            match e {
                CliError::VerifyFailed { .. } => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
