use std::path::PathBuf;

use clap::Parser;
use dunkl_annulus_cli::{execute, Command};

/// Dunkl-Laplacian potential theory on an annulus.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the CSV table and run.json.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the `seed` key of the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(execute(cli.command, &cli.config, &cli.out, cli.seed));
}
