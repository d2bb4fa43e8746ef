use std::process::ExitCode;

use clap::{CommandFactory, Parser};
use memorec_cli::cli::Cli;
use tracing_subscriber::EnvFilter;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .with_target(false)
        .compact()
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            eprintln!("\n{}", Cli::command().render_usage());
            return ExitCode::from(memorec_cli::commands::EXIT_USAGE);
        }
        // --help, --version
        Err(e) => e.exit(),
    };
    memorec_cli::commands::run(cli.command)
}
