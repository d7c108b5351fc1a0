use std::process::ExitCode;

use clap::Parser;
use resqu_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match resqu_cli::run(cli, &mut std::io::stdout().lock(), &mut std::io::stderr()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
