//! Command-line front end and live session service.
//!
//! - `theory`: optimal policy and responsibility for one condition, or a
//!   responsibility surface.
//! - `simulate`: seeded simulated participants, one log per condition.
//! - `analyze`: empirical measures from logs, optionally against theory.
//! - `serve`: the HTTP session service in [`service`].

pub mod args;
pub mod commands;
pub mod error;
pub mod service;

use std::io::Write;
use std::net::SocketAddr;

use args::{Cli, Command};
pub use error::CliError;
use service::{AppState, ServiceConfig};

/// Runs a parsed command line, writing results to `out` and warnings to `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let text = match cli.command {
        Command::Theory(a) => commands::theory(&a)?,
        Command::Simulate(a) => commands::simulate(&a, err)?,
        Command::Analyze(a) => commands::analyze(&a)?,
        Command::Serve(a) => {
            let config = match &a.config {
                Some(path) => ServiceConfig::load(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
                None => ServiceConfig::preset(a.preset.into()),
            };
            let addr: SocketAddr = format!("{}:{}", a.bind, a.port)
                .parse()
                .map_err(|e| CliError::Usage(format!("bad address: {e}")))?;
            let state = AppState::open(config, &a.data_dir)?;
            let runtime = tokio::runtime::Runtime::new().map_err(anyhow::Error::from)?;
            runtime.block_on(service::serve(state, addr))?;
            String::new()
        }
    };
    out.write_all(text.as_bytes()).map_err(CliError::io("<stdout>"))?;
    Ok(())
}
