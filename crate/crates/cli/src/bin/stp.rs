//! The dealer process: serves correlated randomness to any number of sessions.

use std::net::TcpListener;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::Parser;
use hybrid2pc::stp::{Stp, StpConfig};
use hybrid2pc_cli::config::cipher_mode;
use hybrid2pc_cli::{exit, CliError};

#[derive(Parser, Debug)]
#[command(name = "stp", about = "Semi-trusted dealer for two-party sessions")]
struct Cli {
    #[arg(long, default_value = "127.0.0.1:7600")]
    listen: String,
    /// Plain framing, so byte counts are exact protocol payload.
    #[arg(long)]
    null_cipher: bool,
    /// Hex pre-shared key for AES-256-GCM framing.
    #[arg(long)]
    psk: Option<String>,
    /// Seconds the first party of a session waits for the second.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mode = cipher_mode(cli.null_cipher, cli.psk.as_deref())?;
    let listener = TcpListener::bind(&cli.listen).map_err(|e| CliError::new(exit::OFFLINE_FAIL, format!("bind {}: {e}", cli.listen)))?;
    let addr = listener.local_addr().map_err(|e| CliError::new(exit::OFFLINE_FAIL, e))?;
    // Scripts wait for this line before starting parties.
    println!("listening on {addr}");
    let stp = Arc::new(Stp::new(StpConfig {
        timeout: Duration::from_secs(cli.timeout),
    }));
    stp.serve(listener, mode).map_err(|e| CliError::new(exit::OFFLINE_FAIL, e))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code as u8)
        }
    }
}
