//! One party of a two-party session: offline phase against the dealer, then
//! an online program against the peer.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use hybrid2pc::drbg::Seed;
use hybrid2pc::ml::Profile;
use hybrid2pc::transport::SessionId;
use hybrid2pc_cli::config::{cipher_mode, parse_hex, ring_from, FileConfig, PeerEndpoint, Settings};
use hybrid2pc_cli::programs::{self, BenchArgs, CircuitArgs, NnArgs, SvmArgs};
use hybrid2pc_cli::{CliError, Link, Report};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ProfileArg {
    Lan,
    Wan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "party", about = "Run one party of a two-party computation")]
struct Cli {
    /// 0 = server (garbler, OT sender), 1 = client.
    #[arg(long)]
    role: Option<u8>,
    /// Dealer address.
    #[arg(long)]
    stp: Option<String>,
    /// Connect to the peer at this address.
    #[arg(long, conflicts_with = "listen")]
    peer: Option<String>,
    /// Accept the peer on this address.
    #[arg(long)]
    listen: Option<String>,
    /// TOML configuration; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// lan runs non-linear layers under GMW, wan under garbled circuits.
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
    #[arg(long)]
    null_cipher: bool,
    #[arg(long)]
    psk: Option<String>,
    /// Ring size in bits, with the default fixed-point split for that size.
    #[arg(long)]
    ring: Option<u8>,
    #[arg(long, value_enum, default_value = "text")]
    report: ReportFormat,
    /// Read timeout and peer connect deadline, in seconds.
    #[arg(long)]
    timeout: Option<u64>,
    #[command(subcommand)]
    program: Program,
}

#[derive(Subcommand, Debug)]
enum Program {
    /// Linear SVM classification.
    Svm(SvmArgs),
    /// Neural network inference.
    Nn(NnArgs),
    /// Atomic-operation benchmark against closed-form communication.
    Bench(BenchArgs),
    /// Evaluate one Boolean circuit and reveal its outputs to both parties.
    Circuit(CircuitArgs),
}

fn settings(cli: &Cli) -> Result<Settings, CliError> {
    let f = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let role = cli.role.or(f.role).ok_or_else(|| CliError::usage("--role is required"))?;
    if role > 1 {
        return Err(CliError::usage("role must be 0 or 1"));
    }
    let default_l = match &cli.program {
        Program::Bench(b) => b.width,
        _ => 64,
    };
    let ring = match cli.ring {
        Some(l) => ring_from(Some(l), None, None, default_l)?,
        None if matches!(cli.program, Program::Bench(_)) => ring_from(None, None, None, default_l)?,
        None => ring_from(f.ring.l, f.ring.alpha, f.ring.beta, default_l)?,
    };
    let profile = match cli.profile {
        Some(ProfileArg::Lan) => Profile::Lan,
        Some(ProfileArg::Wan) => Profile::Wan,
        None => f.profile.unwrap_or_default(),
    };
    let psk = cli.psk.as_deref().or(f.psk.as_deref());
    let mode = cipher_mode(cli.null_cipher || (psk.is_none() && f.null_cipher == Some(true)), psk)?;
    let stp = cli
        .stp
        .clone()
        .or(f.endpoints.stp)
        .ok_or_else(|| CliError::usage("--stp is required"))?;
    let peer = match (&cli.peer, &cli.listen) {
        (Some(p), _) => PeerEndpoint::Connect(p.clone()),
        (None, Some(l)) => PeerEndpoint::Listen(l.clone()),
        (None, None) => match (f.endpoints.peer, f.endpoints.listen) {
            (Some(p), _) => PeerEndpoint::Connect(p),
            (None, Some(l)) => PeerEndpoint::Listen(l),
            (None, None) => return Err(CliError::usage("pass --peer or --listen")),
        },
    };
    let rng_seed = match &f.seeds.rng {
        Some(h) => Some(Seed::from_slice(&parse_hex(h, 32, "seeds.rng")?).map_err(CliError::usage)?),
        None => None,
    };
    let session = match &f.seeds.session {
        Some(h) => Some(SessionId(parse_hex(h, 16, "seeds.session")?.try_into().unwrap())),
        None => None,
    };
    Ok(Settings {
        role,
        ring,
        profile,
        mode,
        stp,
        peer,
        timeout: Duration::from_secs(cli.timeout.or(f.timeout).unwrap_or(60)),
        rng_seed,
        session,
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let s = settings(&cli)?;
    let mut link = Link::open(s)?;
    let (name, out) = match &cli.program {
        Program::Svm(a) => ("svm", programs::svm(&mut link, a)?),
        Program::Nn(a) => ("nn", programs::nn(&mut link, a)?),
        Program::Bench(a) => ("bench", programs::bench(&mut link, a)?),
        Program::Circuit(a) => ("circuit", programs::circuit(&mut link, a)?),
    };
    let report = Report::build(name, &link, out.online_ms, out.result);
    match cli.report {
        ReportFormat::Json => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
        ReportFormat::Text => {
            println!("{}", out.text);
            println!("{}", report.text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code as u8)
        }
    }
}
