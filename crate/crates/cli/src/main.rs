//! `flipqh`: connection matrices, block diagonalization, Birkhoff
//! factorization, extremal identities and the acceptance suite.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage error,
//! 3 computation error (including insufficient truncation).

mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::Outcome;
use config::{Flags, Format, RunConfig, UsageError};

#[derive(Parser)]
#[command(name = "flipqh", version, about = "Quantum cohomology of simple flips")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Connection matrices C₁, C₂ with oracle and structure checks.
    Connection,
    /// Block diagonalization at q₁ = ∞.
    Blockdiag,
    /// Birkhoff factorization and GMT modulo y.
    Bfgmt,
    /// Cayley numbers, z = 0 closed forms and combinatorial identities.
    Extremal,
    /// The full acceptance suite.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Connection => "connection",
            Command::Blockdiag => "blockdiag",
            Command::Bfgmt => "bfgmt",
            Command::Extremal => "extremal",
            Command::Verify => "verify",
        }
    }
}

fn run(command: Command, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    match command {
        Command::Connection => commands::connection_cmd(cfg),
        Command::Blockdiag => commands::blockdiag_cmd(cfg),
        Command::Bfgmt => commands::bfgmt_cmd(cfg),
        Command::Extremal => commands::extremal_cmd(cfg),
        Command::Verify => commands::verify_cmd(cfg),
    }
}

fn render(command: Command, cfg: &RunConfig, out: &Outcome) -> anyhow::Result<String> {
    Ok(match cfg.format {
        Format::Json => {
            let doc = json!({
                "command": command.name(),
                "config": cfg,
                "status": if out.passed() { "pass" } else { "fail" },
                "reports": out.reports,
                "result": out.payload,
            });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
        Format::Text => {
            let mut s = out.text.clone();
            if !s.is_empty() && !matches!(command, Command::Verify) {
                s.push('\n');
            }
            // verify already lists the criteria and every failing check
            for r in out.reports.iter().filter(|_| !matches!(command, Command::Verify)) {
                s.push_str(&r.line());
                s.push('\n');
            }
            s
        }
    })
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("FLIPQH_THREADS") {
        let n: usize =
            v.parse().map_err(|_| UsageError(format!("FLIPQH_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| {
        let cfg = RunConfig::resolve(&cli.flags)?;
        let outcome = run(cli.command, &cfg)?;
        let text = render(cli.command, &cfg, &outcome)?;
        match &cfg.out {
            Some(path) => std::fs::write(path, &text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(outcome.passed())
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            if commands::is_truncation(&e) {
                eprintln!("error: {e:#} (raise the caps)");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(3)
        }
    }
}
