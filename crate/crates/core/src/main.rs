use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use toml::{Table, Value};

use nqae::cli::{self, Command, Overrides, RunError};

#[derive(Parser, Debug)]
#[command(name = "nqae", version, about = "Nested amplitude-estimation Monte Carlo emulator")]
struct Args {
    #[command(subcommand)]
    command: Cmd,

    /// Run-config file (TOML); unset sections take the reference defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory for report, summary, tables and metadata.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// PRN seed x0 (overrides prn.seed).
    #[arg(long, global = true, value_name = "U64", value_parser = parse_seed)]
    seed: Option<u64>,

    /// Shot count for sampled readouts (overrides run.shots).
    #[arg(long, global = true, value_name = "N")]
    shots: Option<u64>,

    /// Round every inverse-CDF intermediate to n_dig fraction bits.
    #[arg(long, global = true)]
    quantize: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Jump-versus-progress check and the first stream words.
    PcgCheck,
    /// Outcome pmf tables, confidence and H diagnostics.
    Qae,
    /// Sequential and nested estimators on one integrand.
    Simulate,
    /// Value-at-risk by bisection on the tail probability.
    Var,
    /// Conditional value-at-risk.
    Cvar,
    /// T-count cost model and register inventories.
    Tcount,
    /// Invariant suite with pass/fail counts.
    Verify,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::PcgCheck => Command::PcgCheck,
            Cmd::Qae => Command::Qae,
            Cmd::Simulate => Command::Simulate,
            Cmd::Var => Command::Var,
            Cmd::Cvar => Command::Cvar,
            Cmd::Tcount => Command::Tcount,
            Cmd::Verify => Command::Verify,
        }
    }
}

fn parse_seed(s: &str) -> Result<u64, String> {
    cli::parse_u64_text(s).ok_or_else(|| format!("not an unsigned 64-bit integer: {s:?}"))
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<u8, RunError> {
    let (text, base_dir) = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                RunError::Config(cli::ConfigError::Invalid {
                    key: "--config".into(),
                    msg: format!("{}: {e}", path.display()),
                })
            })?;
            let base = path.parent().map(PathBuf::from).unwrap_or_default();
            (text, base)
        }
        None => (String::new(), PathBuf::from(".")),
    };
    let overrides = Overrides { seed: args.seed, shots: args.shots, quantize: args.quantize, out: args.out.clone() };
    let command = Command::from(args.command);
    let spec = cli::parse_config_with(Some(command), &text, &base_dir, &overrides)?;
    let report = cli::run(&spec)?;

    let mut meta = Table::new();
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    meta.insert("created_unix".into(), Value::Integer(now as i64));
    meta.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
    meta.insert("command".into(), Value::String(command.name().into()));
    if let Some(p) = &args.config {
        meta.insert("config".into(), Value::String(p.display().to_string()));
    }
    meta.insert("parallel".into(), Value::Boolean(cfg!(feature = "parallel")));
    report.write(&spec.config.out_dir, &meta).map_err(|e| RunError::Io(e.to_string()))?;

    print!("{}", report.to_tsv());
    eprintln!("wrote {}", spec.config.out_dir.display());
    let failed = cli::failed_checks(&report);
    if failed > 0 {
        eprintln!("error: {failed} verification checks failed");
        return Ok(2);
    }
    Ok(0)
}
