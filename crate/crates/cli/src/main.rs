//! `pfs`: key generation, storage, ingest, reconstruction, auditing and
//! bounds for private distributed file storage.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

use commands::CliError;

#[derive(Parser)]
#[command(name = "pfs", version, about = "Private distributed file storage over a public channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one key file per server for a user.
    Keygen(KeygenArgs),
    /// Encode a file and write one public message per server.
    Store(StoreArgs),
    /// Have servers strip their pads and keep the shares.
    Ingest(IngestArgs),
    /// Recover a file from stored shares.
    Reconstruct(ReconstructArgs),
    /// Exhaustively audit a small configuration.
    Audit(AuditArgs),
    /// Print optimal resources and the capacity frontier.
    Bounds(BoundsArgs),
    /// Run a simulated deployment from a scenario file.
    Demo(DemoArgs),
}

#[derive(Args)]
pub struct KeygenArgs {
    /// Number of servers L.
    #[arg(long, visible_alias = "L")]
    pub servers: usize,
    /// Key length in symbols.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub user: u16,
    /// Field width: symbols live in GF(2^m).
    #[arg(long, default_value_t = 8)]
    pub m: u8,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for the user's key files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Also install each server's copy under `<state>/server_<id>/keys.bin`.
    #[arg(long)]
    pub state: Option<PathBuf>,
}

#[derive(Args)]
pub struct StoreArgs {
    /// File to store.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory holding the user's key files.
    #[arg(long, default_value = ".")]
    pub keys: PathBuf,
    #[arg(long, visible_alias = "L")]
    pub servers: usize,
    #[arg(long)]
    pub t: usize,
    #[arg(long)]
    pub z: usize,
    #[arg(long, default_value_t = 1)]
    pub user: u16,
    /// Seed for the encoder randomness; fresh OS randomness otherwise.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for the message files.
    #[arg(long, default_value = ".")]
    pub messages: PathBuf,
    /// Write the resource report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct IngestArgs {
    /// Root holding `server_<id>/` directories.
    #[arg(long)]
    pub state: PathBuf,
    /// Message files; each goes to the server named in its header.
    #[arg(required = true)]
    pub messages: Vec<PathBuf>,
}

#[derive(Args)]
pub struct ReconstructArgs {
    /// Share files (each may hold several shares).
    #[arg(long = "share")]
    pub shares: Vec<PathBuf>,
    /// Root holding `server_<id>/shares.bin`; every server found is used.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Only use shares of this user.
    #[arg(long)]
    pub user: Option<u16>,
    /// Where to write the recovered file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Sabotage {
    /// Send every share without its pad.
    NoOtp,
    /// Send one server's share without its pad.
    Asymmetric,
}

#[derive(Args)]
pub struct AuditArgs {
    #[arg(long, default_value_t = 2)]
    pub m: u8,
    #[arg(long, visible_alias = "L", default_value_t = 3)]
    pub servers: usize,
    #[arg(long, default_value_t = 2)]
    pub t: usize,
    #[arg(long, default_value_t = 1)]
    pub z: usize,
    /// Key length in symbols.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Extra users as `t:z:n`, numbered after the first; repeatable.
    #[arg(long = "add-user")]
    pub add_user: Vec<String>,
    /// Audit a deliberately broken variant.
    #[arg(long = "break")]
    pub sabotage: Option<Sabotage>,
    /// Server left unpadded by `--break asymmetric`.
    #[arg(long, default_value_t = 1)]
    pub break_server: u16,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct BoundsArgs {
    /// Key length in bits.
    #[arg(long)]
    pub n: u64,
    /// Threshold, or a range `a..b` (inclusive).
    #[arg(long)]
    pub t: String,
    /// Privacy threshold, or a range `a..b` (inclusive).
    #[arg(long)]
    pub z: String,
    #[arg(long, visible_alias = "L")]
    pub servers: usize,
    /// List every key length from 1 to n.
    #[arg(long)]
    pub frontier: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct DemoArgs {
    /// Scenario JSON; a built-in two-user scenario otherwise.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Persist the servers' state under this directory.
    #[arg(long)]
    pub persist: Option<PathBuf>,
    /// Write the JSON outcome here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Keygen(a) => commands::keygen(a),
        Command::Store(a) => commands::store(a),
        Command::Ingest(a) => commands::ingest(a),
        Command::Reconstruct(a) => commands::reconstruct(a),
        Command::Audit(a) => commands::audit(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Demo(a) => commands::demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::AuditFailed) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
