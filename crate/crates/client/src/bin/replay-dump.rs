use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hexcollab_core::canonical::to_canonical_string;
use hexcollab_core::replay;
use hexcollab_server::{FileStore, ServerConfig};

/// Print a stored game's event log, one canonical JSON event per line.
#[derive(Parser)]
#[command(name = "replay-dump")]
struct Args {
    #[arg(long)]
    game: String,
    /// Data directory; defaults to the config's, or ./data.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let dir = match (&args.data_dir, &args.config) {
        (Some(d), _) => d.clone(),
        (None, Some(c)) => match ServerConfig::load(c) {
            Ok(c) => c.data_dir,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
        },
        (None, None) => ServerConfig::default().data_dir,
    };
    let store = match FileStore::open(&dir) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::FAILURE;
        }
    };
    let Some(events) = store.events(&args.game) else {
        eprintln!("no game {:?} in {}", args.game, dir.display());
        return ExitCode::FAILURE;
    };
    for e in &events {
        println!("{}", to_canonical_string(e));
    }
    match replay(&events) {
        Ok(state) => {
            eprintln!("{} events, final state hash {}", events.len(), state.state_hash());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("log does not replay: {e}");
            ExitCode::FAILURE
        }
    }
}
