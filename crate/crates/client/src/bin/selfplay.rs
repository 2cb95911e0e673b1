use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hexcollab_core::agents::SelfPlay;
use hexcollab_core::stats::{compute_stats, GameRecord};
use hexcollab_core::{generate_map, EventKind};
use hexcollab_server::{FileStore, ServerConfig};

/// Play scripted leader/follower games and print a score table.
#[derive(Parser)]
#[command(name = "selfplay")]
struct Args {
    /// Server TOML config; its [game] and [mapgen] sections are used.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    games: u64,
    /// Map seed of the first game; game i uses seed + i.
    #[arg(long)]
    seed: u64,
    /// Store each game in the data directory.
    #[arg(long)]
    record: bool,
    /// Overrides the config's data_dir.
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match ServerConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let store = if args.record {
        let dir = args.data_dir.clone().unwrap_or(config.data_dir.clone());
        match FileStore::open(&dir) {
            Ok(s) => Some(s),
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::FAILURE;
            }
        }
    } else {
        None
    };
    println!("{:>6} {:>12} {:>6} {:>6} {:>13} {:>7}", "game", "seed", "score", "turns", "instructions", "events");
    let mut records = Vec::new();
    for i in 0..args.games {
        let seed = args.seed.wrapping_add(i);
        let map = match generate_map(&config.mapgen.clone().with_seed(seed)) {
            Ok(m) => m,
            Err(e) => {
                eprintln!("seed {seed}: {e}");
                return ExitCode::FAILURE;
            }
        };
        let game_id = format!("sp{seed}");
        let mut game = match SelfPlay::new(&game_id, map, config.game.clone()) {
            Ok(g) => g,
            Err(e) => {
                eprintln!("seed {seed}: {e}");
                return ExitCode::FAILURE;
            }
        };
        if let Err(r) = game.run() {
            eprintln!("seed {seed}: scripted action rejected: {r}");
            return ExitCode::FAILURE;
        }
        let events = game.events();
        let turns = events
            .iter()
            .filter(|e| matches!(e.event.kind, EventKind::TurnTransition { .. }))
            .count();
        let mut record = GameRecord::from_events("selfplay", vec!["leader-bot".into(), "follower-bot".into()], events);
        record.final_hash = Some(game.state.state_hash());
        println!(
            "{:>6} {:>12} {:>6} {:>6} {:>13} {:>7}",
            i, seed, record.final_score, turns, record.instruction_count, record.event_count
        );
        if let Some(store) = &store {
            if store.record(&game_id).is_some() {
                eprintln!("{game_id} is already stored; not recorded again");
            } else if let Err(e) = store.append(events).and_then(|_| store.finish(record.clone())) {
                eprintln!("{game_id}: {e}");
                return ExitCode::FAILURE;
            }
        }
        records.push(record);
    }
    let stats = compute_stats(&records);
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}"));
    println!("games {}  mean {}  median {}", stats.game_count, fmt(stats.mean_score), fmt(stats.median_score));
    ExitCode::SUCCESS
}
