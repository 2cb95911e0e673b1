use std::time::Duration;

use hexcollab_client::bots::play_scripted;
use hexcollab_client::{ConnectOptions, Session};
use hexcollab_core::agents::SelfPlay;
use hexcollab_core::events::same_history;
use hexcollab_core::{generate_map, replay, Action, EventKind, Role};
use hexcollab_server::{ServerConfig, Server};

async fn server(dir: &std::path::Path, map_seed: u64) -> Server {
    let config = ServerConfig {
        port: 0,
        data_dir: dir.to_path_buf(),
        pool_size: 1,
        map_seed,
        ..ServerConfig::default()
    };
    hexcollab_server::start(config).await.unwrap()
}

fn opts(server: &Server, lobby: &str, name: &str) -> ConnectOptions {
    let mut o = ConnectOptions::bot(format!("ws://{}", server.addr), lobby, name);
    o.timeout = Duration::from_secs(20);
    o
}

#[tokio::test(flavor = "multi_thread")]
async fn bot_pair_matches_local_play() {
    let dir = tempfile::tempdir().unwrap();
    let srv = server(dir.path(), 3).await;
    let a = tokio::spawn(play_scripted(opts(&srv, "bots", "a")));
    let b = tokio::spawn(play_scripted(opts(&srv, "bots", "b")));
    let a = a.await.unwrap().unwrap();
    let b = b.await.unwrap().unwrap();
    assert_eq!(a.game_id, b.game_id);
    assert_ne!(a.role, b.role);
    assert!(a.last.game_over && !a.last.abandoned);

    let events = srv.shared.store.events(&a.game_id).unwrap();
    let record = srv.shared.store.record(&a.game_id).unwrap();
    assert_eq!(record.final_score, a.last.score);
    let live_hash = record.final_hash.clone().unwrap();
    assert_eq!(replay(&events).unwrap().state_hash(), live_hash);

    let EventKind::GameStart { map, .. } = &events[0].event.kind else { panic!() };
    let again = generate_map(&ServerConfig::default().mapgen.with_seed(map.seed)).unwrap();
    let mut local = SelfPlay::new("local", again, ServerConfig::default().game).unwrap();
    local.run().unwrap();
    assert!(same_history(local.events(), &events));
    srv.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn joins_are_policed() {
    let dir = tempfile::tempdir().unwrap();
    let srv = server(dir.path(), 0).await;
    let mut human = opts(&srv, "open", "h");
    human.is_bot = false;
    human.record = false;
    assert!(Session::connect(human).await.is_err(), "recording is mandatory with humans");
    let bot = opts(&srv, "open", "b");
    assert!(Session::connect(bot).await.is_err(), "bots stay out of human lobbies");
    let mut down = opts(&srv, "bots", "x");
    down.endpoint = "ws://127.0.0.1:9".into();
    down.timeout = Duration::from_secs(2);
    assert!(Session::connect(down).await.is_err());
    srv.stop().await;
}

#[tokio::test(flavor = "multi_thread")]
async fn human_against_builtin_bot() {
    let dir = tempfile::tempdir().unwrap();
    let srv = server(dir.path(), 0).await;
    let mut human = opts(&srv, "practice", "h");
    human.is_bot = false;
    let mut s = Session::connect(human).await.unwrap();
    assert_eq!(s.role, Role::Leader);
    let r = s.step(Action::send("turn left; turn left")).await.unwrap();
    assert!(r.rejected.is_none());
    let r = s.step(Action::EndTurn).await.unwrap();
    // The builtin follower ran its turn in between.
    assert_eq!(r.turn.active_role, Role::Leader);
    assert!(r.observation.instructions.iter().all(|i| i.status != hexcollab_core::game::InstructionStatus::Active));
    let id = s.game_id.clone();
    s.leave().await.unwrap();
    for _ in 0..50 {
        if srv.shared.store.record(&id).is_some() {
            break;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    let events = srv.shared.store.events(&id).unwrap();
    assert!(matches!(events.last().unwrap().event.kind, EventKind::Abandoned { .. }));
    srv.stop().await;
}
