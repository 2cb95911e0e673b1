mod common;

use std::time::{Duration, Instant};

use common::*;
use hexcollab_core::protocol::Payload;
use hexcollab_core::scenario::{Scenario, ScenarioEdit};
use hexcollab_core::game::CellView;
use hexcollab_core::map::{Terrain, Tile};
use hexcollab_core::{generate_map, Action, GameState, HexCoord, Pose, Role};
use hexcollab_server::{PairingPolicy, RoomKind};

async fn bot_pair(server: &hexcollab_server::Server) -> (Ws, Ws, String) {
    let mut a = Ws::connect(&server.ws_url("bots")).await;
    let mut b = Ws::connect(&server.ws_url("bots")).await;
    a.join("bots", "bot-a", true, true).await;
    b.join("bots", "bot-b", true, true).await;
    let (ga, ra) = a.paired().await;
    let (gb, rb) = b.paired().await;
    assert_eq!(ga, gb);
    assert_ne!(ra, rb);
    if ra == Role::Leader {
        (a, b, ga)
    } else {
        (b, a, ga)
    }
}

#[tokio::test]
async fn leader_may_cancel_but_not_move_off_turn() {
    let dir = tempfile::tempdir().unwrap();
    let server = serve(config(dir.path())).await;
    let (mut leader, mut follower, _) = bot_pair(&server).await;
    leader.sync().await;
    leader
        .act(Action::SendInstruction {
            text: "turn left".into(),
        })
        .await
        .unwrap();
    leader.act(Action::EndTurn).await.unwrap();
    let obs = leader.sync().await;
    assert_eq!(obs.turn.active_role, Role::Follower);

    leader.act(Action::CancelInstructions).await.unwrap();
    assert!(leader.act(Action::Forward).await.is_err());
    let cancelled = follower
        .until(|p| match p {
            Payload::InstructionUpdate { instructions } if instructions.iter().all(|i| i.status != hexcollab_core::game::InstructionStatus::Active) => Some(instructions),
            _ => None,
        })
        .await;
    assert_eq!(cancelled.len(), 1);
    assert!(follower.act(Action::MarkInstructionDone).await.is_err());
    server.stop().await;
}

#[tokio::test]
async fn leaving_ends_the_game_for_both() {
    let dir = tempfile::tempdir().unwrap();
    let server = serve(config(dir.path())).await;
    let (leader, mut follower, id) = bot_pair(&server).await;
    leader.close().await;
    let over = follower
        .until(|p| match p {
            Payload::GameOver { abandoned, .. } => Some(abandoned),
            _ => None,
        })
        .await;
    assert!(over);
    tokio::time::sleep(Duration::from_millis(200)).await;
    let record = server.shared.store.record(&id).unwrap();
    assert!(!record.completed);
    assert!(server.shared.live_rooms().is_empty());
    server.stop().await;
}

#[tokio::test]
async fn turn_timer_hands_over_without_any_action() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.game.leader_turn_seconds = 1;
    let server = serve(cfg).await;
    let mut human = Ws::connect(&server.ws_url("practice")).await;
    human.join("practice", "alice", false, false).await;
    assert_eq!(human.paired().await.1, Role::Leader);
    let first = human.sync().await.turn;
    let start = Instant::now();
    let handed = human
        .until(|p| match p {
            Payload::TurnUpdate { turn } if turn.active_role == Role::Follower => Some(turn),
            _ => None,
        })
        .await;
    let waited = start.elapsed();
    assert!(waited >= Duration::from_millis(700) && waited < Duration::from_secs(5), "{waited:?}");
    assert_eq!(handed.turn_number, first.turn_number + 1);
    // The builtin follower plays its turn and hands back.
    let back = human
        .until(|p| match p {
            Payload::StateSync { observation } if observation.is_my_turn() => Some(observation.turn),
            _ => None,
        })
        .await;
    assert_eq!(back.turn_number, first.turn_number + 2);
    server.stop().await;
}

#[tokio::test]
async fn tutorial_prompts_follow_the_leader() {
    let dir = tempfile::tempdir().unwrap();
    let server = serve(config(dir.path())).await;
    let mut human = Ws::connect(&server.ws_url("tutorial")).await;
    human.join("tutorial", "newcomer", false, false).await;
    let first = human
        .until(|p| match p {
            Payload::TutorialPrompt { step, .. } => Some(step),
            _ => None,
        })
        .await;
    assert_eq!(first, 0);
    human.act(Action::TurnLeft).await.unwrap();
    let next = human
        .until(|p| match p {
            Payload::TutorialPrompt { step, .. } => Some(step),
            _ => None,
        })
        .await;
    assert_eq!(next, 1);
    server.stop().await;
}

#[tokio::test]
async fn bad_messages_get_error_replies() {
    let dir = tempfile::tempdir().unwrap();
    let server = serve(config(dir.path())).await;
    let mut ws = Ws::connect(&server.ws_url("open")).await;
    ws.send_raw(r#"{"kind":"Pong","payload":{"nonce":1},"seq":1,"version":"0.9"}"#).await;
    assert!(matches!(ws.recv().await, Some(Payload::Error { code: 426, .. })));
    ws.send_raw(r#"{"kind":"Teleport","seq":2,"version":"1.0"}"#).await;
    assert!(matches!(ws.recv().await, Some(Payload::Error { code: 400, .. })));
    ws.send_raw("not json").await;
    assert!(matches!(ws.recv().await, Some(Payload::Error { code: 400, .. })));
    ws.send_raw(r#"{"kind":"Pong","payload":{"nonce":1},"seq":5,"version":"1.0"}"#).await;
    ws.send_raw(r#"{"kind":"Pong","payload":{"nonce":1},"seq":5,"version":"1.0"}"#).await;
    assert!(matches!(ws.recv().await, Some(Payload::Rejected { in_reply_to: Some(5), .. })));
    ws.send_raw(r#"{"kind":"Paired","payload":{"game_id":"g","role":"Leader"},"seq":6,"version":"1.0"}"#).await;
    assert!(matches!(ws.recv().await, Some(Payload::Error { code: 400, .. })));
    ws.send_raw(r#"{"kind":"PlayerAction","payload":{"action":"EndTurn"},"seq":7,"version":"1.0"}"#).await;
    assert!(matches!(ws.recv().await, Some(Payload::Rejected { .. })));
    server.stop().await;
}

#[tokio::test]
async fn silent_connections_are_dropped() {
    let dir = tempfile::tempdir().unwrap();
    let server = serve_with_ping(config(dir.path()), Duration::from_millis(100)).await;
    let mut silent = Ws::connect(&server.ws_url("open")).await;
    silent.silent = true;
    let mut alive = Ws::connect(&server.ws_url("open")).await;
    let start = Instant::now();
    let dropped = async {
        assert!(silent.recv().await.is_none());
        start.elapsed()
    };
    // A client that answers pings stays connected meanwhile.
    let kept = tokio::time::timeout(Duration::from_millis(1500), alive.recv());
    let (dropped, kept) = tokio::join!(dropped, kept);
    assert!(dropped < Duration::from_secs(3), "{dropped:?}");
    assert!(kept.is_err(), "the answering client heard {kept:?}");
    server.stop().await;
}

#[tokio::test]
async fn dropped_player_abandons_the_game() {
    let dir = tempfile::tempdir().unwrap();
    let server = serve_with_ping(config(dir.path()), Duration::from_millis(100)).await;
    let mut human = Ws::connect(&server.ws_url("practice")).await;
    human.join("practice", "alice", false, false).await;
    let (id, _) = human.paired().await;
    human.silent = true;
    while human.recv().await.is_some() {}
    tokio::time::sleep(Duration::from_millis(300)).await;
    let record = server.shared.store.record(&id).expect("abandoned games are recorded");
    assert!(!record.completed);
    server.stop().await;
}

#[tokio::test]
async fn replay_frames_by_index() {
    let dir = tempfile::tempdir().unwrap();
    let server = serve(config(dir.path())).await;
    let mut human = Ws::connect(&server.ws_url("practice")).await;
    human.join("practice", "alice", false, false).await;
    let (id, _) = human.paired().await;
    human.sync().await;
    human.act(Action::TurnRight).await.unwrap();
    human.act(Action::EndTurn).await.unwrap();
    human.send(Payload::LeaveGame).await;
    while human.recv().await.is_some() {}
    tokio::time::sleep(Duration::from_millis(200)).await;
    let total = server.shared.store.events(&id).unwrap().len() as u64;

    let mut viewer = Ws::connect(&format!("{}?replay_game={id}", server.ws_url("practice"))).await;
    let frame = |p| match p {
        Payload::ReplayFrame { index, total, observation } => Some((index, total, observation)),
        _ => None,
    };
    let (index, n, first) = viewer.until(frame).await;
    assert_eq!((index, n), (0, total));
    assert_eq!(first.turn.turn_number, 0);
    viewer.send(Payload::ReplaySeek { index: 1 }).await;
    let (index, _, turned) = viewer.until(frame).await;
    assert_eq!(index, 1);
    assert_ne!(turned.own_pose.heading, first.own_pose.heading);
    viewer.send(Payload::ReplaySeek { index: 10_000 }).await;
    let (index, _, last) = viewer.until(frame).await;
    assert_eq!(index, total - 1);
    assert!(last.over);

    let mut missing = Ws::connect(&format!("{}?replay_game=g999999", server.ws_url("practice"))).await;
    assert!(matches!(missing.recv().await, Some(Payload::Error { code: 404, .. })));
    server.stop().await;
}

fn scenario_file(dir: &std::path::Path) -> std::path::PathBuf {
    let cfg = config(dir);
    let map = generate_map(&cfg.mapgen.clone().with_seed(7)).unwrap();
    let (state, _) = GameState::start(map, cfg.game.clone(), 7).unwrap();
    let path = dir.join("lab.json");
    std::fs::write(&path, Scenario::from_state(&state).to_canonical()).unwrap();
    path
}

#[tokio::test]
async fn scenario_editor_attaches_and_pushes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    let mut lab = lobby("lab", PairingPolicy::HumanBot, RoomKind::Scenario, true);
    lab.scenario = Some(scenario_file(dir.path()));
    cfg.lobbies.push(lab);
    let server = serve(cfg).await;

    let mut player = Ws::connect(&server.ws_url("lab")).await;
    player.join("lab", "subject", false, false).await;
    let (room, role) = player.paired().await;
    assert_eq!(role, Role::Leader);
    let before = player.sync().await;

    let mut editor = Ws::connect(&server.ws_url("lab")).await;
    editor.send(Payload::ScenarioAttach { room_id: room.clone() }).await;
    let mut backlog = Vec::new();
    let accepted = editor
        .until(|p| match p {
            Payload::ScenarioEventFeed { event } => {
                backlog.push(event.seq);
                None
            }
            Payload::ScenarioAck { accepted, .. } => Some(accepted),
            _ => None,
        })
        .await;
    assert!(accepted);
    assert_eq!(backlog, vec![0]);

    let turned = Pose {
        cell: before.own_pose.cell,
        heading: before.own_pose.heading.opposite(),
    };
    editor
        .send(Payload::ScenarioPush {
            edit: ScenarioEdit {
                leader: Some(turned),
                ..ScenarioEdit::default()
            },
        })
        .await;
    let fed = editor
        .until(|p| match p {
            Payload::ScenarioEventFeed { event } => Some(event.seq),
            _ => None,
        })
        .await;
    assert_eq!(fed, 1);
    assert!(matches!(editor.recv().await, Some(Payload::ScenarioAck { accepted: true, .. })));
    assert_eq!(player.sync().await.own_pose, turned);

    let outside = ScenarioEdit {
        tiles: vec![CellView {
            cell: HexCoord::new(500, 500),
            tile: Tile::new(Terrain::Grass),
        }],
        ..ScenarioEdit::default()
    };
    editor.send(Payload::ScenarioPush { edit: outside }).await;
    let refused = editor
        .until(|p| match p {
            Payload::ScenarioAck { accepted, reason } => Some((accepted, reason)),
            _ => None,
        })
        .await;
    assert!(!refused.0 && refused.1.is_some());
    server.stop().await;
}

#[tokio::test]
async fn standard_rooms_refuse_editors() {
    let dir = tempfile::tempdir().unwrap();
    let server = serve(config(dir.path())).await;
    let mut player = Ws::connect(&server.ws_url("practice")).await;
    player.join("practice", "alice", false, false).await;
    let (room, _) = player.paired().await;

    let mut editor = Ws::connect(&server.ws_url("practice")).await;
    editor.send(Payload::ScenarioAttach { room_id: room }).await;
    assert!(matches!(editor.recv().await, Some(Payload::ScenarioAck { accepted: false, .. })));
    editor.send(Payload::ScenarioPush { edit: ScenarioEdit::default() }).await;
    assert!(matches!(editor.recv().await, Some(Payload::ScenarioAck { accepted: false, .. })));
    editor.send(Payload::ScenarioAttach { room_id: "g999999".into() }).await;
    assert!(matches!(editor.recv().await, Some(Payload::ScenarioAck { accepted: false, .. })));
    server.stop().await;
}

#[tokio::test]
async fn lobby_assigns_roles_over_the_wire() {
    let dir = tempfile::tempdir().unwrap();
    let server = serve(config(dir.path())).await;
    let mut novice = Ws::connect(&server.ws_url("open")).await;
    novice.join("open", "novice", false, false).await;
    assert!(matches!(novice.recv().await, Some(Payload::Joined { .. })));
    let mut expert = Ws::connect(&server.ws_url("open")).await;
    expert.join("open", "expert", true, false).await;
    assert_eq!(expert.paired().await.1, Role::Leader);
    assert_eq!(novice.paired().await.1, Role::Follower);

    let mut twice = Ws::connect(&server.ws_url("open")).await;
    twice.join("open", "x", true, false).await;
    twice.recv().await;
    twice.join("open", "x", true, false).await;
    assert!(matches!(twice.recv().await, Some(Payload::Rejected { .. })));

    let mut lost = Ws::connect(&server.ws_url("nowhere")).await;
    lost.join("nowhere", "y", true, false).await;
    assert!(matches!(lost.recv().await, Some(Payload::Rejected { .. })));
    server.stop().await;
}
