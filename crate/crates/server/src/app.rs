//! HTTP routes, websocket connections and the glue between lobbies and rooms.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::serve::ListenerExt;
use axum::Router;
use futures::{SinkExt, StreamExt};
use hexcollab_core::agents::OracleFollower;
use hexcollab_core::canonical::to_canonical_string;
use hexcollab_core::protocol::{decode, encode, DecodeError, Payload, SeqCounter, SeqGuard, WireMessage, MAX_MISSED_PONGS};
use hexcollab_core::scenario::{load_scenario, start_scenario, Scenario};
use hexcollab_core::{replay, GameState, MapPool, RecordedEvent, Role};
use serde::Deserialize;
use thiserror::Error;
use tokio::sync::{mpsc, oneshot};
use tokio::task::JoinHandle;

use crate::config::{RoomKind, ServerConfig};
use crate::lobby::{JoinInfo, Lobby, Pairing, ScoreBook};
use crate::room::{prepare_room, Outbox, RoomHandle, RoomInput, RoomSpec, Seat};
use crate::store::{valid_game_id, FileStore, StoreError};

const PLAY_PAGE: &str = include_str!("../static/play.html");

#[derive(Debug, Error)]
pub enum StartError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("map pool: {0}")]
    Pool(String),
    #[error("scenario for lobby {lobby}: {reason}")]
    Scenario { lobby: String, reason: String },
    #[error("cannot bind: {0}")]
    Bind(#[from] std::io::Error),
}

/// Where a connection currently belongs.
#[derive(Clone)]
struct Seated {
    room: RoomHandle,
    role: Role,
}

type Slot = Arc<Mutex<Option<Seated>>>;

/// A waiting player's way back to its connection.
pub struct Ticket {
    name: String,
    out: Outbox,
    slot: Slot,
}

pub struct Shared {
    pub config: ServerConfig,
    pub store: Arc<FileStore>,
    pool: MapPool,
    lobbies: HashMap<String, Mutex<Lobby<Ticket>>>,
    scenarios: HashMap<String, Scenario>,
    rooms: Mutex<HashMap<String, RoomHandle>>,
    scores: Mutex<ScoreBook>,
    next_game: AtomicU64,
    next_player: AtomicU64,
    ping_interval: Duration,
}

impl Shared {
    pub fn new(config: ServerConfig) -> Result<Self, StartError> {
        let store = Arc::new(FileStore::open(&config.data_dir)?);
        let pool = MapPool::new(config.mapgen.clone(), config.map_seed).map_err(|e| StartError::Pool(e.to_string()))?;
        let mut scenarios = HashMap::new();
        for l in &config.lobbies {
            if let Some(path) = &l.scenario {
                let bad = |reason: String| StartError::Scenario {
                    lobby: l.id.clone(),
                    reason,
                };
                let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
                scenarios.insert(l.id.clone(), load_scenario(&text).map_err(|e| bad(e.to_string()))?);
            }
        }
        let lobbies = config
            .lobbies
            .iter()
            .map(|l| (l.id.clone(), Mutex::new(Lobby::new(l.id.clone(), l.policy, l.builtin_bot))))
            .collect();
        let first_game = store.records().len() as u64 + 1;
        Ok(Self {
            store,
            pool,
            lobbies,
            scenarios,
            rooms: Mutex::new(HashMap::new()),
            scores: Mutex::new(ScoreBook::default()),
            next_game: AtomicU64::new(first_game),
            next_player: AtomicU64::new(1),
            ping_interval: Duration::from_secs(hexcollab_core::protocol::PING_INTERVAL_SECS),
            config,
        })
    }

    /// Overrides the heartbeat period (tests use short ones).
    pub fn with_ping_interval(mut self, every: Duration) -> Self {
        self.ping_interval = every;
        self
    }

    pub fn live_rooms(&self) -> Vec<(String, RoomKind)> {
        let rooms = self.rooms.lock().expect("rooms lock");
        let mut out: Vec<_> = rooms.values().map(|r| (r.id.clone(), r.kind)).collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    fn new_game_id(&self) -> String {
        loop {
            let n = self.next_game.fetch_add(1, Ordering::Relaxed);
            let id = format!("g{n:06}");
            if self.store.events(&id).is_none() && self.store.record(&id).is_none() {
                return id;
            }
        }
    }

    /// Turns a pairing into a running room and tells both connections.
    fn open_room(self: &Arc<Self>, lobby_id: &str, pairing: Pairing<Ticket>) {
        let lobby = self.config.lobby(lobby_id).expect("configured lobby");
        let id = self.new_game_id();
        let setup: Result<(GameState, Vec<_>), String> = match self.scenarios.get(lobby_id) {
            Some(s) => start_scenario(s).map_err(|e| e.to_string()),
            None => self
                .pool
                .acquire()
                .map_err(|e| e.to_string())
                .and_then(|map| {
                    let seed = map.seed;
                    GameState::start(map, self.config.game.clone(), seed).map_err(|e| e.to_string())
                }),
        };
        let leader = pairing.leader;
        let follower = pairing.follower;
        let (state, start_events) = match setup {
            Ok(s) => s,
            Err(e) => {
                tracing::error!("cannot open a room: {e}");
                for t in std::iter::once(&leader.ticket).chain(follower.as_ref().map(|f| &f.ticket)) {
                    let _ = t.out.send(Payload::Error {
                        code: 500,
                        message: "no game could be started".into(),
                    });
                }
                return;
            }
        };
        let record = leader.record || follower.as_ref().is_none_or(|f| f.record);
        let leader_seat = Seat::Remote {
            name: leader.ticket.name.clone(),
            out: leader.ticket.out.clone(),
        };
        let follower_seat = match &follower {
            Some(f) => Seat::Remote {
                name: f.ticket.name.clone(),
                out: f.ticket.out.clone(),
            },
            None => Seat::Builtin(Box::new(OracleFollower::new())),
        };
        let spec = RoomSpec {
            id: id.clone(),
            kind: lobby.room,
            lobby: lobby_id.to_string(),
            state,
            start_events,
            seats: [leader_seat, follower_seat],
            store: record.then(|| self.store.clone()),
            prompts: self.config.tutorial.prompts.clone(),
        };
        let (handle, pending) = prepare_room(spec);
        *leader.ticket.slot.lock().expect("slot lock") = Some(Seated {
            room: handle.clone(),
            role: Role::Leader,
        });
        if let Some(f) = &follower {
            *f.ticket.slot.lock().expect("slot lock") = Some(Seated {
                room: handle.clone(),
                role: Role::Follower,
            });
        }
        // Registered before it starts, so removal on close always follows.
        self.rooms.lock().expect("rooms lock").insert(id, handle);
        let shared = self.clone();
        pending.start(move |outcome| {
            shared.rooms.lock().expect("rooms lock").remove(&outcome.room_id);
            if !outcome.abandoned {
                let mut scores = shared.scores.lock().expect("scores lock");
                for name in &outcome.names {
                    scores.push(name, outcome.score);
                }
            }
        });
    }

    pub fn stats_json(&self) -> String {
        to_canonical_string(&self.store.stats())
    }
}

pub fn router(shared: Arc<Shared>) -> Router {
    let play = match &shared.config.static_dir {
        Some(dir) => Router::new().fallback_service(tower_http::services::ServeDir::new(dir)),
        None => Router::new().fallback(get(|| async { Html(PLAY_PAGE) })),
    };
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/ws/{lobby}", get(ws_upgrade))
        .route("/data/games", get(list_games))
        .route("/data/games/{id}", get(get_game))
        .route("/data/games/{id}/events", get(get_events))
        .route("/data/stats", get(get_stats))
        .route("/data/archive", get(get_archive))
        .route("/play", get(|| async { Html(PLAY_PAGE) }))
        .nest("/play/", play)
        .with_state(shared)
}

fn json(body: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn not_found(what: &str) -> Response {
    (StatusCode::NOT_FOUND, format!("{what} not found")).into_response()
}

#[derive(Deserialize)]
struct Paging {
    limit: Option<usize>,
    offset: Option<usize>,
}

pub const MAX_PAGE: usize = 1000;

async fn list_games(State(s): State<Arc<Shared>>, Query(p): Query<Paging>) -> Response {
    let limit = p.limit.unwrap_or(50);
    let offset = p.offset.unwrap_or(0);
    if limit == 0 || limit > MAX_PAGE {
        return (StatusCode::BAD_REQUEST, format!("limit must be in 1..={MAX_PAGE}")).into_response();
    }
    let records = s.store.records();
    let page: Vec<_> = records.iter().skip(offset).take(limit).collect();
    json(to_canonical_string(&serde_json::json!({
        "total": records.len(),
        "offset": offset,
        "limit": limit,
        "games": page,
    })))
}

pub fn replay_url(game_id: &str) -> String {
    format!("/play?replay_game={game_id}")
}

async fn get_game(State(s): State<Arc<Shared>>, Path(id): Path<String>) -> Response {
    let Some(record) = s.store.record(&id) else {
        return not_found("game");
    };
    let mut value = serde_json::to_value(&record).expect("record serializes");
    value["replay_url"] = replay_url(&id).into();
    json(to_canonical_string(&value))
}

async fn get_events(State(s): State<Arc<Shared>>, Path(id): Path<String>) -> Response {
    match s.store.record(&id).and_then(|_| s.store.events(&id)) {
        Some(events) => json(to_canonical_string(&events)),
        None => not_found("game"),
    }
}

async fn get_stats(State(s): State<Arc<Shared>>) -> Response {
    json(s.stats_json())
}

async fn get_archive(State(s): State<Arc<Shared>>) -> Response {
    match s.store.export_archive() {
        Ok(bytes) => (
            [
                (header::CONTENT_TYPE, "application/x-tar"),
                (header::CONTENT_DISPOSITION, "attachment; filename=\"archive.tar\""),
            ],
            bytes,
        )
            .into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

#[derive(Deserialize)]
struct WsParams {
    replay_game: Option<String>,
}

async fn ws_upgrade(
    State(s): State<Arc<Shared>>,
    Path(lobby): Path<String>,
    Query(q): Query<WsParams>,
    ws: WebSocketUpgrade,
) -> Response {
    ws.on_upgrade(move |socket| connection(s, lobby, q.replay_game, socket))
}

/// What the connection is doing besides playing.
enum Mode {
    Idle,
    Waiting { player_id: u64 },
    Playing,
    Editing(RoomHandle),
    Replay(Vec<RecordedEvent>),
}

async fn connection(shared: Arc<Shared>, lobby_id: String, replay_game: Option<String>, socket: WebSocket) {
    let (mut sink, mut stream) = socket.split();
    let (out, mut out_rx) = mpsc::unbounded_channel::<Payload>();
    let writer = tokio::spawn(async move {
        let mut seq = SeqCounter::default();
        while let Some(p) = out_rx.recv().await {
            let bytes = encode(&WireMessage::new(seq.next(), p));
            let text = String::from_utf8(bytes).expect("canonical json is utf-8");
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });

    let slot: Slot = Arc::new(Mutex::new(None));
    let mut mode = Mode::Idle;
    if let Some(id) = replay_game {
        match shared.store.record(&id).and_then(|_| shared.store.events(&id)) {
            Some(events) if valid_game_id(&id) => {
                send_frame(&out, &events, 0);
                mode = Mode::Replay(events);
            }
            _ => {
                let _ = out.send(Payload::Error {
                    code: 404,
                    message: format!("no recorded game {id:?}"),
                });
                drop(out);
                let _ = writer.await;
                return;
            }
        }
    }

    let mut guard = SeqGuard::default();
    let mut ping = tokio::time::interval(shared.ping_interval);
    ping.tick().await;
    let mut missed = 0u32;
    let mut nonce = 0u64;
    loop {
        let msg = tokio::select! {
            m = stream.next() => m,
            _ = ping.tick() => {
                if missed >= MAX_MISSED_PONGS {
                    tracing::info!("dropping a connection after {missed} missed pongs");
                    break;
                }
                missed += 1;
                nonce += 1;
                let _ = out.send(Payload::Ping { nonce });
                continue;
            }
        };
        let bytes = match msg {
            Some(Ok(Message::Text(t))) => t.as_bytes().to_vec(),
            Some(Ok(Message::Binary(b))) => b.to_vec(),
            Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
            Some(Ok(_)) => continue,
        };
        let msg = match decode(&bytes) {
            Ok(m) => m,
            Err(e) => {
                let code = match e {
                    DecodeError::VersionMismatch(_) => 426,
                    _ => 400,
                };
                let _ = out.send(Payload::Error {
                    code,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if !guard.accept(msg.seq) {
            let _ = out.send(Payload::Rejected {
                reason: "seq must increase".into(),
                in_reply_to: Some(msg.seq),
            });
            continue;
        }
        let seated = slot.lock().expect("slot lock").clone();
        if seated.is_some() {
            mode = Mode::Playing;
        }
        let reject = |reason: String| {
            let _ = out.send(Payload::Rejected {
                reason,
                in_reply_to: Some(msg.seq),
            });
        };
        match msg.body {
            Payload::Pong { .. } => missed = 0,
            Payload::JoinLobby(req) => {
                if !matches!(mode, Mode::Idle) {
                    reject("already joined".into());
                    continue;
                }
                if req.lobby_id != lobby_id {
                    reject(format!("join names lobby {:?} on /ws/{lobby_id}", req.lobby_id));
                    continue;
                }
                let Some(lobby) = shared.lobbies.get(&lobby_id) else {
                    reject(format!("unknown lobby {lobby_id:?}"));
                    continue;
                };
                let player = shared.next_player.fetch_add(1, Ordering::Relaxed);
                let info = JoinInfo {
                    player_id: player,
                    leader_qualified: req.leader_qualified,
                    is_bot: req.is_bot,
                    record: req.record,
                    recent_mean: shared.scores.lock().expect("scores lock").mean(&req.display_name),
                };
                let ticket = Ticket {
                    name: req.display_name.clone(),
                    out: out.clone(),
                    slot: slot.clone(),
                };
                let (joined, pairings) = {
                    let mut lobby = lobby.lock().expect("lobby lock");
                    let joined = lobby.join(info, ticket);
                    let mut pairings = Vec::new();
                    if joined.is_ok() {
                        while let Some(p) = lobby.try_pair() {
                            pairings.push(p);
                        }
                    }
                    (joined, pairings)
                };
                match joined {
                    Ok((_, position)) => {
                        let _ = out.send(Payload::Joined { position });
                        mode = Mode::Waiting { player_id: player };
                    }
                    Err(e) => reject(e.to_string()),
                }
                for p in pairings {
                    shared.open_room(&lobby_id, p);
                }
            }
            Payload::PlayerAction { action } => match seated {
                Some(s) => {
                    if !s.room.send(RoomInput::Action {
                        role: s.role,
                        seq: msg.seq,
                        action,
                    }) {
                        reject("the game has ended".into());
                    }
                }
                None => reject("not in a game".into()),
            },
            Payload::LeaveGame => break,
            Payload::ScenarioAttach { room_id } => {
                let room = shared.rooms.lock().expect("rooms lock").get(&room_id).cloned();
                match room {
                    Some(room) if matches!(mode, Mode::Idle) => {
                        room.send(RoomInput::Attach { editor: out.clone() });
                        if room.kind == RoomKind::Scenario {
                            mode = Mode::Editing(room);
                        }
                    }
                    Some(_) => reject("a player cannot attach as editor".into()),
                    None => {
                        let _ = out.send(Payload::ScenarioAck {
                            accepted: false,
                            reason: Some(format!("no live room {room_id:?}")),
                        });
                    }
                }
            }
            Payload::ScenarioPush { edit } => match &mode {
                Mode::Editing(room) => {
                    room.send(RoomInput::Push { edit });
                }
                _ => {
                    let _ = out.send(Payload::ScenarioAck {
                        accepted: false,
                        reason: Some("not attached to a scenario room".into()),
                    });
                }
            },
            Payload::ReplaySeek { index } => match &mode {
                Mode::Replay(events) => send_frame(&out, events, index),
                _ => reject("not in a replay".into()),
            },
            other => {
                let _ = out.send(Payload::Error {
                    code: 400,
                    message: format!("{} is a server message", other.kind()),
                });
            }
        }
    }

    // Disconnect: leave the queue, or abandon the game.
    if let Mode::Waiting { player_id } = mode {
        if let Some(lobby) = shared.lobbies.get(&lobby_id) {
            lobby.lock().expect("lobby lock").leave(player_id);
        }
    }
    if let Some(s) = slot.lock().expect("slot lock").take() {
        s.room.send(RoomInput::Leave { role: s.role });
    }
    drop(out);
    writer.abort();
}

/// Sends the replay frame after the event at `index` (clamped to the log).
fn send_frame(out: &Outbox, events: &[RecordedEvent], index: u64) {
    let total = events.len() as u64;
    let index = index.min(total.saturating_sub(1));
    match replay(&events[..=index as usize]) {
        Ok(state) => {
            let _ = out.send(Payload::ReplayFrame {
                index,
                total,
                observation: Box::new(state.observe(Role::Leader)),
            });
        }
        Err(e) => {
            let _ = out.send(Payload::Error {
                code: 500,
                message: e.to_string(),
            });
        }
    }
}

/// A running server.
pub struct Server {
    pub addr: SocketAddr,
    pub shared: Arc<Shared>,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<()>,
    refill: JoinHandle<()>,
}

impl Server {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn ws_url(&self, lobby: &str) -> String {
        format!("ws://{}/ws/{lobby}", self.addr)
    }

    pub async fn stop(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.refill.abort();
        let _ = self.task.await;
    }

    /// Runs until the process is interrupted.
    pub async fn wait(self) {
        let _ = self.task.await;
    }
}

/// Binds and starts serving. Port 0 picks a free port.
pub async fn start(config: ServerConfig) -> Result<Server, StartError> {
    start_shared(Shared::new(config)?).await
}

pub async fn start_shared(shared: Shared) -> Result<Server, StartError> {
    let shared = Arc::new(shared);
    let pool_size = shared.config.pool_size;
    let warm = shared.clone();
    tokio::task::spawn_blocking(move || warm.pool.refill(pool_size))
        .await
        .expect("pool task")
        .map_err(|e| StartError::Pool(e.to_string()))?;
    let listener = tokio::net::TcpListener::bind((shared.config.host.as_str(), shared.config.port)).await?;
    let addr = listener.local_addr()?;
    // Small frames (one action each) must not wait for delayed ACKs.
    let listener = listener.tap_io(|tcp| {
        let _ = tcp.set_nodelay(true);
    });
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(shared.clone());
    let task = tokio::spawn(async move {
        let result = axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await;
        if let Err(e) = result {
            tracing::error!("server stopped: {e}");
        }
    });
    let refiller = shared.clone();
    let refill = tokio::spawn(async move {
        let mut every = tokio::time::interval(Duration::from_secs(1));
        loop {
            every.tick().await;
            let s = refiller.clone();
            let _ = tokio::task::spawn_blocking(move || s.pool.refill(pool_size)).await;
        }
    });
    Ok(Server {
        addr,
        shared,
        shutdown: Some(tx),
        task,
        refill,
    })
}
