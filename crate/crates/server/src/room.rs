//! A room owns one game and processes everything that touches it in order:
//! player actions, turn timers, departures and scenario edits.

use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use hexcollab_core::agents::OracleFollower;
use hexcollab_core::events::{EventRecorder, RecordedEvent};
use hexcollab_core::protocol::Payload;
use hexcollab_core::scenario::{push_edit, ScenarioEdit};
use hexcollab_core::stats::GameRecord;
use hexcollab_core::{Action, EventKind, GameEvent, GameState, Role};
use tokio::sync::mpsc;
use tokio::time::{sleep_until, Duration};

use crate::config::RoomKind;
use crate::store::FileStore;

/// Messages queued for one connection. The connection stamps `seq`.
pub type Outbox = mpsc::UnboundedSender<Payload>;

pub enum RoomInput {
    Action { role: Role, seq: u64, action: Action },
    /// The player left or its connection dropped.
    Leave { role: Role },
    Attach { editor: Outbox },
    Push { edit: ScenarioEdit },
}

#[derive(Clone)]
pub struct RoomHandle {
    pub id: String,
    pub kind: RoomKind,
    tx: mpsc::UnboundedSender<RoomInput>,
}

impl RoomHandle {
    /// Returns false once the room has closed.
    pub fn send(&self, input: RoomInput) -> bool {
        self.tx.send(input).is_ok()
    }
}

pub enum Seat {
    Remote { name: String, out: Outbox },
    /// An in-process follower bot.
    Builtin(Box<OracleFollower>),
}

impl Seat {
    fn out(&self) -> Option<&Outbox> {
        match self {
            Seat::Remote { out, .. } => Some(out),
            Seat::Builtin(_) => None,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Seat::Remote { name, .. } => name,
            Seat::Builtin(_) => "builtin-bot",
        }
    }
}

/// How a finished room reports back.
pub struct Outcome {
    pub room_id: String,
    pub names: [String; 2],
    pub score: u32,
    pub abandoned: bool,
}

pub struct RoomSpec {
    pub id: String,
    pub kind: RoomKind,
    pub lobby: String,
    pub state: GameState,
    pub start_events: Vec<GameEvent>,
    /// Leader seat first.
    pub seats: [Seat; 2],
    /// Persist events; `None` for unrecorded bot games.
    pub store: Option<Arc<FileStore>>,
    pub prompts: Vec<String>,
}

struct Room {
    id: String,
    kind: RoomKind,
    lobby: String,
    state: GameState,
    seats: [Seat; 2],
    store: Option<Arc<FileStore>>,
    recorder: EventRecorder,
    editor: Option<Outbox>,
    prompts: Vec<String>,
    next_prompt: usize,
    clock: Instant,
    failed: bool,
}

/// A room that exists but has not started yet, so that its handle can be
/// handed out before any message leaves it.
pub struct PendingRoom {
    room: Room,
    start_events: Vec<GameEvent>,
    rx: mpsc::UnboundedReceiver<RoomInput>,
}

pub fn prepare_room(spec: RoomSpec) -> (RoomHandle, PendingRoom) {
    let (tx, rx) = mpsc::unbounded_channel();
    let handle = RoomHandle {
        id: spec.id.clone(),
        kind: spec.kind,
        tx,
    };
    let room = Room {
        recorder: EventRecorder::new(spec.id.clone()),
        id: spec.id,
        kind: spec.kind,
        lobby: spec.lobby,
        state: spec.state,
        seats: spec.seats,
        store: spec.store,
        editor: None,
        prompts: spec.prompts,
        next_prompt: 0,
        clock: Instant::now(),
        failed: false,
    };
    let pending = PendingRoom {
        room,
        start_events: spec.start_events,
        rx,
    };
    (handle, pending)
}

impl PendingRoom {
    /// Spawns the room task. `on_close` runs once the game has ended.
    pub fn start(self, on_close: impl FnOnce(Outcome) + Send + 'static) {
        let mut room = self.room;
        room.clock = Instant::now();
        tokio::spawn(room.run(self.start_events, self.rx, on_close));
    }
}

fn wall_time() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn index(role: Role) -> usize {
    match role {
        Role::Leader => 0,
        Role::Follower => 1,
    }
}

impl Room {
    fn now(&self) -> u64 {
        self.clock.elapsed().as_millis() as u64
    }

    async fn run(
        mut self,
        start: Vec<GameEvent>,
        mut rx: mpsc::UnboundedReceiver<RoomInput>,
        on_close: impl FnOnce(Outcome),
    ) {
        self.commit(start);
        for role in [Role::Leader, Role::Follower] {
            self.send(
                role,
                Payload::Paired {
                    game_id: self.id.clone(),
                    role,
                },
            );
        }
        self.sync();
        self.prompt();
        self.drive_bots();
        let mut abandoned = false;
        while !self.state.over && !self.failed {
            let deadline = self.clock + Duration::from_millis(self.state.turn.turn_deadline);
            tokio::select! {
                input = rx.recv() => match input {
                    Some(RoomInput::Action { role, seq, action }) => self.on_action(role, seq, action),
                    Some(RoomInput::Leave { role }) => {
                        let events = self.state.abandon(role);
                        abandoned = true;
                        self.commit(events);
                    }
                    Some(RoomInput::Attach { editor }) => self.on_attach(editor),
                    Some(RoomInput::Push { edit }) => self.on_push(&edit),
                    None => break,
                },
                _ = sleep_until(deadline.into()) => {
                    let events = self.state.expire_turn(self.now());
                    self.commit(events);
                    self.sync();
                    self.drive_bots();
                }
            }
        }
        abandoned |= self
            .recorder
            .events()
            .last()
            .is_some_and(|e| matches!(e.event.kind, EventKind::Abandoned { .. }));
        self.finish(abandoned);
        on_close(Outcome {
            room_id: self.id.clone(),
            names: [self.seats[0].name().to_string(), self.seats[1].name().to_string()],
            score: self.state.turn.score,
            abandoned,
        });
    }

    fn send(&self, role: Role, payload: Payload) {
        if let Some(out) = self.seats[index(role)].out() {
            let _ = out.send(payload);
        }
    }

    /// Stamps and persists events before anything about them is sent.
    fn commit(&mut self, events: Vec<GameEvent>) {
        if events.is_empty() || self.failed {
            return;
        }
        let wall = wall_time();
        let seq0 = self.recorder.next_seq();
        let stamped: Vec<RecordedEvent> = events
            .iter()
            .enumerate()
            .map(|(i, e)| self.recorder.stamp(e.clone(), seq0 + i as u64, wall))
            .collect();
        if let Some(store) = &self.store {
            if let Err(e) = store.append(&stamped) {
                tracing::error!(room = %self.id, "event append failed: {e}");
                self.failed = true;
                for role in [Role::Leader, Role::Follower] {
                    self.send(
                        role,
                        Payload::Error {
                            code: 500,
                            message: "the game could not be saved".into(),
                        },
                    );
                }
                return;
            }
        }
        self.recorder.record(events, wall);
        if let Some(editor) = &self.editor {
            for e in stamped {
                let _ = editor.send(Payload::ScenarioEventFeed { event: Box::new(e) });
            }
        }
    }

    fn sync(&self) {
        for role in [Role::Leader, Role::Follower] {
            self.sync_one(role);
        }
    }

    fn sync_one(&self, role: Role) {
        if self.seats[index(role)].out().is_none() {
            return;
        }
        let observation = self.state.observe(role);
        self.send(role, Payload::TurnUpdate { turn: observation.turn });
        self.send(
            role,
            Payload::StateSync {
                observation: Box::new(observation),
            },
        );
    }

    fn on_action(&mut self, role: Role, seq: u64, action: Action) {
        match self.state.apply_action(role, &action, self.now()) {
            Ok(events) => {
                let changed = !events.is_empty();
                let instructions = events.iter().any(|e| {
                    matches!(
                        e.kind,
                        EventKind::InstructionSent { .. }
                            | EventKind::InstructionActivated { .. }
                            | EventKind::InstructionDone { .. }
                            | EventKind::InstructionCancelled { .. }
                    )
                });
                self.commit(events);
                if self.failed {
                    return;
                }
                self.send(role, Payload::ActionAck { in_reply_to: seq });
                self.sync_one(role);
                if changed {
                    self.sync_one(role.other());
                }
                if instructions {
                    for r in [Role::Leader, Role::Follower] {
                        let instructions = self.state.observe(r).instructions;
                        self.send(r, Payload::InstructionUpdate { instructions });
                    }
                }
                if changed && role == Role::Leader {
                    self.prompt();
                }
                self.drive_bots();
            }
            Err(rejection) => self.send(
                role,
                Payload::Rejected {
                    reason: rejection.to_string(),
                    in_reply_to: Some(seq),
                },
            ),
        }
    }

    /// Lets in-process bots act until a remote player is up.
    fn drive_bots(&mut self) {
        for _ in 0..10_000 {
            if self.state.over || self.failed {
                return;
            }
            let role = self.state.turn.active_role;
            let obs = self.state.observe(role);
            let Seat::Builtin(bot) = &mut self.seats[index(role)] else {
                return;
            };
            let action = match bot.act(&obs) {
                Action::Noop => Action::EndTurn,
                a => a,
            };
            let events = self
                .state
                .apply_action(role, &action, self.now())
                .or_else(|_| self.state.apply_action(role, &Action::EndTurn, self.now()))
                .unwrap_or_default();
            if events.is_empty() {
                return;
            }
            self.commit(events);
            self.sync_one(role.other());
        }
    }

    fn prompt(&mut self) {
        if self.kind != RoomKind::Tutorial {
            return;
        }
        if let Some(text) = self.prompts.get(self.next_prompt) {
            self.send(
                Role::Leader,
                Payload::TutorialPrompt {
                    step: self.next_prompt as u32,
                    text: text.clone(),
                },
            );
            self.next_prompt += 1;
        }
    }

    fn on_attach(&mut self, editor: Outbox) {
        if self.kind != RoomKind::Scenario {
            let _ = editor.send(Payload::ScenarioAck {
                accepted: false,
                reason: Some(format!("room {} is not a scenario room", self.id)),
            });
            return;
        }
        for e in self.recorder.events() {
            let _ = editor.send(Payload::ScenarioEventFeed {
                event: Box::new(e.clone()),
            });
        }
        let _ = editor.send(Payload::ScenarioAck {
            accepted: true,
            reason: None,
        });
        self.editor = Some(editor);
    }

    fn on_push(&mut self, edit: &ScenarioEdit) {
        let Some(editor) = self.editor.clone() else {
            return;
        };
        match push_edit(&mut self.state, edit) {
            Ok(events) => {
                self.commit(events);
                let _ = editor.send(Payload::ScenarioAck {
                    accepted: true,
                    reason: None,
                });
                self.sync();
            }
            Err(e) => {
                let _ = editor.send(Payload::ScenarioAck {
                    accepted: false,
                    reason: Some(e.to_string()),
                });
            }
        }
    }

    fn finish(&mut self, abandoned: bool) {
        let score = self.state.turn.score;
        for role in [Role::Leader, Role::Follower] {
            self.send(role, Payload::GameOver { score, abandoned });
        }
        if self.failed {
            return;
        }
        if let Some(store) = &self.store {
            let players = self.seats.iter().map(|s| player_id(s.name())).collect();
            let mut record = GameRecord::from_events(&self.lobby, players, self.recorder.events());
            record.final_hash = Some(self.state.state_hash());
            if let Err(e) = store.finish(record) {
                tracing::error!(room = %self.id, "record write failed: {e}");
            }
        }
    }
}

/// Opaque, stable id for a display name.
pub fn player_id(name: &str) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(name.as_bytes());
    let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    format!("p-{hex}")
}
