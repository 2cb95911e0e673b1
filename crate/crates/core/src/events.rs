//! Game events, the per-game append-only log discipline, and replay.
//!
//! Every mutation of a [`GameState`] happens by applying a [`GameEvent`], both
//! live and during replay, so folding a log reproduces the live state exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cards::Card;
use crate::game::{GameConfig, GameState, Role, SetupError};
use crate::hexgrid::Pose;
use crate::map::GameMap;
use crate::scenario::{Scenario, ScenarioEdit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Actor {
    Leader,
    Follower,
    Server,
}

impl From<Role> for Actor {
    fn from(r: Role) -> Self {
        match r {
            Role::Leader => Actor::Leader,
            Role::Follower => Actor::Follower,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    Forward,
    Backward,
    TurnLeft,
    TurnRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TurnEndReason {
    StepsExhausted,
    TimerExpired,
    EndTurnAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum EventKind {
    GameStart {
        map: Box<GameMap>,
        config: GameConfig,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scenario: Option<Box<Scenario>>,
    },
    Move {
        action: MoveKind,
        pose: Pose,
    },
    CardToggle {
        card_id: u32,
        selected: bool,
    },
    SetCompleted {
        card_ids: Vec<u32>,
        new_cards: Vec<Card>,
        score: u32,
        bonus_turns: u32,
    },
    InstructionSent {
        id: u32,
        text: String,
    },
    InstructionActivated {
        id: u32,
    },
    InstructionDone {
        id: u32,
    },
    InstructionCancelled {
        ids: Vec<u32>,
    },
    TimerExpired,
    TurnTransition {
        reason: TurnEndReason,
        next_role: Role,
        turns_remaining: u32,
    },
    ScenarioEdit {
        edit: Box<ScenarioEdit>,
    },
    Abandoned {
        role: Role,
    },
    GameOver {
        score: u32,
    },
}

impl EventKind {
    pub fn is_terminal(&self) -> bool {
        matches!(self, EventKind::GameOver { .. } | EventKind::Abandoned { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            EventKind::GameStart { .. } => "GameStart",
            EventKind::Move { .. } => "Move",
            EventKind::CardToggle { .. } => "CardToggle",
            EventKind::SetCompleted { .. } => "SetCompleted",
            EventKind::InstructionSent { .. } => "InstructionSent",
            EventKind::InstructionActivated { .. } => "InstructionActivated",
            EventKind::InstructionDone { .. } => "InstructionDone",
            EventKind::InstructionCancelled { .. } => "InstructionCancelled",
            EventKind::TimerExpired => "TimerExpired",
            EventKind::TurnTransition { .. } => "TurnTransition",
            EventKind::ScenarioEdit { .. } => "ScenarioEdit",
            EventKind::Abandoned { .. } => "Abandoned",
            EventKind::GameOver { .. } => "GameOver",
        }
    }
}

/// One state change, attributed to whoever caused it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameEvent {
    pub actor: Actor,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl GameEvent {
    pub fn new(actor: Actor, kind: EventKind) -> Self {
        Self { actor, kind }
    }
}

/// A [`GameEvent`] as stored in a game's log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedEvent {
    pub game_id: String,
    pub seq: u64,
    /// Milliseconds since the Unix epoch when the event was recorded.
    /// Informational only; replay never reads it.
    pub wall_time: u64,
    pub event: GameEvent,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogError {
    #[error("event seq {got} does not follow {expected}")]
    SeqGap { expected: u64, got: u64 },
    #[error("first event must be GameStart, got {0}")]
    MissingStart(&'static str),
    #[error("GameStart may only appear first (seq {0})")]
    DuplicateStart(u64),
    #[error("game already ended; rejected seq {0}")]
    AfterTerminal(u64),
    #[error("event game id {got:?} does not match log {expected:?}")]
    WrongGame { expected: String, got: String },
}

/// Append-side bookkeeping for one game's log: dense seq, GameStart first,
/// nothing after a terminal event.
#[derive(Debug, Clone, Default)]
pub struct LogCursor {
    game_id: Option<String>,
    next_seq: u64,
    terminal: bool,
}

impl LogCursor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    /// Checks `event` against the log so far without recording it.
    pub fn check(&self, event: &RecordedEvent) -> Result<(), LogError> {
        if self.terminal {
            return Err(LogError::AfterTerminal(event.seq));
        }
        if let Some(id) = &self.game_id {
            if *id != event.game_id {
                return Err(LogError::WrongGame {
                    expected: id.clone(),
                    got: event.game_id.clone(),
                });
            }
        }
        if event.seq != self.next_seq {
            return Err(LogError::SeqGap {
                expected: self.next_seq,
                got: event.seq,
            });
        }
        let is_start = matches!(event.event.kind, EventKind::GameStart { .. });
        if self.next_seq == 0 && !is_start {
            return Err(LogError::MissingStart(event.event.kind.name()));
        }
        if self.next_seq > 0 && is_start {
            return Err(LogError::DuplicateStart(event.seq));
        }
        Ok(())
    }

    pub fn advance(&mut self, event: &RecordedEvent) -> Result<(), LogError> {
        self.check(event)?;
        self.game_id.get_or_insert_with(|| event.game_id.clone());
        self.next_seq += 1;
        self.terminal = event.event.kind.is_terminal();
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayError {
    #[error("empty event log")]
    Empty,
    #[error("malformed log at seq {seq}: {source}")]
    Log { seq: u64, source: LogError },
    #[error("event seq {seq} cannot be applied: {reason}")]
    Inconsistent { seq: u64, reason: String },
    #[error("GameStart at seq {seq} is invalid: {source}")]
    Setup { seq: u64, source: SetupError },
}

/// Folds a log prefix into the state it describes.
pub fn replay(events: &[RecordedEvent]) -> Result<GameState, ReplayError> {
    let first = events.first().ok_or(ReplayError::Empty)?;
    let mut cursor = LogCursor::new();
    cursor
        .advance(first)
        .map_err(|source| ReplayError::Log { seq: first.seq, source })?;
    let mut state = GameState::from_start_event(&first.event).map_err(|source| {
        ReplayError::Setup {
            seq: first.seq,
            source,
        }
    })?;
    for ev in &events[1..] {
        cursor
            .advance(ev)
            .map_err(|source| ReplayError::Log { seq: ev.seq, source })?;
        state
            .apply_event(&ev.event)
            .map_err(|reason| ReplayError::Inconsistent {
                seq: ev.seq,
                reason,
            })?;
    }
    Ok(state)
}

/// Assigns seq numbers and game id to events coming out of the engine.
#[derive(Debug, Clone)]
pub struct EventRecorder {
    game_id: String,
    events: Vec<RecordedEvent>,
}

impl EventRecorder {
    pub fn new(game_id: impl Into<String>) -> Self {
        Self {
            game_id: game_id.into(),
            events: Vec::new(),
        }
    }

    pub fn game_id(&self) -> &str {
        &self.game_id
    }

    pub fn next_seq(&self) -> u64 {
        self.events.len() as u64
    }

    pub fn stamp(&self, event: GameEvent, seq: u64, wall_time: u64) -> RecordedEvent {
        RecordedEvent {
            game_id: self.game_id.clone(),
            seq,
            wall_time,
            event,
        }
    }

    pub fn record(&mut self, events: impl IntoIterator<Item = GameEvent>, wall_time: u64) {
        for event in events {
            let rec = self.stamp(event, self.next_seq(), wall_time);
            self.events.push(rec);
        }
    }

    pub fn events(&self) -> &[RecordedEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<RecordedEvent> {
        self.events
    }
}

/// Logs compared without game ids or wall-clock stamps.
pub fn same_history(a: &[RecordedEvent], b: &[RecordedEvent]) -> bool {
    a.len() == b.len()
        && a
            .iter()
            .zip(b)
            .all(|(x, y)| x.seq == y.seq && x.event == y.event)
}
