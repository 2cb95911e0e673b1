//! Versioned client/server messages.
//!
//! On the wire a message is one canonical JSON object:
//! `{"kind": <name>, "payload": {...}, "seq": n, "version": "1.0"}`.
//! `payload` is omitted for kinds without a body.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::to_canonical_string;
use crate::events::RecordedEvent;
use crate::game::{Action, Instruction, Observation, Role, TurnState};
use crate::scenario::ScenarioEdit;

pub const PROTOCOL_VERSION: &str = "1.0";

/// Seconds between server pings.
pub const PING_INTERVAL_SECS: u64 = 10;
/// Unanswered pings after which a connection counts as dropped.
pub const MAX_MISSED_PONGS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinRequest {
    pub lobby_id: String,
    pub display_name: String,
    /// Whether the player may lead; others are queued as followers only.
    pub leader_qualified: bool,
    pub is_bot: bool,
    /// Persist the game's events. Only bot-vs-bot games may opt out.
    pub record: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum Payload {
    // client -> server
    JoinLobby(JoinRequest),
    PlayerAction { action: Action },
    LeaveGame,
    Pong { nonce: u64 },
    ScenarioAttach { room_id: String },
    ScenarioPush { edit: ScenarioEdit },
    ReplaySeek { index: u64 },

    // server -> client
    Joined { position: u32 },
    Paired { game_id: String, role: Role },
    StateSync { observation: Box<Observation> },
    TurnUpdate { turn: TurnState },
    InstructionUpdate { instructions: Vec<Instruction> },
    ActionAck { in_reply_to: u64 },
    GameOver { score: u32, abandoned: bool },
    Rejected { reason: String, in_reply_to: Option<u64> },
    Ping { nonce: u64 },
    Error { code: u16, message: String },
    ScenarioEventFeed { event: Box<RecordedEvent> },
    ScenarioAck { accepted: bool, reason: Option<String> },
    TutorialPrompt { step: u32, text: String },
    ReplayFrame { index: u64, total: u64, observation: Box<Observation> },
}

pub const KINDS: [&str; 21] = [
    "JoinLobby",
    "PlayerAction",
    "LeaveGame",
    "Pong",
    "ScenarioAttach",
    "ScenarioPush",
    "ReplaySeek",
    "Joined",
    "Paired",
    "StateSync",
    "TurnUpdate",
    "InstructionUpdate",
    "ActionAck",
    "GameOver",
    "Rejected",
    "Ping",
    "Error",
    "ScenarioEventFeed",
    "ScenarioAck",
    "TutorialPrompt",
    "ReplayFrame",
];

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::JoinLobby(_) => "JoinLobby",
            Payload::PlayerAction { .. } => "PlayerAction",
            Payload::LeaveGame => "LeaveGame",
            Payload::Pong { .. } => "Pong",
            Payload::ScenarioAttach { .. } => "ScenarioAttach",
            Payload::ScenarioPush { .. } => "ScenarioPush",
            Payload::ReplaySeek { .. } => "ReplaySeek",
            Payload::Joined { .. } => "Joined",
            Payload::Paired { .. } => "Paired",
            Payload::StateSync { .. } => "StateSync",
            Payload::TurnUpdate { .. } => "TurnUpdate",
            Payload::InstructionUpdate { .. } => "InstructionUpdate",
            Payload::ActionAck { .. } => "ActionAck",
            Payload::GameOver { .. } => "GameOver",
            Payload::Rejected { .. } => "Rejected",
            Payload::Ping { .. } => "Ping",
            Payload::Error { .. } => "Error",
            Payload::ScenarioEventFeed { .. } => "ScenarioEventFeed",
            Payload::ScenarioAck { .. } => "ScenarioAck",
            Payload::TutorialPrompt { .. } => "TutorialPrompt",
            Payload::ReplayFrame { .. } => "ReplayFrame",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub version: String,
    pub seq: u64,
    #[serde(flatten)]
    pub body: Payload,
}

impl WireMessage {
    pub fn new(seq: u64, body: Payload) -> Self {
        Self {
            version: PROTOCOL_VERSION.to_string(),
            seq,
            body,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("protocol version {0:?} is not supported")]
    VersionMismatch(String),
    #[error("unknown message kind {0:?}")]
    UnknownKind(String),
}

pub fn encode(msg: &WireMessage) -> Vec<u8> {
    to_canonical_string(msg).into_bytes()
}

/// The envelope, read without materializing the payload.
#[derive(Deserialize)]
struct Envelope<'a> {
    #[serde(borrow)]
    version: Option<&'a serde_json::value::RawValue>,
    #[serde(borrow)]
    kind: Option<&'a serde_json::value::RawValue>,
    seq: Option<u64>,
    #[serde(borrow)]
    payload: Option<&'a serde_json::value::RawValue>,
}

pub fn decode(bytes: &[u8]) -> Result<WireMessage, DecodeError> {
    let parse = |e: serde_json::Error| DecodeError::Parse(e.to_string());
    let text = std::str::from_utf8(bytes).map_err(|e| DecodeError::Parse(e.to_string()))?;
    let env: Envelope = serde_json::from_str(text).map_err(parse)?;
    let as_str = |raw: Option<&serde_json::value::RawValue>, field: &str| -> Result<String, DecodeError> {
        let raw = raw.ok_or_else(|| DecodeError::Parse(format!("missing {field}")))?;
        serde_json::from_str::<String>(raw.get()).map_err(|_| DecodeError::Parse(format!("{field} is not a string")))
    };
    let version = as_str(env.version, "version")?;
    if version != PROTOCOL_VERSION {
        return Err(DecodeError::VersionMismatch(version));
    }
    let kind_raw = env.kind.ok_or_else(|| DecodeError::Parse("missing kind".into()))?;
    let kind = as_str(Some(kind_raw), "kind")?;
    if !KINDS.contains(&kind.as_str()) {
        return Err(DecodeError::UnknownKind(kind));
    }
    let seq = env.seq.ok_or_else(|| DecodeError::Parse("missing seq".into()))?;
    // With "kind" first, the tagged enum reads the payload in one pass.
    let body = match env.payload {
        Some(p) => format!("{{\"kind\":{},\"payload\":{}}}", kind_raw.get(), p.get()),
        None => format!("{{\"kind\":{}}}", kind_raw.get()),
    };
    let body: Payload = serde_json::from_str(&body).map_err(parse)?;
    Ok(WireMessage { version, seq, body })
}

/// Issues strictly increasing sequence numbers for one sender.
#[derive(Debug, Default, Clone)]
pub struct SeqCounter(u64);

impl SeqCounter {
    pub fn next(&mut self) -> u64 {
        self.0 += 1;
        self.0
    }
}

/// Enforces strictly increasing seq on the receiving side.
#[derive(Debug, Default, Clone)]
pub struct SeqGuard(Option<u64>);

impl SeqGuard {
    pub fn accept(&mut self, seq: u64) -> bool {
        if self.0.is_some_and(|last| seq <= last) {
            return false;
        }
        self.0 = Some(seq);
        true
    }
}
