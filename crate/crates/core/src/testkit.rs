//! Random generators shared by the test suites: wire messages covering every
//! kind, built from real game states so nested payloads are realistic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::events::{EventRecorder, RecordedEvent};
use crate::game::{Action, GameConfig, GameState, Role};
use crate::hexgrid::Pose;
use crate::mapgen::{generate_map, GenConfig};
use crate::protocol::{JoinRequest, Payload, WireMessage, KINDS};
use crate::scenario::ScenarioEdit;

pub struct MessageGen {
    rng: ChaCha8Rng,
    states: Vec<GameState>,
    events: Vec<RecordedEvent>,
}

const TRICKY: [&str; 8] = [
    "",
    " ",
    "\"quoted\" \\ back",
    "line\nbreak\ttab",
    "\u{0}nul",
    "naïve café",
    "🃏🂡 cards",
    "card 3 -4; forward 2",
];

impl MessageGen {
    /// Plays a couple of short random games to collect states and events.
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gen = GenConfig {
            rows: 14,
            cols: 14,
            town_count: 1,
            lake_count: 1,
            mountain_count: 1,
            card_count: 12,
            ..GenConfig::default()
        };
        let mut states = Vec::new();
        let mut events = Vec::new();
        for g in 0..2 {
            let map = generate_map(&gen.clone().with_seed(seed.wrapping_add(g))).expect("small map");
            let config = GameConfig {
                card_count: 12,
                hide_card_patterns: g == 1,
                ..GameConfig::default()
            };
            let (mut state, start) = GameState::start(map, config, seed).expect("valid map");
            let mut rec = EventRecorder::new(format!("game-{g}"));
            rec.record(start, 0);
            for i in 0..300u64 {
                if state.over {
                    break;
                }
                let role = state.turn.active_role;
                let action = random_action(&mut rng);
                if let Ok(evs) = state.apply_action(role, &action, 0) {
                    rec.record(evs, i * 37);
                }
                if i % 10 == 0 {
                    states.push(state.clone());
                }
            }
            events.extend(rec.into_events());
        }
        Self { rng, states, events }
    }

    pub fn message(&mut self, kind: &str) -> WireMessage {
        let seq = self.big();
        WireMessage::new(seq, self.payload(kind))
    }

    /// A message of a kind chosen uniformly.
    pub fn any_message(&mut self) -> WireMessage {
        let kind = KINDS[self.rng.random_range(0..KINDS.len())];
        self.message(kind)
    }

    fn payload(&mut self, kind: &str) -> Payload {
        match kind {
            "JoinLobby" => Payload::JoinLobby(JoinRequest {
                lobby_id: self.text(),
                display_name: self.text(),
                leader_qualified: self.rng.random(),
                is_bot: self.rng.random(),
                record: self.rng.random(),
            }),
            "PlayerAction" => Payload::PlayerAction {
                action: self.action(),
            },
            "LeaveGame" => Payload::LeaveGame,
            "Pong" => Payload::Pong { nonce: self.big() },
            "ScenarioAttach" => Payload::ScenarioAttach { room_id: self.text() },
            "ScenarioPush" => Payload::ScenarioPush { edit: self.edit() },
            "ReplaySeek" => Payload::ReplaySeek { index: self.big() },
            "Joined" => Payload::Joined {
                position: self.rng.random(),
            },
            "Paired" => Payload::Paired {
                game_id: self.text(),
                role: self.role(),
            },
            "StateSync" => Payload::StateSync {
                observation: Box::new(self.observation()),
            },
            "TurnUpdate" => Payload::TurnUpdate {
                turn: self.state().turn,
            },
            "InstructionUpdate" => Payload::InstructionUpdate {
                instructions: self.state().instructions.clone(),
            },
            "ActionAck" => Payload::ActionAck {
                in_reply_to: self.big(),
            },
            "GameOver" => Payload::GameOver {
                score: self.rng.random(),
                abandoned: self.rng.random(),
            },
            "Rejected" => Payload::Rejected {
                reason: self.text(),
                in_reply_to: self.rng.random_bool(0.5).then(|| self.big()),
            },
            "Ping" => Payload::Ping { nonce: self.big() },
            "Error" => Payload::Error {
                code: self.rng.random(),
                message: self.text(),
            },
            "ScenarioEventFeed" => {
                let i = self.rng.random_range(0..self.events.len());
                Payload::ScenarioEventFeed {
                    event: Box::new(self.events[i].clone()),
                }
            }
            "ScenarioAck" => Payload::ScenarioAck {
                accepted: self.rng.random(),
                reason: self.rng.random_bool(0.5).then(|| self.text()),
            },
            "TutorialPrompt" => Payload::TutorialPrompt {
                step: self.rng.random(),
                text: self.text(),
            },
            "ReplayFrame" => Payload::ReplayFrame {
                index: self.big(),
                total: self.big(),
                observation: Box::new(self.observation()),
            },
            other => panic!("no generator for kind {other}"),
        }
    }

    /// Integers biased toward the boundaries.
    fn big(&mut self) -> u64 {
        match self.rng.random_range(0..4) {
            0 => 0,
            1 => u64::MAX,
            _ => self.rng.random(),
        }
    }

    fn text(&mut self) -> String {
        if self.rng.random_bool(0.4) {
            return TRICKY[self.rng.random_range(0..TRICKY.len())].to_string();
        }
        let len = self.rng.random_range(0..40);
        (0..len).map(|_| self.rng.random::<char>()).collect()
    }

    fn role(&mut self) -> Role {
        if self.rng.random() {
            Role::Leader
        } else {
            Role::Follower
        }
    }

    fn state(&mut self) -> &GameState {
        let i = self.rng.random_range(0..self.states.len());
        &self.states[i]
    }

    fn observation(&mut self) -> crate::game::Observation {
        let role = self.role();
        self.state().observe(role)
    }

    fn action(&mut self) -> Action {
        match random_action(&mut self.rng) {
            Action::SendInstruction { .. } => Action::send(self.text()),
            a => a,
        }
    }

    fn edit(&mut self) -> ScenarioEdit {
        let state = self.state().clone();
        let mut edit = ScenarioEdit::default();
        if self.rng.random() {
            let n = self.rng.random_range(0..4);
            edit.tiles = state.observe(Role::Follower).cells.into_iter().take(n).collect();
        }
        if self.rng.random() {
            edit.cards = Some(state.cards.clone());
        }
        if self.rng.random() {
            edit.props = Some(state.map.props.clone());
        }
        if self.rng.random() {
            edit.leader = Some(Pose::new(state.leader.cell, state.follower.heading));
        }
        if self.rng.random() {
            edit.follower = Some(state.follower);
        }
        edit
    }
}

/// Any action, with instruction text drawn from the scripted grammar.
pub fn random_action<R: Rng + ?Sized>(rng: &mut R) -> Action {
    match rng.random_range(0..10) {
        0 | 1 => Action::Forward,
        2 => Action::Backward,
        3 => Action::TurnLeft,
        4 => Action::TurnRight,
        5 => Action::EndTurn,
        6 => Action::Noop,
        7 => Action::send(format!("forward {}", rng.random_range(1..4))),
        8 => Action::MarkInstructionDone,
        _ => Action::CancelInstructions,
    }
}
