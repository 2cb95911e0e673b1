//! The authoritative game: turns, movement, card selection, set resolution,
//! instructions and role-filtered observations.
//!
//! Command handlers ([`GameState::apply_action`], [`GameState::advance_turn`],
//! [`GameState::expire_turn`], [`GameState::abandon`]) validate first and
//! then emit events; state changes only inside [`GameState::apply_event`].
//! Time is always passed in as milliseconds on the game clock, which starts at
//! zero when the game is created.

use std::collections::{BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{canonical_hash, to_canonical_string};
use crate::cards::{is_valid_set, Card, CardColor, CardPattern, CardShape, SET_SIZE};
use crate::events::{Actor, EventKind, GameEvent, MoveKind, TurnEndReason};
use crate::hexgrid::{self, HexCoord, HexGrid, Heading, Pose, Turn};
use crate::map::{GameMap, Prop, Tile};
use crate::mapgen::validate_map;

pub const MAX_INSTRUCTION_LEN: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Leader,
    Follower,
}

impl Role {
    pub fn other(self) -> Role {
        match self {
            Role::Leader => Role::Follower,
            Role::Follower => Role::Leader,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    pub leader_steps_per_turn: u32,
    pub follower_steps_per_turn: u32,
    pub leader_turn_seconds: u32,
    pub follower_turn_seconds: u32,
    /// Individual turns at game start, leader first.
    pub initial_turns: u32,
    /// Turns granted for the n-th completed set; the last entry repeats.
    pub turn_bonus_schedule: Vec<u32>,
    pub card_count: u32,
    pub fog_range: u32,
    pub fov_degrees: f64,
    pub hide_card_patterns: bool,
    pub card_colors: Vec<CardColor>,
    pub card_shapes: Vec<CardShape>,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            leader_steps_per_turn: 5,
            follower_steps_per_turn: 10,
            leader_turn_seconds: 50,
            follower_turn_seconds: 15,
            initial_turns: 12,
            turn_bonus_schedule: vec![6, 6, 6, 5, 5, 5, 4, 4, 4, 3, 3, 3, 2, 2, 2, 1],
            card_count: 21,
            fog_range: 14,
            fov_degrees: 210.0,
            hide_card_patterns: false,
            card_colors: CardColor::ALL.to_vec(),
            card_shapes: CardShape::ALL.to_vec(),
        }
    }
}

impl GameConfig {
    pub fn steps_for(&self, role: Role) -> u32 {
        match role {
            Role::Leader => self.leader_steps_per_turn,
            Role::Follower => self.follower_steps_per_turn,
        }
    }

    pub fn turn_millis(&self, role: Role) -> u64 {
        let secs = match role {
            Role::Leader => self.leader_turn_seconds,
            Role::Follower => self.follower_turn_seconds,
        };
        secs as u64 * 1000
    }

    /// Bonus turns for completing set number `n` (1-based).
    pub fn bonus_for_set(&self, n: u32) -> u32 {
        let idx = (n.max(1) - 1) as usize;
        let sched = &self.turn_bonus_schedule;
        sched.get(idx).or(sched.last()).copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), SetupError> {
        let bad = |what: &str| Err(SetupError::Config(what.to_string()));
        if self.leader_steps_per_turn == 0 || self.follower_steps_per_turn == 0 {
            return bad("step budgets must be positive");
        }
        if self.leader_turn_seconds == 0 || self.follower_turn_seconds == 0 {
            return bad("turn time budgets must be positive");
        }
        if self.turn_bonus_schedule.is_empty() {
            return bad("turn_bonus_schedule must not be empty");
        }
        if self.turn_bonus_schedule.windows(2).any(|w| w[1] > w[0]) {
            return bad("turn_bonus_schedule must be non-increasing");
        }
        if !(self.fov_degrees > 0.0 && self.fov_degrees <= 360.0) {
            return bad("fov_degrees must be in (0, 360]");
        }
        let colors: BTreeSet<_> = self.card_colors.iter().collect();
        let shapes: BTreeSet<_> = self.card_shapes.iter().collect();
        if colors.len() != self.card_colors.len() || shapes.len() != self.card_shapes.len() {
            return bad("card palettes must not repeat entries");
        }
        if colors.len() < SET_SIZE || shapes.len() < SET_SIZE {
            return bad("at least three card colors and shapes are required");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnState {
    pub active_role: Role,
    pub turns_remaining: u32,
    pub steps_remaining: u32,
    /// Game-clock deadline of the current turn, in milliseconds. Runtime
    /// metadata: excluded from the state hash.
    pub turn_deadline: u64,
    pub score: u32,
    pub sets_collected: u32,
    /// Number of completed turns.
    pub turn_number: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InstructionStatus {
    Queued,
    Active,
    Done,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub id: u32,
    pub text: String,
    pub status: InstructionStatus,
    pub issued_turn: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionKind {
    Forward,
    Backward,
    TurnLeft,
    TurnRight,
    EndTurn,
    Noop,
    SendInstruction,
    MarkInstructionDone,
    CancelInstructions,
}

impl ActionKind {
    pub const ALL: [ActionKind; 9] = [
        ActionKind::Forward,
        ActionKind::Backward,
        ActionKind::TurnLeft,
        ActionKind::TurnRight,
        ActionKind::EndTurn,
        ActionKind::Noop,
        ActionKind::SendInstruction,
        ActionKind::MarkInstructionDone,
        ActionKind::CancelInstructions,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Forward,
    Backward,
    TurnLeft,
    TurnRight,
    EndTurn,
    Noop,
    SendInstruction { text: String },
    MarkInstructionDone,
    CancelInstructions,
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Forward => ActionKind::Forward,
            Action::Backward => ActionKind::Backward,
            Action::TurnLeft => ActionKind::TurnLeft,
            Action::TurnRight => ActionKind::TurnRight,
            Action::EndTurn => ActionKind::EndTurn,
            Action::Noop => ActionKind::Noop,
            Action::SendInstruction { .. } => ActionKind::SendInstruction,
            Action::MarkInstructionDone => ActionKind::MarkInstructionDone,
            Action::CancelInstructions => ActionKind::CancelInstructions,
        }
    }

    pub fn send(text: impl Into<String>) -> Self {
        Action::SendInstruction { text: text.into() }
    }

    fn movement(&self) -> Option<MoveKind> {
        match self {
            Action::Forward => Some(MoveKind::Forward),
            Action::Backward => Some(MoveKind::Backward),
            Action::TurnLeft => Some(MoveKind::TurnLeft),
            Action::TurnRight => Some(MoveKind::TurnRight),
            _ => None,
        }
    }
}

/// Why an action was refused. A refused action leaves the state untouched.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum Rejection {
    #[error("the game is over")]
    GameOver,
    #[error("it is the {active:?}'s turn")]
    WrongActor { active: Role },
    #[error("{role:?} may not {action:?}")]
    NotPermitted { role: Role, action: ActionKind },
    #[error("cannot move into {target}")]
    IllegalMove { target: HexCoord },
    #[error("no active instruction")]
    NoActiveInstruction,
    #[error("instruction text is empty")]
    EmptyInstructionText,
    #[error("instruction text is {len} characters, limit {MAX_INSTRUCTION_LEN}")]
    InstructionTooLong { len: usize },
    #[error("no instructions to cancel")]
    NothingToCancel,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum SetupError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid map: {0}")]
    Map(String),
    #[error("invalid state: {field}: {reason}")]
    State { field: String, reason: String },
}

/// Card spawns for the n-th set draw from ChaCha stream `n` of the game seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
}

impl RngState {
    fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionFlag {
    /// Nothing selected.
    Empty,
    /// The selected cards could still become a valid set.
    Consistent,
    /// The selection can never complete: repeated attribute or too many cards.
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewCone {
    pub fov_degrees: f64,
    pub range: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardView {
    pub id: u32,
    pub cell: HexCoord,
    pub selected: bool,
    /// Absent when the viewer may not see the card's face.
    pub pattern: Option<CardPattern>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellView {
    pub cell: HexCoord,
    pub tile: Tile,
}

/// What one role is allowed to know about the game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub role: Role,
    pub rows: u32,
    pub cols: u32,
    pub cells: Vec<CellView>,
    pub props: Vec<Prop>,
    pub cards: Vec<CardView>,
    pub own_pose: Pose,
    pub other_pose: Option<Pose>,
    pub turn: TurnState,
    pub instructions: Vec<Instruction>,
    pub selection: SelectionFlag,
    /// The follower's view limits. Public knowledge for both roles.
    pub view: ViewCone,
    pub over: bool,
}

impl Observation {
    pub fn active_instruction(&self) -> Option<&Instruction> {
        self.instructions
            .iter()
            .find(|i| i.status == InstructionStatus::Active)
    }

    pub fn is_my_turn(&self) -> bool {
        !self.over && self.turn.active_role == self.role
    }

    pub fn cell(&self, cell: HexCoord) -> Option<&CellView> {
        self.cells
            .binary_search_by(|c| c.cell.cmp(&cell))
            .ok()
            .map(|i| &self.cells[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub map: GameMap,
    pub leader: Pose,
    pub follower: Pose,
    pub cards: Vec<Card>,
    pub turn: TurnState,
    pub instructions: Vec<Instruction>,
    pub config: GameConfig,
    pub rng: RngState,
    pub next_card_id: u32,
    pub next_instruction_id: u32,
    pub over: bool,
}

/// Builds the initial state for `map` under `config`.
pub fn new_game(map: GameMap, config: GameConfig, seed: u64) -> Result<GameState, SetupError> {
    GameState::new(map, config, seed)
}

impl GameState {
    pub fn new(map: GameMap, config: GameConfig, seed: u64) -> Result<Self, SetupError> {
        config.validate()?;
        let report = validate_map(&map, Some(config.card_count as usize));
        if !report.ok {
            return Err(SetupError::Map(report.failures.join("; ")));
        }
        let mut rng = RngState { seed, stream: 0 }.generator();
        let leader = Pose::new(map.leader_spawn, Heading::ALL[rng.random_range(0..6)]);
        let follower = Pose::new(map.follower_spawn, Heading::ALL[rng.random_range(0..6)]);
        let cards = map.initial_cards.clone();
        let next_card_id = cards.iter().map(|c| c.id + 1).max().unwrap_or(0);
        let turn = TurnState {
            active_role: Role::Leader,
            turns_remaining: config.initial_turns,
            steps_remaining: config.leader_steps_per_turn,
            turn_deadline: config.turn_millis(Role::Leader),
            score: 0,
            sets_collected: 0,
            turn_number: 0,
        };
        let over = config.initial_turns == 0;
        Ok(Self {
            map,
            leader,
            follower,
            cards,
            turn,
            instructions: Vec::new(),
            config,
            rng: RngState { seed, stream: 1 },
            next_card_id,
            next_instruction_id: 0,
            over,
        })
    }

    /// Creates a game together with the events that open its log.
    pub fn start(
        map: GameMap,
        config: GameConfig,
        seed: u64,
    ) -> Result<(Self, Vec<GameEvent>), SetupError> {
        let state = Self::new(map.clone(), config.clone(), seed)?;
        let mut events = vec![GameEvent::new(
            Actor::Server,
            EventKind::GameStart {
                map: Box::new(map),
                config,
                seed,
                scenario: None,
            },
        )];
        if state.over {
            events.push(GameEvent::new(
                Actor::Server,
                EventKind::GameOver { score: 0 },
            ));
        }
        Ok((state, events))
    }

    /// Rebuilds the initial state described by a GameStart event.
    pub fn from_start_event(event: &GameEvent) -> Result<Self, SetupError> {
        match &event.kind {
            EventKind::GameStart {
                map,
                config,
                seed,
                scenario,
            } => match scenario {
                Some(s) => s.to_state(),
                None => Self::new((**map).clone(), config.clone(), *seed),
            },
            other => Err(SetupError::State {
                field: "event".into(),
                reason: format!("expected GameStart, got {}", other.name()),
            }),
        }
    }

    pub fn pose(&self, role: Role) -> Pose {
        match role {
            Role::Leader => self.leader,
            Role::Follower => self.follower,
        }
    }

    fn pose_mut(&mut self, role: Role) -> &mut Pose {
        match role {
            Role::Leader => &mut self.leader,
            Role::Follower => &mut self.follower,
        }
    }

    pub fn card_at(&self, cell: HexCoord) -> Option<&Card> {
        self.cards.iter().find(|c| c.cell == cell)
    }

    pub fn selected_cards(&self) -> Vec<&Card> {
        self.cards.iter().filter(|c| c.selected).collect()
    }

    pub fn active_instruction(&self) -> Option<&Instruction> {
        self.instructions
            .iter()
            .find(|i| i.status == InstructionStatus::Active)
    }

    fn pending_instruction_ids(&self) -> Vec<u32> {
        self.instructions
            .iter()
            .filter(|i| matches!(i.status, InstructionStatus::Active | InstructionStatus::Queued))
            .map(|i| i.id)
            .collect()
    }

    /// Canonical serialization with the runtime-only turn deadline zeroed.
    pub fn canonical_string(&self) -> String {
        to_canonical_string(&self.hashable())
    }

    pub fn state_hash(&self) -> String {
        canonical_hash(&self.hashable())
    }

    fn hashable(&self) -> GameState {
        let mut s = self.clone();
        s.turn.turn_deadline = 0;
        s
    }

    /// Whether `role` standing at `from` may move into `to`.
    fn can_enter(&self, role: Role, from: HexCoord, to: HexCoord) -> bool {
        self.map.can_step(from, to) && self.pose(role.other()).cell != to
    }

    fn movement_target(&self, role: Role, action: MoveKind) -> Option<HexCoord> {
        let pose = self.pose(role);
        match action {
            MoveKind::Forward => Some(hexgrid::neighbor(pose.cell, pose.heading)),
            MoveKind::Backward => Some(hexgrid::neighbor(pose.cell, pose.heading.opposite())),
            MoveKind::TurnLeft | MoveKind::TurnRight => None,
        }
    }

    /// Everything `apply_action` checks before mutating, minus the clock.
    fn check(&self, actor: Role, action: &Action) -> Result<(), Rejection> {
        if self.over {
            return Err(Rejection::GameOver);
        }
        let kind = action.kind();
        match action {
            Action::Noop => return Ok(()),
            Action::CancelInstructions => {
                if actor != Role::Leader {
                    return Err(Rejection::NotPermitted { role: actor, action: kind });
                }
                if self.pending_instruction_ids().is_empty() {
                    return Err(Rejection::NothingToCancel);
                }
                return Ok(());
            }
            _ => {}
        }
        if actor != self.turn.active_role {
            return Err(Rejection::WrongActor {
                active: self.turn.active_role,
            });
        }
        match action {
            Action::SendInstruction { text } => {
                if actor != Role::Leader {
                    return Err(Rejection::NotPermitted { role: actor, action: kind });
                }
                let len = text.chars().count();
                if text.trim().is_empty() {
                    return Err(Rejection::EmptyInstructionText);
                }
                if len > MAX_INSTRUCTION_LEN {
                    return Err(Rejection::InstructionTooLong { len });
                }
            }
            Action::MarkInstructionDone => {
                if actor != Role::Follower {
                    return Err(Rejection::NotPermitted { role: actor, action: kind });
                }
                if self.active_instruction().is_none() {
                    return Err(Rejection::NoActiveInstruction);
                }
            }
            Action::Forward | Action::Backward => {
                let mv = action.movement().expect("movement action");
                let target = self.movement_target(actor, mv).expect("translation");
                if !self.can_enter(actor, self.pose(actor).cell, target) {
                    return Err(Rejection::IllegalMove { target });
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Action kinds `role` could submit right now without rejection.
    pub fn legal_actions(&self, role: Role) -> BTreeSet<ActionKind> {
        ActionKind::ALL
            .into_iter()
            .filter(|&kind| {
                let probe = match kind {
                    ActionKind::Forward => Action::Forward,
                    ActionKind::Backward => Action::Backward,
                    ActionKind::TurnLeft => Action::TurnLeft,
                    ActionKind::TurnRight => Action::TurnRight,
                    ActionKind::EndTurn => Action::EndTurn,
                    ActionKind::Noop => Action::Noop,
                    ActionKind::SendInstruction => Action::send("."),
                    ActionKind::MarkInstructionDone => Action::MarkInstructionDone,
                    ActionKind::CancelInstructions => Action::CancelInstructions,
                };
                self.check(role, &probe).is_ok()
            })
            .collect()
    }

    /// Runs one action for `actor` at game-clock time `now`.
    ///
    /// An action arriving at or after the turn deadline is not applied: the
    /// turn times out instead and the timeout events are returned.
    pub fn apply_action(
        &mut self,
        actor: Role,
        action: &Action,
        now: u64,
    ) -> Result<Vec<GameEvent>, Rejection> {
        self.check(actor, action)?;
        if now >= self.turn.turn_deadline {
            return Ok(self.expire_turn(now));
        }
        let mut out = Vec::new();
        match action {
            Action::Noop => {}
            Action::EndTurn => self.transition(&mut out, Actor::from(actor), TurnEndReason::EndTurnAction, now),
            Action::SendInstruction { text } => {
                let id = self.next_instruction_id;
                self.emit(&mut out, actor.into(), EventKind::InstructionSent { id, text: text.clone() });
                if self.active_instruction().is_none() {
                    self.emit(&mut out, Actor::Server, EventKind::InstructionActivated { id });
                }
            }
            Action::MarkInstructionDone => {
                let id = self.active_instruction().expect("checked").id;
                self.emit(&mut out, actor.into(), EventKind::InstructionDone { id });
                if let Some(next) = self
                    .instructions
                    .iter()
                    .find(|i| i.status == InstructionStatus::Queued)
                {
                    let id = next.id;
                    self.emit(&mut out, Actor::Server, EventKind::InstructionActivated { id });
                }
            }
            Action::CancelInstructions => {
                let ids = self.pending_instruction_ids();
                self.emit(&mut out, actor.into(), EventKind::InstructionCancelled { ids });
            }
            Action::Forward | Action::Backward | Action::TurnLeft | Action::TurnRight => {
                let mv = action.movement().expect("movement action");
                let pose = self.pose(actor);
                let new_pose = match mv {
                    MoveKind::TurnLeft => Pose::new(pose.cell, hexgrid::rotate(pose.heading, Turn::Left)),
                    MoveKind::TurnRight => Pose::new(pose.cell, hexgrid::rotate(pose.heading, Turn::Right)),
                    _ => Pose::new(self.movement_target(actor, mv).expect("translation"), pose.heading),
                };
                self.emit(&mut out, actor.into(), EventKind::Move { action: mv, pose: new_pose });
                if new_pose.cell != pose.cell {
                    if let Some(card) = self.card_at(new_pose.cell) {
                        let (card_id, selected) = (card.id, !card.selected);
                        self.emit(&mut out, actor.into(), EventKind::CardToggle { card_id, selected });
                        self.resolve_sets(&mut out);
                    }
                }
                if self.turn.steps_remaining == 0 && !self.over {
                    self.transition(&mut out, Actor::Server, TurnEndReason::StepsExhausted, now);
                }
            }
        }
        Ok(out)
    }

    /// Ends the current turn for `reason`.
    pub fn advance_turn(&mut self, reason: TurnEndReason, now: u64) -> Vec<GameEvent> {
        let mut out = Vec::new();
        if !self.over {
            let actor = match reason {
                TurnEndReason::EndTurnAction => self.turn.active_role.into(),
                _ => Actor::Server,
            };
            self.transition(&mut out, actor, reason, now);
        }
        out
    }

    /// Times out the current turn if its deadline has passed.
    pub fn expire_turn(&mut self, now: u64) -> Vec<GameEvent> {
        let mut out = Vec::new();
        if !self.over && now >= self.turn.turn_deadline {
            self.emit(&mut out, Actor::Server, EventKind::TimerExpired);
            self.transition(&mut out, Actor::Server, TurnEndReason::TimerExpired, now);
        }
        out
    }

    /// Ends the game because `role` left.
    pub fn abandon(&mut self, role: Role) -> Vec<GameEvent> {
        let mut out = Vec::new();
        if !self.over {
            self.emit(&mut out, Actor::Server, EventKind::Abandoned { role });
        }
        out
    }

    fn transition(&mut self, out: &mut Vec<GameEvent>, actor: Actor, reason: TurnEndReason, now: u64) {
        let turns_remaining = self.turn.turns_remaining.saturating_sub(1);
        let next_role = self.turn.active_role.other();
        self.emit(
            out,
            actor,
            EventKind::TurnTransition {
                reason,
                next_role,
                turns_remaining,
            },
        );
        self.turn.turn_deadline = now + self.config.turn_millis(next_role);
        if turns_remaining == 0 {
            let score = self.turn.score;
            self.emit(out, Actor::Server, EventKind::GameOver { score });
        }
    }

    /// Clears a completed set and spawns its replacements.
    fn resolve_sets(&mut self, out: &mut Vec<GameEvent>) {
        let selected = self.selected_cards();
        if selected.len() != SET_SIZE || !is_valid_set(selected.iter().map(|c| &c.pattern)) {
            return;
        }
        let card_ids: Vec<u32> = selected.iter().map(|c| c.id).collect();
        let new_cards = self.draw_cards(&card_ids);
        let n = self.turn.sets_collected + 1;
        let bonus_turns = self.config.bonus_for_set(n);
        self.emit(
            out,
            Actor::Server,
            EventKind::SetCompleted {
                card_ids,
                new_cards,
                score: self.turn.score + 1,
                bonus_turns,
            },
        );
    }

    /// Cells a new card may appear on: traversable, reachable from both
    /// agents, free of cards and agents.
    pub fn spawn_candidates(&self, ignoring: &[u32]) -> Vec<HexCoord> {
        let from_leader = hexgrid::reachable(&self.map, self.leader.cell);
        let from_follower = hexgrid::reachable(&self.map, self.follower.cell);
        let occupied: HashSet<HexCoord> = self
            .cards
            .iter()
            .filter(|c| !ignoring.contains(&c.id))
            .map(|c| c.cell)
            .chain([self.leader.cell, self.follower.cell])
            .collect();
        from_leader
            .intersection(&from_follower)
            .filter(|c| !occupied.contains(c) && self.map.is_traversable(**c))
            .copied()
            .collect()
    }

    fn draw_cards(&self, removed: &[u32]) -> Vec<Card> {
        let mut rng = self.rng.generator();
        let candidates = self.spawn_candidates(removed);
        let mut chosen: Vec<HexCoord> = Vec::new();
        let want = SET_SIZE.min(candidates.len());
        while chosen.len() < want {
            let cell = candidates[rng.random_range(0..candidates.len())];
            if !chosen.contains(&cell) {
                chosen.push(cell);
            }
        }
        chosen
            .into_iter()
            .enumerate()
            .map(|(i, cell)| Card {
                id: self.next_card_id + i as u32,
                cell,
                pattern: random_pattern(&mut rng, &self.config),
                selected: false,
            })
            .collect()
    }

    fn emit(&mut self, out: &mut Vec<GameEvent>, actor: Actor, kind: EventKind) {
        let event = GameEvent::new(actor, kind);
        self.apply_event(&event)
            .expect("engine-generated events always apply");
        out.push(event);
    }

    /// Applies one event. The only place game state changes.
    pub fn apply_event(&mut self, event: &GameEvent) -> Result<(), String> {
        let role_of = |actor: Actor| match actor {
            Actor::Leader => Ok(Role::Leader),
            Actor::Follower => Ok(Role::Follower),
            Actor::Server => Err("server cannot move".to_string()),
        };
        match &event.kind {
            EventKind::GameStart { .. } => return Err("GameStart must be first".into()),
            EventKind::Move { action, pose } => {
                let role = role_of(event.actor)?;
                if self.turn.steps_remaining == 0 {
                    return Err("move with no steps remaining".into());
                }
                let cur = self.pose(role);
                let ok = match action {
                    MoveKind::TurnLeft => pose.cell == cur.cell && pose.heading == hexgrid::rotate(cur.heading, Turn::Left),
                    MoveKind::TurnRight => pose.cell == cur.cell && pose.heading == hexgrid::rotate(cur.heading, Turn::Right),
                    MoveKind::Forward | MoveKind::Backward => {
                        pose.heading == cur.heading
                            && Some(pose.cell) == self.movement_target(role, *action)
                    }
                };
                if !ok {
                    return Err(format!("{action:?} to {pose:?} inconsistent with {cur:?}"));
                }
                *self.pose_mut(role) = *pose;
                self.turn.steps_remaining -= 1;
            }
            EventKind::CardToggle { card_id, selected } => {
                let card = self
                    .cards
                    .iter_mut()
                    .find(|c| c.id == *card_id)
                    .ok_or_else(|| format!("unknown card {card_id}"))?;
                card.selected = *selected;
            }
            EventKind::SetCompleted {
                card_ids,
                new_cards,
                score,
                bonus_turns,
            } => {
                if card_ids.iter().any(|id| !self.cards.iter().any(|c| c.id == *id)) {
                    return Err(format!("set references missing cards {card_ids:?}"));
                }
                self.cards.retain(|c| !card_ids.contains(&c.id));
                self.cards.extend(new_cards.iter().copied());
                self.turn.score = *score;
                self.turn.sets_collected += 1;
                self.turn.turns_remaining += bonus_turns;
                self.rng.stream += 1;
                let top = new_cards.iter().map(|c| c.id + 1).max().unwrap_or(0);
                self.next_card_id = self.next_card_id.max(top);
            }
            EventKind::InstructionSent { id, text } => {
                self.instructions.push(Instruction {
                    id: *id,
                    text: text.clone(),
                    status: InstructionStatus::Queued,
                    issued_turn: self.turn.turn_number,
                });
                self.next_instruction_id = self.next_instruction_id.max(id + 1);
            }
            EventKind::InstructionActivated { id } => {
                self.set_instruction_status(*id, InstructionStatus::Queued, InstructionStatus::Active)?
            }
            EventKind::InstructionDone { id } => {
                self.set_instruction_status(*id, InstructionStatus::Active, InstructionStatus::Done)?
            }
            EventKind::InstructionCancelled { ids } => {
                for id in ids {
                    let ins = self
                        .instructions
                        .iter_mut()
                        .find(|i| i.id == *id)
                        .ok_or_else(|| format!("unknown instruction {id}"))?;
                    if !matches!(ins.status, InstructionStatus::Active | InstructionStatus::Queued) {
                        return Err(format!("instruction {id} is {:?}", ins.status));
                    }
                    ins.status = InstructionStatus::Cancelled;
                }
            }
            EventKind::TimerExpired => {}
            EventKind::TurnTransition {
                next_role,
                turns_remaining,
                ..
            } => {
                if *next_role == self.turn.active_role {
                    return Err("turn transition must switch roles".into());
                }
                self.turn.active_role = *next_role;
                self.turn.turns_remaining = *turns_remaining;
                self.turn.steps_remaining = self.config.steps_for(*next_role);
                self.turn.turn_number += 1;
            }
            EventKind::ScenarioEdit { edit } => {
                let next = edit.applied_to(self).map_err(|e| e.to_string())?;
                *self = next;
            }
            EventKind::Abandoned { .. } | EventKind::GameOver { .. } => self.over = true,
        }
        Ok(())
    }

    fn set_instruction_status(
        &mut self,
        id: u32,
        from: InstructionStatus,
        to: InstructionStatus,
    ) -> Result<(), String> {
        let ins = self
            .instructions
            .iter_mut()
            .find(|i| i.id == id)
            .ok_or_else(|| format!("unknown instruction {id}"))?;
        if ins.status != from {
            return Err(format!("instruction {id} is {:?}, expected {from:?}", ins.status));
        }
        ins.status = to;
        Ok(())
    }

    pub fn selection_flag(&self) -> SelectionFlag {
        let sel = self.selected_cards();
        if sel.is_empty() {
            return SelectionFlag::Empty;
        }
        if sel.len() > SET_SIZE {
            return SelectionFlag::Invalid;
        }
        let distinct = |f: &dyn Fn(&Card) -> u32| {
            let vals: BTreeSet<u32> = sel.iter().map(|c| f(c)).collect();
            vals.len() == sel.len()
        };
        let ok = distinct(&|c| c.pattern.color as u32)
            && distinct(&|c| c.pattern.shape as u32)
            && distinct(&|c| c.pattern.count as u32);
        if ok {
            SelectionFlag::Consistent
        } else {
            SelectionFlag::Invalid
        }
    }

    /// Cells the follower currently sees.
    pub fn follower_view(&self) -> BTreeSet<HexCoord> {
        hexgrid::visible_set(
            &self.map,
            self.follower,
            self.config.fov_degrees,
            self.config.fog_range,
        )
    }

    pub fn observe(&self, role: Role) -> Observation {
        let visible: Option<BTreeSet<HexCoord>> = match role {
            Role::Leader => None,
            Role::Follower => Some(self.follower_view()),
        };
        let sees = |c: HexCoord| visible.as_ref().is_none_or(|v| v.contains(&c));
        let mut cells: Vec<CellView> = self
            .map
            .cells()
            .into_iter()
            .filter(|c| sees(*c))
            .map(|cell| CellView {
                cell,
                tile: self.map.tile(cell).expect("in bounds"),
            })
            .collect();
        cells.sort_by_key(|c| c.cell);
        let props = self.map.props.iter().filter(|p| sees(p.cell)).copied().collect();
        let mask = role == Role::Follower && self.config.hide_card_patterns;
        let mut cards: Vec<CardView> = self
            .cards
            .iter()
            .filter(|c| sees(c.cell))
            .map(|c| CardView {
                id: c.id,
                cell: c.cell,
                selected: c.selected,
                pattern: (!mask || c.selected).then_some(c.pattern),
            })
            .collect();
        cards.sort_by_key(|c| c.id);
        let other = self.pose(role.other());
        let instructions = self
            .instructions
            .iter()
            .filter(|i| role == Role::Leader || i.status != InstructionStatus::Queued)
            .cloned()
            .collect();
        Observation {
            role,
            rows: self.map.rows,
            cols: self.map.cols,
            cells,
            props,
            cards,
            own_pose: self.pose(role),
            other_pose: sees(other.cell).then_some(other),
            turn: self.turn,
            instructions,
            selection: self.selection_flag(),
            view: ViewCone {
                fov_degrees: self.config.fov_degrees,
                range: self.config.fog_range,
            },
            over: self.over,
        }
    }

    /// Structural invariants of a live state; names the offending field.
    pub fn check_invariants(&self) -> Result<(), SetupError> {
        let fail = |field: &str, reason: String| {
            Err(SetupError::State {
                field: field.to_string(),
                reason,
            })
        };
        for (field, pose) in [("leader", self.leader), ("follower", self.follower)] {
            if !self.map.is_traversable(pose.cell) {
                return fail(field, format!("{} is not traversable", pose.cell));
            }
        }
        if self.leader.cell == self.follower.cell {
            return fail("follower", "agents share a cell".into());
        }
        let mut cells = HashSet::new();
        let mut ids = HashSet::new();
        for c in &self.cards {
            if !(1..=3).contains(&c.pattern.count) {
                return fail("cards", format!("card {} has count {}", c.id, c.pattern.count));
            }
            if !self.map.is_traversable(c.cell) {
                return fail("cards", format!("card {} on blocked cell {}", c.id, c.cell));
            }
            if !cells.insert(c.cell) {
                return fail("cards", format!("two cards on {}", c.cell));
            }
            if !ids.insert(c.id) {
                return fail("cards", format!("duplicate card id {}", c.id));
            }
        }
        let active = self
            .instructions
            .iter()
            .filter(|i| i.status == InstructionStatus::Active)
            .count();
        let queued = self
            .instructions
            .iter()
            .filter(|i| i.status == InstructionStatus::Queued)
            .count();
        if active > 1 {
            return fail("instructions", "more than one active instruction".into());
        }
        if queued > 0 && active == 0 {
            return fail("instructions", "queued instructions without an active one".into());
        }
        if self.turn.steps_remaining > self.config.steps_for(self.turn.active_role) {
            return fail("turn", "steps_remaining exceeds the role budget".into());
        }
        if self.turn.score != self.turn.sets_collected {
            return fail("turn", "score differs from sets_collected".into());
        }
        Ok(())
    }
}

pub fn random_pattern<R: Rng + ?Sized>(rng: &mut R, config: &GameConfig) -> CardPattern {
    CardPattern {
        color: config.card_colors[rng.random_range(0..config.card_colors.len())],
        shape: config.card_shapes[rng.random_range(0..config.card_shapes.len())],
        count: rng.random_range(1..=3),
    }
}
