//! Controlled experimental states: scenario files and live edits.
//!
//! A scenario file is the canonical text of [`Scenario`]; the embedded
//! `config` accepts partial objects, with unspecified fields at defaults.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::to_canonical_string;
use crate::events::{Actor, EventKind, GameEvent};
use crate::cards::Card;
use crate::game::{
    CellView, GameConfig, GameState, Instruction, RngState, Role, SetupError, TurnState,
};
use crate::hexgrid::{self, Pose};
use crate::map::{GameMap, Prop};
use crate::mapgen::terrain_failures;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invariant violated in `{field}`: {reason}")]
    Invariant { field: String, reason: String },
}

impl From<SetupError> for ScenarioError {
    fn from(e: SetupError) -> Self {
        match e {
            SetupError::Config(reason) => ScenarioError::Invariant {
                field: "config".into(),
                reason,
            },
            SetupError::Map(reason) => ScenarioError::Invariant {
                field: "map".into(),
                reason,
            },
            SetupError::State { field, reason } => ScenarioError::Invariant { field, reason },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub map: GameMap,
    pub leader: Pose,
    pub follower: Pose,
    pub cards: Vec<Card>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn: Option<TurnState>,
    #[serde(default)]
    pub instructions: Vec<Instruction>,
    #[serde(default)]
    pub config: GameConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<RngState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_card_id: Option<u32>,
}

impl Scenario {
    /// Captures a live state so that loading it reproduces the state exactly.
    pub fn from_state(state: &GameState) -> Self {
        Self {
            map: state.map.clone(),
            leader: state.leader,
            follower: state.follower,
            cards: state.cards.clone(),
            turn: Some(state.turn),
            instructions: state.instructions.clone(),
            config: state.config.clone(),
            seed: state.rng.seed,
            rng: Some(state.rng),
            next_card_id: Some(state.next_card_id),
        }
    }

    pub fn to_state(&self) -> Result<GameState, SetupError> {
        self.config.validate()?;
        let terrain = terrain_failures(&self.map);
        if !terrain.is_empty() {
            return Err(SetupError::Map(terrain.join("; ")));
        }
        let turn = match self.turn {
            Some(mut t) => {
                t.turn_deadline = self.config.turn_millis(t.active_role);
                t
            }
            None => TurnState {
                active_role: Role::Leader,
                turns_remaining: self.config.initial_turns,
                steps_remaining: self.config.leader_steps_per_turn,
                turn_deadline: self.config.turn_millis(Role::Leader),
                score: 0,
                sets_collected: 0,
                turn_number: 0,
            },
        };
        let next_card_id = self
            .next_card_id
            .unwrap_or_else(|| self.cards.iter().map(|c| c.id + 1).max().unwrap_or(0));
        let next_instruction_id = self.instructions.iter().map(|i| i.id + 1).max().unwrap_or(0);
        let state = GameState {
            map: self.map.clone(),
            leader: self.leader,
            follower: self.follower,
            cards: self.cards.clone(),
            turn,
            instructions: self.instructions.clone(),
            config: self.config.clone(),
            rng: self.rng.unwrap_or(RngState {
                seed: self.seed,
                stream: 1,
            }),
            next_card_id,
            next_instruction_id,
            over: turn.turns_remaining == 0,
        };
        check_scenario_state(&state)?;
        Ok(state)
    }

    pub fn to_canonical(&self) -> String {
        to_canonical_string(self)
    }
}

fn check_scenario_state(state: &GameState) -> Result<(), SetupError> {
    state.check_invariants()?;
    let fail = |field: &str, reason: String| SetupError::State {
        field: field.into(),
        reason,
    };
    if state.cards.iter().any(|c| c.id >= state.next_card_id) {
        return Err(fail("next_card_id", "must exceed every card id".into()));
    }
    let mut seen = BTreeSet::new();
    for ins in &state.instructions {
        if !seen.insert(ins.id) {
            return Err(fail("instructions", format!("duplicate id {}", ins.id)));
        }
        if ins.text.trim().is_empty() {
            return Err(fail("instructions", format!("instruction {} is empty", ins.id)));
        }
    }
    let component = hexgrid::reachable(&state.map, state.leader.cell);
    if !component.contains(&state.follower.cell) {
        return Err(fail("follower", "not reachable from the leader".into()));
    }
    if let Some(c) = state.cards.iter().find(|c| !component.contains(&c.cell)) {
        return Err(fail("cards", format!("card {} at {} is unreachable", c.id, c.cell)));
    }
    Ok(())
}

/// Parses and fully validates a scenario file.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario =
        serde_json::from_str(text).map_err(|e| ScenarioError::Schema(e.to_string()))?;
    scenario.to_state()?;
    Ok(scenario)
}

/// A partial replacement of the live state. Fields left out are untouched.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScenarioEdit {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tiles: Vec<CellView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub props: Option<Vec<Prop>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cards: Option<Vec<Card>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leader: Option<Pose>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub follower: Option<Pose>,
}

impl ScenarioEdit {
    /// The state after this edit, or why the edit is refused.
    pub fn applied_to(&self, state: &GameState) -> Result<GameState, ScenarioError> {
        let mut next = state.clone();
        for cv in &self.tiles {
            if next.map.tile(cv.cell).is_none() {
                return Err(ScenarioError::Invariant {
                    field: "tiles".into(),
                    reason: format!("{} is outside the map", cv.cell),
                });
            }
            next.map.set_tile(cv.cell, cv.tile);
        }
        if let Some(props) = &self.props {
            next.map.props = props.clone();
        }
        if let Some(cards) = &self.cards {
            next.cards = cards.clone();
            let top = cards.iter().map(|c| c.id + 1).max().unwrap_or(0);
            next.next_card_id = next.next_card_id.max(top);
        }
        if let Some(p) = self.leader {
            next.leader = p;
        }
        if let Some(p) = self.follower {
            next.follower = p;
        }
        let terrain = terrain_failures(&next.map);
        if let Some(first) = terrain.first() {
            return Err(ScenarioError::Invariant {
                field: "tiles".into(),
                reason: first.clone(),
            });
        }
        check_scenario_state(&next)?;
        Ok(next)
    }

    pub fn is_empty(&self) -> bool {
        *self == ScenarioEdit::default()
    }
}

/// Opens a game from a scenario, returning the state and its GameStart event.
pub fn start_scenario(scenario: &Scenario) -> Result<(GameState, Vec<GameEvent>), ScenarioError> {
    let state = scenario.to_state()?;
    let event = GameEvent::new(
        Actor::Server,
        EventKind::GameStart {
            map: Box::new(scenario.map.clone()),
            config: scenario.config.clone(),
            seed: scenario.seed,
            scenario: Some(Box::new(scenario.clone())),
        },
    );
    Ok((state, vec![event]))
}

/// Validates `edit` against the live state and applies it as one event.
/// On refusal the state is left untouched.
pub fn push_edit(state: &mut GameState, edit: &ScenarioEdit) -> Result<Vec<GameEvent>, ScenarioError> {
    if state.over {
        return Err(ScenarioError::Invariant {
            field: "state".into(),
            reason: "the game is over".into(),
        });
    }
    let next = edit.applied_to(state)?;
    *state = next;
    Ok(vec![GameEvent::new(
        Actor::Server,
        EventKind::ScenarioEdit {
            edit: Box::new(edit.clone()),
        },
    )])
}
