//! A whole game between the two scripted agents, one action at a time.

use super::{OracleFollower, ScriptedLeader};
use crate::events::{EventRecorder, GameEvent, RecordedEvent};
use crate::game::{Action, GameConfig, GameState, Rejection, Role, SetupError};
use crate::map::GameMap;

/// Upper bound on actions per game; a scripted game needs far fewer.
pub const ACTION_LIMIT: usize = 100_000;

pub struct SelfPlay {
    pub state: GameState,
    leader: ScriptedLeader,
    follower: OracleFollower,
    recorder: EventRecorder,
    actions: usize,
}

/// One submitted action and what it produced.
#[derive(Debug, Clone)]
pub struct Played {
    pub role: Role,
    pub action: Action,
    pub events: Vec<GameEvent>,
}

impl SelfPlay {
    pub fn new(game_id: &str, map: GameMap, config: GameConfig) -> Result<Self, SetupError> {
        let seed = map.seed;
        let (state, events) = GameState::start(map, config, seed)?;
        let mut recorder = EventRecorder::new(game_id);
        recorder.record(events, 0);
        Ok(Self {
            state,
            leader: ScriptedLeader::new(),
            follower: OracleFollower::new(),
            recorder,
            actions: 0,
        })
    }

    pub fn is_over(&self) -> bool {
        self.state.over || self.actions >= ACTION_LIMIT
    }

    /// Lets the active agent act once. Returns `None` once the game is over.
    pub fn step(&mut self) -> Option<Result<Played, Rejection>> {
        if self.is_over() {
            return None;
        }
        let role = self.state.turn.active_role;
        let obs = self.state.observe(role);
        let action = match role {
            Role::Leader => self.leader.act(&obs),
            Role::Follower => self.follower.act(&obs),
        };
        self.actions += 1;
        Some(self.state.apply_action(role, &action, 0).map(|events| {
            self.recorder.record(events.clone(), 0);
            Played {
                role,
                action,
                events,
            }
        }))
    }

    /// Plays to the end, stopping at the first rejected action.
    pub fn run(&mut self) -> Result<u32, Rejection> {
        while let Some(r) = self.step() {
            r?;
        }
        Ok(self.state.turn.score)
    }

    pub fn events(&self) -> &[RecordedEvent] {
        self.recorder.events()
    }

    pub fn leader(&self) -> &ScriptedLeader {
        &self.leader
    }
}
