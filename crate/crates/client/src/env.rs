//! A reset/step environment around one role, with a scripted partner
//! playing the other. Reward is the score gained by the step.

use hexcollab_core::agents::{OracleFollower, ScriptedLeader};
use hexcollab_core::{generate_map, Action, GameConfig, GenConfig, Observation, Role};

use crate::{ClientError, LocalGame};

pub enum Partner {
    Leader(Box<ScriptedLeader>),
    Follower(Box<OracleFollower>),
}

impl Partner {
    /// A scripted partner for an agent playing `role`.
    pub fn for_role(role: Role) -> Self {
        match role {
            Role::Leader => Partner::Follower(Box::new(OracleFollower::new())),
            Role::Follower => Partner::Leader(Box::new(ScriptedLeader::new())),
        }
    }

    fn act(&mut self, obs: &Observation) -> Action {
        match self {
            Partner::Leader(l) => l.act(obs),
            Partner::Follower(f) => f.act(obs),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Transition {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub rejected: Option<String>,
}

pub struct LocalEnv {
    pub role: Role,
    gen: GenConfig,
    config: GameConfig,
    game: Option<LocalGame>,
    partner: Partner,
}

/// Partner actions allowed per agent step before the partner is cut off.
const PARTNER_LIMIT: usize = 10_000;

impl LocalEnv {
    pub fn new(role: Role, gen: GenConfig, config: GameConfig) -> Self {
        Self {
            role,
            gen,
            config,
            game: None,
            partner: Partner::for_role(role),
        }
    }

    /// Starts a fresh game on the map for `seed` and returns the first
    /// observation at which the agent must act.
    pub fn reset(&mut self, seed: u64) -> Result<Observation, ClientError> {
        let map = generate_map(&self.gen.clone().with_seed(seed)).map_err(|e| ClientError::Protocol(e.to_string()))?;
        self.game = Some(LocalGame::new("env", map, self.config.clone(), seed, false)?);
        self.partner = Partner::for_role(self.role);
        self.run_partner();
        Ok(self.game().observe(self.role))
    }

    fn game(&self) -> &LocalGame {
        self.game.as_ref().expect("reset before step")
    }

    fn run_partner(&mut self) {
        let other = self.role.other();
        let game = self.game.as_mut().expect("reset before step");
        for _ in 0..PARTNER_LIMIT {
            if game.state().over || game.state().turn.active_role != other {
                return;
            }
            let action = self.partner.act(&game.observe(other));
            if game.act(other, &action).is_err() || matches!(action, Action::Noop) {
                let _ = game.act(other, &Action::EndTurn);
            }
        }
    }

    pub fn step(&mut self, action: Action) -> Result<Transition, ClientError> {
        let game = self.game.as_mut().ok_or(ClientError::GameOver)?;
        if game.state().over {
            return Err(ClientError::GameOver);
        }
        let before = game.state().turn.score;
        let rejected = game.act(self.role, &action).err().map(|r| r.to_string());
        self.run_partner();
        let game = self.game();
        Ok(Transition {
            observation: game.observe(self.role),
            reward: (game.state().turn.score - before) as f64,
            done: game.state().over,
            rejected,
        })
    }
}
