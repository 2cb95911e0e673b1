//! Server configuration, loaded from a TOML file.
//!
//! ```toml
//! port = 8080
//! data_dir = "data"
//! pool_size = 8
//! map_seed = 0
//!
//! [game]              # GameConfig overrides
//! fog_range = 14
//!
//! [mapgen]            # GenConfig overrides
//! rows = 25
//!
//! [[lobbies]]
//! id = "open"
//! policy = "human_human"
//!
//! [[lobbies]]
//! id = "bots"
//! policy = "bot_bot"
//!
//! [[lobbies]]
//! id = "practice"
//! policy = "human_bot"
//! builtin_bot = true
//!
//! [[lobbies]]
//! id = "lab"
//! policy = "human_bot"
//! room = "scenario"
//! scenario = "scenarios/lab.json"
//!
//! [tutorial]
//! prompts = ["Use the arrow keys to move.", "Walk onto a card to select it."]
//! ```

use std::path::{Path, PathBuf};

use hexcollab_core::{GameConfig, GenConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingPolicy {
    HumanHuman,
    HumanBot,
    BotBot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoomKind {
    #[default]
    Game,
    Tutorial,
    Replay,
    Scenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LobbyConfig {
    pub id: String,
    pub policy: PairingPolicy,
    /// Room type created for pairs from this lobby.
    #[serde(default)]
    pub room: RoomKind,
    /// Pair a waiting human at once with an in-process follower bot.
    #[serde(default)]
    pub builtin_bot: bool,
    /// Scenario file for `room = "scenario"`, relative to the config file.
    #[serde(default)]
    pub scenario: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TutorialConfig {
    #[serde(default)]
    pub prompts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub host: String,
    pub port: u16,
    pub data_dir: PathBuf,
    /// Directory served under `/play`; the built-in page is used if unset.
    pub static_dir: Option<PathBuf>,
    pub pool_size: usize,
    /// Seed of the first pooled map; later maps use the following seeds.
    pub map_seed: u64,
    pub game: GameConfig,
    pub mapgen: GenConfig,
    pub lobbies: Vec<LobbyConfig>,
    pub tutorial: TutorialConfig,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            data_dir: PathBuf::from("data"),
            static_dir: None,
            pool_size: 4,
            map_seed: 0,
            game: GameConfig::default(),
            mapgen: GenConfig::default(),
            lobbies: vec![
                LobbyConfig {
                    id: "open".into(),
                    policy: PairingPolicy::HumanHuman,
                    room: RoomKind::Game,
                    builtin_bot: false,
                    scenario: None,
                },
                LobbyConfig {
                    id: "practice".into(),
                    policy: PairingPolicy::HumanBot,
                    room: RoomKind::Game,
                    builtin_bot: true,
                    scenario: None,
                },
                LobbyConfig {
                    id: "bots".into(),
                    policy: PairingPolicy::BotBot,
                    room: RoomKind::Game,
                    builtin_bot: false,
                    scenario: None,
                },
                LobbyConfig {
                    id: "tutorial".into(),
                    policy: PairingPolicy::HumanBot,
                    room: RoomKind::Tutorial,
                    builtin_bot: true,
                    scenario: None,
                },
            ],
            tutorial: TutorialConfig {
                prompts: vec![
                    "You are the leader. Arrow keys move you; each move costs a step.".into(),
                    "Type an instruction and press Enter to send it to your follower.".into(),
                    "Walk onto cards to select them. Three cards with all-different colors, shapes and counts form a set.".into(),
                    "Press E to end your turn early.".into(),
                ],
            },
        }
    }
}

impl ServerConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::parse(&text)?;
        // Scenario paths are relative to the config file.
        if let Some(base) = path.parent() {
            for lobby in &mut config.lobbies {
                if let Some(s) = &lobby.scenario {
                    if s.is_relative() {
                        lobby.scenario = Some(base.join(s));
                    }
                }
            }
        }
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.game
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.mapgen
            .check_feasible()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.game.card_count != self.mapgen.card_count {
            return Err(ConfigError::Invalid(format!(
                "game.card_count {} differs from mapgen.card_count {}",
                self.game.card_count, self.mapgen.card_count
            )));
        }
        let mut ids = std::collections::HashSet::new();
        for l in &self.lobbies {
            if !ids.insert(l.id.as_str()) {
                return Err(ConfigError::Invalid(format!("duplicate lobby {:?}", l.id)));
            }
            if l.room == RoomKind::Scenario && l.scenario.is_none() {
                return Err(ConfigError::Invalid(format!("lobby {:?} needs a scenario file", l.id)));
            }
            if l.room == RoomKind::Replay {
                return Err(ConfigError::Invalid(format!(
                    "lobby {:?}: replay rooms are opened with ?replay_game=<id>",
                    l.id
                )));
            }
            if l.builtin_bot && l.policy != PairingPolicy::HumanBot {
                return Err(ConfigError::Invalid(format!(
                    "lobby {:?}: builtin_bot needs the human_bot policy",
                    l.id
                )));
            }
        }
        Ok(())
    }

    pub fn lobby(&self, id: &str) -> Option<&LobbyConfig> {
        self.lobbies.iter().find(|l| l.id == id)
    }
}
