//! Headless client. [`Session`] plays against a server over websockets;
//! [`local_game`] runs the same step loop in-process without networking;
//! [`LocalEnv`] wraps one role as a reset/step environment.

pub mod bots;
pub mod env;
pub mod local;
pub mod session;

use hexcollab_core::{Observation, TurnState};
use thiserror::Error;

pub use env::{LocalEnv, Partner, Transition};
pub use local::{local_game, LocalGame, LocalSession};
pub use session::{ConnectOptions, Session};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("timed out waiting for the server")]
    Timeout,
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("join rejected: {0}")]
    Rejected(String),
    #[error("server error {code}: {message}")]
    Server { code: u16, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("connection closed before pairing")]
    Closed,
    #[error("the game is over")]
    GameOver,
    #[error("invalid game setup: {0}")]
    Setup(#[from] hexcollab_core::game::SetupError),
}

/// What a step returns: the role's view at its next decision point.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub turn: TurnState,
    pub game_over: bool,
    /// The game ended because a player left.
    pub abandoned: bool,
    pub score: u32,
    /// Set when the action was refused; nothing changed.
    pub rejected: Option<String>,
}
