//! Core engine for a two-player collaborative card-collection game on a hex
//! world: one leader with a full overhead view directs one follower with a
//! fogged view through text instructions.
//!
//! Everything here is deterministic and free of I/O, so the same code runs in
//! the server, the headless client and the browser demo.

pub mod agents;
pub mod canonical;
pub mod cards;
pub mod events;
pub mod game;
pub mod hexgrid;
pub mod map;
pub mod mapgen;
pub mod protocol;
pub mod scenario;
pub mod stats;
pub mod testkit;

pub use cards::{is_valid_set, Card, CardColor, CardPattern, CardShape};
pub use events::{replay, Actor, EventKind, GameEvent, RecordedEvent};
pub use game::{
    new_game, Action, ActionKind, GameConfig, GameState, Observation, Rejection, Role, TurnState,
};
pub use hexgrid::{HexCoord, Heading, Pose};
pub use map::GameMap;
pub use mapgen::{generate_map, validate_map, GenConfig, MapPool};
