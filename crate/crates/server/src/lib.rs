//! Game server: lobbies pair players into rooms, each room is the single
//! writer of one game, and every event is stored before it is announced.

pub mod app;
pub mod config;
pub mod lobby;
pub mod room;
pub mod store;

pub use app::{start, Server, Shared};
pub use config::{LobbyConfig, PairingPolicy, RoomKind, ServerConfig};
pub use store::FileStore;
