//! Deterministic scripted agents used for self-play and bot lobbies.

pub mod follower;
pub mod grammar;
pub mod leader;
pub mod nav;

pub use follower::{oracle_follower, OracleFollower, Pending};
pub use grammar::{parse_instruction, render, Command, ParseError};
pub use leader::{scripted_leader, ScriptedLeader, TurnPlan};
pub mod selfplay;

pub use selfplay::SelfPlay;
