//! Scripted agents playing over a networked session.

use hexcollab_core::agents::{OracleFollower, ScriptedLeader};
use hexcollab_core::Role;

use crate::{ClientError, ConnectOptions, Session, StepResult};

/// Finished networked game as seen by one player.
#[derive(Debug, Clone)]
pub struct Played {
    pub game_id: String,
    pub role: Role,
    pub last: StepResult,
}

/// Joins with `opts` and plays the assigned role with the scripted agent
/// for it until the game ends. A rejected action is an error.
pub async fn play_scripted(opts: ConnectOptions) -> Result<Played, ClientError> {
    let mut session = Session::connect(opts).await?;
    let mut leader = ScriptedLeader::new();
    let mut follower = OracleFollower::new();
    let mut r = session.wait_turn().await?;
    while !r.game_over {
        let action = match session.role {
            Role::Leader => leader.act(&r.observation),
            Role::Follower => follower.act(&r.observation),
        };
        r = session.step(action).await?;
        if let Some(reason) = &r.rejected {
            return Err(ClientError::Protocol(format!("scripted action rejected: {reason}")));
        }
    }
    Ok(Played {
        game_id: session.game_id.clone(),
        role: session.role,
        last: r,
    })
}
