//! In-process games with the same step semantics as networked sessions.

use std::sync::{Arc, Condvar, Mutex};

use hexcollab_core::events::EventRecorder;
use hexcollab_core::{Action, GameConfig, GameEvent, GameMap, GameState, Observation, RecordedEvent, Rejection, Role};

use crate::{ClientError, StepResult};

/// An engine instance driven directly. The game clock stays at zero, so
/// turns only end by steps or EndTurn, never by timer.
#[derive(Debug, Clone)]
pub struct LocalGame {
    state: GameState,
    recorder: Option<EventRecorder>,
}

impl LocalGame {
    /// Starts a game; with `capture` every event is kept for replay.
    pub fn new(game_id: &str, map: GameMap, config: GameConfig, seed: u64, capture: bool) -> Result<Self, ClientError> {
        let (state, start) = GameState::start(map, config, seed)?;
        let recorder = capture.then(|| {
            let mut r = EventRecorder::new(game_id);
            r.record(start, 0);
            r
        });
        Ok(Self { state, recorder })
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn observe(&self, role: Role) -> Observation {
        self.state.observe(role)
    }

    pub fn act(&mut self, role: Role, action: &Action) -> Result<Vec<GameEvent>, Rejection> {
        let events = self.state.apply_action(role, action, 0)?;
        if let Some(r) = &mut self.recorder {
            r.record(events.clone(), 0);
        }
        Ok(events)
    }

    /// Captured events; empty when capture is off.
    pub fn events(&self) -> &[RecordedEvent] {
        self.recorder.as_ref().map_or(&[], |r| r.events())
    }

    fn result(&self, role: Role, rejected: Option<String>) -> StepResult {
        let observation = self.observe(role);
        StepResult {
            turn: observation.turn,
            game_over: self.state.over,
            abandoned: false,
            score: self.state.turn.score,
            observation,
            rejected,
        }
    }
}

type Shared = Arc<(Mutex<LocalGame>, Condvar)>;

/// One role's handle on a shared in-process game. `step` blocks until this
/// role's next decision point, so the two sessions are meant to run on
/// separate threads, exactly like two networked clients.
#[derive(Clone)]
pub struct LocalSession {
    pub role: Role,
    shared: Shared,
}

/// A leader and a follower session on one in-process game.
pub fn local_game(map: GameMap, config: GameConfig, seed: u64, capture: bool) -> Result<(LocalSession, LocalSession), ClientError> {
    let game = LocalGame::new("local", map, config, seed, capture)?;
    let shared: Shared = Arc::new((Mutex::new(game), Condvar::new()));
    Ok((
        LocalSession {
            role: Role::Leader,
            shared: shared.clone(),
        },
        LocalSession {
            role: Role::Follower,
            shared,
        },
    ))
}

impl LocalSession {
    pub fn observation(&self) -> Observation {
        self.shared.0.lock().expect("game lock").observe(self.role)
    }

    /// Waits until it is this role's turn (or the game ends) without acting.
    pub fn wait_turn(&self) -> StepResult {
        let (lock, cv) = &*self.shared;
        let game = cv
            .wait_while(lock.lock().expect("game lock"), |g| {
                !g.state.over && g.state.turn.active_role != self.role
            })
            .expect("game lock");
        game.result(self.role, None)
    }

    pub fn step(&self, action: Action) -> Result<StepResult, ClientError> {
        let (lock, cv) = &*self.shared;
        {
            let mut game = lock.lock().expect("game lock");
            if game.state.over {
                return Err(ClientError::GameOver);
            }
            if let Err(r) = game.act(self.role, &action) {
                return Ok(game.result(self.role, Some(r.to_string())));
            }
        }
        cv.notify_all();
        Ok(self.wait_turn())
    }

    pub fn events(&self) -> Vec<RecordedEvent> {
        self.shared.0.lock().expect("game lock").events().to_vec()
    }

    pub fn state(&self) -> GameState {
        self.shared.0.lock().expect("game lock").state.clone()
    }
}
