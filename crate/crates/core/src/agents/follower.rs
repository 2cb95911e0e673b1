//! A follower that executes grammar instructions literally.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::grammar::{parse_instruction, Command};
use super::nav::{self, ObsGrid};
use crate::game::{Action, Observation};
use crate::hexgrid::{self, HexCoord, HexGrid};
use crate::map::Tile;

/// Turns in a row without a translation after which a command is dropped.
const MAX_IDLE_TURNS: u32 = 6;

/// Commands still to run for the instruction the follower is working on.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Pending {
    pub instruction_id: Option<u32>,
    pub commands: VecDeque<Command>,
    idle_turns: u32,
    memory: Memory,
}

/// Everything the follower has seen so far. Terrain and props never change;
/// card cells are refreshed whenever they come back into view.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Memory {
    tiles: BTreeMap<HexCoord, Tile>,
    props: BTreeSet<HexCoord>,
    cards: BTreeSet<HexCoord>,
}

impl Memory {
    fn update(&mut self, obs: &Observation) {
        for c in &obs.cells {
            self.tiles.insert(c.cell, c.tile);
            self.cards.remove(&c.cell);
        }
        self.props.extend(obs.props.iter().map(|p| p.cell));
        self.cards.extend(obs.cards.iter().map(|c| c.cell));
    }

    fn grid(&self, obs: &Observation) -> ObsGrid {
        let mut blocked: std::collections::HashSet<HexCoord> = self.props.iter().copied().collect();
        if let Some(other) = obs.other_pose {
            blocked.insert(other.cell);
        }
        ObsGrid::from_parts(
            self.tiles.iter().map(|(c, t)| (*c, *t)).collect(),
            blocked,
            self.cards.iter().copied().collect(),
        )
    }
}

/// Chooses the follower's next action and updates `pending` to match.
///
/// Outside its own turn the follower yields with Noop. With nothing left to
/// do it marks the active instruction done, and otherwise ends its turn.
pub fn oracle_follower(obs: &Observation, pending: &mut Pending) -> Action {
    if !obs.is_my_turn() {
        return Action::Noop;
    }
    let Some(active) = obs.active_instruction() else {
        pending.instruction_id = None;
        pending.commands.clear();
        return Action::EndTurn;
    };
    pending.memory.update(obs);
    if pending.instruction_id != Some(active.id) {
        pending.instruction_id = Some(active.id);
        pending.idle_turns = 0;
        // Free-form text outside the grammar is treated as "wait".
        pending.commands = parse_instruction(&active.text)
            .map(VecDeque::from)
            .unwrap_or_default();
    }
    let grid = pending.memory.grid(obs);
    while let Some(cmd) = pending.commands.front().copied() {
        match next_for(obs, &grid, cmd) {
            Step::Act(action, finished) => {
                let turning = matches!(action, Action::TurnLeft | Action::TurnRight);
                if finished {
                    pending.commands.pop_front();
                    pending.idle_turns = 0;
                } else if turning {
                    pending.idle_turns += 1;
                    if pending.idle_turns > MAX_IDLE_TURNS {
                        pending.commands.clear();
                        continue;
                    }
                } else {
                    pending.idle_turns = 0;
                }
                return action;
            }
            Step::Done => {
                pending.commands.pop_front();
            }
            Step::Prefix(extra) => {
                pending.commands.push_front(extra);
            }
            Step::Abandon => {
                pending.commands.clear();
                pending.idle_turns = 0;
            }
        }
    }
    Action::MarkInstructionDone
}

enum Step {
    /// Submit the action; the flag says whether it completes the command.
    Act(Action, bool),
    Done,
    Prefix(Command),
    Abandon,
}

fn next_for(obs: &Observation, grid: &ObsGrid, cmd: Command) -> Step {
    let here = obs.own_pose;
    match cmd {
        Command::Wait => Step::Done,
        Command::TurnLeft => Step::Act(Action::TurnLeft, true),
        Command::TurnRight => Step::Act(Action::TurnRight, true),
        Command::Forward | Command::Backward => {
            let heading = if cmd == Command::Forward {
                here.heading
            } else {
                here.heading.opposite()
            };
            let target = hexgrid::neighbor(here.cell, heading);
            // Only moves into seen, enterable cells are attempted.
            if grid.sees(target) && grid.can_step(here.cell, target) {
                let action = if cmd == Command::Forward {
                    Action::Forward
                } else {
                    Action::Backward
                };
                Step::Act(action, true)
            } else {
                Step::Abandon
            }
        }
        Command::Goto(target) | Command::ToggleCardAt(target) => {
            if here.cell == target {
                if matches!(cmd, Command::Goto(_)) {
                    return Step::Done;
                }
                // Re-entering is the only way to toggle the card underfoot.
                return match step_off_cell(grid, here.cell) {
                    Some(cell) => Step::Prefix(Command::Goto(cell)),
                    None => Step::Abandon,
                };
            }
            if hexgrid::distance(here.cell, target) > obs.view.range {
                return Step::Abandon;
            }
            let face = || {
                let want = nav::facing(here.cell, target);
                if want == here.heading {
                    Step::Abandon
                } else {
                    Step::Act(nav::turn_toward(here.heading, want), false)
                }
            };
            if !grid.sees(target) {
                return face();
            }
            match nav::step_toward(here, grid, target) {
                Some(action) => {
                    let lands = match action {
                        Action::Forward => Some(hexgrid::neighbor(here.cell, here.heading)),
                        Action::Backward => {
                            Some(hexgrid::neighbor(here.cell, here.heading.opposite()))
                        }
                        _ => None,
                    };
                    Step::Act(action, lands == Some(target))
                }
                // The route may run through cells outside the view cone.
                None => face(),
            }
        }
    }
}

fn step_off_cell(grid: &ObsGrid, cell: HexCoord) -> Option<HexCoord> {
    hexgrid::neighbors(cell).find(|n| grid.in_bounds(*n) && grid.is_free(cell, *n) && grid.is_free(*n, cell))
}

/// Stateful wrapper around [`oracle_follower`].
#[derive(Debug, Clone, Default)]
pub struct OracleFollower {
    pending: Pending,
}

impl OracleFollower {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn act(&mut self, obs: &Observation) -> Action {
        oracle_follower(obs, &mut self.pending)
    }

    pub fn pending(&self) -> &Pending {
        &self.pending
    }
}
