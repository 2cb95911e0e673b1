//! A planning leader that picks the cheapest valid set and splits the work.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::grammar::{render, Command};
use super::nav::{self, distance_field, ObsGrid};
use crate::cards::is_valid_set;
use crate::game::{Action, CardView, InstructionStatus, Observation};
use crate::hexgrid::{self, HexCoord};

/// What the leader intends to do during one of its turns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TurnPlan {
    /// Collect the set `card_ids`: the leader walks onto `leader_card` (if any)
    /// and the follower is sent `instruction` (if any).
    Collect {
        card_ids: [u32; 3],
        cost: u32,
        leader_card: Option<HexCoord>,
        instruction: Option<String>,
    },
    /// No set is within reach; walk toward `toward` without toggling anything.
    Reposition { toward: Option<HexCoord> },
}

impl TurnPlan {
    pub fn instruction(&self) -> Option<&str> {
        match self {
            TurnPlan::Collect { instruction, .. } => instruction.as_deref(),
            TurnPlan::Reposition { .. } => None,
        }
    }
}

type Field = HashMap<HexCoord, u32>;

/// Entering a card from its own cell takes a step off and a step back.
fn cost_to(field: &Field, from: HexCoord, to: HexCoord) -> Option<u32> {
    if from == to {
        Some(2)
    } else {
        field.get(&to).copied()
    }
}

/// Plans the leader's turn from its (full) observation.
pub fn scripted_leader(obs: &Observation) -> TurnPlan {
    let known: Vec<&CardView> = obs.cards.iter().filter(|c| c.pattern.is_some()).collect();
    let Some(follower) = obs.other_pose else {
        return TurnPlan::Reposition { toward: None };
    };
    let leader = obs.own_pose.cell;
    let sinks: HashSet<HexCoord> = obs.cards.iter().map(|c| c.cell).collect();

    let leader_grid = ObsGrid::new(obs);
    let mut follower_grid = ObsGrid::new(obs);
    follower_grid.unblock(follower.cell);
    follower_grid.block(leader);

    let d_leader = distance_field(&leader_grid, leader, &sinks);
    let d_follower = distance_field(&follower_grid, follower.cell, &sinks);
    let from_card: HashMap<HexCoord, Field> = known
        .iter()
        .map(|c| (c.cell, distance_field(&follower_grid, c.cell, &sinks)))
        .collect();

    let selected: BTreeSet<u32> = obs.cards.iter().filter(|c| c.selected).map(|c| c.id).collect();
    let by_id: HashMap<u32, &CardView> = obs.cards.iter().map(|c| (c.id, c)).collect();
    let leader_budget = obs.turn.steps_remaining;

    let mut best: Option<(u32, [u32; 3], Option<HexCoord>, Vec<HexCoord>)> = None;
    for i in 0..known.len() {
        for j in i + 1..known.len() {
            for k in j + 1..known.len() {
                let triple = [known[i], known[j], known[k]];
                if !is_valid_set(triple.iter().map(|c| c.pattern.as_ref().expect("known"))) {
                    continue;
                }
                let ids: BTreeSet<u32> = triple.iter().map(|c| c.id).collect();
                let toggles: Vec<HexCoord> = ids
                    .symmetric_difference(&selected)
                    .filter_map(|id| by_id.get(id).map(|c| c.cell))
                    .collect();
                let Some((cost, leader_card, route)) =
                    split_work(&toggles, leader, follower.cell, leader_budget, obs.view.range, &d_leader, &d_follower, &from_card)
                else {
                    continue;
                };
                let mut key = [known[i].id, known[j].id, known[k].id];
                key.sort_unstable();
                let better = match &best {
                    None => true,
                    Some((c, k2, _, _)) => (cost, key) < (*c, *k2),
                };
                if better {
                    best = Some((cost, key, leader_card, route));
                }
            }
        }
    }

    match best {
        Some((cost, card_ids, leader_card, route)) => {
            let instruction = (!route.is_empty()).then(|| {
                render(&route.iter().map(|c| Command::ToggleCardAt(*c)).collect::<Vec<_>>())
            });
            TurnPlan::Collect {
                card_ids,
                cost,
                leader_card,
                instruction,
            }
        }
        None => TurnPlan::Reposition {
            toward: nearest_card(obs, &d_leader),
        },
    }
}

/// Greedy split of the cells to toggle. The leader takes at most one card that
/// it reaches this turn and strictly sooner than the follower; the follower
/// visits the rest nearest-first, each within `reach` (its fog range) of the
/// previous stop. Returns `None` if some cell cannot be covered.
fn split_work(
    toggles: &[HexCoord],
    leader: HexCoord,
    follower: HexCoord,
    leader_budget: u32,
    reach: u32,
    d_leader: &Field,
    d_follower: &Field,
    from_card: &HashMap<HexCoord, Field>,
) -> Option<(u32, Option<HexCoord>, Vec<HexCoord>)> {
    let mut leader_pick: Option<(u32, HexCoord)> = None;
    for &cell in toggles.iter().filter(|c| **c != leader) {
        let Some(dl) = d_leader.get(&cell).copied() else {
            continue;
        };
        let df = cost_to(d_follower, follower, cell).unwrap_or(u32::MAX);
        if dl <= leader_budget && dl < df && leader_pick.is_none_or(|(best, c)| (dl, cell) < (best, c)) {
            leader_pick = Some((dl, cell));
        }
    }
    let mut rest: Vec<HexCoord> = toggles
        .iter()
        .copied()
        .filter(|c| Some(*c) != leader_pick.map(|p| p.1))
        .collect();
    let mut cost = leader_pick.map_or(0, |p| p.0);
    let mut route = Vec::new();
    let mut at = follower;
    let mut field = d_follower;
    while !rest.is_empty() {
        let (idx, d) = rest
            .iter()
            .enumerate()
            .filter(|(_, c)| hexgrid::distance(at, **c) <= reach)
            .filter_map(|(i, c)| cost_to(field, at, *c).map(|d| (i, d)))
            .min_by_key(|&(i, d)| (d, rest[i]))?;
        let cell = rest.remove(idx);
        cost += d;
        route.push(cell);
        at = cell;
        field = from_card.get(&cell)?;
    }
    Some((cost, leader_pick.map(|p| p.1), route))
}

fn nearest_card(obs: &Observation, d_leader: &Field) -> Option<HexCoord> {
    obs.cards
        .iter()
        .filter_map(|c| d_leader.get(&c.cell).map(|d| (*d, c.id, c.cell)))
        .filter(|(d, _, _)| *d > 0)
        .min()
        .map(|(_, _, cell)| cell)
}

/// Turn-by-turn driver for [`scripted_leader`].
///
/// At the start of each leader turn it replans. A still-running instruction
/// that differs from the new plan is cancelled before the new one is sent.
#[derive(Debug, Clone, Default)]
pub struct ScriptedLeader {
    planned_turn: Option<u32>,
    plan: Option<TurnPlan>,
    cancel_pending: bool,
    instruction_pending: bool,
}

impl ScriptedLeader {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn plan(&self) -> Option<&TurnPlan> {
        self.plan.as_ref()
    }

    pub fn act(&mut self, obs: &Observation) -> Action {
        if !obs.is_my_turn() {
            return Action::Noop;
        }
        if self.planned_turn != Some(obs.turn.turn_number) {
            self.start_turn(obs);
        }
        if self.cancel_pending {
            self.cancel_pending = false;
            return Action::CancelInstructions;
        }
        if self.instruction_pending {
            self.instruction_pending = false;
            if let Some(text) = self.plan.as_ref().and_then(|p| p.instruction()) {
                return Action::send(text);
            }
        }
        let grid = ObsGrid::new(obs);
        let here = obs.own_pose;
        let step = match self.plan.as_ref() {
            Some(TurnPlan::Collect {
                leader_card: Some(target),
                ..
            }) if *target != here.cell => nav::step_toward(here, &grid, *target),
            Some(TurnPlan::Reposition {
                toward: Some(target),
            }) if hexgrid::distance(here.cell, *target) > 1 => {
                let path = hexgrid::shortest_path_with(&grid, here.cell, *target, |c| grid.cards.contains(&c))
                    .ok()
                    .flatten();
                // Stop next to the card instead of toggling it.
                match path {
                    Some(p) if p.len() > 2 => nav::step_toward(here, &grid, p[1]),
                    _ => None,
                }
            }
            _ => None,
        };
        if let Some(Action::Forward | Action::Backward) = step {
            if let Some(TurnPlan::Collect { leader_card, .. }) = self.plan.as_mut() {
                let lands = match step {
                    Some(Action::Forward) => hexgrid::neighbor(here.cell, here.heading),
                    _ => hexgrid::neighbor(here.cell, here.heading.opposite()),
                };
                if Some(lands) == *leader_card {
                    *leader_card = None;
                }
            }
        }
        step.unwrap_or(Action::EndTurn)
    }

    fn start_turn(&mut self, obs: &Observation) {
        self.planned_turn = Some(obs.turn.turn_number);
        let plan = scripted_leader(obs);
        let running: Vec<&str> = obs
            .instructions
            .iter()
            .filter(|i| matches!(i.status, InstructionStatus::Active | InstructionStatus::Queued))
            .map(|i| i.text.as_str())
            .collect();
        let keep = plan.instruction().is_some() && running == [plan.instruction().unwrap_or("")];
        self.cancel_pending = !running.is_empty() && !keep;
        self.instruction_pending = plan.instruction().is_some() && !keep;
        self.plan = Some(plan);
    }
}
