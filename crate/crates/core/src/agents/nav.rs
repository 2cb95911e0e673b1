//! Movement planning over what an observation shows.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::game::{Action, Observation};
use crate::hexgrid::{self, HexCoord, HexGrid, Heading, Pose};
use crate::map::{elevation_step_ok, Terrain, Tile};

/// The known part of the board, as seen in one observation. Unseen cells are
/// treated as out of bounds; the other agent's cell is blocked.
pub struct ObsGrid {
    tiles: HashMap<HexCoord, Tile>,
    blocked: HashSet<HexCoord>,
    pub cards: HashSet<HexCoord>,
}

impl ObsGrid {
    pub fn new(obs: &Observation) -> Self {
        let tiles = obs.cells.iter().map(|c| (c.cell, c.tile)).collect();
        let mut blocked: HashSet<HexCoord> = obs.props.iter().map(|p| p.cell).collect();
        if let Some(other) = obs.other_pose {
            blocked.insert(other.cell);
        }
        let cards = obs.cards.iter().map(|c| c.cell).collect();
        Self {
            tiles,
            blocked,
            cards,
        }
    }

    /// A grid over remembered tiles and obstacles.
    pub fn from_parts(
        tiles: HashMap<HexCoord, Tile>,
        blocked: HashSet<HexCoord>,
        cards: HashSet<HexCoord>,
    ) -> Self {
        Self {
            tiles,
            blocked,
            cards,
        }
    }

    pub fn sees(&self, cell: HexCoord) -> bool {
        self.tiles.contains_key(&cell)
    }

    pub fn block(&mut self, cell: HexCoord) {
        self.blocked.insert(cell);
    }

    pub fn unblock(&mut self, cell: HexCoord) {
        self.blocked.remove(&cell);
    }

    pub fn is_free(&self, from: HexCoord, to: HexCoord) -> bool {
        self.can_step(from, to) && !self.cards.contains(&to)
    }
}

impl HexGrid for ObsGrid {
    fn in_bounds(&self, cell: HexCoord) -> bool {
        self.tiles.contains_key(&cell)
    }

    fn can_step(&self, from: HexCoord, to: HexCoord) -> bool {
        match (self.tiles.get(&from), self.tiles.get(&to)) {
            (Some(a), Some(b)) => {
                b.terrain != Terrain::Water && !self.blocked.contains(&to) && elevation_step_ok(*a, *b)
            }
            _ => false,
        }
    }

    fn cells(&self) -> Vec<HexCoord> {
        let mut v: Vec<HexCoord> = self.tiles.keys().copied().collect();
        v.sort();
        v
    }
}

/// BFS step counts from `source`. Cells in `sinks` can be reached but are not
/// expanded (entering a card cell toggles it, so routes never pass through).
pub fn distance_field<G: HexGrid>(
    grid: &G,
    source: HexCoord,
    sinks: &HashSet<HexCoord>,
) -> HashMap<HexCoord, u32> {
    let mut dist = HashMap::new();
    dist.insert(source, 0);
    let mut queue = VecDeque::from([source]);
    while let Some(cell) = queue.pop_front() {
        if cell != source && sinks.contains(&cell) {
            continue;
        }
        let d = dist[&cell];
        for next in hexgrid::neighbors(cell) {
            if !dist.contains_key(&next) && grid.in_bounds(next) && grid.can_step(cell, next) {
                dist.insert(next, d + 1);
                queue.push_back(next);
            }
        }
    }
    dist
}

/// The single action that turns `from` toward `to` by the shorter way.
pub fn turn_toward(from: Heading, to: Heading) -> Action {
    let diff = (to.index() + 6 - from.index()) % 6;
    if diff <= 3 {
        Action::TurnLeft
    } else {
        Action::TurnRight
    }
}

/// Heading whose direction is closest to the bearing of `target`.
pub fn facing(from: HexCoord, target: HexCoord) -> Heading {
    Heading::ALL
        .into_iter()
        .min_by(|a, b| {
            hexgrid::bearing_offset(from, *a, target)
                .total_cmp(&hexgrid::bearing_offset(from, *b, target))
        })
        .expect("six headings")
}

/// Next action moving the observer toward `target` without crossing other
/// card cells, or `None` if no route is known.
pub fn step_toward(here: Pose, grid: &ObsGrid, target: HexCoord) -> Option<Action> {
    let path = hexgrid::shortest_path_with(grid, here.cell, target, |c| grid.cards.contains(&c))
        .ok()
        .flatten()?;
    let next = *path.get(1)?;
    let dir = Heading::between(here.cell, next)?;
    Some(if dir == here.heading {
        Action::Forward
    } else if dir == here.heading.opposite() {
        Action::Backward
    } else {
        turn_toward(here.heading, dir)
    })
}
