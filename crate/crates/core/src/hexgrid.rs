//! Axial hex coordinates, headings, pathfinding and the follower's view cone.
//!
//! Cells use axial `(q, r)` coordinates with pointy-top layout. Heading `0`
//! points along `+q` and each increment rotates 60° counterclockwise (screen
//! y grows downward, so "counterclockwise" is as seen on screen).

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Axial offsets indexed by heading.
pub const DIRECTIONS: [(i32, i32); 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HexCoord {
    pub q: i32,
    pub r: i32,
}

impl HexCoord {
    pub const fn new(q: i32, r: i32) -> Self {
        Self { q, r }
    }

    /// Center of the cell in unit-size pointy-top pixel space.
    pub fn center(self) -> (f64, f64) {
        let x = 3f64.sqrt() * (self.q as f64 + self.r as f64 / 2.0);
        let y = 1.5 * self.r as f64;
        (x, y)
    }
}

impl fmt::Display for HexCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.q, self.r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Heading(u8);

impl Heading {
    pub const ALL: [Heading; 6] = [
        Heading(0),
        Heading(1),
        Heading(2),
        Heading(3),
        Heading(4),
        Heading(5),
    ];

    pub fn new(direction: u8) -> Option<Self> {
        (direction < 6).then_some(Self(direction))
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn opposite(self) -> Self {
        Self((self.0 + 3) % 6)
    }

    pub fn offset(self) -> (i32, i32) {
        DIRECTIONS[self.0 as usize]
    }

    /// Heading whose unit step leads from `from` to the adjacent cell `to`.
    pub fn between(from: HexCoord, to: HexCoord) -> Option<Self> {
        let delta = (to.q - from.q, to.r - from.r);
        DIRECTIONS
            .iter()
            .position(|&d| d == delta)
            .map(|i| Self(i as u8))
    }

    /// Heading angle in degrees, counterclockwise from `+q`.
    pub fn degrees(self) -> f64 {
        self.0 as f64 * 60.0
    }
}

impl TryFrom<u8> for Heading {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        Heading::new(value).ok_or_else(|| format!("heading {value} out of range 0..=5"))
    }
}

impl From<Heading> for u8 {
    fn from(h: Heading) -> u8 {
        h.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Turn {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pose {
    pub cell: HexCoord,
    pub heading: Heading,
}

impl Pose {
    pub fn new(cell: HexCoord, heading: Heading) -> Self {
        Self { cell, heading }
    }
}

pub fn neighbor(cell: HexCoord, heading: Heading) -> HexCoord {
    let (dq, dr) = heading.offset();
    HexCoord::new(cell.q + dq, cell.r + dr)
}

pub fn neighbors(cell: HexCoord) -> impl Iterator<Item = HexCoord> {
    Heading::ALL.into_iter().map(move |h| neighbor(cell, h))
}

pub fn rotate(heading: Heading, turn: Turn) -> Heading {
    match turn {
        Turn::Left => Heading((heading.0 + 1) % 6),
        Turn::Right => Heading((heading.0 + 5) % 6),
    }
}

pub fn distance(a: HexCoord, b: HexCoord) -> u32 {
    let dq = a.q - b.q;
    let dr = a.r - b.r;
    ((dq.abs() + dr.abs() + (dq + dr).abs()) / 2) as u32
}

/// A bounded hex board with a movement relation.
pub trait HexGrid {
    fn in_bounds(&self, cell: HexCoord) -> bool;

    /// Whether a single move from `from` into the adjacent cell `to` is legal.
    fn can_step(&self, from: HexCoord, to: HexCoord) -> bool;

    /// Every in-bounds cell, in a fixed order.
    fn cells(&self) -> Vec<HexCoord>;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("cell {0} is outside the map")]
    OutOfBounds(HexCoord),
}

/// Breadth-first shortest path over the grid's movement relation.
///
/// Neighbors are expanded in heading order, so among equal-length paths the
/// one preferring lower heading indices at each expansion wins.
pub fn shortest_path<G: HexGrid + ?Sized>(
    grid: &G,
    from: HexCoord,
    to: HexCoord,
) -> Result<Option<Vec<HexCoord>>, GridError> {
    shortest_path_with(grid, from, to, |_| false)
}

/// Like [`shortest_path`] but treating every cell for which `blocked` holds
/// as impassable (the endpoints are exempt).
pub fn shortest_path_with<G, F>(
    grid: &G,
    from: HexCoord,
    to: HexCoord,
    blocked: F,
) -> Result<Option<Vec<HexCoord>>, GridError>
where
    G: HexGrid + ?Sized,
    F: Fn(HexCoord) -> bool,
{
    for c in [from, to] {
        if !grid.in_bounds(c) {
            return Err(GridError::OutOfBounds(c));
        }
    }
    if from == to {
        return Ok(Some(vec![from]));
    }
    let mut parent = std::collections::HashMap::new();
    parent.insert(from, from);
    let mut queue = VecDeque::from([from]);
    while let Some(cell) = queue.pop_front() {
        for next in neighbors(cell) {
            if parent.contains_key(&next) || !grid.in_bounds(next) {
                continue;
            }
            if !grid.can_step(cell, next) || (next != to && blocked(next)) {
                continue;
            }
            parent.insert(next, cell);
            if next == to {
                let mut path = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = parent[&cur];
                    path.push(cur);
                }
                path.reverse();
                return Ok(Some(path));
            }
            queue.push_back(next);
        }
    }
    Ok(None)
}

/// Cells reachable from `start` (inclusive) under the movement relation.
pub fn reachable<G: HexGrid + ?Sized>(grid: &G, start: HexCoord) -> BTreeSet<HexCoord> {
    let mut seen = BTreeSet::new();
    if !grid.in_bounds(start) {
        return seen;
    }
    seen.insert(start);
    let mut queue = VecDeque::from([start]);
    while let Some(cell) = queue.pop_front() {
        for next in neighbors(cell) {
            if grid.in_bounds(next) && !seen.contains(&next) && grid.can_step(cell, next) {
                seen.insert(next);
                queue.push_back(next);
            }
        }
    }
    seen
}

/// Angle in degrees between the heading and the bearing from `from` to `to`.
pub fn bearing_offset(from: HexCoord, heading: Heading, to: HexCoord) -> f64 {
    let (fx, fy) = from.center();
    let (tx, ty) = to.center();
    let (hx, hy) = neighbor(HexCoord::new(0, 0), heading).center();
    let (vx, vy) = (tx - fx, ty - fy);
    let cross = hx * vy - hy * vx;
    let dot = hx * vx + hy * vy;
    cross.atan2(dot).abs().to_degrees()
}

/// Cells within `range` of the pose whose bearing is inside the view cone.
pub fn visible_set<G: HexGrid + ?Sized>(
    grid: &G,
    pose: Pose,
    fov_degrees: f64,
    range: u32,
) -> BTreeSet<HexCoord> {
    const EPS: f64 = 1e-9;
    let half = fov_degrees / 2.0;
    let mut out = BTreeSet::new();
    let r = range as i32;
    for dq in -r..=r {
        for dr in (-r).max(-dq - r)..=r.min(-dq + r) {
            let cell = HexCoord::new(pose.cell.q + dq, pose.cell.r + dr);
            if !grid.in_bounds(cell) {
                continue;
            }
            if cell == pose.cell || bearing_offset(pose.cell, pose.heading, cell) <= half + EPS {
                out.insert(cell);
            }
        }
    }
    out
}
