//! The static world: terrain, elevation, landmark props and card placements.

use serde::{Deserialize, Serialize};

use crate::cards::Card;
use crate::hexgrid::{HexCoord, HexGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terrain {
    Grass,
    Path,
    Water,
    Mountain,
    Ramp,
}

impl Terrain {
    /// Natural elevation of the terrain kind.
    pub fn elevation(self) -> u8 {
        match self {
            Terrain::Mountain => 1,
            _ => 0,
        }
    }

    pub fn is_ground(self) -> bool {
        matches!(self, Terrain::Grass | Terrain::Path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tile {
    pub terrain: Terrain,
    pub elevation: u8,
}

impl Tile {
    pub fn new(terrain: Terrain) -> Self {
        Self {
            terrain,
            elevation: terrain.elevation(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropKind {
    House,
    Tree,
    Streetlight,
    Rock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoofColor {
    Red,
    Blue,
    Green,
    Yellow,
    Brown,
}

impl RoofColor {
    pub const ALL: [RoofColor; 5] = [
        RoofColor::Red,
        RoofColor::Blue,
        RoofColor::Green,
        RoofColor::Yellow,
        RoofColor::Brown,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HouseVariant {
    pub roof_color: RoofColor,
    pub floors: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prop {
    pub kind: PropKind,
    pub cell: HexCoord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<HouseVariant>,
}

/// A rectangular board of `rows × cols` cells in "odd-r" offset layout,
/// addressed with axial coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameMap {
    pub rows: u32,
    pub cols: u32,
    /// Row-major, `rows * cols` entries.
    pub tiles: Vec<Tile>,
    pub props: Vec<Prop>,
    pub initial_cards: Vec<Card>,
    pub leader_spawn: HexCoord,
    pub follower_spawn: HexCoord,
    /// Seed requested by the generator configuration.
    pub seed: u64,
    /// Regeneration attempts consumed before a valid map came out; the map
    /// was produced from `seed + seed_offset`.
    #[serde(default)]
    pub seed_offset: u64,
}

impl GameMap {
    /// An all-grass map with no props or cards; spawns in the first two
    /// cells of the middle row.
    pub fn open(rows: u32, cols: u32) -> Self {
        assert!(rows > 0 && cols > 1, "map needs at least two cells");
        let mid = (rows / 2) as i32;
        let first = Self::cell_at(mid as u32, 0);
        let second = Self::cell_at(mid as u32, 1);
        Self {
            rows,
            cols,
            tiles: vec![Tile::new(Terrain::Grass); (rows * cols) as usize],
            props: Vec::new(),
            initial_cards: Vec::new(),
            leader_spawn: first,
            follower_spawn: second,
            seed: 0,
            seed_offset: 0,
        }
    }

    /// Axial coordinate of the cell at (row, column) in offset layout.
    pub fn cell_at(row: u32, col: u32) -> HexCoord {
        let r = row as i32;
        HexCoord::new(col as i32 - (r >> 1), r)
    }

    /// (row, column) of an axial coordinate, if in bounds.
    pub fn offset_of(&self, cell: HexCoord) -> Option<(u32, u32)> {
        if cell.r < 0 || cell.r >= self.rows as i32 {
            return None;
        }
        let col = cell.q + (cell.r >> 1);
        if col < 0 || col >= self.cols as i32 {
            return None;
        }
        Some((cell.r as u32, col as u32))
    }

    fn index(&self, cell: HexCoord) -> Option<usize> {
        self.offset_of(cell)
            .map(|(row, col)| (row * self.cols + col) as usize)
    }

    pub fn tile(&self, cell: HexCoord) -> Option<Tile> {
        self.index(cell).map(|i| self.tiles[i])
    }

    pub fn set_tile(&mut self, cell: HexCoord, tile: Tile) {
        if let Some(i) = self.index(cell) {
            self.tiles[i] = tile;
        }
    }

    pub fn prop_at(&self, cell: HexCoord) -> Option<&Prop> {
        self.props.iter().find(|p| p.cell == cell)
    }

    pub fn cell_count(&self) -> usize {
        (self.rows * self.cols) as usize
    }

    /// Terrain allows standing here and no prop occupies the cell.
    pub fn is_traversable(&self, cell: HexCoord) -> bool {
        match self.tile(cell) {
            Some(t) => t.terrain != Terrain::Water && self.prop_at(cell).is_none(),
            None => false,
        }
    }
}

/// Movement between two tiles: same elevation, or a ramp on either side.
pub fn elevation_step_ok(from: Tile, to: Tile) -> bool {
    from.elevation == to.elevation
        || from.terrain == Terrain::Ramp
        || to.terrain == Terrain::Ramp
}

impl HexGrid for GameMap {
    fn in_bounds(&self, cell: HexCoord) -> bool {
        self.offset_of(cell).is_some()
    }

    fn can_step(&self, from: HexCoord, to: HexCoord) -> bool {
        match (self.tile(from), self.tile(to)) {
            (Some(a), Some(b)) => self.is_traversable(to) && elevation_step_ok(a, b),
            _ => false,
        }
    }

    fn cells(&self) -> Vec<HexCoord> {
        let mut out = Vec::with_capacity(self.cell_count());
        for row in 0..self.rows {
            for col in 0..self.cols {
                out.push(Self::cell_at(row, col));
            }
        }
        out
    }
}
