//! Seeded procedural maps, map validation and a pre-generated map pool.
//!
//! Generation runs as a fixed pipeline: lakes and mountains grow as random
//! blobs, each mountain gets ramps, towns are placed as house clusters around
//! a square, path corridors are routed between town squares and from every
//! ramp to its nearest town, then streetlights, trees and rocks are scattered
//! and finally spawns and cards are placed inside the main connected region.
//! If an attempt cannot satisfy [`validate_map`], the seed is bumped and the
//! bump is recorded in [`GameMap::seed_offset`].

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cards::{is_valid_set, Card, CardColor, CardPattern, CardShape};
use crate::hexgrid::{self, distance, HexCoord, HexGrid};
use crate::map::{GameMap, HouseVariant, Prop, PropKind, RoofColor, Terrain, Tile};

const MAX_ATTEMPTS: u64 = 64;
const PLACEMENT_RETRIES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub rows: u32,
    pub cols: u32,
    pub town_count: u32,
    /// Inclusive range of houses per town.
    pub town_size_range: (u32, u32),
    /// Upper bound on the distance between two houses of one town.
    pub town_radius: u32,
    pub lake_count: u32,
    pub lake_size_range: (u32, u32),
    pub mountain_count: u32,
    pub mountain_size_range: (u32, u32),
    pub card_count: u32,
    pub streetlights_per_town: u32,
    /// Probability that an eligible grass cell gets a tree.
    pub tree_density: f64,
    pub rock_density: f64,
    pub card_colors: Vec<CardColor>,
    pub card_shapes: Vec<CardShape>,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            rows: 25,
            cols: 25,
            town_count: 2,
            town_size_range: (4, 7),
            town_radius: 6,
            lake_count: 3,
            lake_size_range: (6, 14),
            mountain_count: 2,
            mountain_size_range: (6, 12),
            card_count: 21,
            streetlights_per_town: 2,
            tree_density: 0.05,
            rock_density: 0.015,
            card_colors: CardColor::ALL.to_vec(),
            card_shapes: CardShape::ALL.to_vec(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("infeasible generator config: {0}")]
    Infeasible(String),
    #[error("no valid map after {attempts} attempts from seed {seed}")]
    Exhausted { seed: u64, attempts: u64 },
}

impl GenConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Rejects configs that cannot fit their contents even in the best case.
    pub fn check_feasible(&self) -> Result<(), GenError> {
        let bad = |s: String| Err(GenError::Infeasible(s));
        if self.rows < 3 || self.cols < 3 {
            return bad("map must be at least 3x3".into());
        }
        for (name, (lo, hi)) in [
            ("town_size_range", self.town_size_range),
            ("lake_size_range", self.lake_size_range),
            ("mountain_size_range", self.mountain_size_range),
        ] {
            if lo > hi {
                return bad(format!("{name} is empty"));
            }
        }
        if !(0.0..=1.0).contains(&self.tree_density) || !(0.0..=1.0).contains(&self.rock_density) {
            return bad("densities must lie in [0, 1]".into());
        }
        if self.town_count > 0 && self.town_radius < 4 {
            return bad("town_radius must be at least 4".into());
        }
        if self.card_colors.len() < 3 || self.card_shapes.len() < 3 {
            return bad("need at least three card colors and shapes".into());
        }
        let cells = (self.rows * self.cols) as u64;
        let water = (self.lake_count * self.lake_size_range.1) as u64;
        let mountains = (self.mountain_count * self.mountain_size_range.1) as u64;
        let houses = (self.town_count * (self.town_size_range.1 + self.streetlights_per_town)) as u64;
        let scattered = ((self.tree_density + self.rock_density) * cells as f64).ceil() as u64;
        let needed = self.card_count as u64 + 2;
        let free = cells.saturating_sub(water + mountains + houses + scattered);
        if needed > free {
            return bad(format!(
                "{needed} cards and spawns do not fit in {free} guaranteed-free cells"
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub failures: Vec<String>,
}

/// Terrain-level failures: tile table shape, elevations, ramp adjacency and
/// prop placement.
pub fn terrain_failures(map: &GameMap) -> Vec<String> {
    let mut out = Vec::new();
    if map.tiles.len() != map.cell_count() {
        out.push(format!(
            "tile table has {} entries for a {}x{} map",
            map.tiles.len(),
            map.rows,
            map.cols
        ));
        return out;
    }
    for cell in map.cells() {
        let tile = map.tile(cell).expect("in bounds");
        if tile.elevation != tile.terrain.elevation() {
            out.push(format!("tile {cell} has elevation {} for {:?}", tile.elevation, tile.terrain));
        }
        if tile.terrain == Terrain::Ramp {
            let around: Vec<Terrain> = hexgrid::neighbors(cell)
                .filter_map(|n| map.tile(n))
                .map(|t| t.terrain)
                .collect();
            if !around.contains(&Terrain::Mountain) || !around.iter().any(|t| t.is_ground()) {
                out.push(format!("ramp {cell} must touch both a mountain and ground"));
            }
        }
    }
    let mut prop_cells = HashSet::new();
    for p in &map.props {
        match map.tile(p.cell) {
            None => out.push(format!("{:?} at {} is outside the map", p.kind, p.cell)),
            Some(t) if t.terrain == Terrain::Water => {
                out.push(format!("{:?} at {} stands in water", p.kind, p.cell))
            }
            _ => {}
        }
        if !prop_cells.insert(p.cell) {
            out.push(format!("two props share {}", p.cell));
        }
        if p.kind == PropKind::House && p.variant.is_none() {
            out.push(format!("house at {} has no variant", p.cell));
        }
    }
    out
}

/// Checks a map for playability. Failures are collected, never thrown.
pub fn validate_map(map: &GameMap, expected_cards: Option<usize>) -> ValidationReport {
    let mut failures = terrain_failures(map);
    if !failures.is_empty() && map.tiles.len() != map.cell_count() {
        return ValidationReport { ok: false, failures };
    }
    for (name, spawn) in [("leader", map.leader_spawn), ("follower", map.follower_spawn)] {
        if !map.is_traversable(spawn) {
            failures.push(format!("{name} spawn {spawn} is not traversable"));
        }
    }
    if map.leader_spawn == map.follower_spawn {
        failures.push("spawns share a cell".into());
    }
    let component = hexgrid::reachable(map, map.leader_spawn);
    if map.is_traversable(map.follower_spawn) && !component.contains(&map.follower_spawn) {
        failures.push("follower spawn unreachable from leader spawn".into());
    }
    let mut cells = HashSet::new();
    let mut ids = HashSet::new();
    for c in &map.initial_cards {
        if !map.is_traversable(c.cell) {
            failures.push(format!("card {} on blocked cell {}", c.id, c.cell));
        } else if !component.contains(&c.cell) {
            failures.push(format!("unreachable card {} at {}", c.id, c.cell));
        }
        if c.cell == map.leader_spawn || c.cell == map.follower_spawn {
            failures.push(format!("card {} on a spawn cell", c.id));
        }
        if !cells.insert(c.cell) {
            failures.push(format!("two cards share {}", c.cell));
        }
        if !ids.insert(c.id) {
            failures.push(format!("duplicate card id {}", c.id));
        }
        if !(1..=3).contains(&c.pattern.count) {
            failures.push(format!("card {} has count {}", c.id, c.pattern.count));
        }
    }
    if let Some(n) = expected_cards {
        if map.initial_cards.len() != n {
            failures.push(format!(
                "map has {} cards, expected {n}",
                map.initial_cards.len()
            ));
        }
    }
    ValidationReport {
        ok: failures.is_empty(),
        failures,
    }
}

/// Generates the map for `config`. A pure function of the config.
pub fn generate_map(config: &GenConfig) -> Result<GameMap, GenError> {
    config.check_feasible()?;
    for offset in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(offset));
        if let Some(mut map) = Attempt::new(config, &mut rng).run() {
            map.seed = config.seed;
            map.seed_offset = offset;
            return Ok(map);
        }
    }
    Err(GenError::Exhausted {
        seed: config.seed,
        attempts: MAX_ATTEMPTS,
    })
}

struct Attempt<'a> {
    config: &'a GenConfig,
    rng: &'a mut ChaCha8Rng,
    map: GameMap,
    ramps: Vec<HexCoord>,
    town_centers: Vec<HexCoord>,
}

impl<'a> Attempt<'a> {
    fn new(config: &'a GenConfig, rng: &'a mut ChaCha8Rng) -> Self {
        Self {
            config,
            rng,
            map: GameMap::open(config.rows, config.cols),
            ramps: Vec::new(),
            town_centers: Vec::new(),
        }
    }

    fn run(mut self) -> Option<GameMap> {
        for _ in 0..self.config.lake_count {
            let size = self.pick_size(self.config.lake_size_range);
            self.grow_blob(Terrain::Water, size);
        }
        let mut mountains = Vec::new();
        for _ in 0..self.config.mountain_count {
            let size = self.pick_size(self.config.mountain_size_range);
            mountains.push(self.grow_blob(Terrain::Mountain, size));
        }
        // Ramps go in only after every blob exists so none loses its ground side.
        for blob in mountains.iter().filter(|b| !b.is_empty()) {
            self.add_ramps(blob)?;
        }
        for _ in 0..self.config.town_count {
            self.place_town()?;
        }
        self.route_paths()?;
        self.place_streetlights();
        self.scatter();
        for _ in 0..PLACEMENT_RETRIES {
            if self.place_cards_and_spawns() {
                let report = validate_map(&self.map, Some(self.config.card_count as usize));
                if report.ok {
                    return Some(self.map);
                }
            }
        }
        None
    }

    fn pick_size(&mut self, (lo, hi): (u32, u32)) -> u32 {
        self.rng.random_range(lo..=hi)
    }

    fn random_cell(&mut self) -> HexCoord {
        let row = self.rng.random_range(0..self.config.rows);
        let col = self.rng.random_range(0..self.config.cols);
        GameMap::cell_at(row, col)
    }

    fn is_grass(&self, c: HexCoord) -> bool {
        self.map.tile(c).map(|t| t.terrain) == Some(Terrain::Grass)
    }

    fn is_free_grass(&self, c: HexCoord) -> bool {
        self.is_grass(c) && self.map.prop_at(c).is_none()
    }

    /// Seeded random flood expansion over grass cells.
    fn grow_blob(&mut self, terrain: Terrain, size: u32) -> Vec<HexCoord> {
        let mut start = None;
        for _ in 0..32 {
            let c = self.random_cell();
            if self.is_grass(c) {
                start = Some(c);
                break;
            }
        }
        let Some(start) = start else { return Vec::new() };
        let mut blob = vec![start];
        self.map.set_tile(start, Tile::new(terrain));
        while (blob.len() as u32) < size {
            let mut frontier: Vec<HexCoord> = blob
                .iter()
                .flat_map(|c| hexgrid::neighbors(*c))
                .filter(|n| self.is_grass(*n))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            if frontier.is_empty() {
                break;
            }
            let next = frontier.swap_remove(self.rng.random_range(0..frontier.len()));
            self.map.set_tile(next, Tile::new(terrain));
            blob.push(next);
        }
        blob
    }

    fn add_ramps(&mut self, blob: &[HexCoord]) -> Option<()> {
        let candidates: Vec<HexCoord> = blob
            .iter()
            .flat_map(|c| hexgrid::neighbors(*c))
            .filter(|n| self.is_grass(*n))
            .filter(|n| hexgrid::neighbors(*n).filter(|m| self.is_grass(*m)).count() >= 2)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let want = self.rng.random_range(1..=2usize);
        let mut placed = 0;
        let mut pool = candidates;
        while placed < want && !pool.is_empty() {
            let c = pool.swap_remove(self.rng.random_range(0..pool.len()));
            // Adjacent ramps could strip each other of their ground side.
            if self.near_ramp(c) {
                continue;
            }
            self.map.set_tile(c, Tile::new(Terrain::Ramp));
            self.ramps.push(c);
            placed += 1;
        }
        (placed > 0).then_some(())
    }

    fn near_ramp(&self, c: HexCoord) -> bool {
        self.ramps.iter().any(|r| distance(*r, c) <= 1)
    }

    fn place_town(&mut self) -> Option<()> {
        let inner = self.config.town_radius / 2;
        // Houses sit within radius/2 of their square, so squares this far
        // apart keep houses of different towns more than a radius apart.
        let separation = 2 * self.config.town_radius + 2;
        let mut center = None;
        for _ in 0..200 {
            let c = self.random_cell();
            let (row, col) = self.map.offset_of(c)?;
            let margin = inner;
            if row < margin
                || col < margin
                || row + margin >= self.config.rows
                || col + margin >= self.config.cols
            {
                continue;
            }
            if self
                .town_centers
                .iter()
                .any(|t| distance(*t, c) < separation)
            {
                continue;
            }
            let square_clear = std::iter::once(c)
                .chain(hexgrid::neighbors(c))
                .all(|n| self.is_free_grass(n) && !self.near_ramp(n));
            if square_clear {
                center = Some(c);
                break;
            }
        }
        let center = center?;
        let mut lots: Vec<HexCoord> = self
            .map
            .cells()
            .into_iter()
            .filter(|c| (2..=inner).contains(&distance(*c, center)))
            .filter(|c| self.is_free_grass(*c) && !self.near_ramp(*c))
            .collect();
        let want = self.pick_size(self.config.town_size_range) as usize;
        if lots.len() < 2 {
            return None;
        }
        for _ in 0..want.min(lots.len()) {
            let cell = lots.swap_remove(self.rng.random_range(0..lots.len()));
            let variant = HouseVariant {
                roof_color: RoofColor::ALL[self.rng.random_range(0..RoofColor::ALL.len())],
                floors: self.rng.random_range(1..=3),
            };
            self.map.props.push(Prop {
                kind: PropKind::House,
                cell,
                variant: Some(variant),
            });
        }
        self.map.set_tile(center, Tile::new(Terrain::Path));
        self.town_centers.push(center);
        Some(())
    }

    fn route(&mut self, from: HexCoord, to: HexCoord) -> Option<()> {
        // Corridors stay on the ground so the path network is contiguous.
        let map = &self.map;
        let off_ground = |c: HexCoord| {
            map.tile(c)
                .is_some_and(|t| matches!(t.terrain, Terrain::Mountain | Terrain::Ramp))
        };
        let path = hexgrid::shortest_path_with(map, from, to, off_ground).ok()??;
        for c in path {
            if self.is_grass(c) {
                self.map.set_tile(c, Tile::new(Terrain::Path));
            }
        }
        Some(())
    }

    fn route_paths(&mut self) -> Option<()> {
        let centers = self.town_centers.clone();
        for pair in centers.windows(2) {
            self.route(pair[0], pair[1])?;
        }
        if let Some(&first) = centers.first() {
            for ramp in self.ramps.clone() {
                let nearest = centers
                    .iter()
                    .copied()
                    .min_by_key(|c| (distance(*c, ramp), *c))
                    .unwrap_or(first);
                self.route(ramp, nearest)?;
            }
        }
        Some(())
    }

    fn place_streetlights(&mut self) {
        let inner = self.config.town_radius / 2 + 1;
        for center in self.town_centers.clone() {
            let mut spots: Vec<HexCoord> = self
                .map
                .cells()
                .into_iter()
                .filter(|c| distance(*c, center) <= inner && distance(*c, center) >= 2)
                .filter(|c| self.is_free_grass(*c) && !self.near_ramp(*c))
                .filter(|c| {
                    hexgrid::neighbors(*c)
                        .any(|n| self.map.tile(n).map(|t| t.terrain) == Some(Terrain::Path))
                })
                .collect();
            for _ in 0..self.config.streetlights_per_town {
                if spots.is_empty() {
                    break;
                }
                let cell = spots.swap_remove(self.rng.random_range(0..spots.len()));
                self.map.props.push(Prop {
                    kind: PropKind::Streetlight,
                    cell,
                    variant: None,
                });
            }
        }
    }

    fn scatter(&mut self) {
        let near_town = |c: HexCoord, centers: &[HexCoord]| centers.iter().any(|t| distance(*t, c) <= 1);
        for cell in self.map.cells() {
            if near_town(cell, &self.town_centers) || self.near_ramp(cell) {
                continue;
            }
            let roll: f64 = self.rng.random();
            if self.is_free_grass(cell) && roll < self.config.tree_density {
                self.map.props.push(Prop {
                    kind: PropKind::Tree,
                    cell,
                    variant: None,
                });
                continue;
            }
            let terrain = self.map.tile(cell).map(|t| t.terrain);
            let open = matches!(terrain, Some(Terrain::Grass | Terrain::Mountain))
                && self.map.prop_at(cell).is_none();
            if open && roll >= self.config.tree_density
                && roll < self.config.tree_density + self.config.rock_density
            {
                self.map.props.push(Prop {
                    kind: PropKind::Rock,
                    cell,
                    variant: None,
                });
            }
        }
    }

    /// Places spawns and cards uniformly inside the region reachable from the
    /// first town square (or the largest region on town-less maps).
    fn place_cards_and_spawns(&mut self) -> bool {
        let region: Vec<HexCoord> = match self.town_centers.first() {
            Some(c) => hexgrid::reachable(&self.map, *c).into_iter().collect(),
            None => largest_region(&self.map),
        };
        let needed = self.config.card_count as usize + 2;
        if region.len() < needed {
            return false;
        }
        let mut pool = region;
        let mut take = |rng: &mut ChaCha8Rng| pool.swap_remove(rng.random_range(0..pool.len()));
        self.map.leader_spawn = take(self.rng);
        self.map.follower_spawn = take(self.rng);
        let cells: Vec<HexCoord> = (0..self.config.card_count).map(|_| take(self.rng)).collect();
        let mut patterns = Vec::new();
        for _ in 0..16 {
            patterns = cells
                .iter()
                .map(|_| CardPattern {
                    color: self.config.card_colors[self.rng.random_range(0..self.config.card_colors.len())],
                    shape: self.config.card_shapes[self.rng.random_range(0..self.config.card_shapes.len())],
                    count: self.rng.random_range(1..=3),
                })
                .collect();
            if cells.len() < 3 || has_valid_triple(&patterns) {
                break;
            }
        }
        self.map.initial_cards = cells
            .into_iter()
            .zip(patterns)
            .enumerate()
            .map(|(i, (cell, pattern))| Card {
                id: i as u32,
                cell,
                pattern,
                selected: false,
            })
            .collect();
        true
    }
}

fn largest_region(map: &GameMap) -> Vec<HexCoord> {
    let mut seen: HashSet<HexCoord> = HashSet::new();
    let mut best: Vec<HexCoord> = Vec::new();
    for cell in map.cells() {
        if seen.contains(&cell) || !map.is_traversable(cell) {
            continue;
        }
        let region: Vec<HexCoord> = hexgrid::reachable(map, cell).into_iter().collect();
        seen.extend(region.iter().copied());
        if region.len() > best.len() {
            best = region;
        }
    }
    best
}

pub fn has_valid_triple(patterns: &[CardPattern]) -> bool {
    let n = patterns.len();
    (0..n).any(|i| {
        (i + 1..n).any(|j| (j + 1..n).any(|k| is_valid_set([&patterns[i], &patterns[j], &patterns[k]])))
    })
}

/// A synchronized stock of pre-generated, pre-validated maps.
#[derive(Debug)]
pub struct MapPool {
    config: GenConfig,
    inner: Mutex<PoolInner>,
}

#[derive(Debug)]
struct PoolInner {
    next_seed: u64,
    maps: VecDeque<GameMap>,
}

impl MapPool {
    pub fn new(config: GenConfig, base_seed: u64) -> Result<Self, GenError> {
        config.check_feasible()?;
        Ok(Self {
            config,
            inner: Mutex::new(PoolInner {
                next_seed: base_seed,
                maps: VecDeque::new(),
            }),
        })
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("pool lock").maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn reserve_seed(&self) -> u64 {
        let mut inner = self.inner.lock().expect("pool lock");
        let seed = inner.next_seed;
        inner.next_seed = inner.next_seed.wrapping_add(1);
        seed
    }

    fn generate(&self) -> Result<GameMap, GenError> {
        let seed = self.reserve_seed();
        generate_map(&self.config.clone().with_seed(seed))
    }

    /// Takes a map, generating one on the spot if the pool is empty.
    pub fn acquire(&self) -> Result<GameMap, GenError> {
        let ready = self.inner.lock().expect("pool lock").maps.pop_front();
        match ready {
            Some(map) => Ok(map),
            None => self.generate(),
        }
    }

    /// Tops the pool up to `target` maps. Generation happens outside the lock.
    pub fn refill(&self, target: usize) -> Result<(), GenError> {
        while self.len() < target {
            let map = self.generate()?;
            let mut inner = self.inner.lock().expect("pool lock");
            if inner.maps.len() < target {
                inner.maps.push_back(map);
            }
        }
        Ok(())
    }
}
