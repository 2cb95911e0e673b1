#![allow(dead_code)]

use std::sync::OnceLock;

use hexcollab_core::game::Action;
use hexcollab_core::map::{Terrain, Tile};
use hexcollab_core::{
    generate_map, Card, CardColor, CardPattern, CardShape, GameConfig, GameMap, GameState,
    GenConfig, HexCoord, Heading, Pose, Role,
};
use rand::Rng;

pub fn pat(color: CardColor, shape: CardShape, count: u8) -> CardPattern {
    CardPattern {
        color,
        shape,
        count,
    }
}

/// A valid set and a pattern that completes nothing with any two of it.
pub fn valid_triple() -> [CardPattern; 3] {
    [
        pat(CardColor::Black, CardShape::Plus, 1),
        pat(CardColor::Blue, CardShape::Torch, 2),
        pat(CardColor::Green, CardShape::Star, 3),
    ]
}

/// An open board with the given cards (ids in order) and a config whose
/// card_count matches.
pub fn board(rows: u32, cols: u32, cards: &[(HexCoord, CardPattern)]) -> (GameMap, GameConfig) {
    let mut map = GameMap::open(rows, cols);
    map.initial_cards = cards
        .iter()
        .enumerate()
        .map(|(i, (cell, pattern))| Card {
            id: i as u32,
            cell: *cell,
            pattern: *pattern,
            selected: false,
        })
        .collect();
    let config = GameConfig {
        card_count: cards.len() as u32,
        ..GameConfig::default()
    };
    (map, config)
}

pub fn water(map: &mut GameMap, cell: HexCoord) {
    map.set_tile(cell, Tile::new(Terrain::Water));
}

/// Places both agents explicitly; the spawn heading comes from the RNG.
pub fn place(state: &mut GameState, leader: Pose, follower: Pose) {
    state.leader = leader;
    state.follower = follower;
}

pub fn pose(q: i32, r: i32, h: u8) -> Pose {
    Pose::new(HexCoord::new(q, r), Heading::new(h).unwrap())
}

/// Default-config maps for a few seeds, generated once per test binary.
pub fn default_maps() -> &'static [GameMap] {
    static MAPS: OnceLock<Vec<GameMap>> = OnceLock::new();
    MAPS.get_or_init(|| {
        (0..6)
            .map(|s| generate_map(&GenConfig::default().with_seed(s)).unwrap())
            .collect()
    })
}

pub fn any_action<R: Rng>(rng: &mut R) -> Action {
    match rng.random_range(0..10) {
        0 | 1 => Action::Forward,
        2 => Action::Backward,
        3 => Action::TurnLeft,
        4 => Action::TurnRight,
        5 => Action::EndTurn,
        6 => Action::Noop,
        7 => Action::send(format!("forward {}", rng.random_range(1..4))),
        8 => Action::MarkInstructionDone,
        _ => Action::CancelInstructions,
    }
}

pub fn any_role<R: Rng>(rng: &mut R) -> Role {
    if rng.random_bool(0.5) {
        Role::Leader
    } else {
        Role::Follower
    }
}
