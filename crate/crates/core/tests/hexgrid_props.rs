use std::collections::{BTreeSet, HashMap, VecDeque};

use hexcollab_core::hexgrid::{self, distance, HexGrid, Turn};
use hexcollab_core::map::{GameMap, Terrain, Tile};
use hexcollab_core::{HexCoord, Heading, Pose};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn coord() -> impl Strategy<Value = HexCoord> {
    (-60i32..60, -60i32..60).prop_map(|(q, r)| HexCoord::new(q, r))
}

fn heading() -> impl Strategy<Value = Heading> {
    (0u8..6).prop_map(|h| Heading::new(h).unwrap())
}

/// Length of the shortest neighbor-relation walk, by plain BFS over
/// unbounded space.
fn bfs_distance(a: HexCoord, b: HexCoord) -> u32 {
    let mut seen = HashMap::from([(a, 0u32)]);
    let mut queue = VecDeque::from([a]);
    while let Some(c) = queue.pop_front() {
        if c == b {
            return seen[&c];
        }
        for h in 0..6 {
            let (dq, dr) = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)][h];
            let n = HexCoord::new(c.q + dq, c.r + dr);
            if !seen.contains_key(&n) {
                seen.insert(n, seen[&c] + 1);
                queue.push_back(n);
            }
        }
    }
    unreachable!()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn distance_is_a_metric(a in coord(), b in coord(), c in coord()) {
        prop_assert_eq!(distance(a, b), distance(b, a));
        prop_assert!(distance(a, c) <= distance(a, b) + distance(b, c));
        prop_assert_eq!(distance(a, b) == 0, a == b);
    }
}

proptest! {
    #[test]
    fn neighbor_and_opposite_cancel(c in coord(), h in heading()) {
        prop_assert_eq!(hexgrid::neighbor(hexgrid::neighbor(c, h), h.opposite()), c);
        prop_assert_eq!(distance(c, hexgrid::neighbor(c, h)), 1);
    }

    #[test]
    fn six_turns_return_home(h in heading()) {
        for turn in [Turn::Left, Turn::Right] {
            let mut x = h;
            for _ in 0..6 {
                x = hexgrid::rotate(x, turn);
            }
            prop_assert_eq!(x, h);
        }
    }

    #[test]
    fn distance_matches_bfs(dq in -8i32..8, dr in -8i32..8) {
        let a = HexCoord::new(0, 0);
        let b = HexCoord::new(dq, dr);
        prop_assert_eq!(distance(a, b), bfs_distance(a, b));
    }

    #[test]
    fn visibility_is_monotone(
        q in 0i32..12, r in 0i32..12, h in heading(),
        fov in 1.0f64..360.0, extra_fov in 0.0f64..180.0,
        range in 0u32..10, extra_range in 0u32..5,
    ) {
        let map = GameMap::open(14, 14);
        let cell = GameMap::cell_at(r as u32, q as u32);
        let pose = Pose::new(cell, h);
        let small = hexgrid::visible_set(&map, pose, fov, range);
        let wider = hexgrid::visible_set(&map, pose, (fov + extra_fov).min(360.0), range);
        let longer = hexgrid::visible_set(&map, pose, fov, range + extra_range);
        prop_assert!(small.is_subset(&wider));
        prop_assert!(small.is_subset(&longer));
        prop_assert!(small.contains(&cell));
        for c in &small {
            prop_assert!(distance(cell, *c) <= range);
        }
    }
}

/// Independent BFS over the movement relation of a GameMap, returning only
/// the path length.
fn oracle_len(map: &GameMap, from: HexCoord, to: HexCoord) -> Option<usize> {
    let mut seen = HashMap::from([(from, 1usize)]);
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        if c == to {
            return Some(seen[&c]);
        }
        let d = seen[&c];
        for n in hexgrid::neighbors(c) {
            let ok = match (map.tile(c), map.tile(n)) {
                (Some(a), Some(b)) => {
                    map.is_traversable(n)
                        && (a.elevation == b.elevation
                            || a.terrain == Terrain::Ramp
                            || b.terrain == Terrain::Ramp)
                }
                _ => false,
            };
            if ok && !seen.contains_key(&n) {
                seen.insert(n, d + 1);
                queue.push_back(n);
            }
        }
    }
    None
}

fn random_map(rng: &mut ChaCha8Rng) -> GameMap {
    let mut map = GameMap::open(15, 15);
    for cell in map.cells() {
        let roll: f64 = rng.random();
        let tile = if roll < 0.2 {
            Tile::new(Terrain::Water)
        } else if roll < 0.3 {
            Tile::new(Terrain::Mountain)
        } else if roll < 0.35 {
            Tile::new(Terrain::Ramp)
        } else {
            Tile::new(Terrain::Grass)
        };
        map.set_tile(cell, tile);
    }
    map
}

#[test]
fn shortest_path_matches_oracle_on_random_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let map = random_map(&mut rng);
        let cells = map.cells();
        for _ in 0..20 {
            let a = cells[rng.random_range(0..cells.len())];
            let b = cells[rng.random_range(0..cells.len())];
            if !map.is_traversable(a) || !map.is_traversable(b) {
                continue;
            }
            let got = hexgrid::shortest_path(&map, a, b).unwrap();
            assert_eq!(got.as_ref().map(|p| p.len()), oracle_len(&map, a, b));
            if let Some(p) = got {
                assert_eq!(p.first(), Some(&a));
                assert_eq!(p.last(), Some(&b));
                for w in p.windows(2) {
                    assert!(map.can_step(w[0], w[1]));
                }
            }
        }
    }
}

#[test]
fn out_of_bounds_endpoints_are_errors() {
    let map = GameMap::open(5, 5);
    assert!(hexgrid::shortest_path(&map, HexCoord::new(0, 0), HexCoord::new(40, 40)).is_err());
}

#[test]
fn half_plane_view_matches_brute_force() {
    // fov 180 facing east: keep cells whose center has a non-negative x
    // offset, within distance 2.
    let map = GameMap::open(9, 9);
    let center = GameMap::cell_at(4, 4);
    let pose = Pose::new(center, Heading::new(0).unwrap());
    let got = hexgrid::visible_set(&map, pose, 180.0, 2);
    let (cx, _) = center.center();
    let want: BTreeSet<HexCoord> = map
        .cells()
        .into_iter()
        .filter(|c| distance(center, *c) <= 2 && c.center().0 - cx >= -1e-9)
        .collect();
    assert_eq!(got, want);
}
