mod common;

use common::*;
use hexcollab_core::canonical::to_canonical_string;
use hexcollab_core::events::EventRecorder;
use hexcollab_core::game::CellView;
use hexcollab_core::map::{Terrain, Tile};
use hexcollab_core::scenario::{load_scenario, push_edit, start_scenario, Scenario, ScenarioEdit, ScenarioError};
use hexcollab_core::{replay, Action, Card, GameConfig, GameState, HexCoord, Role};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn live_prefix() -> GameState {
    let map = default_maps()[3].clone();
    let (mut state, _) = GameState::start(map, GameConfig::default(), 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..120 {
        let role = state.turn.active_role;
        let _ = state.apply_action(role, &any_action(&mut rng), 0);
    }
    state
}

#[test]
fn exported_prefix_loads_back_to_the_same_state() {
    let live = live_prefix();
    let text = Scenario::from_state(&live).to_canonical();
    let loaded = load_scenario(&text).unwrap();
    assert_eq!(loaded.to_state().unwrap().state_hash(), live.state_hash());
}

#[test]
fn minimal_scenario_loads_with_defaults() {
    let t = valid_triple();
    let (map, _) = board(6, 6, &[]);
    let text = format!(
        r#"{{"map":{},"leader":{{"cell":{{"q":0,"r":2}},"heading":0}},"follower":{{"cell":{{"q":2,"r":2}},"heading":3}},"cards":[{{"id":0,"cell":{{"q":1,"r":1}},"color":"black","shape":"plus","count":1,"selected":false}}]}}"#,
        to_canonical_string(&map)
    );
    let s = load_scenario(&text).unwrap();
    let state = s.to_state().unwrap();
    assert_eq!(state.turn.active_role, Role::Leader);
    assert_eq!(state.turn.turns_remaining, 12);
    assert!(state.instructions.is_empty());
    assert_eq!(state.cards[0].pattern, t[0]);
}

#[test]
fn follower_on_water_names_the_field() {
    let live = live_prefix();
    let mut s = Scenario::from_state(&live);
    s.map.set_tile(s.follower.cell, Tile::new(Terrain::Water));
    match load_scenario(&s.to_canonical()) {
        Err(ScenarioError::Invariant { field, .. }) => assert_eq!(field, "follower"),
        other => panic!("expected an invariant error, got {other:?}"),
    }
}

#[test]
fn schema_errors_are_distinguished() {
    assert!(matches!(load_scenario("{"), Err(ScenarioError::Schema(_))));
    assert!(matches!(load_scenario(r#"{"map":1}"#), Err(ScenarioError::Schema(_))));
}

#[test]
fn duplicate_card_cells_are_refused() {
    let live = live_prefix();
    let mut s = Scenario::from_state(&live);
    let cell = s.cards[0].cell;
    s.cards[1].cell = cell;
    assert!(matches!(load_scenario(&s.to_canonical()), Err(ScenarioError::Invariant { .. })));
}

#[test]
fn pushed_card_shows_up_and_replays() {
    let (map, config) = board(7, 9, &[(HexCoord::new(3, 1), valid_triple()[0])]);
    let base = new_state(map, config);
    let (mut live, start) = start_scenario(&Scenario::from_state(&base)).unwrap();
    assert_eq!(live.state_hash(), base.state_hash());
    let mut rec = EventRecorder::new("s");
    rec.record(start, 0);

    let mut cards = live.cards.clone();
    cards.push(Card {
        id: 9,
        cell: HexCoord::new(4, 4),
        pattern: valid_triple()[1],
        selected: false,
    });
    let edit = ScenarioEdit {
        cards: Some(cards),
        ..ScenarioEdit::default()
    };
    rec.record(push_edit(&mut live, &edit).unwrap(), 0);
    let obs = live.observe(Role::Leader);
    assert!(obs.cards.iter().any(|c| c.id == 9 && c.cell == HexCoord::new(4, 4)));
    assert_eq!(live.next_card_id, 10);

    rec.record(live.apply_action(Role::Leader, &Action::EndTurn, 0).unwrap(), 0);
    assert_eq!(replay(rec.events()).unwrap().state_hash(), live.state_hash());
}

#[test]
fn edit_flooding_the_follower_is_rejected_atomically() {
    let (map, config) = board(7, 9, &[]);
    let mut live = new_state(map, config);
    let before = live.clone();
    let edit = ScenarioEdit {
        tiles: vec![
            CellView {
                cell: HexCoord::new(0, 0),
                tile: Tile::new(Terrain::Water),
            },
            CellView {
                cell: live.follower.cell,
                tile: Tile::new(Terrain::Water),
            },
        ],
        ..ScenarioEdit::default()
    };
    assert!(push_edit(&mut live, &edit).is_err());
    assert_eq!(live, before);
}

#[test]
fn edit_outside_the_map_is_rejected() {
    let (map, config) = board(7, 9, &[]);
    let mut live = new_state(map, config);
    let edit = ScenarioEdit {
        tiles: vec![CellView {
            cell: HexCoord::new(50, 50),
            tile: Tile::new(Terrain::Grass),
        }],
        ..ScenarioEdit::default()
    };
    assert!(matches!(
        push_edit(&mut live, &edit),
        Err(ScenarioError::Invariant { field, .. }) if field == "tiles"
    ));
}

fn new_state(map: hexcollab_core::GameMap, config: GameConfig) -> GameState {
    let mut s = hexcollab_core::new_game(map, config, 2).unwrap();
    place(&mut s, pose(0, 3, 0), pose(2, 3, 3));
    s
}
