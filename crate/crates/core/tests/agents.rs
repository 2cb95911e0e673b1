mod common;

use common::*;
use hexcollab_core::agents::{
    oracle_follower, parse_instruction, scripted_leader, Command, Pending, SelfPlay, TurnPlan,
};
use hexcollab_core::hexgrid::{self, Heading};
use hexcollab_core::{
    new_game, Action, CardColor, CardShape, EventKind, GameConfig, GameState, HexCoord, Role,
};

/// A game on an open board where the leader has just handed the follower
/// `text` and passed the turn.
fn follower_with(text: &str, config: impl FnOnce(&mut GameConfig)) -> GameState {
    let (map, mut cfg) = board(7, 12, &[]);
    config(&mut cfg);
    let mut s = new_game(map, cfg, 5).unwrap();
    place(&mut s, pose(0, 0, 0), pose(1, 3, 0));
    s.apply_action(Role::Leader, &Action::send(text), 0).unwrap();
    s.apply_action(Role::Leader, &Action::EndTurn, 0).unwrap();
    assert_eq!(s.turn.active_role, Role::Follower);
    s
}

fn follower_step(s: &mut GameState, pending: &mut Pending) -> Action {
    let action = oracle_follower(&s.observe(Role::Follower), pending);
    s.apply_action(Role::Follower, &action, 0).unwrap();
    action
}

#[test]
fn goto_two_ahead_walks_twice_then_moves_on() {
    let mut s = follower_with("goto 3 3; turn left", |_| {});
    assert!(s.turn.steps_remaining >= 10);
    let target = HexCoord::new(3, 3);
    // Path oracle: the straight line east is a shortest path of length 2.
    let path = hexgrid::shortest_path(&s.map, s.follower.cell, target).unwrap().unwrap();
    assert_eq!(path.len(), 3);

    let mut pending = Pending::default();
    assert_eq!(follower_step(&mut s, &mut pending), Action::Forward);
    assert_eq!(follower_step(&mut s, &mut pending), Action::Forward);
    assert_eq!(s.follower.cell, target);
    assert_eq!(follower_step(&mut s, &mut pending), Action::TurnLeft);
    assert_eq!(follower_step(&mut s, &mut pending), Action::MarkInstructionDone);
}

#[test]
fn exhausted_commands_mark_the_instruction_done() {
    let mut s = follower_with("wait", |_| {});
    let mut pending = Pending::default();
    assert_eq!(follower_step(&mut s, &mut pending), Action::MarkInstructionDone);
    // No active instruction is left, so the follower hands the turn back.
    assert_eq!(follower_step(&mut s, &mut pending), Action::EndTurn);
    assert_eq!(s.turn.active_role, Role::Leader);
}

#[test]
fn follower_idles_outside_its_turn() {
    let s = follower_with("wait", |_| {});
    let mut pending = Pending::default();
    assert_eq!(oracle_follower(&s.observe(Role::Leader), &mut pending), Action::Noop);
}

#[test]
fn free_form_text_is_waited_out() {
    assert!(parse_instruction("grab the red star please").is_err());
    let mut s = follower_with("grab the red star please", |_| {});
    let mut pending = Pending::default();
    assert_eq!(follower_step(&mut s, &mut pending), Action::MarkInstructionDone);
}

#[test]
fn target_beyond_fog_is_abandoned() {
    let mut s = follower_with("goto 7 3; turn left", |c| c.fog_range = 3);
    assert!(hexgrid::distance(s.follower.cell, HexCoord::new(7, 3)) > 3);
    let mut pending = Pending::default();
    assert_eq!(follower_step(&mut s, &mut pending), Action::MarkInstructionDone);
    assert!(pending.commands.is_empty());
    assert_eq!(s.follower, pose(1, 3, 0));
}

/// The leader's plan for a board holding `cards`, with the leader placed far
/// from a follower at (4,3).
fn leader_plan(cards: &[(HexCoord, hexcollab_core::CardPattern)]) -> TurnPlan {
    let (map, config) = board(9, 12, cards);
    let mut s = new_game(map, config, 3).unwrap();
    place(&mut s, pose(-2, 8, 0), pose(4, 3, 0));
    scripted_leader(&s.observe(Role::Leader))
}

#[test]
fn cards_around_the_follower_all_go_to_it() {
    let f = HexCoord::new(4, 3);
    let t = valid_triple();
    let cells: Vec<HexCoord> = (0..3).map(|d| hexgrid::neighbor(f, Heading::new(d).unwrap())).collect();
    let plan = leader_plan(&[(cells[0], t[0]), (cells[1], t[1]), (cells[2], t[2])]);
    let TurnPlan::Collect {
        card_ids,
        cost,
        leader_card,
        instruction,
    } = plan
    else {
        panic!("expected a collect plan, got {plan:?}");
    };
    assert_eq!(card_ids, [0, 1, 2]);
    assert_eq!(leader_card, None, "the leader is too far to help");
    // Cost oracle: one step to the first card, then one between neighbours.
    assert_eq!(cost, 3);
    let cmds = parse_instruction(instruction.as_deref().unwrap()).unwrap();
    let mut toggled: Vec<HexCoord> = cmds
        .iter()
        .map(|c| match c {
            Command::ToggleCardAt(cell) => *cell,
            other => panic!("unexpected {other:?}"),
        })
        .collect();
    toggled.sort();
    let mut want = cells.clone();
    want.sort();
    assert_eq!(toggled, want);
}

#[test]
fn no_valid_triple_means_reposition() {
    let p = pat(CardColor::Black, CardShape::Plus, 1);
    let q = pat(CardColor::Blue, CardShape::Torch, 2);
    let plan = leader_plan(&[
        (HexCoord::new(5, 3), p),
        (HexCoord::new(6, 3), p),
        (HexCoord::new(7, 3), q),
    ]);
    assert!(matches!(plan, TurnPlan::Reposition { toward: Some(_) }), "{plan:?}");
    assert_eq!(plan.instruction(), None);
}

#[test]
fn equal_cost_plans_pick_the_lowest_ids() {
    let f = HexCoord::new(4, 3);
    let t = valid_triple();
    // Two copies of the same set, mirrored around the follower.
    let cards: Vec<_> = (0..6)
        .map(|d| (hexgrid::neighbor(f, Heading::new(d).unwrap()), t[d as usize % 3]))
        .collect();
    match leader_plan(&cards) {
        TurnPlan::Collect { card_ids, cost, .. } => {
            assert_eq!(cost, 3);
            assert_eq!(card_ids, [0, 1, 2]);
        }
        other => panic!("expected a collect plan, got {other:?}"),
    }
}

#[test]
fn bots_only_submit_legal_actions() {
    for map in &default_maps()[..3] {
        let mut game = SelfPlay::new("g", map.clone(), GameConfig::default()).unwrap();
        loop {
            let role = game.state.turn.active_role;
            let legal = game.state.legal_actions(role);
            let Some(played) = game.step() else { break };
            let played = played.unwrap();
            assert!(legal.contains(&played.action.kind()), "{:?} not legal", played.action);
        }
        assert!(game.state.over);
    }
}

#[test]
fn selfplay_is_deterministic() {
    let map = default_maps()[4].clone();
    let mut a = SelfPlay::new("g", map.clone(), GameConfig::default()).unwrap();
    let mut b = SelfPlay::new("g", map, GameConfig::default()).unwrap();
    let sa = a.run().unwrap();
    let sb = b.run().unwrap();
    assert_eq!(sa, sb);
    assert_eq!(a.events(), b.events());
}

#[test]
fn every_sent_instruction_parses() {
    let mut sent = 0;
    for map in &default_maps()[3..] {
        let mut game = SelfPlay::new("g", map.clone(), GameConfig::default()).unwrap();
        game.run().unwrap();
        for e in game.events() {
            if let EventKind::InstructionSent { text, .. } = &e.event.kind {
                parse_instruction(text).unwrap();
                sent += 1;
            }
        }
    }
    assert!(sent > 10);
}
