mod common;

use common::*;
use hexcollab_core::events::EventRecorder;
use hexcollab_core::game::{InstructionStatus, Observation};
use hexcollab_core::hexgrid;
use hexcollab_core::{replay, Action, EventKind, GameConfig, GameState, Role};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Checks an observation against the follower's visibility contract.
fn follower_contract(state: &GameState, obs: &Observation) -> Result<(), String> {
    let pose = state.follower;
    let half = state.config.fov_degrees / 2.0;
    for c in &obs.cells {
        let d = hexgrid::distance(pose.cell, c.cell);
        if d > state.config.fog_range {
            return Err(format!("{} beyond fog", c.cell));
        }
        if c.cell != pose.cell && hexgrid::bearing_offset(pose.cell, pose.heading, c.cell) > half + 1e-9 {
            return Err(format!("{} outside the view cone", c.cell));
        }
    }
    let seen: std::collections::BTreeSet<_> = obs.cells.iter().map(|c| c.cell).collect();
    if obs.cards.iter().any(|c| !seen.contains(&c.cell)) {
        return Err("card outside the view".into());
    }
    if obs
        .instructions
        .iter()
        .any(|i| i.status == InstructionStatus::Queued)
    {
        return Err("queued instruction leaked".into());
    }
    if state.config.hide_card_patterns && obs.cards.iter().any(|c| !c.selected && c.pattern.is_some()) {
        return Err("pattern of an unselected card leaked".into());
    }
    if let Some(other) = obs.other_pose {
        if !seen.contains(&other.cell) {
            return Err("leader visible through fog".into());
        }
    }
    Ok(())
}

/// Drives random actions through the engine, checking every invariant on the
/// way. Returns the recorded log and the final state.
fn random_game(map_idx: usize, seed: u64, steps: usize, hide: bool) -> (Vec<hexcollab_core::RecordedEvent>, GameState) {
    let map = default_maps()[map_idx].clone();
    let config = GameConfig {
        hide_card_patterns: hide,
        ..GameConfig::default()
    };
    let (mut state, start) = GameState::start(map, config, seed).unwrap();
    let mut rec = EventRecorder::new("g");
    rec.record(start, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut now = 0u64;
    let card_count = state.cards.len();
    let mut moves_this_turn = 0u32;
    for _ in 0..steps {
        if state.over {
            break;
        }
        now += rng.random_range(0..2_500);
        let role = any_role(&mut rng);
        let action = any_action(&mut rng);
        let before = state.clone();
        let budget = state.config.steps_for(state.turn.active_role);
        match state.apply_action(role, &action, now) {
            Err(_) => assert_eq!(state, before, "rejection changed the state"),
            Ok(events) => {
                let mut turned_over = false;
                for e in &events {
                    match &e.kind {
                        EventKind::Move { .. } => moves_this_turn += 1,
                        EventKind::TurnTransition { .. } => turned_over = true,
                        EventKind::SetCompleted { bonus_turns, score, .. } => {
                            assert_eq!(*bonus_turns, state.config.bonus_for_set(*score));
                        }
                        _ => {}
                    }
                }
                if !turned_over {
                    // Step conservation within the running turn.
                    assert_eq!(budget - state.turn.steps_remaining, moves_this_turn);
                } else {
                    assert!(moves_this_turn <= budget);
                    moves_this_turn = 0;
                }
                if !matches!(action, Action::Forward | Action::Backward | Action::TurnLeft | Action::TurnRight) {
                    assert!(events.iter().all(|e| !matches!(e.kind, EventKind::Move { .. })));
                }
                rec.record(events, now);
            }
        }
        assert_eq!(state.cards.len(), card_count);
        assert_eq!(state.turn.score, state.turn.sets_collected);
        state.check_invariants().unwrap();
        follower_contract(&state, &state.observe(Role::Follower)).unwrap();
    }
    (rec.into_events(), state)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_play_keeps_invariants(map in 0usize..6, seed in any::<u64>(), hide in any::<bool>()) {
        let (log, live) = random_game(map, seed, 400, hide);
        let replayed = replay(&log).unwrap();
        prop_assert_eq!(replayed.state_hash(), live.state_hash());
    }

    #[test]
    fn play_is_deterministic(map in 0usize..6, seed in any::<u64>()) {
        let (a, sa) = random_game(map, seed, 200, false);
        let (b, sb) = random_game(map, seed, 200, false);
        prop_assert_eq!(a, b);
        prop_assert_eq!(sa.canonical_string(), sb.canonical_string());
    }
}

#[test]
fn prefixes_replay_to_live_snapshots() {
    let map = default_maps()[2].clone();
    let (mut state, start) = GameState::start(map, GameConfig::default(), 9).unwrap();
    let mut rec = EventRecorder::new("g");
    rec.record(start, 0);
    // (log length, live state hash) after every accepted action.
    let mut snapshots = vec![(1, state.state_hash())];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..300 {
        if state.over {
            break;
        }
        let role = state.turn.active_role;
        let action = any_action(&mut rng);
        if let Ok(events) = state.apply_action(role, &action, 0) {
            rec.record(events, 0);
            snapshots.push((rec.events().len(), state.state_hash()));
        }
    }
    assert!(snapshots.len() > 50);
    for (k, hash) in snapshots {
        assert_eq!(replay(&rec.events()[..k]).unwrap().state_hash(), hash, "prefix {k}");
    }
}

#[test]
fn tampered_logs_are_refused() {
    let map = default_maps()[0].clone();
    let (mut state, start) = GameState::start(map, GameConfig::default(), 1).unwrap();
    let mut rec = EventRecorder::new("g");
    rec.record(start, 0);
    rec.record(state.apply_action(Role::Leader, &Action::EndTurn, 0).unwrap(), 0);
    let mut log = rec.into_events();
    assert!(replay(&log).is_ok());
    assert!(replay(&[]).is_err());
    assert!(replay(&log[1..]).is_err(), "log must open with GameStart");
    log[1].seq = 5;
    assert!(replay(&log).is_err(), "gap in seq");
}
