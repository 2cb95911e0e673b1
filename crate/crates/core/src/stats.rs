use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::events::{EventKind, RecordedEvent};

/// Summary row for one stored game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameRecord {
    pub game_id: String,
    pub lobby: String,
    pub start_time: u64,
    pub end_time: Option<u64>,
    pub final_score: u32,
    /// Opaque player ids, leader first.
    pub players: Vec<String>,
    pub event_count: u64,
    pub instruction_count: u64,
    /// Ended by GameOver (as opposed to abandonment or still running).
    pub completed: bool,
    /// State hash of the live game when it ended.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_hash: Option<String>,
}

impl GameRecord {
    /// Summarizes a game's log.
    pub fn from_events(lobby: &str, players: Vec<String>, events: &[RecordedEvent]) -> Self {
        let game_id = events.first().map(|e| e.game_id.clone()).unwrap_or_default();
        let mut rec = GameRecord {
            game_id,
            lobby: lobby.to_string(),
            start_time: events.first().map(|e| e.wall_time).unwrap_or(0),
            end_time: None,
            final_score: 0,
            players,
            event_count: events.len() as u64,
            instruction_count: 0,
            completed: false,
            final_hash: None,
        };
        for e in events {
            match &e.event.kind {
                EventKind::InstructionSent { .. } => rec.instruction_count += 1,
                EventKind::SetCompleted { score, .. } => rec.final_score = *score,
                EventKind::GameOver { score } => {
                    rec.final_score = *score;
                    rec.completed = true;
                    rec.end_time = Some(e.wall_time);
                }
                EventKind::Abandoned { .. } => rec.end_time = Some(e.wall_time),
                _ => {}
            }
        }
        rec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub game_count: u64,
    pub instruction_count: u64,
    pub mean_score: Option<f64>,
    pub median_score: Option<f64>,
    pub score_histogram: BTreeMap<u32, u64>,
}

/// Statistics over the completed games among `records`.
pub fn compute_stats<'a, I>(records: I) -> Stats
where
    I: IntoIterator<Item = &'a GameRecord>,
{
    let done: Vec<&GameRecord> = records.into_iter().filter(|r| r.completed).collect();
    let mut scores: Vec<u32> = done.iter().map(|r| r.final_score).collect();
    scores.sort_unstable();
    let mut score_histogram = BTreeMap::new();
    for s in &scores {
        *score_histogram.entry(*s).or_insert(0) += 1;
    }
    let n = scores.len();
    let mean_score = (n > 0).then(|| scores.iter().map(|s| *s as f64).sum::<f64>() / n as f64);
    let median_score = (n > 0).then(|| {
        if n % 2 == 1 {
            scores[n / 2] as f64
        } else {
            (scores[n / 2 - 1] as f64 + scores[n / 2] as f64) / 2.0
        }
    });
    Stats {
        game_count: n as u64,
        instruction_count: done.iter().map(|r| r.instruction_count).sum(),
        mean_score,
        median_score,
        score_histogram,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(score: u32, completed: bool) -> GameRecord {
        GameRecord {
            game_id: format!("g{score}"),
            lobby: "l".into(),
            start_time: 0,
            end_time: None,
            final_score: score,
            players: vec![],
            event_count: 1,
            instruction_count: 2,
            completed,
            final_hash: None,
        }
    }

    #[test]
    fn empty_store() {
        let s = compute_stats(&[]);
        assert_eq!(s.game_count, 0);
        assert_eq!(s.mean_score, None);
        assert_eq!(s.median_score, None);
    }

    #[test]
    fn mean_and_median() {
        let s = compute_stats(&[rec(1, true), rec(2, true), rec(3, true)]);
        assert_eq!(s.mean_score, Some(2.0));
        assert_eq!(s.median_score, Some(2.0));
        let s = compute_stats(&[rec(0, true), rec(0, true), rec(10, true), rec(9, false)]);
        assert!((s.mean_score.unwrap() - 3.33).abs() < 0.01);
        assert_eq!(s.median_score, Some(0.0));
        assert_eq!(s.game_count, 3);
        assert_eq!(s.instruction_count, 6);
        assert_eq!(s.score_histogram.get(&0), Some(&2));
    }
}
