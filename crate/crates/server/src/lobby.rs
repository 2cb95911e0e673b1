//! Pairing queues and role assignment.
//!
//! Rules, checked in order:
//! (a) a leader-qualified player and a follower-only player: roles forced;
//! (b) two leader-qualified players: the higher mean recent score leads,
//!     ties go to whoever waited longer;
//! (c) human_bot lobbies: the human always leads and a bot follows.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::config::PairingPolicy;

/// Scores remembered per player for role assignment.
pub const RECENT_SCORES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JoinError {
    #[error("bots may not join a {0:?} lobby")]
    BotNotAllowed(PairingPolicy),
    #[error("humans may not join a bot_bot lobby")]
    HumanNotAllowed,
    #[error("recording can only be turned off in bot_bot lobbies")]
    RecordingRequired,
    #[error("player is already waiting")]
    Duplicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Queue {
    LeaderQualified,
    FollowerOnly,
    Bot,
}

#[derive(Debug, Clone)]
pub struct Waiting<T> {
    pub player_id: u64,
    pub leader_qualified: bool,
    pub is_bot: bool,
    pub record: bool,
    pub recent_mean: f64,
    /// Arrival order; lower waited longer.
    pub arrival: u64,
    pub ticket: T,
}

/// A matched pair. `follower` is `None` when an in-process bot fills the seat.
#[derive(Debug)]
pub struct Pairing<T> {
    pub leader: Waiting<T>,
    pub follower: Option<Waiting<T>>,
}

#[derive(Debug)]
pub struct Lobby<T> {
    pub id: String,
    pub policy: PairingPolicy,
    pub builtin_bot: bool,
    leader_qualified: VecDeque<Waiting<T>>,
    follower_only: VecDeque<Waiting<T>>,
    bots: VecDeque<Waiting<T>>,
    arrivals: u64,
}

pub struct JoinInfo {
    pub player_id: u64,
    pub leader_qualified: bool,
    pub is_bot: bool,
    pub record: bool,
    pub recent_mean: f64,
}

impl<T> Lobby<T> {
    pub fn new(id: impl Into<String>, policy: PairingPolicy, builtin_bot: bool) -> Self {
        Self {
            id: id.into(),
            policy,
            builtin_bot,
            leader_qualified: VecDeque::new(),
            follower_only: VecDeque::new(),
            bots: VecDeque::new(),
            arrivals: 0,
        }
    }

    pub fn queue(&self, q: Queue) -> &VecDeque<Waiting<T>> {
        match q {
            Queue::LeaderQualified => &self.leader_qualified,
            Queue::FollowerOnly => &self.follower_only,
            Queue::Bot => &self.bots,
        }
    }

    fn queue_mut(&mut self, q: Queue) -> &mut VecDeque<Waiting<T>> {
        match q {
            Queue::LeaderQualified => &mut self.leader_qualified,
            Queue::FollowerOnly => &mut self.follower_only,
            Queue::Bot => &mut self.bots,
        }
    }

    pub fn waiting(&self) -> usize {
        self.leader_qualified.len() + self.follower_only.len() + self.bots.len()
    }

    pub fn contains(&self, player_id: u64) -> bool {
        [&self.leader_qualified, &self.follower_only, &self.bots]
            .iter()
            .any(|q| q.iter().any(|w| w.player_id == player_id))
    }

    /// Enqueues a player; returns the queue and the 1-based position in it.
    pub fn join(&mut self, info: JoinInfo, ticket: T) -> Result<(Queue, u32), JoinError> {
        match self.policy {
            PairingPolicy::HumanHuman if info.is_bot => return Err(JoinError::BotNotAllowed(self.policy)),
            PairingPolicy::BotBot if !info.is_bot => return Err(JoinError::HumanNotAllowed),
            _ => {}
        }
        if !info.record && self.policy != PairingPolicy::BotBot {
            return Err(JoinError::RecordingRequired);
        }
        if self.contains(info.player_id) {
            return Err(JoinError::Duplicate);
        }
        let q = if info.is_bot {
            Queue::Bot
        } else if info.leader_qualified {
            Queue::LeaderQualified
        } else {
            Queue::FollowerOnly
        };
        let arrival = self.arrivals;
        self.arrivals += 1;
        let queue = self.queue_mut(q);
        queue.push_back(Waiting {
            player_id: info.player_id,
            leader_qualified: info.leader_qualified,
            is_bot: info.is_bot,
            record: info.record,
            recent_mean: info.recent_mean,
            arrival,
            ticket,
        });
        Ok((q, queue.len() as u32))
    }

    /// Removes a waiting player, returning its ticket.
    pub fn leave(&mut self, player_id: u64) -> Option<T> {
        for q in [Queue::LeaderQualified, Queue::FollowerOnly, Queue::Bot] {
            let queue = self.queue_mut(q);
            if let Some(i) = queue.iter().position(|w| w.player_id == player_id) {
                return queue.remove(i).map(|w| w.ticket);
            }
        }
        None
    }

    /// Forms at most one pair according to the lobby policy.
    pub fn try_pair(&mut self) -> Option<Pairing<T>> {
        match self.policy {
            PairingPolicy::HumanHuman => {
                if !self.leader_qualified.is_empty() && !self.follower_only.is_empty() {
                    let leader = self.leader_qualified.pop_front()?;
                    let follower = self.follower_only.pop_front()?;
                    return Some(Pairing {
                        leader,
                        follower: Some(follower),
                    });
                }
                if self.leader_qualified.len() >= 2 {
                    let a = self.leader_qualified.pop_front()?;
                    let b = self.leader_qualified.pop_front()?;
                    let (leader, follower) = order_pair(a, b);
                    return Some(Pairing {
                        leader,
                        follower: Some(follower),
                    });
                }
                None
            }
            PairingPolicy::HumanBot => {
                let human_queue = match (self.leader_qualified.front(), self.follower_only.front()) {
                    (Some(a), Some(b)) if b.arrival < a.arrival => Queue::FollowerOnly,
                    (Some(_), _) => Queue::LeaderQualified,
                    (None, Some(_)) => Queue::FollowerOnly,
                    (None, None) => return None,
                };
                if self.bots.is_empty() && !self.builtin_bot {
                    return None;
                }
                let leader = self.queue_mut(human_queue).pop_front()?;
                let follower = self.bots.pop_front();
                Some(Pairing { leader, follower })
            }
            PairingPolicy::BotBot => {
                if self.bots.len() < 2 {
                    return None;
                }
                let a = self.bots.pop_front()?;
                let b = self.bots.pop_front()?;
                let (leader, follower) = order_pair(a, b);
                Some(Pairing {
                    leader,
                    follower: Some(follower),
                })
            }
        }
    }
}

/// Picks the leader of two players: qualification first, then mean recent
/// score, then longer wait.
fn order_pair<T>(a: Waiting<T>, b: Waiting<T>) -> (Waiting<T>, Waiting<T>) {
    let a_leads = match (a.leader_qualified, b.leader_qualified) {
        (true, false) => true,
        (false, true) => false,
        _ => {
            if a.recent_mean != b.recent_mean {
                a.recent_mean > b.recent_mean
            } else {
                a.arrival < b.arrival
            }
        }
    };
    if a_leads {
        (a, b)
    } else {
        (b, a)
    }
}

/// Last [`RECENT_SCORES`] scores per player name.
#[derive(Debug, Default)]
pub struct ScoreBook {
    scores: HashMap<String, VecDeque<u32>>,
}

impl ScoreBook {
    pub fn push(&mut self, player: &str, score: u32) {
        let list = self.scores.entry(player.to_string()).or_default();
        list.push_back(score);
        while list.len() > RECENT_SCORES {
            list.pop_front();
        }
    }

    pub fn recent(&self, player: &str) -> Vec<u32> {
        self.scores
            .get(player)
            .map(|l| l.iter().copied().collect())
            .unwrap_or_default()
    }

    /// Mean of the recent scores; 0 for a player without history.
    pub fn mean(&self, player: &str) -> f64 {
        match self.scores.get(player) {
            Some(l) if !l.is_empty() => l.iter().map(|s| *s as f64).sum::<f64>() / l.len() as f64,
            _ => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn info(id: u64, qualified: bool, bot: bool, mean: f64) -> JoinInfo {
        JoinInfo {
            player_id: id,
            leader_qualified: qualified,
            is_bot: bot,
            record: true,
            recent_mean: mean,
        }
    }

    #[test]
    fn queues_follow_qualification() {
        let mut l: Lobby<()> = Lobby::new("l", PairingPolicy::HumanHuman, false);
        assert_eq!(l.join(info(1, false, false, 0.0), ()).unwrap(), (Queue::FollowerOnly, 1));
        assert_eq!(l.join(info(2, true, false, 0.0), ()).unwrap(), (Queue::LeaderQualified, 1));
        assert_eq!(l.join(info(2, true, false, 0.0), ()), Err(JoinError::Duplicate));
        assert_eq!(
            l.join(info(3, true, true, 0.0), ()),
            Err(JoinError::BotNotAllowed(PairingPolicy::HumanHuman))
        );
    }

    #[test]
    fn higher_mean_leads() {
        let mut l: Lobby<()> = Lobby::new("l", PairingPolicy::HumanHuman, false);
        l.join(info(1, true, false, 1.0), ()).unwrap();
        assert!(l.try_pair().is_none());
        l.join(info(2, true, false, 4.2), ()).unwrap();
        let p = l.try_pair().unwrap();
        assert_eq!(p.leader.player_id, 2);
        assert_eq!(p.follower.unwrap().player_id, 1);
    }

    #[test]
    fn ties_go_to_the_longer_wait() {
        let mut l: Lobby<()> = Lobby::new("l", PairingPolicy::HumanHuman, false);
        l.join(info(7, true, false, 3.0), ()).unwrap();
        l.join(info(5, true, false, 3.0), ()).unwrap();
        assert_eq!(l.try_pair().unwrap().leader.player_id, 7);
    }

    #[test]
    fn expert_leads_novice() {
        let mut l: Lobby<()> = Lobby::new("l", PairingPolicy::HumanHuman, false);
        l.join(info(1, false, false, 9.0), ()).unwrap();
        l.join(info(2, true, false, 0.0), ()).unwrap();
        let p = l.try_pair().unwrap();
        assert_eq!(p.leader.player_id, 2);
    }

    #[test]
    fn human_leads_bot() {
        let mut l: Lobby<()> = Lobby::new("l", PairingPolicy::HumanBot, false);
        l.join(info(1, true, true, 9.0), ()).unwrap();
        assert!(l.try_pair().is_none());
        l.join(info(2, false, false, 0.0), ()).unwrap();
        let p = l.try_pair().unwrap();
        assert_eq!(p.leader.player_id, 2);
        assert!(p.follower.unwrap().is_bot);

        let mut l: Lobby<()> = Lobby::new("l", PairingPolicy::HumanBot, true);
        l.join(info(3, true, false, 0.0), ()).unwrap();
        let p = l.try_pair().unwrap();
        assert!(p.follower.is_none(), "builtin bot fills the seat");
    }

    #[test]
    fn recording_is_mandatory_with_humans() {
        let mut l: Lobby<()> = Lobby::new("l", PairingPolicy::HumanBot, false);
        let mut i = info(1, true, true, 0.0);
        i.record = false;
        assert_eq!(l.join(i, ()), Err(JoinError::RecordingRequired));
        let mut l: Lobby<()> = Lobby::new("b", PairingPolicy::BotBot, false);
        let mut i = info(1, true, true, 0.0);
        i.record = false;
        assert!(l.join(i, ()).is_ok());
        assert_eq!(l.join(info(2, true, false, 0.0), ()), Err(JoinError::HumanNotAllowed));
    }

    #[test]
    fn score_book_keeps_the_last_ten() {
        let mut b = ScoreBook::default();
        for s in 0..15 {
            b.push("a", s);
        }
        assert_eq!(b.recent("a"), (5..15).collect::<Vec<_>>());
        assert_eq!(b.mean("a"), 9.5);
        assert_eq!(b.mean("nobody"), 0.0);
    }
}
