//! Trajectory storage between rollout collection and the policy update.

use super::LearnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Team {
    Hiders,
    Seekers,
}

impl Team {
    pub fn name(self) -> &'static str {
        match self {
            Team::Hiders => "hiders",
            Team::Seekers => "seekers",
        }
    }
}

/// Buffer capacity: batch size times environment count times instances per
/// environment. Errors on overflow rather than wrapping.
pub fn buffer_size(batch: u64, env_count: u64, instances: u64) -> Result<u64, LearnError> {
    batch
        .checked_mul(env_count)
        .and_then(|v| v.checked_mul(instances))
        .ok_or(LearnError::Overflow(batch, env_count, instances))
}

/// One decision's worth of experience for one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub obs: Vec<f64>,
    /// Observations of the agent's teammates at the same decision; empty for
    /// solo training. Feeds the team critic.
    pub teammate_obs: Vec<Vec<f64>>,
    pub action_c: [f64; 4],
    pub action_d: usize,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    pub done: bool,
    pub team: Team,
    pub instance: u32,
    pub advantage: f64,
    pub target: f64,
}

/// Fixed-capacity rollout storage, flushed by each update.
#[derive(Debug, Clone)]
pub struct RolloutBuffer {
    pub capacity: usize,
    pub entries: Vec<Entry>,
}

impl RolloutBuffer {
    pub fn new(capacity: usize) -> Self {
        RolloutBuffer { capacity, entries: Vec::with_capacity(capacity) }
    }

    pub fn push(&mut self, entry: Entry) -> Result<(), LearnError> {
        if self.entries.len() >= self.capacity {
            return Err(LearnError::BufferFull(self.capacity));
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// The single team in the buffer; mixed teams are a caller bug.
    pub fn team(&self) -> Result<Option<Team>, LearnError> {
        let mut team = None;
        for e in &self.entries {
            match team {
                None => team = Some(e.team),
                Some(t) if t != e.team => return Err(LearnError::MixedTeams(t, e.team)),
                _ => {}
            }
        }
        Ok(team)
    }
}
