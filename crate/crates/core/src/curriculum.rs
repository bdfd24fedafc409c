//! Difficulty scheduling: four arena levels and threshold-triggered
//! advancement over a sliding window of episode rewards.
//!
//! Level `k` enables `k` wall chunks, `k` openings, and `k` props; level 4
//! additionally halves the per-frame reward so late training leans on the
//! terminal objectives. Difficulty only ever goes up.

/// Arena knobs for one difficulty level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSpec {
    pub level: u8,
    pub enabled_wall_chunks: u8,
    pub enabled_openings: u32,
    pub prop_count: u32,
    pub obstacle_count: u32,
    /// Multiplier on per-frame rewards.
    pub reward_scale: f64,
}

/// The fixed four-level ladder.
pub fn level_spec(level: u8) -> LevelSpec {
    let level = level.clamp(1, 4);
    LevelSpec {
        level,
        enabled_wall_chunks: level,
        enabled_openings: level as u32,
        prop_count: prop_count(level, 0.0),
        obstacle_count: 5,
        reward_scale: if level == 4 { 0.5 } else { 1.0 },
    }
}

/// Props per level: one per enabled opening. The reward argument is recorded
/// by callers but does not alter the count.
pub fn prop_count(level: u8, _reward: f64) -> u32 {
    level.clamp(1, 4) as u32
}

/// A turn of the difficulty dial, reported for the transition log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelTransition {
    pub from: u8,
    pub to: u8,
}

/// Sliding-window advancement state.
#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumState {
    pub difficulty: u8,
    pub threshold: f64,
    pub window: usize,
    pub recent_rewards: Vec<f64>,
    pub iteration: u64,
}

impl CurriculumState {
    pub fn new(threshold: f64, window: usize) -> Self {
        CurriculumState {
            difficulty: 1,
            threshold,
            window: window.max(1),
            recent_rewards: Vec::new(),
            iteration: 0,
        }
    }

    /// Pinned difficulty: curriculum disabled.
    pub fn fixed(level: u8) -> Self {
        CurriculumState {
            difficulty: level.clamp(1, 4),
            threshold: f64::INFINITY,
            window: 1,
            recent_rewards: Vec::new(),
            iteration: 0,
        }
    }

    /// The level spec in force at training iteration `t`.
    pub fn task_for_iteration(&self, _t: u64) -> LevelSpec {
        level_spec(self.difficulty)
    }

    /// Feed one finished episode's reward. When the window is full and its
    /// mean strictly exceeds the threshold, difficulty steps up once (capped
    /// at 4) and the window clears.
    pub fn observe_episode(&mut self, episode_reward: f64) -> Option<LevelTransition> {
        self.iteration += 1;
        self.recent_rewards.push(episode_reward);
        if self.recent_rewards.len() > self.window {
            self.recent_rewards.remove(0);
        }
        if self.recent_rewards.len() == self.window {
            let mean = self.recent_rewards.iter().sum::<f64>() / self.window as f64;
            if mean > self.threshold && self.difficulty < 4 {
                let from = self.difficulty;
                self.difficulty += 1;
                self.recent_rewards.clear();
                return Some(LevelTransition { from, to: self.difficulty });
            }
        }
        None
    }
}

/// Pure form of [`CurriculumState::observe_episode`].
pub fn maybe_advance(state: &CurriculumState, episode_reward: f64) -> CurriculumState {
    let mut next = state.clone();
    next.observe_episode(episode_reward);
    next
}
