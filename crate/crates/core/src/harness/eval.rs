//! Greedy-policy evaluation over whole episodes.

use super::instance::{EnvInstance, InstanceConfig};
use super::rollout::collect_episodes;
use super::{HarnessError, PolicyRef, TeamPolicies};
use crate::config::RunConfig;
use crate::curriculum::level_spec;
use std::collections::BTreeMap;

/// Aggregate results of an evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub episodes: u64,
    /// Fraction of episodes ending in a tag.
    pub tag_rate: f64,
    /// Mean hidden-decision fraction across episodes.
    pub mean_hidden_fraction: f64,
    pub mean_episode_len_decisions: f64,
    /// Blocked openings over enabled openings, averaged across episodes.
    pub openings_blocked_rate: f64,
    pub mean_reward: BTreeMap<&'static str, f64>,
}

impl EvalSummary {
    pub fn empty() -> Self {
        EvalSummary {
            episodes: 0,
            tag_rate: 0.0,
            mean_hidden_fraction: 0.0,
            mean_episode_len_decisions: 0.0,
            openings_blocked_rate: 0.0,
            mean_reward: BTreeMap::new(),
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("episodes: {}\n", self.episodes));
        s.push_str(&format!("tag_rate: {}\n", self.tag_rate));
        s.push_str(&format!("mean_hidden_fraction: {}\n", self.mean_hidden_fraction));
        s.push_str(&format!("mean_episode_len_decisions: {}\n", self.mean_episode_len_decisions));
        s.push_str(&format!("openings_blocked_rate: {}\n", self.openings_blocked_rate));
        for (team, r) in &self.mean_reward {
            s.push_str(&format!("mean_reward_{team}: {r}\n"));
        }
        s
    }
}

/// Evaluate a pair of policies over `episodes` whole episodes. Policies act
/// greedily when learned; zero episodes yields an empty summary.
pub fn evaluate(
    config: &RunConfig,
    hiders: PolicyRef,
    seekers: PolicyRef,
    episodes: u64,
    seed: u64,
) -> Result<EvalSummary, HarnessError> {
    if episodes == 0 {
        return Ok(EvalSummary::empty());
    }
    let mut cfg = config.clone();
    cfg.seed = seed;
    // Evaluation never records replays.
    cfg.harness.replay_record_every = 0;
    let icfg = InstanceConfig::new(&cfg);
    let instance_count = (cfg.env_count * cfg.instances_per_env) as usize;
    let per_instance = episodes.div_ceil(instance_count as u64);
    let mut instances: Vec<EnvInstance> = (0..instance_count)
        .map(|ix| {
            EnvInstance::new(ix as u32, icfg.clone(), level_spec(cfg.curriculum.start_level))
        })
        .collect();
    let policies = TeamPolicies { hiders, seekers };
    let collected = collect_episodes(
        &mut instances,
        cfg.harness.threads as usize,
        &policies,
        None,
        per_instance,
    )?;

    let mut summaries = collected.summaries;
    summaries.truncate(episodes as usize);
    let n = summaries.len() as f64;
    let mut mean_reward: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut team_counts: BTreeMap<&'static str, f64> = BTreeMap::new();
    for s in &summaries {
        for (team, r) in &s.team_mean_reward {
            *mean_reward.entry(team.name()).or_insert(0.0) += r;
            *team_counts.entry(team.name()).or_insert(0.0) += 1.0;
        }
    }
    for (team, total) in mean_reward.iter_mut() {
        *total /= team_counts[team];
    }
    Ok(EvalSummary {
        episodes: summaries.len() as u64,
        tag_rate: summaries.iter().filter(|s| s.tagged).count() as f64 / n,
        mean_hidden_fraction: summaries.iter().map(|s| s.hidden_fraction).sum::<f64>() / n,
        mean_episode_len_decisions: summaries.iter().map(|s| s.decisions as f64).sum::<f64>() / n,
        openings_blocked_rate: {
            let enabled: u32 = summaries.iter().map(|s| s.openings_enabled).sum();
            if enabled == 0 {
                0.0
            } else {
                summaries.iter().map(|s| s.openings_blocked).sum::<u32>() as f64
                    / f64::from(enabled)
            }
        },
        mean_reward,
    })
}

