//! The phase-structured training loop: collect, update, advance the
//! curriculum, log, checkpoint.
//!
//! Each phase trains exactly one team; the other side acts from a frozen
//! snapshot or a scripted policy and its parameters cannot change. Episode
//! rewards feed the curriculum in instance order between updates, so the
//! whole run is a pure function of the config.

use super::instance::{EnvInstance, InstanceConfig};
use super::metrics::{csv_document, MetricsRow, UpdateRow};
use super::rollout::collect_quota;
use super::{io_err, policy_descriptor, team_mlp_spec, HarnessError, PolicyRef, TeamPolicies};
use crate::config::{LearningTeam, OpponentPolicy, RunConfig};
use crate::curriculum::{level_spec, CurriculumState};
use crate::learn::{
    poca_update, ppo_update, save_checkpoint, PolicyParams, RolloutBuffer, Team,
};
use crate::rng::stream;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Artifacts a finished run leaves behind.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub run_dir: PathBuf,
    pub metrics_path: PathBuf,
    pub final_checkpoints: BTreeMap<&'static str, PathBuf>,
    pub global_step: u64,
    pub episodes: u64,
    pub updates: u64,
}

/// Train per the config, writing all artifacts under `run_dir`.
pub fn train(config: &RunConfig, run_dir: &Path) -> Result<TrainOutput, HarnessError> {
    config.validate()?;
    std::fs::create_dir_all(run_dir).map_err(|e| io_err(run_dir, e))?;
    let ckpt_dir = run_dir.join("checkpoints");
    std::fs::create_dir_all(&ckpt_dir).map_err(|e| io_err(&ckpt_dir, e))?;
    let replay_dir = run_dir.join("replays");
    std::fs::create_dir_all(&replay_dir).map_err(|e| io_err(&replay_dir, e))?;

    let resolved = run_dir.join("config.resolved.conf");
    std::fs::write(&resolved, config.dump()).map_err(|e| io_err(&resolved, e))?;

    let buffer_capacity = config.buffer_capacity()? as usize;
    let instance_count = (config.env_count * config.instances_per_env) as usize;
    let threads = config.harness.threads as usize;

    let mut curriculum = if config.curriculum.enabled {
        let mut c = CurriculumState::new(config.curriculum.threshold, config.curriculum.window);
        c.difficulty = config.curriculum.start_level;
        c
    } else {
        CurriculumState::fixed(config.curriculum.start_level)
    };

    // One parameter set per team that ever learns.
    let mut params: BTreeMap<Team, PolicyParams> = BTreeMap::new();
    for phase in &config.phases {
        let team = phase.learning_team.team();
        params.entry(team).or_insert_with(|| {
            PolicyParams::init(
                team_mlp_spec(config, team),
                crate::rng::derive_seed(config.seed, "params", &[team as u64]),
            )
        });
    }

    let icfg = InstanceConfig::new(config);
    let mut instances: Vec<EnvInstance> = (0..instance_count)
        .map(|ix| EnvInstance::new(ix as u32, icfg.clone(), curriculum.task_for_iteration(0)))
        .collect();

    let mut metrics_rows: Vec<MetricsRow> = Vec::new();
    let mut update_rows: Vec<UpdateRow> = Vec::new();
    let mut transition_lines: Vec<String> = vec!["global_step,old_level,new_level".to_string()];
    let mut smoothed: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut last_mean: BTreeMap<&'static str, (f64, f64)> = BTreeMap::new();

    let mut global_step: u64 = 0;
    let mut episodes_total: u64 = 0;
    let mut updates_total: u64 = 0;
    let mut replay_count: u64 = 0;
    let mut final_checkpoints: BTreeMap<&'static str, PathBuf> = BTreeMap::new();

    for (phase_ix, phase) in config.phases.iter().enumerate() {
        let budget = (config.total_env_steps as f64 * phase.budget_fraction).round() as u64;
        let learning_team = phase.learning_team.team();
        let quota = config.batch_size;

        // Frozen opponent snapshot taken at phase start.
        let opponent_team = match learning_team {
            Team::Hiders => Team::Seekers,
            Team::Seekers => Team::Hiders,
        };
        let frozen: Option<PolicyParams> = match phase.opponent_policy {
            OpponentPolicy::FrozenCheckpoint => Some(match params.get(&opponent_team) {
                Some(p) => p.clone(),
                None => PolicyParams::init(
                    team_mlp_spec(config, opponent_team),
                    crate::rng::derive_seed(config.seed, "params", &[opponent_team as u64]),
                ),
            }),
            _ => None,
        };
        let frozen_before = frozen.clone();

        for inst in &mut instances {
            inst.reset_hard();
            inst.set_level(curriculum.task_for_iteration(curriculum.iteration));
        }

        let mut phase_steps: u64 = 0;
        while phase_steps < budget {
            let learner_snapshot = params.get(&learning_team).unwrap().clone();
            let policies = build_policies(
                phase.learning_team,
                phase.opponent_policy,
                &learner_snapshot,
                frozen.as_ref(),
                config.harness.opponent_deterministic,
            );

            let collected =
                collect_quota(&mut instances, threads, &policies, learning_team, quota)?;
            debug_assert_eq!(collected.entries.len(), buffer_capacity);
            phase_steps += collected.ticks;
            global_step += collected.ticks;

            let mut buffer = RolloutBuffer::new(buffer_capacity);
            for e in collected.entries {
                buffer.push(e)?;
            }

            let mut shuffle = stream(config.seed, "shuffle", &[updates_total]);
            let learner = params.get_mut(&learning_team).unwrap();
            let stats = match learning_team {
                Team::Seekers if config.counts.seekers > 1 => {
                    poca_update(&mut buffer, learner, &config.hp, &mut shuffle)?
                }
                _ => ppo_update(&mut buffer, learner, &config.hp, &mut shuffle)?,
            };
            updates_total += 1;

            // Episode rewards feed the curriculum in instance order.
            episodes_total += collected.summaries.len() as u64;
            for summary in &collected.summaries {
                let reward = summary
                    .team_mean_reward
                    .get(&learning_team)
                    .copied()
                    .unwrap_or(0.0);
                if let Some(tr) = curriculum.observe_episode(reward) {
                    transition_lines.push(format!("{global_step},{},{}", tr.from, tr.to));
                    let spec = level_spec(tr.to);
                    for inst in &mut instances {
                        inst.set_level(spec);
                    }
                }
            }

            // Replay logs, numbered in merge order.
            for summary in &collected.summaries {
                if let Some(rec) = &summary.recorded {
                    let path = replay_dir.join(format!("ep{replay_count:06}.log"));
                    std::fs::write(&path, rec.to_log()).map_err(|e| io_err(&path, e))?;
                    replay_count += 1;
                }
            }

            // Metrics rows, one per team present in the summaries.
            for team in [Team::Hiders, Team::Seekers] {
                let rewards: Vec<f64> = collected
                    .summaries
                    .iter()
                    .filter_map(|s| s.team_mean_reward.get(&team).copied())
                    .collect();
                let lengths: Vec<f64> = collected
                    .summaries
                    .iter()
                    .filter(|s| s.team_mean_reward.contains_key(&team))
                    .map(|s| s.decisions as f64)
                    .collect();
                if rewards.is_empty() && team != learning_team {
                    continue;
                }
                let (mean, len_mean) = if rewards.is_empty() {
                    last_mean.get(team.name()).copied().unwrap_or((0.0, 0.0))
                } else {
                    (
                        rewards.iter().sum::<f64>() / rewards.len() as f64,
                        lengths.iter().sum::<f64>() / lengths.len() as f64,
                    )
                };
                last_mean.insert(team.name(), (mean, len_mean));
                let factor = config.harness.smoothing_factor;
                let smoothed_value = match smoothed.get(team.name()) {
                    None => mean,
                    Some(prev) => factor * prev + (1.0 - factor) * mean,
                };
                smoothed.insert(team.name(), smoothed_value);
                metrics_rows.push(MetricsRow {
                    global_step,
                    episodes: episodes_total,
                    team: team.name(),
                    cumulative_reward_mean: mean,
                    cumulative_reward_smoothed: smoothed_value,
                    episode_length_mean: len_mean,
                    curriculum_level: curriculum.difficulty,
                });
            }
            update_rows.push(UpdateRow {
                global_step,
                team: learning_team.name(),
                mean_ratio: stats.mean_ratio,
                clip_fraction: stats.clip_fraction,
                policy_loss: stats.policy_loss,
                value_loss: stats.value_loss,
                entropy: stats.entropy,
            });

            if updates_total % u64::from(config.harness.checkpoint_every_updates.max(1)) == 0 {
                let path = ckpt_dir.join(format!("{}_u{updates_total:05}.ckpt", learning_team.name()));
                save_checkpoint(
                    &path,
                    params.get(&learning_team).unwrap(),
                    &policy_descriptor(config, learning_team),
                    global_step,
                )?;
            }
        }

        // Phase isolation: a frozen opponent must come out untouched.
        debug_assert_eq!(frozen, frozen_before);

        let path = ckpt_dir.join(format!("{}_phase{}.ckpt", learning_team.name(), phase_ix));
        save_checkpoint(
            &path,
            params.get(&learning_team).unwrap(),
            &policy_descriptor(config, learning_team),
            global_step,
        )?;
    }

    for (team, p) in &params {
        let path = ckpt_dir.join(format!("{}_final.ckpt", team.name()));
        save_checkpoint(&path, p, &policy_descriptor(config, *team), global_step)?;
        final_checkpoints.insert(team.name(), path);
    }

    let metrics_path = run_dir.join("metrics.csv");
    std::fs::write(&metrics_path, csv_document(MetricsRow::HEADER, &metrics_rows, |r| r.to_csv()))
        .map_err(|e| io_err(&metrics_path, e))?;
    let updates_path = run_dir.join("updates.csv");
    std::fs::write(&updates_path, csv_document(UpdateRow::HEADER, &update_rows, |r| r.to_csv()))
        .map_err(|e| io_err(&updates_path, e))?;
    let transitions_path = run_dir.join("transitions.csv");
    let mut tdoc = String::new();
    for line in &transition_lines {
        let _ = writeln!(tdoc, "{line}");
    }
    std::fs::write(&transitions_path, tdoc).map_err(|e| io_err(&transitions_path, e))?;

    Ok(TrainOutput {
        run_dir: run_dir.to_path_buf(),
        metrics_path,
        final_checkpoints,
        global_step,
        episodes: episodes_total,
        updates: updates_total,
    })
}

fn build_policies<'a>(
    learning: LearningTeam,
    opponent: OpponentPolicy,
    learner: &'a PolicyParams,
    frozen: Option<&'a PolicyParams>,
    opponent_deterministic: bool,
) -> TeamPolicies<'a> {
    let learner_ref = PolicyRef::Learned { params: learner, deterministic: false };
    let opponent_ref = match opponent {
        OpponentPolicy::FrozenCheckpoint => PolicyRef::Learned {
            params: frozen.expect("frozen opponent params"),
            deterministic: opponent_deterministic,
        },
        OpponentPolicy::ScriptedRandom => PolicyRef::Random,
        OpponentPolicy::ScriptedStationary => PolicyRef::Stationary,
        OpponentPolicy::ScriptedChaser => PolicyRef::Chaser,
        OpponentPolicy::ScriptedEvader => PolicyRef::Evader,
        OpponentPolicy::None => PolicyRef::None,
    };
    match learning {
        LearningTeam::Hiders | LearningTeam::SingleAgent => TeamPolicies {
            hiders: learner_ref,
            seekers: opponent_ref,
        },
        LearningTeam::Seekers => TeamPolicies { hiders: opponent_ref, seekers: learner_ref },
    }
}
