//! End-to-end harness checks at smoke scale: exact buffer conservation,
//! byte-identical reruns across worker counts, phase isolation, and the
//! scripted-opponent sanity oracles.

use skyseek_core::config::{RunConfig, ScenarioName};
use skyseek_core::curriculum::level_spec;
use skyseek_core::harness::{
    collect_episodes, collect_quota, evaluate, train, EnvInstance, InstanceConfig, PolicyRef,
    TeamPolicies,
};
use skyseek_core::learn::Team;
use std::path::PathBuf;

fn smoke_config(seed: u64) -> RunConfig {
    let mut cfg = RunConfig::preset(ScenarioName::HideseekLevel1);
    cfg.seed = seed;
    cfg.total_env_steps = 9_000;
    cfg.batch_size = 128;
    cfg.env_count = 2;
    cfg.instances_per_env = 2;
    cfg.phase.max_env_steps = 300;
    cfg.hidden_units = 16;
    cfg.encoder_dim = 8;
    cfg.sensors.spatial_cell_arc = 45.0;
    cfg.sensors.frontal_cell_arc = 0.0;
    cfg.harness.checkpoint_every_updates = 4;
    cfg.harness.replay_record_every = 7;
    cfg.harness.threads = 2;
    cfg
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("skyseek-harness-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn mk_instances(cfg: &RunConfig) -> Vec<EnvInstance> {
    let icfg = InstanceConfig::new(cfg);
    (0..(cfg.env_count * cfg.instances_per_env))
        .map(|ix| EnvInstance::new(ix, icfg.clone(), level_spec(cfg.curriculum.start_level)))
        .collect()
}

#[test]
fn quota_collection_is_exact_and_thread_invariant() {
    let cfg = smoke_config(11);
    let params = skyseek_core::learn::PolicyParams::init(
        skyseek_core::harness::team_mlp_spec(&cfg, Team::Hiders),
        99,
    );
    let policies = TeamPolicies {
        hiders: PolicyRef::Learned { params: &params, deterministic: false },
        seekers: PolicyRef::Random,
    };
    let quota = cfg.batch_size;

    let mut single = mk_instances(&cfg);
    let out1 = collect_quota(&mut single, 1, &policies, Team::Hiders, quota).unwrap();
    let mut threaded = mk_instances(&cfg);
    let out4 = collect_quota(&mut threaded, 4, &policies, Team::Hiders, quota).unwrap();

    let total = quota * (cfg.env_count * cfg.instances_per_env) as usize;
    assert_eq!(out1.entries.len(), total, "conservation of experience");
    assert_eq!(out4.entries.len(), total);

    // Per-instance contribution is exactly the quota; merge order is by id.
    for inst in 0..(cfg.env_count * cfg.instances_per_env) {
        let count = out1.entries.iter().filter(|e| e.instance == inst).count();
        assert_eq!(count, quota, "instance {inst} quota");
    }
    let ids: Vec<u32> = out1.entries.iter().map(|e| e.instance).collect();
    let mut sorted = ids.clone();
    sorted.sort_unstable();
    assert_eq!(ids, sorted, "entries merge in instance order");

    // Thread count must not change a single byte of the experience.
    assert_eq!(out1.entries.len(), out4.entries.len());
    for (a, b) in out1.entries.iter().zip(&out4.entries) {
        assert_eq!(a, b);
    }
    assert_eq!(out1.ticks, out4.ticks);
}

#[test]
fn whole_trajectory_collection_counts_episodes() {
    let cfg = smoke_config(3);
    let mut instances = mk_instances(&cfg);
    instances.truncate(3);
    let policies = TeamPolicies { hiders: PolicyRef::Random, seekers: PolicyRef::Random };
    let out = collect_episodes(&mut instances, 2, &policies, None, 5).unwrap();
    assert_eq!(out.summaries.len(), 15, "3 instances x 5 trajectories");
    assert!(out.entries.is_empty(), "no learner, no entries");
    let max_decisions = cfg.phase.max_env_steps / cfg.phase.decision_interval;
    for s in &out.summaries {
        assert!(s.decisions >= 1 && s.decisions <= max_decisions, "episode length bound");
    }
}

#[test]
fn train_runs_are_byte_identical_across_reruns_and_worker_counts() {
    let cfg = smoke_config(21);
    let dir_a = tmp_dir("det-a");
    let dir_b = tmp_dir("det-b");
    let out_a = train(&cfg, &dir_a).unwrap();
    let out_b = train(&cfg, &dir_b).unwrap();
    assert!(out_a.updates > 2);

    let mut cfg_threads = cfg.clone();
    cfg_threads.harness.threads = 5;
    let dir_c = tmp_dir("det-c");
    let out_c = train(&cfg_threads, &dir_c).unwrap();

    for file in ["metrics.csv", "updates.csv", "transitions.csv"] {
        let a = std::fs::read(dir_a.join(file)).unwrap();
        let b = std::fs::read(dir_b.join(file)).unwrap();
        let c = std::fs::read(dir_c.join(file)).unwrap();
        assert_eq!(a, b, "{file} must be identical across reruns");
        assert_eq!(a, c, "{file} must be identical across worker counts");
    }
    for (name, path) in &out_a.final_checkpoints {
        let a = std::fs::read(path).unwrap();
        let b = std::fs::read(&out_b.final_checkpoints[name]).unwrap();
        let c = std::fs::read(&out_c.final_checkpoints[name]).unwrap();
        assert_eq!(a, b, "{name} checkpoint identical across reruns");
        assert_eq!(a, c, "{name} checkpoint identical across worker counts");
    }

    // Replays were sampled and are loadable.
    let replays: Vec<_> = std::fs::read_dir(dir_a.join("replays")).unwrap().collect();
    assert!(!replays.is_empty(), "replay logs recorded");

    for dir in [dir_a, dir_b, dir_c] {
        std::fs::remove_dir_all(dir).ok();
    }
}

#[test]
fn phase_isolation_keeps_the_frozen_team_untouched() {
    // Plan: hiders learn first, then seekers learn against frozen hiders.
    // The hider checkpoint at the end of phase 0 must equal the final one.
    let cfg = smoke_config(31);
    let dir = tmp_dir("phase");
    train(&cfg, &dir).unwrap();
    let phase0 = std::fs::read(dir.join("checkpoints/hiders_phase0.ckpt")).unwrap();
    let final_ = std::fs::read(dir.join("checkpoints/hiders_final.ckpt")).unwrap();
    // The phase checkpoint embeds the global step of phase 0's end; the
    // final embeds the run's end. Compare parameter payloads instead.
    let a = skyseek_core::learn::load_checkpoint(
        &dir.join("checkpoints/hiders_phase0.ckpt"),
        &skyseek_core::harness::policy_descriptor(&cfg, Team::Hiders),
    )
    .unwrap();
    let b = skyseek_core::learn::load_checkpoint(
        &dir.join("checkpoints/hiders_final.ckpt"),
        &skyseek_core::harness::policy_descriptor(&cfg, Team::Hiders),
    )
    .unwrap();
    assert_eq!(a.params.data, b.params.data, "hider params frozen during seeker phase");
    assert!(!phase0.is_empty() && !final_.is_empty());
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn random_seekers_eventually_tag_stationary_hiders() {
    // Monte-Carlo sanity oracle: motion plus contact termination implies a
    // strictly positive tag rate over enough episodes.
    let mut cfg = smoke_config(41);
    cfg.phase.max_env_steps = 1536;
    cfg.counts.seekers = 4;
    cfg.counts.hiders = 2;
    let summary = evaluate(&cfg, PolicyRef::Stationary, PolicyRef::Random, 100, 77).unwrap();
    assert_eq!(summary.episodes, 100);
    assert!(summary.tag_rate > 0.0, "random seekers must land at least one tag");
    assert!(summary.mean_episode_len_decisions > 1.0);
}

#[test]
fn zero_episode_eval_is_empty_not_an_error() {
    let cfg = smoke_config(5);
    let summary = evaluate(&cfg, PolicyRef::Random, PolicyRef::Random, 0, 3).unwrap();
    assert_eq!(summary.episodes, 0);
    assert_eq!(summary.mean_reward.len(), 0);
}

#[test]
fn chaser_outperforms_random_at_tagging() {
    let mut cfg = smoke_config(51);
    cfg.phase.max_env_steps = 900;
    let random = evaluate(&cfg, PolicyRef::Stationary, PolicyRef::Random, 40, 7).unwrap();
    let chaser = evaluate(&cfg, PolicyRef::Stationary, PolicyRef::Chaser, 40, 7).unwrap();
    assert!(
        chaser.tag_rate >= random.tag_rate,
        "scripted pursuit should tag at least as often as noise ({} vs {})",
        chaser.tag_rate,
        random.tag_rate
    );
    assert!(chaser.tag_rate > 0.5, "the chaser should catch stationary hiders");
}
