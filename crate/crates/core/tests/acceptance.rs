//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its number. Criteria 8 and 9 are learning smoke runs on the slow tier;
//! run them with `cargo test --test acceptance -- --ignored`.

use skyseek_core::config::{RunConfig, ScenarioName};
use skyseek_core::game::{
    prep_steps, signal_strength, step_episode_mut, test_steps, visible, DoneReason,
    EpisodeConfig, EpisodeStatus, PhaseConfig, RewardCause,
};
use skyseek_core::harness::{evaluate, train, PolicyRef};
use skyseek_core::learn::{
    buffer_size, gae, gradient_check, poca_update, ppo_update, sample_action, Entry,
    HyperParams, MlpSpec, PolicyParams, RolloutBuffer, Team,
};
use skyseek_core::math::{Aabb, Vec3};
use skyseek_core::rng::stream;
use skyseek_core::sensors::{cell_occupancy, raycast_sweep, RaycastConfig};
use skyseek_core::world::{
    build_arena, AgentAction, Body, BodyId, BodyKind, Manipulate, WorldState,
};
use rand::RngExt;
use std::collections::BTreeMap;

fn pass(n: u32, name: &str) {
    println!("ACCEPTANCE {n} {name}: PASS");
}

// ---------------------------------------------------------------------------
// 1. Formula exactness
// ---------------------------------------------------------------------------

#[test]
fn acceptance_1_formula_exactness() {
    assert_eq!(prep_steps(3072), 1228);
    assert_eq!(test_steps(3072), 1844);
    assert_eq!(prep_steps(3072) + test_steps(3072), 3072);

    assert_eq!(buffer_size(3072, 8, 3).unwrap(), 73_728);
    assert_eq!(buffer_size(64_000, 5, 1).unwrap(), 320_000);

    let mut rng = stream(0xACC1, "signal", &[]);
    for _ in 0..1000 {
        let p1 = Vec3::new(
            rng.random_range(-20.0..20.0),
            rng.random_range(-20.0..20.0),
            rng.random_range(-20.0..20.0),
        );
        let p2 = Vec3::new(
            rng.random_range(-20.0..20.0),
            rng.random_range(-20.0..20.0),
            rng.random_range(-20.0..20.0),
        );
        let t = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
        .normalized();
        if (p2 - p1).norm() == 0.0 {
            continue;
        }
        // Independent evaluation in raw components.
        let (ax, ay, az) = (p2.x - p1.x, p2.y - p1.y, p2.z - p1.z);
        let rd = (ax * ax + ay * ay + az * az).sqrt();
        let d = t.x * (ax / rd) + t.y * (ay / rd) + t.z * (az / rd);
        let expect = d / rd;
        let got = signal_strength(p1, p2, t).unwrap();
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }
    pass(1, "formula exactness");
}

// ---------------------------------------------------------------------------
// 2. Sensor oracle equivalence
// ---------------------------------------------------------------------------

#[test]
fn acceptance_2_sensor_oracles() {
    // cell_occupancy vs a closed 10^3 sampling grid: exact agreement on
    // every non-degenerate cell. Objects are thick enough that any true
    // overlap contains a sample point of the closed grid.
    let mut rng = stream(0xACC2, "occupancy", &[]);
    let mut cells_checked = 0usize;
    for _scene in 0..50 {
        let objects: Vec<Body> = (0..5)
            .map(|k| Body {
                id: BodyId(500 + k),
                kind: BodyKind::Prop,
                position: Vec3::new(
                    rng.random_range(-3.0..3.0),
                    rng.random_range(-3.0..3.0),
                    rng.random_range(-3.0..3.0),
                ),
                velocity: Vec3::ZERO,
                yaw: 0.0,
                half_extents: Vec3::new(
                    rng.random_range(0.2..1.5),
                    rng.random_range(0.2..1.5),
                    rng.random_range(0.2..1.5),
                ),
                gravity_scale: 0.0,
                locked: false,
                dragged_by: None,
            })
            .collect();
        for _ in 0..20 {
            let cell = Aabb::new(
                Vec3::new(
                    rng.random_range(-3.5..3.5),
                    rng.random_range(-3.5..3.5),
                    rng.random_range(-3.5..3.5),
                ),
                Vec3::new(
                    rng.random_range(0.3..1.0),
                    rng.random_range(0.3..1.0),
                    rng.random_range(0.3..1.0),
                ),
            );
            let degenerate = objects.iter().any(|b| {
                let sep = b.position - cell.center;
                let lim = b.half_extents + cell.half;
                [(sep.x, lim.x), (sep.y, lim.y), (sep.z, lim.z)]
                    .iter()
                    .any(|(s, l)| (s.abs() - l).abs() < 1e-6)
            });
            if degenerate {
                continue;
            }
            let n = 10;
            let mut sampled = 0u8;
            'all: for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let f = |ix: usize| ix as f64 / (n - 1) as f64;
                        let p = cell.min()
                            + Vec3::new(
                                f(i) * 2.0 * cell.half.x,
                                f(j) * 2.0 * cell.half.y,
                                f(k) * 2.0 * cell.half.z,
                            );
                        if objects.iter().any(|b| b.aabb().contains_point(p)) {
                            sampled = 1;
                            break 'all;
                        }
                    }
                }
            }
            assert_eq!(
                cell_occupancy(&cell, &objects),
                sampled,
                "occupancy disagrees with the sampling oracle"
            );
            cells_checked += 1;
        }
    }
    assert!(cells_checked >= 500, "only {cells_checked} non-degenerate cells");

    // Raycast distances vs an independent marching+bisection sweep oracle.
    let mut verified_rays = 0usize;
    let cfg = RaycastConfig::default();
    for trial in 0..32u64 {
        let state = build_arena(
            1 + (trial % 4) as u8,
            1 + (trial % 4) as u32,
            skyseek_core::world::AgentCounts {
                hiders: 1 + (trial % 2) as u32,
                seekers: 1 + (trial % 4) as u32,
            },
            trial,
        )
        .unwrap();
        let agents = state.agent_ids();
        let agent = agents[trial as usize % agents.len()];
        let rays = raycast_sweep(&state, agent, &cfg).unwrap();
        let origin = state.body(agent).unwrap().position;
        let yaw = state.body(agent).unwrap().yaw;
        for (k, az) in cfg.angles().into_iter().enumerate() {
            let dir = Vec3::new(az.sin(), 0.0, az.cos()).rotate_yaw(yaw);
            let sd = |t: f64| {
                state
                    .bodies
                    .iter()
                    .filter(|b| b.id != agent)
                    .map(|b| b.aabb().distance_to_point(origin + dir * t))
                    .fold(f64::INFINITY, f64::min)
                    - cfg.sphere_radius
            };
            let mut hit = None;
            if sd(0.0) <= 0.0 {
                hit = Some(0.0);
            } else {
                let steps = 4000;
                let dt = cfg.ray_length / steps as f64;
                let mut prev = 0.0;
                for i in 1..=steps {
                    let t = i as f64 * dt;
                    if sd(t) <= 0.0 {
                        let (mut lo, mut hi) = (prev, t);
                        for _ in 0..60 {
                            let mid = 0.5 * (lo + hi);
                            if sd(mid) <= 0.0 {
                                hi = mid;
                            } else {
                                lo = mid;
                            }
                        }
                        hit = Some(0.5 * (lo + hi));
                        break;
                    }
                    prev = t;
                }
            }
            let got = rays[k * cfg.values_per_ray()];
            match hit {
                Some(t) => {
                    assert!(
                        (got - t / cfg.ray_length).abs() < 1e-6,
                        "trial {trial} ray {k}: {got} vs {}",
                        t / cfg.ray_length
                    );
                    verified_rays += 1;
                }
                None => assert_eq!(got, 1.0),
            }
        }
    }
    assert!(verified_rays >= 500, "only {verified_rays} rays had verified hits");
    pass(2, "sensor oracle equivalence");
}

// ---------------------------------------------------------------------------
// 3. Reward ledger
// ---------------------------------------------------------------------------

fn random_actions(
    state: &WorldState,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> BTreeMap<BodyId, AgentAction> {
    state
        .agent_ids()
        .into_iter()
        .map(|id| {
            (
                id,
                AgentAction {
                    thrust: Vec3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    ),
                    yaw_rate: rng.random_range(-1.0..1.0),
                    manipulate: Manipulate::from_index(rng.random_range(0..3)),
                },
            )
        })
        .collect()
}

#[test]
fn acceptance_3_reward_ledger() {
    let config = EpisodeConfig {
        phase: PhaseConfig { max_env_steps: 360, prep_fraction: 0.4, decision_interval: 3 },
        ..Default::default()
    };
    for episode in 0..200u64 {
        let mut rng = stream(episode, "ledger", &[]);
        let mut state = build_arena(
            1 + (episode % 4) as u8,
            1 + (episode % 4) as u32,
            skyseek_core::world::AgentCounts {
                hiders: 1 + (episode % 2) as u32,
                seekers: 1 + (episode % 3) as u32,
            },
            episode,
        )
        .unwrap();
        let seeker_count = state.seeker_ids().len();
        let mut status = EpisodeStatus::new(&state);
        let mut sums: BTreeMap<BodyId, f64> = BTreeMap::new();
        while !status.done {
            let actions = random_actions(&state, &mut rng);
            let events = step_episode_mut(&mut state, &mut status, &actions, &config).unwrap();
            for e in &events {
                *sums.entry(e.agent_id).or_insert(0.0) += e.amount;
            }
            // Complementarity against a fresh visibility evaluation.
            if state.tick % config.phase.decision_interval == 0
                && status.done_reason != Some(DoneReason::Tag)
            {
                for h in state.hider_ids() {
                    let seen = state
                        .seeker_ids()
                        .into_iter()
                        .any(|s| visible(&state, s, h, &config.visibility));
                    let paid = events
                        .iter()
                        .any(|e| e.agent_id == h && e.cause == RewardCause::HiddenFrame);
                    assert_eq!(paid, !seen, "episode {episode}: hidden-frame complementarity");
                }
                for s in state.seeker_ids() {
                    let sees = state
                        .hider_ids()
                        .into_iter()
                        .any(|h| visible(&state, s, h, &config.visibility));
                    let paid = events
                        .iter()
                        .any(|e| e.agent_id == s && e.cause == RewardCause::SightFrame);
                    assert_eq!(paid, sees, "episode {episode}: sight-frame complementarity");
                }
            }
            if status.done_reason == Some(DoneReason::Tag) {
                let tag_events: Vec<_> =
                    events.iter().filter(|e| e.cause == RewardCause::Tag).collect();
                assert_eq!(tag_events.len(), seeker_count, "tag pays the whole team");
                for e in tag_events {
                    assert_eq!(e.amount, 1.0);
                }
            }
        }
        for (id, total) in &status.cumulative_reward {
            let expect = sums.get(id).copied().unwrap_or(0.0);
            assert!(
                (total - expect).abs() < 1e-12,
                "episode {episode} agent {id:?}: ledger {total} vs events {expect}"
            );
        }
    }
    pass(3, "reward ledger");
}

// ---------------------------------------------------------------------------
// 4. Phase gate
// ---------------------------------------------------------------------------

#[test]
fn acceptance_4_phase_gate() {
    let config = EpisodeConfig::default(); // 3072 steps, prep 1228
    let prep = config.phase.prep_steps();
    assert_eq!(prep, 1228);
    for episode in 0..100u64 {
        let mut rng = stream(episode, "phasegate", &[]);
        let mut state = build_arena(
            2,
            2,
            skyseek_core::world::AgentCounts { hiders: 2, seekers: 2 },
            episode,
        )
        .unwrap();
        let mut status = EpisodeStatus::new(&state);
        let seekers = state.seeker_ids();
        let start: Vec<Vec3> =
            seekers.iter().map(|s| state.body(*s).unwrap().position).collect();
        let mut displacement = 0.0;
        let mut last: Vec<Vec3> = start.clone();
        while !status.done && state.tick < prep {
            let actions = random_actions(&state, &mut rng);
            step_episode_mut(&mut state, &mut status, &actions, &config).unwrap();
            for (k, s) in seekers.iter().enumerate() {
                let p = state.body(*s).unwrap().position;
                displacement += (p - last[k]).norm();
                last[k] = p;
            }
        }
        assert_eq!(
            displacement, 0.0,
            "episode {episode}: seekers displaced during prep"
        );
    }
    pass(4, "phase gate");
}

// ---------------------------------------------------------------------------
// 5. Curriculum
// ---------------------------------------------------------------------------

#[test]
fn acceptance_5_curriculum() {
    let mut rng = stream(0xACC5, "curr", &[]);
    for trial in 0..10_000u64 {
        let window = 1 + (trial % 9) as usize;
        let threshold = rng.random_range(-1.0..2.0);
        let mut c = skyseek_core::curriculum::CurriculumState::new(threshold, window);
        let mut last = c.difficulty;
        let mut fills_since_advance = 0usize;
        for _ in 0..60 {
            let r = rng.random_range(-2.0..4.0);
            let before_len = c.recent_rewards.len();
            let advanced = c.observe_episode(r).is_some();
            assert!(c.difficulty >= last, "difficulty decreased");
            assert!(c.difficulty <= 4, "difficulty past 4");
            if advanced {
                assert_eq!(c.difficulty, last + 1, "asymmetric advancement");
                assert!(before_len + 1 >= window, "advance before the window filled");
                fills_since_advance = 0;
            } else {
                fills_since_advance += 1;
            }
            last = c.difficulty;
        }
        let _ = fills_since_advance;
    }
    pass(5, "curriculum advancement");
}

// ---------------------------------------------------------------------------
// 6. Numerical optimization core
// ---------------------------------------------------------------------------

#[test]
fn acceptance_6_numerical_core() {
    // GAE vs the brute-force lambda-return oracle on 1000 random problems.
    let mut rng = stream(0xACC6, "gae", &[]);
    for _ in 0..1000 {
        let n = 10;
        let rewards: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let values: Vec<f64> = (0..=n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let gamma = rng.random_range(0.5..1.0);
        let lambda = rng.random_range(0.0..1.0);
        let (adv, _) = gae(&rewards, &values, gamma, lambda).unwrap();
        for t in 0..n {
            // lambda-weighted k-step returns, straight from the definition.
            let mut total = 0.0;
            for k in 1..=(n - t) {
                let mut ret = 0.0;
                for (j, r) in rewards[t..t + k].iter().enumerate() {
                    ret += gamma.powi(j as i32) * r;
                }
                ret += gamma.powi(k as i32) * values[t + k];
                let weight = if k == n - t {
                    lambda.powi((k - 1) as i32)
                } else {
                    (1.0 - lambda) * lambda.powi((k - 1) as i32)
                };
                total += weight * ret;
            }
            let oracle = total - values[t];
            assert!((adv[t] - oracle).abs() < 1e-6, "gae {} vs oracle {oracle}", adv[t]);
        }
    }

    // Analytic gradients vs central differences on a 2-unit network.
    let params = PolicyParams::init(MlpSpec::solo(6, 2), 0xACC6);
    let obs = vec![0.25, -0.5, 0.75, -0.25, 0.1, -0.9];
    let err = gradient_check(&params, &obs, 1e-5).unwrap();
    assert!(err < 1e-4, "gradient relative error {err}");
    let params_team = PolicyParams::init(MlpSpec::team(6, 2, 2), 0xACC7);
    let err = gradient_check(&params_team, &obs, 1e-5).unwrap();
    assert!(err < 1e-4, "team gradient relative error {err}");

    // Solo team update must equal PPO bit for bit under a fixed seed.
    let spec = MlpSpec::solo(4, 8);
    let make_buffer = |params: &PolicyParams| {
        let mut buffer = RolloutBuffer::new(64);
        let mut rng = stream(0xACC8, "buf", &[]);
        for i in 0..64 {
            let obs: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (out, _) = skyseek_core::learn::mlp_forward(params, &obs).unwrap();
            let s = sample_action(&out, &mut rng);
            buffer
                .push(Entry {
                    obs,
                    teammate_obs: Vec::new(),
                    action_c: s.continuous,
                    action_d: s.discrete,
                    log_prob: s.log_prob,
                    reward: 0.0,
                    value: 0.0,
                    done: true,
                    team: Team::Seekers,
                    instance: 0,
                    advantage: (i as f64 * 0.7).sin(),
                    target: (i as f64 * 0.3).cos(),
                })
                .unwrap();
        }
        buffer
    };
    let hp = HyperParams { batch_size: 16, ..Default::default() };
    let mut p1 = PolicyParams::init(spec, 123);
    let mut b1 = make_buffer(&p1);
    let mut s1 = stream(9, "shuffle", &[]);
    ppo_update(&mut b1, &mut p1, &hp, &mut s1).unwrap();
    let mut p2 = PolicyParams::init(spec, 123);
    let mut b2 = make_buffer(&p2);
    let mut s2 = stream(9, "shuffle", &[]);
    poca_update(&mut b2, &mut p2, &hp, &mut s2).unwrap();
    assert_eq!(p1.data, p2.data, "team update with size-1 team must equal ppo");
    assert!(p1.data.iter().all(|v| v.is_finite()));
    pass(6, "numerical optimization core");
}

// ---------------------------------------------------------------------------
// 7. Determinism
// ---------------------------------------------------------------------------

#[test]
fn acceptance_7_train_determinism() {
    let mut cfg = RunConfig::preset(ScenarioName::HideseekLevel1);
    cfg.seed = 2024;
    cfg.total_env_steps = 8_000;
    cfg.batch_size = 128;
    cfg.env_count = 2;
    cfg.instances_per_env = 2;
    cfg.phase.max_env_steps = 300;
    cfg.hidden_units = 16;
    cfg.encoder_dim = 8;
    cfg.sensors.spatial_cell_arc = 45.0;
    cfg.sensors.frontal_cell_arc = 0.0;
    cfg.harness.threads = 3; // parallel rollout workers enabled
    cfg.harness.replay_record_every = 9;

    let base = std::env::temp_dir().join(format!("skyseek-acc7-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&base);
    let dir_a = base.join("a");
    let dir_b = base.join("b");
    let out_a = train(&cfg, &dir_a).unwrap();
    let out_b = train(&cfg, &dir_b).unwrap();
    assert!(out_a.updates >= 4);

    for file in ["metrics.csv", "updates.csv", "transitions.csv", "config.resolved.conf"] {
        let a = std::fs::read(dir_a.join(file)).unwrap();
        let b = std::fs::read(dir_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    for (team, path) in &out_a.final_checkpoints {
        let a = std::fs::read(path).unwrap();
        let b = std::fs::read(&out_b.final_checkpoints[team]).unwrap();
        assert_eq!(a, b, "{team} final checkpoint differs");
    }
    std::fs::remove_dir_all(&base).ok();
    pass(7, "train determinism with parallel workers");
}

// ---------------------------------------------------------------------------
// 8. Learning smoke tests (slow tier)
// ---------------------------------------------------------------------------

fn drone_target_smoke_config(seed: u64) -> RunConfig {
    let mut cfg = RunConfig::preset(ScenarioName::DroneTarget);
    cfg.seed = seed;
    cfg.total_env_steps = 300_000;
    cfg.arena = skyseek_core::world::ArenaConfig { width: 10.0, height: 6.0, depth: 10.0 };
    cfg.batch_size = 256;
    cfg.env_count = 4;
    cfg.instances_per_env = 1;
    cfg.phase.max_env_steps = 258;
    cfg.hidden_units = 64;
    cfg.hp.optimizer = skyseek_core::learn::OptimizerKind::Adam;
    cfg.hp.learning_rate = 1e-3;
    cfg.hp.epochs_per_update = 10;
    cfg.hp.gamma = 0.995;
    cfg.hp.gae_lambda = 0.97;
    cfg.hp.value_coefficient = 1.0;
    cfg.hp.entropy_coefficient = 0.005;
    cfg.harness.threads = 4;
    cfg.harness.replay_record_every = 0;
    cfg.harness.checkpoint_every_updates = 1_000_000;
    cfg
}

#[test]
#[ignore = "slow tier: learning smoke run (minutes)"]
fn acceptance_8a_drone_target_learns() {
    let cfg = drone_target_smoke_config(8);
    let eval_cfg = {
        let mut c = cfg.clone();
        c.env_count = 4;
        c.instances_per_env = 1;
        c
    };
    // Step-0 baseline with freshly initialized parameters.
    let init = PolicyParams::init(
        skyseek_core::harness::team_mlp_spec(&cfg, Team::Hiders),
        skyseek_core::rng::derive_seed(cfg.seed, "params", &[Team::Hiders as u64]),
    );
    let before = evaluate(
        &eval_cfg,
        PolicyRef::Learned { params: &init, deterministic: true },
        PolicyRef::None,
        40,
        555,
    )
    .unwrap();
    let reward_before = before.mean_reward.get("hiders").copied().unwrap_or(0.0);
    assert!(
        reward_before <= 0.0,
        "untrained policy should not already earn positive reward: {reward_before}"
    );

    let dir = std::env::temp_dir().join(format!("skyseek-acc8a-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let out = train(&cfg, &dir).unwrap();
    let ckpt = skyseek_core::learn::load_checkpoint(
        &out.final_checkpoints["hiders"],
        &skyseek_core::harness::policy_descriptor(&cfg, Team::Hiders),
    )
    .unwrap();
    let after = evaluate(
        &eval_cfg,
        PolicyRef::Learned { params: &ckpt.params, deterministic: true },
        PolicyRef::None,
        40,
        555,
    )
    .unwrap();
    let reward_after = after.mean_reward.get("hiders").copied().unwrap_or(0.0);
    println!("drone_target eval reward: {reward_before} -> {reward_after}");
    assert!(
        reward_after > 0.0,
        "mean evaluation reward must rise above 0 within {} steps, got {reward_after}",
        cfg.total_env_steps
    );
    std::fs::remove_dir_all(&dir).ok();
    pass(8, "drone_target learning smoke (8a)");
}

fn hideseek_smoke_config(seed: u64, curriculum: bool, level: u8, steps: u64) -> RunConfig {
    let mut cfg = RunConfig::preset(if curriculum {
        ScenarioName::HideseekCurriculum
    } else {
        ScenarioName::HideseekLevel1
    });
    cfg.seed = seed;
    cfg.total_env_steps = steps;
    cfg.batch_size = 256;
    cfg.env_count = 4;
    cfg.instances_per_env = 1;
    cfg.counts = skyseek_core::world::AgentCounts { hiders: 1, seekers: 4 };
    cfg.phase.max_env_steps = 768;
    cfg.hidden_units = 64;
    cfg.encoder_dim = 16;
    cfg.sensors.spatial_cell_arc = 30.0;
    cfg.sensors.frontal_cell_arc = 0.0;
    cfg.hp.optimizer = skyseek_core::learn::OptimizerKind::Adam;
    cfg.hp.learning_rate = 1e-3;
    cfg.hp.epochs_per_update = 10;
    cfg.hp.gamma = 0.99;
    cfg.hp.gae_lambda = 0.95;
    cfg.hp.value_coefficient = 1.0;
    cfg.hp.entropy_coefficient = 0.01;
    cfg.curriculum.enabled = curriculum;
    cfg.curriculum.start_level = level;
    cfg.phases = vec![skyseek_core::config::TrainPhase {
        learning_team: skyseek_core::config::LearningTeam::Hiders,
        opponent_policy: skyseek_core::config::OpponentPolicy::ScriptedRandom,
        budget_fraction: 1.0,
    }];
    cfg.harness.threads = 4;
    cfg.harness.replay_record_every = 0;
    cfg.harness.checkpoint_every_updates = 1_000_000;
    cfg
}

#[test]
#[ignore = "slow tier: learning smoke run (minutes)"]
fn acceptance_8b_hideseek_hiding_improves() {
    let cfg = hideseek_smoke_config(17, true, 1, 500_000);
    let init = PolicyParams::init(
        skyseek_core::harness::team_mlp_spec(&cfg, Team::Hiders),
        skyseek_core::rng::derive_seed(cfg.seed, "params", &[Team::Hiders as u64]),
    );
    let mut eval_cfg = cfg.clone();
    eval_cfg.curriculum.start_level = 1;
    let baseline = evaluate(
        &eval_cfg,
        PolicyRef::Learned { params: &init, deterministic: true },
        PolicyRef::Random,
        40,
        999,
    )
    .unwrap();

    let dir = std::env::temp_dir().join(format!("skyseek-acc8b-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let out = train(&cfg, &dir).unwrap();
    let ckpt = skyseek_core::learn::load_checkpoint(
        &out.final_checkpoints["hiders"],
        &skyseek_core::harness::policy_descriptor(&cfg, Team::Hiders),
    )
    .unwrap();
    let trained = evaluate(
        &eval_cfg,
        PolicyRef::Learned { params: &ckpt.params, deterministic: true },
        PolicyRef::Random,
        40,
        999,
    )
    .unwrap();
    println!(
        "hidden fraction: baseline {} -> trained {}",
        baseline.mean_hidden_fraction, trained.mean_hidden_fraction
    );
    assert!(
        trained.mean_hidden_fraction >= baseline.mean_hidden_fraction * 1.5,
        "hidden fraction must improve by at least 50% relative: {} vs baseline {}",
        trained.mean_hidden_fraction,
        baseline.mean_hidden_fraction
    );
    std::fs::remove_dir_all(&dir).ok();
    pass(8, "hide-and-seek hiding smoke (8b)");
}

// ---------------------------------------------------------------------------
// 9. Curriculum vs traditional, directional
// ---------------------------------------------------------------------------

#[test]
#[ignore = "slow tier: three seeds of two runs each (minutes)"]
fn acceptance_9_curriculum_beats_traditional() {
    let steps = 200_000;
    let mut curriculum_mean = 0.0;
    let mut traditional_mean = 0.0;
    let seeds = [101u64, 202, 303];
    for &seed in &seeds {
        for (is_curriculum, acc) in
            [(true, &mut curriculum_mean), (false, &mut traditional_mean)]
        {
            let mut cfg = hideseek_smoke_config(seed, is_curriculum, 1, steps);
            if is_curriculum {
                // Smoke-scale advancement gate: short episodes cap rewards at
                // S_m/interval * 0.001 = 0.256, so the threshold shrinks with
                // them.
                cfg.curriculum.threshold = 0.02;
                cfg.curriculum.window = 100;
            } else {
                // The traditional baseline pins level 4 from step 0.
                cfg.curriculum.enabled = false;
                cfg.curriculum.start_level = 4;
            }
            let dir = std::env::temp_dir().join(format!(
                "skyseek-acc9-{}-{}-{}",
                seed,
                is_curriculum,
                std::process::id()
            ));
            let _ = std::fs::remove_dir_all(&dir);
            let out = train(&cfg, &dir).unwrap();
            let ckpt = skyseek_core::learn::load_checkpoint(
                &out.final_checkpoints["hiders"],
                &skyseek_core::harness::policy_descriptor(&cfg, Team::Hiders),
            )
            .unwrap();
            // Evaluate each policy at the difficulty its run ended on.
            let final_level: u8 = {
                let metrics = std::fs::read_to_string(&out.metrics_path).unwrap();
                metrics
                    .lines()
                    .last()
                    .and_then(|l| l.split(',').next_back())
                    .and_then(|v| v.parse().ok())
                    .unwrap_or(cfg.curriculum.start_level)
            };
            let mut eval_cfg = cfg.clone();
            eval_cfg.curriculum.start_level = final_level;
            let summary = evaluate(
                &eval_cfg,
                PolicyRef::Learned { params: &ckpt.params, deterministic: true },
                PolicyRef::Random,
                40,
                4242,
            )
            .unwrap();
            let reward = summary.mean_reward.get("hiders").copied().unwrap_or(0.0);
            println!(
                "seed {seed} {}: final level {final_level}, hider reward {reward}",
                if is_curriculum { "curriculum" } else { "traditional" }
            );
            *acc += reward;
            std::fs::remove_dir_all(&dir).ok();
        }
    }
    curriculum_mean /= seeds.len() as f64;
    traditional_mean /= seeds.len() as f64;
    println!("hider reward: curriculum {curriculum_mean} vs traditional {traditional_mean}");
    assert!(
        curriculum_mean > traditional_mean,
        "curriculum must beat the fixed-level-4 baseline: {curriculum_mean} vs {traditional_mean}"
    );
    pass(9, "curriculum vs traditional directional check");
}
