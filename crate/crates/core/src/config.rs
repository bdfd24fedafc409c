//! Run configuration: a sectioned plain-text format, scenario presets, and
//! the validation that keeps buffer sizing and phase plans coherent.
//!
//! A config file fully determines a run. Parsing starts from the preset
//! named by `[run] scenario`, applies every other key as an override,
//! validates, and can dump the resolved result back out; parsing that dump
//! reproduces the config exactly, so every results directory is
//! self-describing.

use crate::game::scenario::{ScenarioKind, ScenarioSpec};
use crate::game::{PhaseConfig, RewardConfig, VisibilityConfig};
use crate::learn::{buffer_size, HyperParams, Team};
use crate::sensors::{GridSensorConfig, ObsConfig, RaycastConfig};
use crate::world::{AgentCounts, ArenaConfig};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown key [{section}] {key} (line {line})")]
    UnknownKey { section: String, key: String, line: usize },
    #[error("[{section}] {key}: {msg} (line {line})")]
    BadValue { section: String, key: String, msg: String, line: usize },
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

/// The nine bundled presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioName {
    Hummingbird,
    DroneTarget,
    Eye,
    HideseekLevel1,
    HideseekLevel2,
    HideseekLevel3,
    HideseekLevel4,
    HideseekCurriculum,
    HideseekTraditional,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 9] = [
        ScenarioName::Hummingbird,
        ScenarioName::DroneTarget,
        ScenarioName::Eye,
        ScenarioName::HideseekLevel1,
        ScenarioName::HideseekLevel2,
        ScenarioName::HideseekLevel3,
        ScenarioName::HideseekLevel4,
        ScenarioName::HideseekCurriculum,
        ScenarioName::HideseekTraditional,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioName::Hummingbird => "hummingbird",
            ScenarioName::DroneTarget => "drone_target",
            ScenarioName::Eye => "eye",
            ScenarioName::HideseekLevel1 => "hideseek_level1",
            ScenarioName::HideseekLevel2 => "hideseek_level2",
            ScenarioName::HideseekLevel3 => "hideseek_level3",
            ScenarioName::HideseekLevel4 => "hideseek_level4",
            ScenarioName::HideseekCurriculum => "hideseek_curriculum",
            ScenarioName::HideseekTraditional => "hideseek_traditional",
        }
    }

    pub fn parse(s: &str) -> Option<ScenarioName> {
        ScenarioName::ALL.into_iter().find(|n| n.name() == s)
    }

    pub fn pre_experiment(self) -> Option<ScenarioKind> {
        match self {
            ScenarioName::Hummingbird => Some(ScenarioKind::Hummingbird),
            ScenarioName::DroneTarget => Some(ScenarioKind::DroneTarget),
            ScenarioName::Eye => Some(ScenarioKind::Eye),
            _ => None,
        }
    }
}

/// Who learns during a phase and what the other side runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearningTeam {
    Hiders,
    Seekers,
    SingleAgent,
}

impl LearningTeam {
    pub fn team(self) -> Team {
        match self {
            LearningTeam::Seekers => Team::Seekers,
            _ => Team::Hiders,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LearningTeam::Hiders => "hiders",
            LearningTeam::Seekers => "seekers",
            LearningTeam::SingleAgent => "solo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpponentPolicy {
    FrozenCheckpoint,
    ScriptedRandom,
    ScriptedStationary,
    ScriptedChaser,
    ScriptedEvader,
    None,
}

impl OpponentPolicy {
    pub fn name(self) -> &'static str {
        match self {
            OpponentPolicy::FrozenCheckpoint => "frozen",
            OpponentPolicy::ScriptedRandom => "random",
            OpponentPolicy::ScriptedStationary => "stationary",
            OpponentPolicy::ScriptedChaser => "chaser",
            OpponentPolicy::ScriptedEvader => "evader",
            OpponentPolicy::None => "none",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            OpponentPolicy::FrozenCheckpoint,
            OpponentPolicy::ScriptedRandom,
            OpponentPolicy::ScriptedStationary,
            OpponentPolicy::ScriptedChaser,
            OpponentPolicy::ScriptedEvader,
            OpponentPolicy::None,
        ]
        .into_iter()
        .find(|o| o.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainPhase {
    pub learning_team: LearningTeam,
    pub opponent_policy: OpponentPolicy,
    /// Fraction of total_env_steps this phase consumes.
    pub budget_fraction: f64,
}

impl TrainPhase {
    fn encode(&self) -> String {
        format!(
            "{}:{}:{}",
            self.learning_team.name(),
            self.opponent_policy.name(),
            self.budget_fraction
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurriculumConfig {
    pub enabled: bool,
    pub threshold: f64,
    pub window: usize,
    /// Start level when enabled; the pinned level when disabled.
    pub start_level: u8,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSettings {
    pub use_proprio: bool,
    pub use_raycast: bool,
    /// Cell arc in degrees; 0 disables the grid.
    pub spatial_cell_arc: f64,
    pub frontal_cell_arc: f64,
    pub max_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnessSettings {
    pub threads: u32,
    pub checkpoint_every_updates: u32,
    pub replay_record_every: u64,
    pub smoothing_factor: f64,
    /// Frozen/learned opponents act greedily when true.
    pub opponent_deterministic: bool,
}

/// Everything a run needs; one value, fully determined by a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioName,
    pub seed: u64,
    pub total_env_steps: u64,
    pub batch_size: usize,
    pub env_count: u32,
    pub instances_per_env: u32,
    /// Externally declared buffer size, checked against the product.
    pub declared_buffer: Option<u64>,
    pub phase: PhaseConfig,
    pub rewards: RewardConfig,
    pub visibility: VisibilityConfig,
    pub curriculum: CurriculumConfig,
    pub arena: ArenaConfig,
    pub counts: AgentCounts,
    pub sensors: SensorSettings,
    pub hp: HyperParams,
    pub hidden_units: usize,
    pub encoder_dim: usize,
    pub phases: Vec<TrainPhase>,
    pub harness: HarnessSettings,
}

impl RunConfig {
    /// Preset defaults for a scenario; callers override from the file.
    pub fn preset(name: ScenarioName) -> RunConfig {
        let base = RunConfig {
            scenario: name,
            seed: 0,
            total_env_steps: 500_000,
            batch_size: 3072,
            env_count: 8,
            instances_per_env: 3,
            declared_buffer: None,
            phase: PhaseConfig::default(),
            rewards: RewardConfig::default(),
            visibility: VisibilityConfig::default(),
            curriculum: CurriculumConfig {
                enabled: false,
                threshold: 1.0,
                window: 100,
                start_level: 1,
            },
            arena: ArenaConfig::default(),
            counts: AgentCounts { hiders: 2, seekers: 2 },
            sensors: SensorSettings {
                use_proprio: true,
                use_raycast: true,
                spatial_cell_arc: 20.0,
                frontal_cell_arc: 12.0,
                max_distance: 20.0,
            },
            hp: HyperParams::default(),
            hidden_units: 256,
            encoder_dim: 64,
            phases: vec![
                TrainPhase {
                    learning_team: LearningTeam::Hiders,
                    opponent_policy: OpponentPolicy::ScriptedRandom,
                    budget_fraction: 0.5,
                },
                TrainPhase {
                    learning_team: LearningTeam::Seekers,
                    opponent_policy: OpponentPolicy::FrozenCheckpoint,
                    budget_fraction: 0.5,
                },
            ],
            harness: HarnessSettings {
                threads: 4,
                checkpoint_every_updates: 10,
                replay_record_every: 50,
                smoothing_factor: 0.99,
                opponent_deterministic: true,
            },
        };
        match name {
            ScenarioName::Hummingbird | ScenarioName::DroneTarget | ScenarioName::Eye => {
                let spec = ScenarioSpec::preset(name.pre_experiment().unwrap());
                RunConfig {
                    arena: spec.arena,
                    counts: AgentCounts { hiders: spec.agents, seekers: 1 },
                    sensors: SensorSettings {
                        spatial_cell_arc: 0.0,
                        frontal_cell_arc: 0.0,
                        ..base.sensors
                    },
                    rewards: crate::game::scenario::scenario_rewards(spec.kind),
                    phases: vec![TrainPhase {
                        learning_team: LearningTeam::SingleAgent,
                        opponent_policy: OpponentPolicy::None,
                        budget_fraction: 1.0,
                    }],
                    ..base
                }
            }
            ScenarioName::HideseekLevel1
            | ScenarioName::HideseekLevel2
            | ScenarioName::HideseekLevel3
            | ScenarioName::HideseekLevel4 => {
                let level = match name {
                    ScenarioName::HideseekLevel1 => 1,
                    ScenarioName::HideseekLevel2 => 2,
                    ScenarioName::HideseekLevel3 => 3,
                    _ => 4,
                };
                RunConfig {
                    curriculum: CurriculumConfig { start_level: level, ..base.curriculum },
                    ..base
                }
            }
            ScenarioName::HideseekCurriculum => RunConfig {
                curriculum: CurriculumConfig { enabled: true, ..base.curriculum },
                phases: vec![TrainPhase {
                    learning_team: LearningTeam::Hiders,
                    opponent_policy: OpponentPolicy::ScriptedRandom,
                    budget_fraction: 1.0,
                }],
                ..base
            },
            ScenarioName::HideseekTraditional => RunConfig {
                curriculum: CurriculumConfig {
                    enabled: false,
                    start_level: 4,
                    ..base.curriculum
                },
                phases: vec![TrainPhase {
                    learning_team: LearningTeam::Hiders,
                    opponent_policy: OpponentPolicy::ScriptedRandom,
                    budget_fraction: 1.0,
                }],
                ..base
            },
        }
    }

    /// Scenario spec for the pre-experiment presets, with the configured
    /// arena override applied.
    pub fn scenario_spec(&self) -> Option<ScenarioSpec> {
        self.scenario.pre_experiment().map(|kind| {
            let mut spec = ScenarioSpec::preset(kind);
            spec.arena = self.arena;
            spec.agents = self.counts.hiders;
            spec
        })
    }

    /// The observation blocks agents see under this config.
    pub fn obs_config(&self) -> ObsConfig {
        let known_target = self.scenario_spec().map(|s| s.known_target).unwrap_or(false);
        ObsConfig {
            proprio: self.sensors.use_proprio,
            raycast: self.sensors.use_raycast.then(|| RaycastConfig {
                ray_length: self.sensors.max_distance,
                ..RaycastConfig::default()
            }),
            spatial: (self.sensors.spatial_cell_arc > 0.0).then(|| GridSensorConfig {
                max_distance: self.sensors.max_distance,
                ..GridSensorConfig::spatial(self.sensors.spatial_cell_arc)
            }),
            frontal: (self.sensors.frontal_cell_arc > 0.0).then(|| GridSensorConfig {
                max_distance: self.sensors.max_distance,
                ..GridSensorConfig::frontal(self.sensors.frontal_cell_arc)
            }),
            target_relpos: known_target,
        }
    }

    pub fn buffer_capacity(&self) -> Result<u64, ConfigError> {
        let b = buffer_size(
            self.batch_size as u64,
            self.env_count as u64,
            self.instances_per_env as u64,
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(declared) = self.declared_buffer {
            if declared != b {
                return Err(ConfigError::Invalid(format!(
                    "declared buffer_size {declared} != batch_size * env_count * instances = {b}"
                )));
            }
        }
        Ok(b)
    }

    pub fn team_size(&self, team: LearningTeam) -> u32 {
        match team {
            LearningTeam::Hiders | LearningTeam::SingleAgent => self.counts.hiders,
            LearningTeam::Seekers => self.counts.seekers,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.buffer_capacity()?;
        self.phase.validate().map_err(ConfigError::Invalid)?;
        self.hp.validate().map_err(ConfigError::Invalid)?;
        if self.phases.is_empty() {
            return Err(ConfigError::Invalid("phase plan is empty".into()));
        }
        let total: f64 = self.phases.iter().map(|p| p.budget_fraction).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ConfigError::Invalid(format!(
                "phase budget fractions sum to {total}, need 1"
            )));
        }
        let hideseek = self.scenario.pre_experiment().is_none();
        for phase in &self.phases {
            if phase.budget_fraction <= 0.0 {
                return Err(ConfigError::Invalid("phase budget fraction must be positive".into()));
            }
            if hideseek && phase.learning_team == LearningTeam::SingleAgent {
                return Err(ConfigError::Invalid(
                    "single-agent phase in a hide-and-seek scenario".into(),
                ));
            }
            if !hideseek && phase.learning_team != LearningTeam::SingleAgent {
                return Err(ConfigError::Invalid(
                    "hide-and-seek phase in a single-agent scenario".into(),
                ));
            }
            let team = self.team_size(phase.learning_team);
            if self.batch_size % team as usize != 0 {
                return Err(ConfigError::Invalid(format!(
                    "batch_size {} not divisible by learning team size {team}",
                    self.batch_size
                )));
            }
        }
        if hideseek {
            if !(1..=2).contains(&self.counts.hiders) {
                return Err(ConfigError::Invalid(format!(
                    "hiders = {} outside 1..2",
                    self.counts.hiders
                )));
            }
            if !(1..=4).contains(&self.counts.seekers) {
                return Err(ConfigError::Invalid(format!(
                    "seekers = {} outside 1..4",
                    self.counts.seekers
                )));
            }
        }
        if !(1..=4).contains(&self.curriculum.start_level) {
            return Err(ConfigError::Invalid(format!(
                "start_level {} outside 1..4",
                self.curriculum.start_level
            )));
        }
        if self.harness.threads == 0 {
            return Err(ConfigError::Invalid("threads must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.harness.smoothing_factor) {
            return Err(ConfigError::Invalid(format!(
                "smoothing_factor {} outside [0, 1)",
                self.harness.smoothing_factor
            )));
        }
        let obs = self.obs_config();
        if let Some(g) = &obs.spatial {
            g.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if let Some(g) = &obs.frontal {
            g.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if obs.dim() == 0 {
            return Err(ConfigError::Invalid("observation config enables no sensors".into()));
        }
        Ok(())
    }

    /// Canonical dump: every key explicit, parseable back to an equal value.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[run]");
        let _ = writeln!(s, "scenario = {}", self.scenario.name());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "total_env_steps = {}", self.total_env_steps);
        let _ = writeln!(s, "\n[buffer]");
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "env_count = {}", self.env_count);
        let _ = writeln!(s, "instances_per_env = {}", self.instances_per_env);
        let _ = writeln!(s, "buffer_size = {}", self.buffer_capacity().unwrap_or(0));
        let _ = writeln!(s, "\n[phase]");
        let _ = writeln!(s, "max_env_steps = {}", self.phase.max_env_steps);
        let _ = writeln!(s, "prep_fraction = {}", self.phase.prep_fraction);
        let _ = writeln!(s, "decision_interval = {}", self.phase.decision_interval);
        let _ = writeln!(s, "\n[rewards]");
        let _ = writeln!(s, "hider_hidden_per_frame = {}", self.rewards.hider_hidden_per_frame);
        let _ = writeln!(s, "seeker_sight_per_frame = {}", self.rewards.seeker_sight_per_frame);
        let _ = writeln!(s, "seeker_tag = {}", self.rewards.seeker_tag);
        let _ = writeln!(s, "hider_tagged = {}", self.rewards.hider_tagged);
        let _ = writeln!(s, "opening_blocked_bonus = {}", self.rewards.opening_blocked_bonus);
        let _ = writeln!(s, "team_shared = {}", self.rewards.team_shared);
        let _ = writeln!(s, "in_target_per_frame = {}", self.rewards.in_target_per_frame);
        let _ = writeln!(s, "reach_target = {}", self.rewards.reach_target);
        let _ = writeln!(s, "look_at_per_frame = {}", self.rewards.look_at_per_frame);
        let _ = writeln!(s, "collide_penalty = {}", self.rewards.collide_penalty);
        let _ = writeln!(s, "wall_collide_penalty = {}", self.rewards.wall_collide_penalty);
        let _ = writeln!(s, "\n[visibility]");
        let _ = writeln!(s, "fov_half_angle = {}", self.visibility.fov_half_angle_deg);
        let _ = writeln!(s, "max_distance = {}", self.visibility.max_distance);
        let _ = writeln!(s, "\n[curriculum]");
        let _ = writeln!(s, "enabled = {}", self.curriculum.enabled);
        let _ = writeln!(s, "threshold = {}", self.curriculum.threshold);
        let _ = writeln!(s, "window = {}", self.curriculum.window);
        let _ = writeln!(s, "start_level = {}", self.curriculum.start_level);
        let _ = writeln!(s, "\n[world]");
        let _ = writeln!(s, "width = {}", self.arena.width);
        let _ = writeln!(s, "height = {}", self.arena.height);
        let _ = writeln!(s, "depth = {}", self.arena.depth);
        let _ = writeln!(s, "hiders = {}", self.counts.hiders);
        let _ = writeln!(s, "seekers = {}", self.counts.seekers);
        let _ = writeln!(s, "\n[sensors]");
        let _ = writeln!(s, "use_proprio = {}", self.sensors.use_proprio);
        let _ = writeln!(s, "use_raycast = {}", self.sensors.use_raycast);
        let _ = writeln!(s, "spatial_cell_arc = {}", self.sensors.spatial_cell_arc);
        let _ = writeln!(s, "frontal_cell_arc = {}", self.sensors.frontal_cell_arc);
        let _ = writeln!(s, "max_distance = {}", self.sensors.max_distance);
        let _ = writeln!(s, "\n[learn]");
        let _ = writeln!(s, "hidden_units = {}", self.hidden_units);
        let _ = writeln!(s, "encoder_dim = {}", self.encoder_dim);
        let _ = writeln!(s, "gamma = {}", self.hp.gamma);
        let _ = writeln!(s, "gae_lambda = {}", self.hp.gae_lambda);
        let _ = writeln!(s, "clip_epsilon = {}", self.hp.clip_epsilon);
        let _ = writeln!(s, "learning_rate = {}", self.hp.learning_rate);
        let _ = writeln!(s, "epochs_per_update = {}", self.hp.epochs_per_update);
        let _ = writeln!(s, "entropy_coefficient = {}", self.hp.entropy_coefficient);
        let _ = writeln!(s, "value_coefficient = {}", self.hp.value_coefficient);
        let _ = writeln!(s, "optimizer = {}", self.hp.optimizer.name());
        let _ = writeln!(s, "\n[phases]");
        let plan: Vec<String> = self.phases.iter().map(|p| p.encode()).collect();
        let _ = writeln!(s, "plan = {}", plan.join(", "));
        let _ = writeln!(s, "\n[harness]");
        let _ = writeln!(s, "threads = {}", self.harness.threads);
        let _ = writeln!(s, "checkpoint_every_updates = {}", self.harness.checkpoint_every_updates);
        let _ = writeln!(s, "replay_record_every = {}", self.harness.replay_record_every);
        let _ = writeln!(s, "smoothing_factor = {}", self.harness.smoothing_factor);
        let _ = writeln!(s, "opponent_deterministic = {}", self.harness.opponent_deterministic);
        s
    }
}

/// Parse a config document. The `[run] scenario` key picks the preset;
/// every other key overrides one field. Unknown keys are rejected with
/// their line number.
pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    // First pass: find the scenario, collect (section, key, value, line).
    let mut entries: Vec<(String, String, String, usize)> = Vec::new();
    let mut section = String::new();
    for (ix, raw) in text.lines().enumerate() {
        let line = ix + 1;
        let content = raw.split(&[';', '#'][..]).next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or(ConfigError::Parse {
                line,
                msg: "unterminated section header".into(),
            })?;
            section = name.trim().to_string();
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Parse { line, msg: format!("expected key = value, got {content:?}") });
        };
        if section.is_empty() {
            return Err(ConfigError::Parse { line, msg: "key before any [section]".into() });
        }
        entries.push((section.clone(), key.trim().to_string(), value.trim().to_string(), line));
    }

    let scenario = entries
        .iter()
        .find(|(s, k, _, _)| s == "run" && k == "scenario")
        .map(|(_, _, v, line)| {
            ScenarioName::parse(v).ok_or_else(|| ConfigError::BadValue {
                section: "run".into(),
                key: "scenario".into(),
                msg: format!(
                    "unknown scenario {v:?}; valid: {}",
                    ScenarioName::ALL.map(|n| n.name()).join(", ")
                ),
                line: *line,
            })
        })
        .transpose()?
        .ok_or(ConfigError::Invalid("missing required key [run] scenario".into()))?;

    let mut cfg = RunConfig::preset(scenario);
    let mut declared: BTreeMap<&'static str, bool> = BTreeMap::new();
    for (section, key, value, line) in &entries {
        apply_key(&mut cfg, section, key, value, *line, &mut declared)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config_file(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse_config_str(&text)
}

fn apply_key(
    cfg: &mut RunConfig,
    section: &str,
    key: &str,
    value: &str,
    line: usize,
    _declared: &mut BTreeMap<&'static str, bool>,
) -> Result<(), ConfigError> {
    let bad = |msg: String| ConfigError::BadValue {
        section: section.to_string(),
        key: key.to_string(),
        msg,
        line,
    };
    macro_rules! num {
        ($ty:ty) => {
            value.parse::<$ty>().map_err(|e| bad(format!("{e}")))?
        };
    }
    let parse_bool = |v: &str| -> Result<bool, ConfigError> {
        match v {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(bad(format!("expected a boolean, got {other:?}"))),
        }
    };
    match (section, key) {
        ("run", "scenario") => {} // handled in the first pass
        ("run", "seed") => cfg.seed = num!(u64),
        ("run", "total_env_steps") => cfg.total_env_steps = num!(u64),
        ("buffer", "batch_size") => cfg.batch_size = num!(usize),
        ("buffer", "env_count") => cfg.env_count = num!(u32),
        ("buffer", "instances_per_env") => cfg.instances_per_env = num!(u32),
        ("buffer", "buffer_size") => cfg.declared_buffer = Some(num!(u64)),
        ("phase", "max_env_steps") => cfg.phase.max_env_steps = num!(u64),
        ("phase", "prep_fraction") => cfg.phase.prep_fraction = num!(f64),
        ("phase", "decision_interval") => cfg.phase.decision_interval = num!(u64),
        ("rewards", "hider_hidden_per_frame") => cfg.rewards.hider_hidden_per_frame = num!(f64),
        ("rewards", "seeker_sight_per_frame") => cfg.rewards.seeker_sight_per_frame = num!(f64),
        ("rewards", "seeker_tag") => cfg.rewards.seeker_tag = num!(f64),
        ("rewards", "hider_tagged") => cfg.rewards.hider_tagged = num!(f64),
        ("rewards", "opening_blocked_bonus") => cfg.rewards.opening_blocked_bonus = num!(f64),
        ("rewards", "team_shared") => cfg.rewards.team_shared = parse_bool(value)?,
        ("rewards", "in_target_per_frame") => cfg.rewards.in_target_per_frame = num!(f64),
        ("rewards", "reach_target") => cfg.rewards.reach_target = num!(f64),
        ("rewards", "look_at_per_frame") => cfg.rewards.look_at_per_frame = num!(f64),
        ("rewards", "collide_penalty") => cfg.rewards.collide_penalty = num!(f64),
        ("rewards", "wall_collide_penalty") => cfg.rewards.wall_collide_penalty = num!(f64),
        ("visibility", "fov_half_angle") => cfg.visibility.fov_half_angle_deg = num!(f64),
        ("visibility", "max_distance") => cfg.visibility.max_distance = num!(f64),
        ("curriculum", "enabled") => cfg.curriculum.enabled = parse_bool(value)?,
        ("curriculum", "threshold") => cfg.curriculum.threshold = num!(f64),
        ("curriculum", "window") => cfg.curriculum.window = num!(usize),
        ("curriculum", "start_level") => cfg.curriculum.start_level = num!(u8),
        ("world", "width") => cfg.arena.width = num!(f64),
        ("world", "height") => cfg.arena.height = num!(f64),
        ("world", "depth") => cfg.arena.depth = num!(f64),
        ("world", "hiders") => cfg.counts.hiders = num!(u32),
        ("world", "seekers") => cfg.counts.seekers = num!(u32),
        ("sensors", "use_proprio") => cfg.sensors.use_proprio = parse_bool(value)?,
        ("sensors", "use_raycast") => cfg.sensors.use_raycast = parse_bool(value)?,
        ("sensors", "spatial_cell_arc") => cfg.sensors.spatial_cell_arc = num!(f64),
        ("sensors", "frontal_cell_arc") => cfg.sensors.frontal_cell_arc = num!(f64),
        ("sensors", "max_distance") => cfg.sensors.max_distance = num!(f64),
        ("learn", "hidden_units") => cfg.hidden_units = num!(usize),
        ("learn", "encoder_dim") => cfg.encoder_dim = num!(usize),
        ("learn", "gamma") => cfg.hp.gamma = num!(f64),
        ("learn", "gae_lambda") => cfg.hp.gae_lambda = num!(f64),
        ("learn", "clip_epsilon") => cfg.hp.clip_epsilon = num!(f64),
        ("learn", "learning_rate") => cfg.hp.learning_rate = num!(f64),
        ("learn", "epochs_per_update") => cfg.hp.epochs_per_update = num!(u32),
        ("learn", "entropy_coefficient") => cfg.hp.entropy_coefficient = num!(f64),
        ("learn", "value_coefficient") => cfg.hp.value_coefficient = num!(f64),
        ("learn", "optimizer") => {
            cfg.hp.optimizer = crate::learn::OptimizerKind::parse(value)
                .ok_or_else(|| bad(format!("unknown optimizer {value:?}; expected sgd or adam")))?
        }
        ("phases", "plan") => {
            let mut phases = Vec::new();
            for part in value.split(',') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                let fields: Vec<&str> = part.split(':').collect();
                if fields.len() != 3 {
                    return Err(bad(format!("phase {part:?} must be team:opponent:fraction")));
                }
                let learning_team = match fields[0] {
                    "hiders" => LearningTeam::Hiders,
                    "seekers" => LearningTeam::Seekers,
                    "solo" => LearningTeam::SingleAgent,
                    other => return Err(bad(format!("unknown team {other:?}"))),
                };
                let opponent_policy = OpponentPolicy::parse(fields[1])
                    .ok_or_else(|| bad(format!("unknown opponent {:?}", fields[1])))?;
                let budget_fraction =
                    fields[2].parse::<f64>().map_err(|e| bad(format!("{e}")))?;
                phases.push(TrainPhase { learning_team, opponent_policy, budget_fraction });
            }
            cfg.phases = phases;
        }
        ("harness", "threads") => cfg.harness.threads = num!(u32),
        ("harness", "checkpoint_every_updates") => {
            cfg.harness.checkpoint_every_updates = num!(u32)
        }
        ("harness", "replay_record_every") => cfg.harness.replay_record_every = num!(u64),
        ("harness", "smoothing_factor") => cfg.harness.smoothing_factor = num!(f64),
        ("harness", "opponent_deterministic") => {
            cfg.harness.opponent_deterministic = parse_bool(value)?
        }
        _ => {
            return Err(ConfigError::UnknownKey {
                section: section.to_string(),
                key: key.to_string(),
                line,
            })
        }
    }
    Ok(())
}
