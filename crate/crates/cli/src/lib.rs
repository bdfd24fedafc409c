//! Command implementations behind the `skyseek` binary.
//!
//! Exit-code discipline: success 0, configuration problems 2, runtime
//! failures 1. Every command prints the seed it resolved so runs can be
//! reproduced from terminal history alone.

pub mod plot;

use clap::{Parser, Subcommand};
use skyseek_core::config::{parse_config_file, RunConfig, ScenarioName};
use skyseek_core::game::scenario::ScenarioEpisode;
use skyseek_core::harness::{
    evaluate, export_replay, policy_descriptor, train, PolicyRef, RecordedEpisode,
};
use skyseek_core::learn::{load_checkpoint, Team};
use skyseek_core::sensors::{grid_scan, raycast_sweep};
use skyseek_core::world::{build_arena_with, BodyKind};
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments: exit code 2.
    Config(String),
    /// Failure during execution: exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "skyseek",
    version,
    about = "Aerial hide-and-seek: train, evaluate, replay, and plot"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train per a config file; writes metrics, checkpoints, and replays.
    Train {
        /// Path to the run config.
        config: PathBuf,
        /// Output directory (default runs/<scenario>_s<seed>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a hider/seeker checkpoint pair with greedy policies.
    Eval {
        /// Hider-team checkpoint.
        ckpt_hiders: PathBuf,
        /// Seeker-team checkpoint.
        ckpt_seekers: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Environment config file; defaults to the preset below.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Preset name when no config file is given.
        #[arg(long, default_value = "hideseek_level4")]
        preset: String,
    },
    /// Export a recorded episode from a run directory as a frame record.
    Replay {
        /// Run directory produced by `train`.
        run: PathBuf,
        /// Episode log index (as numbered in the replays directory).
        #[arg(long)]
        episode: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plot a metrics.csv column as a static SVG.
    Plot {
        metrics: PathBuf,
        #[arg(long)]
        column: String,
        /// Restrict to one team's rows.
        #[arg(long)]
        team: Option<String>,
        /// EMA smoothing factor in [0, 1).
        #[arg(long, default_value_t = 0.0)]
        smooth: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scenario preset utilities.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
    /// Dump one sensor scan as CSV (debug aid).
    Scan {
        /// Preset naming the world to build.
        #[arg(long, default_value = "hideseek_level4")]
        preset: String,
        /// Config file overriding the preset.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Agent index (0-based over hiders then seekers).
        #[arg(long, default_value_t = 0)]
        agent: usize,
        /// Which sensor: spatial, frontal, or rays.
        #[arg(long)]
        sensor: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum ScenarioAction {
    /// List the bundled scenario presets.
    List,
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train { config, out } => cmd_train(&config, out),
        Command::Eval { ckpt_hiders, ckpt_seekers, episodes, seed, config, preset } => {
            cmd_eval(&ckpt_hiders, &ckpt_seekers, episodes, seed, config.as_deref(), &preset)
        }
        Command::Replay { run, episode, out } => cmd_replay(&run, episode, &out),
        Command::Plot { metrics, column, team, smooth, out } => {
            cmd_plot(&metrics, &column, team.as_deref(), smooth, &out)
        }
        Command::Scenario { action: ScenarioAction::List } => {
            for name in ScenarioName::ALL {
                println!("{}", name.name());
            }
            Ok(())
        }
        Command::Scan { preset, config, agent, sensor, seed, out } => {
            cmd_scan(&preset, config.as_deref(), agent, &sensor, seed, &out)
        }
    }
}

fn load_run_config(path: &Path) -> Result<RunConfig, CliError> {
    parse_config_file(path).map_err(|e| CliError::Config(e.to_string()))
}

fn preset_config(name: &str, seed: u64) -> Result<RunConfig, CliError> {
    let scenario = ScenarioName::parse(name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown preset {name:?}; valid: {}",
            ScenarioName::ALL.map(|n| n.name()).join(", ")
        ))
    })?;
    let mut cfg = RunConfig::preset(scenario);
    cfg.seed = seed;
    Ok(cfg)
}

fn cmd_train(config_path: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = load_run_config(config_path)?;
    println!("seed: {}", cfg.seed);
    let run_dir = out.unwrap_or_else(|| {
        PathBuf::from("runs").join(format!("{}_s{}", cfg.scenario.name(), cfg.seed))
    });
    let output = train(&cfg, &run_dir).map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("run_dir: {}", output.run_dir.display());
    println!("global_step: {}", output.global_step);
    println!("episodes: {}", output.episodes);
    println!("updates: {}", output.updates);
    for (team, path) in &output.final_checkpoints {
        println!("checkpoint_{team}: {}", path.display());
    }
    println!("metrics: {}", output.metrics_path.display());
    Ok(())
}

fn cmd_eval(
    ckpt_hiders: &Path,
    ckpt_seekers: &Path,
    episodes: u64,
    seed: u64,
    config: Option<&Path>,
    preset: &str,
) -> Result<(), CliError> {
    let cfg = match config {
        Some(path) => load_run_config(path)?,
        None => preset_config(preset, seed)?,
    };
    println!("seed: {seed}");
    let hiders = load_checkpoint(ckpt_hiders, &policy_descriptor(&cfg, Team::Hiders))
        .map_err(|e| CliError::Runtime(format!("{}: {e}", ckpt_hiders.display())))?;
    let seekers = load_checkpoint(ckpt_seekers, &policy_descriptor(&cfg, Team::Seekers))
        .map_err(|e| CliError::Runtime(format!("{}: {e}", ckpt_seekers.display())))?;
    let summary = evaluate(
        &cfg,
        PolicyRef::Learned { params: &hiders.params, deterministic: true },
        PolicyRef::Learned { params: &seekers.params, deterministic: true },
        episodes,
        seed,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    print!("{}", summary.render());
    Ok(())
}

fn cmd_replay(run: &Path, episode: u64, out: &Path) -> Result<(), CliError> {
    let log_path = run.join("replays").join(format!("ep{episode:06}.log"));
    if !log_path.exists() {
        let available: Vec<String> = std::fs::read_dir(run.join("replays"))
            .map(|rd| {
                rd.filter_map(|e| e.ok())
                    .filter_map(|e| e.file_name().into_string().ok())
                    .collect()
            })
            .unwrap_or_default();
        return Err(CliError::Runtime(format!(
            "no recorded episode {episode} in {}; available: {}",
            run.display(),
            if available.is_empty() { "none".to_string() } else { available.join(", ") }
        )));
    }
    let cfg = load_run_config(&run.join("config.resolved.conf"))?;
    println!("seed: {}", cfg.seed);
    let text = std::fs::read_to_string(&log_path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", log_path.display())))?;
    let rec = RecordedEpisode::from_log(&text).map_err(|e| CliError::Runtime(e.to_string()))?;
    let episode_cfg = skyseek_core::game::EpisodeConfig {
        phase: cfg.phase,
        rewards: cfg.rewards,
        visibility: cfg.visibility,
        reward_scale: 1.0,
        dt: 0.02,
    };
    let record =
        export_replay(&rec, &episode_cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(out, record)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    println!("replay: {}", out.display());
    Ok(())
}

fn cmd_plot(
    metrics: &Path,
    column: &str,
    team: Option<&str>,
    smooth: f64,
    out: &Path,
) -> Result<(), CliError> {
    let csv = std::fs::read_to_string(metrics)
        .map_err(|e| CliError::Config(format!("{}: {e}", metrics.display())))?;
    let title = format!("{column} (smoothed {smooth})");
    let svg = plot::plot_metrics(&csv, column, team, smooth, &title)
        .map_err(CliError::Config)?;
    std::fs::write(out, svg)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    println!("seed: n/a (plotting is deterministic)");
    println!("plot: {}", out.display());
    Ok(())
}

fn cmd_scan(
    preset: &str,
    config: Option<&Path>,
    agent: usize,
    sensor: &str,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let cfg = match config {
        Some(path) => load_run_config(path)?,
        None => preset_config(preset, seed)?,
    };
    println!("seed: {seed}");
    let world = match cfg.scenario_spec() {
        Some(spec) => ScenarioEpisode::new(spec, seed).world,
        None => build_arena_with(
            &cfg.arena,
            cfg.curriculum.start_level,
            skyseek_core::curriculum::prop_count(cfg.curriculum.start_level, 0.0),
            cfg.counts,
            seed,
        )
        .map_err(|e| CliError::Runtime(e.to_string()))?,
    };
    let agents = world.agent_ids();
    let id = *agents
        .get(agent)
        .ok_or_else(|| CliError::Config(format!("agent {agent} of {} agents", agents.len())))?;
    let obs_cfg = cfg.obs_config();
    let csv = match sensor {
        "spatial" | "frontal" => {
            let grid_cfg = if sensor == "spatial" {
                obs_cfg.spatial.clone().unwrap_or_else(|| {
                    skyseek_core::sensors::GridSensorConfig::spatial(20.0)
                })
            } else {
                obs_cfg.frontal.clone().unwrap_or_else(|| {
                    skyseek_core::sensors::GridSensorConfig::frontal(12.0)
                })
            };
            grid_scan(&world, id, &grid_cfg)
                .map_err(|e| CliError::Runtime(e.to_string()))?
                .to_csv()
        }
        "rays" => {
            let rc = obs_cfg.raycast.unwrap_or_default();
            let values =
                raycast_sweep(&world, id, &rc).map_err(|e| CliError::Runtime(e.to_string()))?;
            let per = rc.values_per_ray();
            let mut s = String::from("distance,hider,seeker,prop,obstacle,wall,boundary\n");
            for ray in values.chunks(per) {
                let row: Vec<String> = ray.iter().map(|v| format!("{v}")).collect();
                s.push_str(&row.join(","));
                s.push('\n');
            }
            s
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown sensor {other:?}; expected spatial, frontal, or rays"
            )))
        }
    };
    std::fs::write(out, csv)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    println!(
        "scan: {} ({} agent {})",
        out.display(),
        world.body(id).map(|b| b.kind).map_or("?", BodyKind::name),
        agent
    );
    Ok(())
}
