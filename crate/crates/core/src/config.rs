//! Run configuration in the line-oriented `key value` format used for arenas.
//!
//! [`RunConfig::to_text`] writes every key, so an echo file reproduces the run.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::env::{AwayLimit, EnvConfig, RewardConfig, RewardMode, StepBudget, VehicleConfig};
use crate::nn::{AdamConfig, Architecture};
use crate::rl::{EpsilonSchedule, LearningParams};
use crate::sensor::CameraConfig;
use crate::vehicle::{ActionSpace, AttitudeCoeffs, NoiseModel};
use crate::world::{build_blocks_arena, build_corridor_arena, build_wobbles_zone, parse_arena, Arena, WobblesZone};

pub const SEED_ENV_VAR: &str = "DEEPROTOR_SEED";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("arena {source_name}: {message}")]
    Arena { source_name: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArenaSource {
    File(PathBuf),
    Blocks,
    Wobbles(WobblesZone),
    /// One of the four zones drawn uniformly at every episode.
    WobblesRandom,
    Corridor,
}

impl Display for ArenaSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ArenaSource::File(p) => write!(f, "{}", p.display()),
            ArenaSource::Blocks => f.write_str("builtin:blocks"),
            ArenaSource::Wobbles(z) => write!(f, "builtin:wobbles-{}", z.tag().to_ascii_lowercase()),
            ArenaSource::WobblesRandom => f.write_str("builtin:wobbles"),
            ArenaSource::Corridor => f.write_str("builtin:corridor"),
        }
    }
}

impl FromStr for ArenaSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let Some(name) = s.strip_prefix("builtin:") else {
            return Ok(ArenaSource::File(PathBuf::from(s)));
        };
        match name {
            "blocks" => Ok(ArenaSource::Blocks),
            "wobbles" => Ok(ArenaSource::WobblesRandom),
            "corridor" => Ok(ArenaSource::Corridor),
            _ => name
                .strip_prefix("wobbles-")
                .and_then(WobblesZone::from_tag)
                .map(ArenaSource::Wobbles)
                .ok_or_else(|| format!("unknown builtin arena `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Dqn,
    Ddqn,
    TabularGrid,
}

impl Algorithm {
    fn token(self) -> &'static str {
        match self {
            Algorithm::Dqn => "dqn",
            Algorithm::Ddqn => "ddqn",
            Algorithm::TabularGrid => "tabular-grid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardModeSetting {
    /// Checkpoint mode for arenas that define checkpoints, line shaping otherwise.
    Auto,
    Fixed(RewardMode),
}

impl RewardModeSetting {
    pub fn resolve(self, arena: &Arena) -> RewardMode {
        match self {
            RewardModeSetting::Fixed(m) => m,
            RewardModeSetting::Auto if arena.checkpoints.is_empty() => RewardMode::LineShaping,
            RewardModeSetting::Auto => RewardMode::Checkpoint,
        }
    }
}

/// Discretization used by the tabular-grid learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridParams {
    pub cell_size: f64,
    pub heading_bins: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        Self { cell_size: 1.0, heading_bins: 8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub arena: ArenaSource,
    /// Seed for procedurally generated arenas.
    pub arena_seed: u64,
    pub blocks_spacing: f64,
    pub blocks_count: usize,
    pub episodes: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub checkpoint_interval: usize,
    pub out: Option<PathBuf>,
    pub reward_mode: RewardModeSetting,
    pub env: EnvConfig,
    pub learn: LearningParams,
    pub adam: AdamConfig,
    pub epsilon: EpsilonSchedule,
    /// `None` derives the default trunk from the camera resolution.
    pub architecture: Option<Architecture>,
    pub grid: GridParams,
    pub moving_average_window: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            arena: ArenaSource::Corridor,
            arena_seed: 0,
            blocks_spacing: 10.0,
            blocks_count: 30,
            episodes: 1000,
            seed: 0,
            algorithm: Algorithm::Ddqn,
            checkpoint_interval: 100,
            out: None,
            reward_mode: RewardModeSetting::Auto,
            env: EnvConfig::default(),
            learn: LearningParams::default(),
            adam: AdamConfig::default(),
            epsilon: EpsilonSchedule::default(),
            architecture: None,
            grid: GridParams::default(),
            moving_average_window: 50,
        }
    }
}

fn list<T: Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::parse(&text)
    }

    /// Keys absent from `text` keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        // Action values are applied after all lines so key order does not matter.
        let mut mode: Option<String> = None;
        let mut values: Option<Vec<f64>> = None;
        let mut speed: Option<f64> = None;
        let mut lateral_gain: Option<f64> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError::Syntax { line: i + 1, message };
            let (key, value) = line.split_once(char::is_whitespace).ok_or_else(|| err(format!("`{line}` has no value")))?;
            let value = value.trim();
            let num = |v: &str| v.parse::<f64>().map_err(|_| err(format!("{key}: `{v}` is not a number")));
            let int = |v: &str| v.parse::<usize>().map_err(|_| err(format!("{key}: `{v}` is not a non-negative integer")));
            let u64v = |v: &str| v.parse::<u64>().map_err(|_| err(format!("{key}: `{v}` is not a non-negative integer")));
            let e = &mut cfg.env;
            match key {
                "arena" => cfg.arena = value.parse().map_err(err)?,
                "arena_seed" => cfg.arena_seed = u64v(value)?,
                "blocks.spacing" => cfg.blocks_spacing = num(value)?,
                "blocks.count" => cfg.blocks_count = int(value)?,
                "episodes" => cfg.episodes = int(value)?,
                "seed" => cfg.seed = u64v(value)?,
                "algorithm" => {
                    cfg.algorithm = match value {
                        "dqn" => Algorithm::Dqn,
                        "ddqn" => Algorithm::Ddqn,
                        "tabular-grid" => Algorithm::TabularGrid,
                        _ => return Err(err(format!("unknown algorithm `{value}`"))),
                    }
                }
                "checkpoint_interval" => cfg.checkpoint_interval = int(value)?,
                "out" => cfg.out = Some(PathBuf::from(value)),
                "reward.mode" => {
                    cfg.reward_mode = match value {
                        "auto" => RewardModeSetting::Auto,
                        "line" => RewardModeSetting::Fixed(RewardMode::LineShaping),
                        "checkpoint" => RewardModeSetting::Fixed(RewardMode::Checkpoint),
                        _ => return Err(err(format!("unknown reward mode `{value}`"))),
                    }
                }
                "reward.w_progress" => e.reward.w_progress = num(value)?,
                "reward.w_deviation" => e.reward.w_deviation = num(value)?,
                "reward.w_yaw" => e.reward.w_yaw = num(value)?,
                "reward.r_goal" => e.reward.r_goal = num(value)?,
                "reward.r_collision" => e.reward.r_collision = num(value)?,
                "reward.r_checkpoint" => e.reward.r_checkpoint = num(value)?,
                "reward.deviation_limit" => e.reward.deviation_limit = num(value)?,
                "reward.away_limit" => {
                    e.reward.away_limit = match value.strip_prefix("factor:") {
                        Some(f) => AwayLimit::StartDistanceFactor(num(f)?),
                        None => AwayLimit::Meters(num(value)?),
                    }
                }
                "budget.base_steps" => e.budget.base_steps = int(value)?,
                "budget.steps_per_episode" => e.budget.steps_per_episode = int(value)?,
                "budget.cap" => e.budget.cap = int(value)?,
                "camera.width" => e.camera.width = int(value)?,
                "camera.height" => e.camera.height = int(value)?,
                "camera.fov" => e.camera.horizontal_fov = num(value)?,
                "camera.max_range" => e.camera.max_range = num(value)?,
                "camera.mount_height" => e.camera.mount_height = num(value)?,
                "actions.mode" => mode = Some(value.to_string()),
                "actions.values" => {
                    values = Some(value.split(',').map(|v| num(v.trim())).collect::<Result<Vec<_>, _>>()?)
                }
                "actions.forward_speed" => speed = Some(num(value)?),
                "actions.lateral_gain" => lateral_gain = Some(num(value)?),
                "noise.yaw_rate_sigma" => e.noise.yaw_rate_sigma = num(value)?,
                "noise.speed_sigma" => e.noise.speed_sigma = num(value)?,
                "noise.heading_drift_rate" => e.noise.heading_drift_rate = num(value)?,
                "vehicle.dt" => e.vehicle.dt = num(value)?,
                "vehicle.altitude" => e.vehicle.altitude = num(value)?,
                "vehicle.radius" => e.vehicle.radius = num(value)?,
                "vehicle.heading_hold_gain" => {
                    e.vehicle.heading_hold_gain = if value == "off" { None } else { Some(num(value)?) }
                }
                "vehicle.k_roll" => e.vehicle.attitude.k_roll = num(value)?,
                "vehicle.k_pitch" => e.vehicle.attitude.k_pitch = num(value)?,
                "learn.alpha" => cfg.learn.alpha = num(value)?,
                "learn.gamma" => cfg.learn.gamma = num(value)?,
                "learn.batch_size" => cfg.learn.batch_size = int(value)?,
                "learn.train_every" => cfg.learn.train_every = int(value)?,
                "learn.warmup" => cfg.learn.warmup = int(value)?,
                "learn.buffer_capacity" => cfg.learn.buffer_capacity = int(value)?,
                "learn.huber_delta" => cfg.learn.huber_delta = num(value)?,
                "adam.step_size" => cfg.adam.step_size = num(value)?,
                "adam.beta1" => cfg.adam.beta1 = num(value)?,
                "adam.beta2" => cfg.adam.beta2 = num(value)?,
                "adam.epsilon" => cfg.adam.epsilon = num(value)?,
                "epsilon.start" => cfg.epsilon.start = num(value)?,
                "epsilon.end" => cfg.epsilon.end = num(value)?,
                "epsilon.decay_steps" => cfg.epsilon.decay_steps = u64v(value)?,
                "network.arch" => {
                    cfg.architecture =
                        if value == "auto" { None } else { Some(value.parse().map_err(|e: crate::nn::NnError| err(e.to_string()))?) }
                }
                "grid.cell_size" => cfg.grid.cell_size = num(value)?,
                "grid.heading_bins" => cfg.grid.heading_bins = int(value)?,
                "metrics.window" => cfg.moving_average_window = int(value)?,
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        let lateral = match mode.as_deref() {
            None => matches!(cfg.env.actions, ActionSpace::LateralRoll { .. }),
            Some("yaw_rate") => false,
            Some("lateral_roll") => true,
            Some(other) => return Err(ConfigError::Invalid(format!("unknown action mode `{other}`"))),
        };
        let base = if lateral { ActionSpace::default_lateral_roll() } else { ActionSpace::default() };
        cfg.env.actions = match base {
            ActionSpace::YawRate { rates, forward_speed } => {
                ActionSpace::YawRate { rates: values.unwrap_or(rates), forward_speed: speed.unwrap_or(forward_speed) }
            }
            ActionSpace::LateralRoll { rolls, lateral_gain: g, forward_speed } => ActionSpace::LateralRoll {
                rolls: values.unwrap_or(rolls),
                lateral_gain: lateral_gain.unwrap_or(g),
                forward_speed: speed.unwrap_or(forward_speed),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        self.env.validate().map_err(ConfigError::Invalid)?;
        let l = &self.learn;
        if !(0.0..1.0).contains(&l.gamma) {
            return bad("learn.gamma must lie in [0, 1)");
        }
        if !(l.alpha > 0.0 && l.alpha <= 1.0) {
            return bad("learn.alpha must lie in (0, 1]");
        }
        if l.batch_size == 0 || l.train_every == 0 || l.buffer_capacity < l.batch_size {
            return bad("batch size and train interval must be positive and the buffer must hold a batch");
        }
        if !(l.huber_delta > 0.0) {
            return bad("learn.huber_delta must be positive");
        }
        if !(self.adam.step_size > 0.0 && (0.0..1.0).contains(&self.adam.beta1) && (0.0..1.0).contains(&self.adam.beta2))
        {
            return bad("adam parameters out of range");
        }
        let e = &self.epsilon;
        if !((0.0..=1.0).contains(&e.start) && (0.0..=1.0).contains(&e.end) && e.start >= e.end) {
            return bad("epsilon schedule needs 1 >= start >= end >= 0");
        }
        if self.moving_average_window == 0 {
            return bad("metrics.window must be positive");
        }
        if !(self.grid.cell_size > 0.0) || self.grid.heading_bins == 0 {
            return bad("grid discretization must be positive");
        }
        if self.algorithm != Algorithm::TabularGrid {
            let arch = self.network_architecture();
            if arch.input_height != self.env.camera.height || arch.input_width != self.env.camera.width {
                return bad("network input must match the camera resolution");
            }
            if arch.outputs != self.env.actions.len() {
                return bad("network outputs must match the number of actions");
            }
            arch.conv_shapes().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    pub fn network_architecture(&self) -> Architecture {
        self.architecture.clone().unwrap_or_else(|| {
            Architecture::dqn_default(self.env.camera.height, self.env.camera.width, self.env.actions.len())
        })
    }

    /// seed precedence: explicit flag, then the environment variable, then the file.
    pub fn apply_seed_override(&mut self, flag: Option<u64>, env_value: Option<&str>) -> Result<(), ConfigError> {
        if let Some(s) = flag {
            self.seed = s;
        } else if let Some(v) = env_value {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("{SEED_ENV_VAR}=`{v}` is not an unsigned integer")))?;
        }
        Ok(())
    }

    /// Builds every arena the run can visit: one, or the four zones for the random curriculum.
    pub fn load_arenas(&self) -> Result<Vec<Arc<Arena>>, ConfigError> {
        let name = self.arena.to_string();
        let arena_err = |message: String| ConfigError::Arena { source_name: name.clone(), message };
        let arenas = match &self.arena {
            ArenaSource::File(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.clone(), source })?;
                vec![parse_arena(&text).map_err(|e| arena_err(e.to_string()))?]
            }
            ArenaSource::Blocks => vec![build_blocks_arena(self.blocks_spacing, self.blocks_count, self.arena_seed)
                .map_err(|e| arena_err(e.to_string()))?],
            ArenaSource::Wobbles(z) => vec![build_wobbles_zone(*z, self.arena_seed)],
            ArenaSource::WobblesRandom => WobblesZone::ALL.iter().map(|&z| build_wobbles_zone(z, self.arena_seed)).collect(),
            ArenaSource::Corridor => vec![build_corridor_arena()],
        };
        for a in &arenas {
            a.validate_with(self.env.vehicle.radius, self.env.vehicle.altitude).map_err(|e| arena_err(e.to_string()))?;
        }
        Ok(arenas.into_iter().map(Arc::new).collect())
    }

    pub fn to_text(&self) -> String {
        let e = &self.env;
        let mut lines: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| lines.push((k.to_string(), v));
        put("arena", self.arena.to_string());
        put("arena_seed", self.arena_seed.to_string());
        put("blocks.spacing", self.blocks_spacing.to_string());
        put("blocks.count", self.blocks_count.to_string());
        put("episodes", self.episodes.to_string());
        put("seed", self.seed.to_string());
        put("algorithm", self.algorithm.token().into());
        put("checkpoint_interval", self.checkpoint_interval.to_string());
        if let Some(out) = &self.out {
            put("out", out.display().to_string());
        }
        put(
            "reward.mode",
            match self.reward_mode {
                RewardModeSetting::Auto => "auto",
                RewardModeSetting::Fixed(RewardMode::LineShaping) => "line",
                RewardModeSetting::Fixed(RewardMode::Checkpoint) => "checkpoint",
            }
            .into(),
        );
        let r: &RewardConfig = &e.reward;
        put("reward.w_progress", r.w_progress.to_string());
        put("reward.w_deviation", r.w_deviation.to_string());
        put("reward.w_yaw", r.w_yaw.to_string());
        put("reward.r_goal", r.r_goal.to_string());
        put("reward.r_collision", r.r_collision.to_string());
        put("reward.r_checkpoint", r.r_checkpoint.to_string());
        put("reward.deviation_limit", r.deviation_limit.to_string());
        put(
            "reward.away_limit",
            match r.away_limit {
                AwayLimit::Meters(m) => m.to_string(),
                AwayLimit::StartDistanceFactor(f) => format!("factor:{f}"),
            },
        );
        let b: &StepBudget = &e.budget;
        put("budget.base_steps", b.base_steps.to_string());
        put("budget.steps_per_episode", b.steps_per_episode.to_string());
        put("budget.cap", b.cap.to_string());
        let c: &CameraConfig = &e.camera;
        put("camera.width", c.width.to_string());
        put("camera.height", c.height.to_string());
        put("camera.fov", c.horizontal_fov.to_string());
        put("camera.max_range", c.max_range.to_string());
        put("camera.mount_height", c.mount_height.to_string());
        match &e.actions {
            ActionSpace::YawRate { rates, forward_speed } => {
                put("actions.mode", "yaw_rate".into());
                put("actions.values", list(rates));
                put("actions.forward_speed", forward_speed.to_string());
            }
            ActionSpace::LateralRoll { rolls, lateral_gain, forward_speed } => {
                put("actions.mode", "lateral_roll".into());
                put("actions.values", list(rolls));
                put("actions.forward_speed", forward_speed.to_string());
                put("actions.lateral_gain", lateral_gain.to_string());
            }
        }
        let n: &NoiseModel = &e.noise;
        put("noise.yaw_rate_sigma", n.yaw_rate_sigma.to_string());
        put("noise.speed_sigma", n.speed_sigma.to_string());
        put("noise.heading_drift_rate", n.heading_drift_rate.to_string());
        let v: &VehicleConfig = &e.vehicle;
        put("vehicle.dt", v.dt.to_string());
        put("vehicle.altitude", v.altitude.to_string());
        put("vehicle.radius", v.radius.to_string());
        put("vehicle.heading_hold_gain", v.heading_hold_gain.map_or("off".into(), |g| g.to_string()));
        let a: &AttitudeCoeffs = &v.attitude;
        put("vehicle.k_roll", a.k_roll.to_string());
        put("vehicle.k_pitch", a.k_pitch.to_string());
        let l = &self.learn;
        put("learn.alpha", l.alpha.to_string());
        put("learn.gamma", l.gamma.to_string());
        put("learn.batch_size", l.batch_size.to_string());
        put("learn.train_every", l.train_every.to_string());
        put("learn.warmup", l.warmup.to_string());
        put("learn.buffer_capacity", l.buffer_capacity.to_string());
        put("learn.huber_delta", l.huber_delta.to_string());
        put("adam.step_size", self.adam.step_size.to_string());
        put("adam.beta1", self.adam.beta1.to_string());
        put("adam.beta2", self.adam.beta2.to_string());
        put("adam.epsilon", self.adam.epsilon.to_string());
        put("epsilon.start", self.epsilon.start.to_string());
        put("epsilon.end", self.epsilon.end.to_string());
        put("epsilon.decay_steps", self.epsilon.decay_steps.to_string());
        put("network.arch", self.architecture.as_ref().map_or("auto".into(), |a| a.to_string()));
        put("grid.cell_size", self.grid.cell_size.to_string());
        put("grid.heading_bins", self.grid.heading_bins.to_string());
        put("metrics.window", self.moving_average_window.to_string());
        let width = lines.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        lines.iter().map(|(k, v)| format!("{k:width$} {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_echo() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn custom_values_roundtrip() {
        let text = "\
arena builtin:wobbles-d
episodes 12
seed 7
algorithm dqn
reward.away_limit 25.5
reward.mode checkpoint
camera.width 21
camera.height 21
actions.values -10,0,10
vehicle.heading_hold_gain off
network.arch 21x21:c8k5s2,c16k3s2,c16k3s1,c16k2s1:d64:a3
adam.step_size 0.0005
";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.arena, ArenaSource::Wobbles(WobblesZone::D));
        assert_eq!(cfg.env.actions.len(), 3);
        assert_eq!(cfg.env.reward.away_limit, AwayLimit::Meters(25.5));
        assert_eq!(cfg.env.vehicle.heading_hold_gain, None);
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn lateral_mode_keys() {
        let cfg = RunConfig::parse("actions.mode lateral_roll\nactions.lateral_gain 0.2\nactions.values -20,0,20\n").unwrap();
        assert_eq!(
            cfg.env.actions,
            ActionSpace::LateralRoll { rolls: vec![-20.0, 0.0, 20.0], lateral_gain: 0.2, forward_speed: 2.0 }
        );
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match RunConfig::parse("episodes 3\n\nbogus 1\n") {
            Err(ConfigError::Syntax { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        match RunConfig::parse("learn.gamma x\n") {
            Err(ConfigError::Syntax { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(RunConfig::parse("learn.gamma 1.0\n"), Err(ConfigError::Invalid(_))));
        assert!(matches!(RunConfig::parse("camera.width 1\n"), Err(ConfigError::Invalid(_))));
        assert!(matches!(RunConfig::parse("network.arch 8x8::d4:a5\n"), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn seed_precedence() {
        let mut cfg = RunConfig { seed: 1, ..Default::default() };
        cfg.apply_seed_override(None, None).unwrap();
        assert_eq!(cfg.seed, 1);
        cfg.apply_seed_override(None, Some("5")).unwrap();
        assert_eq!(cfg.seed, 5);
        cfg.apply_seed_override(Some(9), Some("5")).unwrap();
        assert_eq!(cfg.seed, 9);
        assert!(cfg.apply_seed_override(None, Some("x")).is_err());
    }

    #[test]
    fn missing_arena_file() {
        let cfg = RunConfig { arena: ArenaSource::File("/nonexistent/arena.txt".into()), ..Default::default() };
        assert!(matches!(cfg.load_arenas(), Err(ConfigError::Io { .. })));
        let cfg = RunConfig { arena: ArenaSource::WobblesRandom, ..Default::default() };
        assert_eq!(cfg.load_arenas().unwrap().len(), 4);
    }
}
