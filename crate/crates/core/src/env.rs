//! Episodic navigation task: reset/step, shaped reward, termination rules and
//! the per-episode step budget.

use std::sync::Arc;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::sensor::{normalize_depth, render_depth, CameraConfig, CameraPose, Observation};
use crate::vehicle::{
    apply_action, emulate_attitude, heading_hold_correction, normalize_yaw, ActionSpace, AttitudeCoeffs,
    NoiseModel, QuadState,
};
use crate::world::{check_collision, Arena, CollisionInfo, DEFAULT_ALTITUDE, VEHICLE_RADIUS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnvError {
    #[error("step called on a finished episode")]
    EpisodeFinished,
    #[error("step called before reset")]
    NotReset,
    #[error("action index {index} out of range for {count} actions")]
    InvalidAction { index: usize, count: usize },
    #[error("invalid environment config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardMode {
    /// Progress toward the goal plus a penalty for leaving the start-goal segment.
    LineShaping,
    /// Progress toward the goal plus bonuses for the ordered checkpoints.
    Checkpoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AwayLimit {
    Meters(f64),
    /// Multiple of the start-to-goal distance of the current arena.
    StartDistanceFactor(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardConfig {
    pub w_progress: f64,
    pub w_deviation: f64,
    pub w_yaw: f64,
    pub r_goal: f64,
    pub r_collision: f64,
    pub r_checkpoint: f64,
    pub deviation_limit: f64,
    pub away_limit: AwayLimit,
    pub mode: RewardMode,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            w_progress: 1.0,
            w_deviation: 0.1,
            w_yaw: 0.05,
            r_goal: 50.0,
            r_collision: 50.0,
            r_checkpoint: 10.0,
            deviation_limit: 10.0,
            away_limit: AwayLimit::StartDistanceFactor(1.5),
            mode: RewardMode::LineShaping,
        }
    }
}

impl RewardConfig {
    /// Obstacle-avoidance pre-training: only collisions are rewarded (negatively).
    pub fn primitive() -> Self {
        Self {
            w_progress: 0.0,
            w_deviation: 0.0,
            w_yaw: 0.0,
            r_goal: 0.0,
            r_checkpoint: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let weights = [
            self.w_progress,
            self.w_deviation,
            self.w_yaw,
            self.r_goal,
            self.r_collision,
            self.r_checkpoint,
        ];
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err("reward weights must be non-negative".into());
        }
        let away_ok = match self.away_limit {
            AwayLimit::Meters(m) => m > 0.0,
            AwayLimit::StartDistanceFactor(f) => f > 0.0,
        };
        if !(self.deviation_limit > 0.0) || !away_ok {
            return Err("termination limits must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepBudget {
    pub base_steps: usize,
    pub steps_per_episode: usize,
    pub cap: usize,
}

impl Default for StepBudget {
    fn default() -> Self {
        Self { base_steps: 200, steps_per_episode: 1, cap: 1000 }
    }
}

impl StepBudget {
    pub fn validate(&self) -> Result<(), String> {
        if self.base_steps < 1 || self.cap < self.base_steps {
            return Err("step budget needs base >= 1 and cap >= base".into());
        }
        Ok(())
    }
}

pub fn max_steps_for_episode(budget: &StepBudget, episode_index: usize) -> usize {
    budget
        .steps_per_episode
        .saturating_mul(episode_index)
        .saturating_add(budget.base_steps)
        .min(budget.cap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Terminal {
    Goal,
    Collision,
    Deviation,
    AwayFromGoal,
    StepLimit,
}

impl Terminal {
    pub const ALL: [Terminal; 5] =
        [Terminal::Goal, Terminal::Collision, Terminal::Deviation, Terminal::AwayFromGoal, Terminal::StepLimit];

    pub fn token(self) -> &'static str {
        match self {
            Terminal::Goal => "goal",
            Terminal::Collision => "collision",
            Terminal::Deviation => "deviation",
            Terminal::AwayFromGoal => "away",
            Terminal::StepLimit => "step_limit",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.token() == s)
    }
}

/// Per-term reward breakdown. Penalty terms carry their sign.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RewardComponents {
    pub progress: f64,
    pub deviation: f64,
    pub yaw: f64,
    pub checkpoint: f64,
    pub goal: f64,
    pub collision: f64,
}

impl RewardComponents {
    pub fn total(&self) -> f64 {
        self.progress + self.deviation + self.yaw + self.checkpoint + self.goal + self.collision
    }

    pub fn accumulate(&mut self, other: &RewardComponents) {
        self.progress += other.progress;
        self.deviation += other.deviation;
        self.yaw += other.yaw;
        self.checkpoint += other.checkpoint;
        self.goal += other.goal;
        self.collision += other.collision;
    }
}

/// Discrete events of one transition that carry terminal or bonus rewards.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepEvents {
    pub goal_reached: bool,
    pub checkpoint_reached: bool,
}

/// Euclidean distance from `p` to the closed segment `ab`.
pub fn distance_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (abx, aby) = (b.0 - a.0, b.1 - a.1);
    let len2 = abx * abx + aby * aby;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * abx + (p.1 - a.1) * aby) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - (a.0 + t * abx)).hypot(p.1 - (a.1 + t * aby))
}

fn goal_distance(arena: &Arena, s: &QuadState) -> f64 {
    (arena.goal.x - s.x).hypot(arena.goal.y - s.y)
}

/// Reward terms for the transition `prev -> next`.
///
/// `command_fraction` is the action's |command| over the largest |command| in
/// the action set, so the yaw term spans `[-w_yaw, 0]`.
pub fn compute_reward(
    prev: &QuadState,
    next: &QuadState,
    command_fraction: f64,
    cfg: &RewardConfig,
    arena: &Arena,
    collision: Option<&CollisionInfo>,
    events: StepEvents,
) -> RewardComponents {
    let mut c = RewardComponents {
        progress: cfg.w_progress * (goal_distance(arena, prev) - goal_distance(arena, next)),
        yaw: -cfg.w_yaw * command_fraction,
        ..Default::default()
    };
    if cfg.mode == RewardMode::LineShaping {
        let d = distance_to_segment(
            (next.x, next.y),
            (arena.start.x, arena.start.y),
            (arena.goal.x, arena.goal.y),
        );
        c.deviation = -cfg.w_deviation * d;
    }
    if cfg.mode == RewardMode::Checkpoint && events.checkpoint_reached {
        c.checkpoint = cfg.r_checkpoint;
    }
    if collision.is_some() {
        c.collision = -cfg.r_collision;
    } else if events.goal_reached {
        c.goal = cfg.r_goal;
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleConfig {
    pub dt: f64,
    pub altitude: f64,
    pub radius: f64,
    /// Proportional heading-hold gain (1/s); `None` disables the controller.
    pub heading_hold_gain: Option<f64>,
    pub attitude: AttitudeCoeffs,
}

impl Default for VehicleConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            altitude: DEFAULT_ALTITUDE,
            radius: VEHICLE_RADIUS,
            heading_hold_gain: Some(1.0),
            attitude: AttitudeCoeffs::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnvConfig {
    pub reward: RewardConfig,
    pub budget: StepBudget,
    pub camera: CameraConfig,
    pub actions: ActionSpace,
    pub noise: NoiseModel,
    pub vehicle: VehicleConfig,
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.reward.validate()?;
        self.budget.validate()?;
        self.camera.validate()?;
        self.actions.validate()?;
        let n = &self.noise;
        if !(n.yaw_rate_sigma >= 0.0 && n.speed_sigma >= 0.0 && n.heading_drift_rate >= 0.0) {
            return Err("noise magnitudes must be non-negative".into());
        }
        let v = &self.vehicle;
        if !(v.dt > 0.0 && v.radius > 0.0 && v.altitude > 0.0) {
            return Err("vehicle dt, radius and altitude must be positive".into());
        }
        if v.heading_hold_gain.is_some_and(|g| !(g > 0.0)) {
            return Err("heading-hold gain must be positive".into());
        }
        Ok(())
    }
}

/// Running totals of one episode.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpisodeResult {
    pub steps: usize,
    pub total_reward: f64,
    pub terminal: Option<Terminal>,
    pub reward_components: RewardComponents,
    pub checkpoints_hit: usize,
    pub sum_abs_yaw_rate: f64,
    pub sum_roll: f64,
    pub sum_pitch: f64,
}

impl EpisodeResult {
    fn mean(&self, sum: f64) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            sum / self.steps as f64
        }
    }

    pub fn mean_abs_yaw_rate(&self) -> f64 {
        self.mean(self.sum_abs_yaw_rate)
    }

    pub fn mean_roll(&self) -> f64 {
        self.mean(self.sum_roll)
    }

    pub fn mean_pitch(&self) -> f64 {
        self.mean(self.sum_pitch)
    }
}

#[derive(Debug, Clone)]
pub struct StepInfo {
    pub collision: Option<CollisionInfo>,
    pub components: RewardComponents,
    pub terminal: Option<Terminal>,
    pub state: QuadState,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

pub struct Env {
    arena: Arc<Arena>,
    cfg: EnvConfig,
    rng: ChaCha8Rng,
    state: QuadState,
    intended_yaw: f64,
    max_steps: usize,
    next_checkpoint: usize,
    away_limit: f64,
    result: EpisodeResult,
    started: bool,
}

impl Env {
    pub fn new(arena: Arc<Arena>, cfg: EnvConfig, seed: u64) -> Result<Self, EnvError> {
        Self::with_rng(arena, cfg, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(arena: Arc<Arena>, cfg: EnvConfig, rng: ChaCha8Rng) -> Result<Self, EnvError> {
        cfg.validate().map_err(EnvError::Config)?;
        let state = start_state(&arena, &cfg);
        Ok(Self {
            arena,
            cfg,
            rng,
            state,
            intended_yaw: state.yaw,
            max_steps: 0,
            next_checkpoint: 0,
            away_limit: f64::INFINITY,
            result: EpisodeResult::default(),
            started: false,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn arena(&self) -> &Arc<Arena> {
        &self.arena
    }

    /// Replaces the arena used from the next `reset` on.
    pub fn set_arena(&mut self, arena: Arc<Arena>) {
        self.arena = arena;
        self.started = false;
    }

    /// Takes effect at the next reset.
    pub fn set_reward_mode(&mut self, mode: RewardMode) {
        self.cfg.reward.mode = mode;
        self.started = false;
    }

    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn state(&self) -> &QuadState {
        &self.state
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn result(&self) -> &EpisodeResult {
        &self.result
    }

    pub fn is_done(&self) -> bool {
        self.result.terminal.is_some()
    }

    pub fn reset(&mut self, episode_index: usize) -> Observation {
        self.state = start_state(&self.arena, &self.cfg);
        self.intended_yaw = self.state.yaw;
        self.max_steps = max_steps_for_episode(&self.cfg.budget, episode_index);
        self.next_checkpoint = 0;
        self.away_limit = match self.cfg.reward.away_limit {
            AwayLimit::Meters(m) => m,
            AwayLimit::StartDistanceFactor(f) => f * self.arena.start_goal_distance(),
        };
        self.result = EpisodeResult::default();
        self.started = true;
        self.observe()
    }

    pub fn observe(&self) -> Observation {
        let pose = CameraPose { x: self.state.x, y: self.state.y, z: self.state.z, yaw: self.state.yaw };
        let img = render_depth(&self.arena, pose, &self.cfg.camera);
        normalize_depth(&img, self.cfg.camera.max_range)
    }

    pub fn step(&mut self, action: usize) -> Result<StepOutcome, EnvError> {
        if !self.started {
            return Err(EnvError::NotReset);
        }
        if self.is_done() {
            return Err(EnvError::EpisodeFinished);
        }
        let count = self.cfg.actions.len();
        if action >= count {
            return Err(EnvError::InvalidAction { index: action, count });
        }

        let cfg = &self.cfg;
        let correction = cfg
            .vehicle
            .heading_hold_gain
            .map_or(0.0, |g| heading_hold_correction(&self.state, self.intended_yaw, g));
        let command_rate = cfg.actions.yaw_rate(action);
        self.intended_yaw = normalize_yaw(self.intended_yaw + command_rate * cfg.vehicle.dt);

        let prev = self.state;
        let mut next =
            apply_action(&prev, action, &cfg.actions, &cfg.noise, correction, cfg.vehicle.dt, &mut self.rng);
        let (roll, pitch) = match &cfg.actions {
            ActionSpace::YawRate { .. } => {
                emulate_attitude(command_rate + correction, next.forward_speed, &cfg.vehicle.attitude)
            }
            ActionSpace::LateralRoll { rolls, .. } => {
                let (_, pitch) = emulate_attitude(0.0, next.forward_speed, &cfg.vehicle.attitude);
                (rolls[action].clamp(-crate::vehicle::ROLL_CLAMP_DEG, crate::vehicle::ROLL_CLAMP_DEG), pitch)
            }
        };
        next.roll = roll;
        next.pitch = pitch;
        self.state = next;

        let arena = &*self.arena;
        let collision = check_collision(arena, Vector3::new(next.x, next.y, next.z), cfg.vehicle.radius);
        let goal_dist = goal_distance(arena, &next);
        let mut events = StepEvents { goal_reached: goal_dist <= arena.goal.radius, ..Default::default() };
        if let Some(cp) = arena.checkpoints.get(self.next_checkpoint) {
            if (cp.x - next.x).hypot(cp.y - next.y) <= cp.radius {
                events.checkpoint_reached = true;
                self.next_checkpoint += 1;
                self.result.checkpoints_hit += 1;
            }
        }

        let max_cmd = cfg.actions.max_magnitude();
        let command_fraction = if max_cmd > 0.0 { cfg.actions.values()[action].abs() / max_cmd } else { 0.0 };
        let components =
            compute_reward(&prev, &next, command_fraction, &cfg.reward, arena, collision.as_ref(), events);
        let reward = components.total();

        self.result.steps += 1;
        let deviation = distance_to_segment(
            (next.x, next.y),
            (arena.start.x, arena.start.y),
            (arena.goal.x, arena.goal.y),
        );
        let terminal = if collision.is_some() {
            Some(Terminal::Collision)
        } else if events.goal_reached {
            Some(Terminal::Goal)
        } else if cfg.reward.mode == RewardMode::LineShaping && deviation > cfg.reward.deviation_limit {
            Some(Terminal::Deviation)
        } else if goal_dist > self.away_limit {
            Some(Terminal::AwayFromGoal)
        } else if self.result.steps >= self.max_steps {
            Some(Terminal::StepLimit)
        } else {
            None
        };

        self.result.total_reward += reward;
        self.result.reward_components.accumulate(&components);
        self.result.sum_abs_yaw_rate += command_rate.abs();
        self.result.sum_roll += roll;
        self.result.sum_pitch += pitch;
        self.result.terminal = terminal;

        Ok(StepOutcome {
            observation: self.observe(),
            reward,
            done: terminal.is_some(),
            info: StepInfo { collision, components, terminal, state: next },
        })
    }
}

fn start_state(arena: &Arena, cfg: &EnvConfig) -> QuadState {
    QuadState::new(
        arena.start.x,
        arena.start.y,
        cfg.vehicle.altitude,
        arena.start.yaw,
        cfg.actions.forward_speed(),
    )
}
