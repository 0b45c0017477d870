use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{
    double_dqn_targets, dqn_targets, select_action_with, tabular_q_update, QTable, ReplayBuffer, RlError, Transition,
    UpdateTarget,
};
use crate::config::{Algorithm, ArenaSource, ConfigError, RunConfig};
use crate::env::{Env, EnvError, Terminal};
use crate::metrics::{MetricsRow, MetricsWriter, MovingAverage};
use crate::nn::{
    adam_from_tensors, adam_tensors, decode_checkpoint, encode_checkpoint, network_from_tensors, network_tensors,
    train_step, Adam, CheckpointError, LossSpec, Metadata, NnError, QNetwork, Tensor, TensorMap,
};
use crate::vehicle::QuadState;
use crate::world::Arena;

pub const METRICS_FILE: &str = "metrics.csv";
pub const COMPONENTS_FILE: &str = "reward_components.csv";
pub const CONFIG_ECHO_FILE: &str = "config.txt";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const ABORT_CHECKPOINT_FILE: &str = "checkpoint_abort.bin";

const ENV_STREAM: u64 = 1;
const AGENT_STREAM: u64 = 2;
const CURRICULUM_STREAM: u64 = 3;
const INIT_STREAM: u64 = 4;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("{error}{}", saved.as_ref().map(|p| format!(" (state saved to {})", p.display())).unwrap_or_default())]
    Numerical { error: NnError, saved: Option<PathBuf> },
    #[error(transparent)]
    Replay(#[from] RlError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("cannot resume: {0}")]
    Resume(String),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> TrainError {
    let context = context.into();
    move |source| TrainError::Io { context, source }
}

enum Learner {
    Dqn { net: QNetwork, opt: Adam },
    Ddqn { q1: QNetwork, q2: QNetwork, opt1: Adam, opt2: Adam },
    Tabular { table: QTable, grid: GridIndex },
}

/// Tabular state: (arena, cell, heading sector, next checkpoint).
#[derive(Debug, Clone)]
struct GridIndex {
    cell: f64,
    bins: usize,
    blocks: Vec<(usize, usize, usize, usize)>,
    total: usize,
}

impl GridIndex {
    fn new(arenas: &[Arc<Arena>], cell: f64, bins: usize) -> Self {
        let mut blocks = Vec::new();
        let mut offset = 0;
        for a in arenas {
            let cols = (a.bounds.width() / cell).ceil().max(1.0) as usize;
            let rows = (a.bounds.height() / cell).ceil().max(1.0) as usize;
            let stages = a.checkpoints.len() + 1;
            blocks.push((offset, cols, rows, stages));
            offset += cols * rows * bins * stages;
        }
        Self { cell, bins, blocks, total: offset }
    }

    fn state(&self, arena_idx: usize, arena: &Arena, s: &QuadState, next_checkpoint: usize) -> usize {
        let (offset, cols, rows, stages) = self.blocks[arena_idx];
        let cx = (((s.x - arena.bounds.xmin) / self.cell).floor().max(0.0) as usize).min(cols - 1);
        let cy = (((s.y - arena.bounds.ymin) / self.cell).floor().max(0.0) as usize).min(rows - 1);
        let sector = 360.0 / self.bins as f64;
        let h = ((crate::vehicle::normalize_yaw(s.yaw + sector / 2.0) / sector) as usize).min(self.bins - 1);
        offset + ((cy * cols + cx) * self.bins + h) * stages + next_checkpoint.min(stages - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub episodes_run: usize,
    pub final_episode: usize,
    /// Indexed in the order goal, collision, deviation, away, step_limit.
    pub terminal_counts: [usize; 5],
    pub best_moving_avg_reward: Option<f64>,
    pub wall_time: Duration,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<MetricsRow>,
}

fn terminal_slot(t: Terminal) -> usize {
    match t {
        Terminal::Goal => 0,
        Terminal::Collision => 1,
        Terminal::Deviation => 2,
        Terminal::AwayFromGoal => 3,
        Terminal::StepLimit => 4,
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn rng_to_text(rng: &ChaCha8Rng) -> String {
    let seed: String = rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
    format!("{seed}:{}:{}", rng.get_stream(), rng.get_word_pos())
}

fn rng_from_text(s: &str) -> Result<ChaCha8Rng, CheckpointError> {
    let bad = || CheckpointError::Malformed(format!("bad rng state `{s}`"));
    let mut parts = s.split(':');
    let (Some(seed), Some(stream), Some(pos), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
        return Err(bad());
    };
    if seed.len() != 64 {
        return Err(bad());
    }
    let mut bytes = [0u8; 32];
    for (i, b) in bytes.iter_mut().enumerate() {
        *b = u8::from_str_radix(&seed[2 * i..2 * i + 2], 16).map_err(|_| bad())?;
    }
    let mut rng = ChaCha8Rng::from_seed(bytes);
    rng.set_stream(stream.parse().map_err(|_| bad())?);
    rng.set_word_pos(pos.parse().map_err(|_| bad())?);
    Ok(rng)
}

fn f64s_to_text(v: impl Iterator<Item = f64>) -> String {
    v.map(|x| format!("{:016x}", x.to_bits())).collect::<Vec<_>>().join(",")
}

fn f64s_from_text(s: &str) -> Result<Vec<f64>, CheckpointError> {
    s.split(',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            u64::from_str_radix(t, 16)
                .map(f64::from_bits)
                .map_err(|_| CheckpointError::Malformed("bad real encoding".into()))
        })
        .collect()
}

/// Config keys that may differ between a checkpointed run and its resumption.
const RESUMABLE_KEYS: [&str; 3] = ["episodes", "out", "checkpoint_interval"];

fn comparable_config(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !RESUMABLE_KEYS.iter().any(|k| l.split_whitespace().next() == Some(k)))
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .collect()
}

pub struct Trainer {
    cfg: RunConfig,
    arenas: Vec<Arc<Arena>>,
    current_arena: usize,
    env: Env,
    learner: Learner,
    buffer: ReplayBuffer,
    agent_rng: ChaCha8Rng,
    curriculum_rng: ChaCha8Rng,
    episode: usize,
    global_step: u64,
    moving: MovingAverage,
    cumulative_collisions: usize,
    terminal_counts: [usize; 5],
    best_moving_avg: Option<f64>,
}

impl Trainer {
    pub fn new(cfg: RunConfig) -> Result<Self, TrainError> {
        cfg.validate()?;
        let arenas = cfg.load_arenas()?;
        let mut env_cfg = cfg.env.clone();
        env_cfg.reward.mode = cfg.reward_mode.resolve(&arenas[0]);
        let env = Env::with_rng(arenas[0].clone(), env_cfg, stream_rng(cfg.seed, ENV_STREAM))?;
        let mut init = stream_rng(cfg.seed, INIT_STREAM);
        let arch = cfg.network_architecture();
        let new_net = |rng: &mut ChaCha8Rng| QNetwork::new(arch.clone(), rng.random()).map_err(|e| ConfigError::Invalid(e.to_string()));
        let learner = match cfg.algorithm {
            Algorithm::Dqn => {
                let net = new_net(&mut init)?;
                let opt = Adam::new(&net, cfg.adam);
                Learner::Dqn { net, opt }
            }
            Algorithm::Ddqn => {
                let q1 = new_net(&mut init)?;
                let q2 = new_net(&mut init)?;
                let opt1 = Adam::new(&q1, cfg.adam);
                let opt2 = Adam::new(&q2, cfg.adam);
                Learner::Ddqn { q1, q2, opt1, opt2 }
            }
            Algorithm::TabularGrid => {
                let grid = GridIndex::new(&arenas, cfg.grid.cell_size, cfg.grid.heading_bins);
                Learner::Tabular { table: QTable::new(grid.total, cfg.env.actions.len()), grid }
            }
        };
        Ok(Self {
            buffer: ReplayBuffer::new(cfg.learn.buffer_capacity),
            agent_rng: stream_rng(cfg.seed, AGENT_STREAM),
            curriculum_rng: stream_rng(cfg.seed, CURRICULUM_STREAM),
            moving: MovingAverage::new(cfg.moving_average_window),
            arenas,
            current_arena: 0,
            env,
            learner,
            episode: 0,
            global_step: 0,
            cumulative_collisions: 0,
            terminal_counts: [0; 5],
            best_moving_avg: None,
            cfg,
        })
    }

    /// Restores a checkpoint written by [`Trainer::checkpoint_bytes`]. `cfg` must
    /// match the checkpointed configuration except for the episode count,
    /// output directory and checkpoint interval.
    pub fn resume(cfg: RunConfig, bytes: &[u8]) -> Result<Self, TrainError> {
        let (meta, tensors) = decode_checkpoint(bytes)?;
        let saved = meta.get("config").ok_or_else(|| CheckpointError::MissingKey("config".into()))?;
        if comparable_config(saved) != comparable_config(&cfg.to_text()) {
            return Err(TrainError::Resume("checkpoint was written with a different configuration".into()));
        }
        let mut t = Self::new(cfg)?;
        t.restore(&meta, &tensors)?;
        Ok(t)
    }

    fn restore(&mut self, meta: &Metadata, tensors: &[Tensor]) -> Result<(), CheckpointError> {
        let key = |k: &str| meta.get(k).map(String::as_str).ok_or_else(|| CheckpointError::MissingKey(k.into()));
        let int = |k: &str| -> Result<u64, CheckpointError> {
            key(k)?.parse().map_err(|_| CheckpointError::Malformed(format!("bad `{k}`")))
        };
        self.episode = int("episode")? as usize;
        self.global_step = int("global_step")?;
        self.cumulative_collisions = int("cumulative_collisions")? as usize;
        let counts: Vec<usize> = key("terminal_counts")?.split(',').filter_map(|v| v.parse().ok()).collect();
        self.terminal_counts = counts.try_into().map_err(|_| CheckpointError::Malformed("bad terminal_counts".into()))?;
        self.best_moving_avg = match key("best_moving_avg")? {
            "none" => None,
            v => f64s_from_text(v)?.first().copied(),
        };
        self.moving = MovingAverage::new(self.cfg.moving_average_window);
        for r in f64s_from_text(key("recent_rewards")?)? {
            self.moving.push(r);
        }
        self.agent_rng = rng_from_text(key("rng.agent")?)?;
        self.curriculum_rng = rng_from_text(key("rng.curriculum")?)?;
        *self.env.rng_mut() = rng_from_text(key("rng.env")?)?;

        let map = TensorMap::new(tensors);
        let arch = self.cfg.network_architecture();
        match &mut self.learner {
            Learner::Dqn { net, opt } => {
                *net = network_from_tensors(arch, &map, "q.")?;
                *opt = adam_from_tensors(net, &map, "q.", meta)?;
            }
            Learner::Ddqn { q1, q2, opt1, opt2 } => {
                *q1 = network_from_tensors(arch.clone(), &map, "q1.")?;
                *q2 = network_from_tensors(arch, &map, "q2.")?;
                *opt1 = adam_from_tensors(q1, &map, "q1.", meta)?;
                *opt2 = adam_from_tensors(q2, &map, "q2.", meta)?;
            }
            Learner::Tabular { table, .. } => {
                let values = f64s_from_text(key("tabular.q")?)?;
                if values.len() != table.values().len() {
                    return Err(CheckpointError::ShapeMismatch {
                        name: "tabular.q".into(),
                        expected: vec![table.states(), table.actions()],
                        got: vec![values.len()],
                    });
                }
                *table = QTable::from_values(table.states(), table.actions(), values);
            }
        }
        if !matches!(self.learner, Learner::Tabular { .. }) {
            self.restore_buffer(&map, meta)?;
        }
        Ok(())
    }

    fn restore_buffer(&mut self, map: &TensorMap<'_>, meta: &Metadata) -> Result<(), CheckpointError> {
        let len: usize = meta
            .get("replay.len")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| CheckpointError::MissingKey("replay.len".into()))?;
        let obs_len = self.cfg.env.camera.width * self.cfg.env.camera.height;
        let obs = map.get("replay.obs").ok_or_else(|| CheckpointError::MissingTensor("replay.obs".into()))?;
        if obs.dims.len() != 2 || obs.dims[1] != obs_len {
            return Err(CheckpointError::ShapeMismatch { name: "replay.obs".into(), expected: vec![obs.dims[0], obs_len], got: obs.dims.clone() });
        }
        let table: Vec<Arc<[f32]>> = obs.data.chunks(obs_len).map(Arc::from).collect();
        let s = map.take("replay.s", &[len])?;
        let s_next = map.take("replay.s_next", &[len])?;
        let a = map.take("replay.a", &[len])?;
        let r = map.take("replay.r", &[len])?;
        let done = map.take("replay.done", &[len])?;
        let lookup = |i: f32| table.get(i as usize).cloned().ok_or_else(|| CheckpointError::Malformed("replay index out of range".into()));
        self.buffer = ReplayBuffer::new(self.cfg.learn.buffer_capacity);
        for k in 0..len {
            self.buffer.push(Transition { s: lookup(s[k])?, a: a[k] as usize, r: r[k], s_next: lookup(s_next[k])?, done: done[k] != 0.0 });
        }
        Ok(())
    }

    pub fn checkpoint_bytes(&self) -> Vec<u8> {
        let mut meta = Metadata::new();
        meta.insert("config".into(), self.cfg.to_text());
        meta.insert("episode".into(), self.episode.to_string());
        meta.insert("global_step".into(), self.global_step.to_string());
        meta.insert("cumulative_collisions".into(), self.cumulative_collisions.to_string());
        meta.insert(
            "terminal_counts".into(),
            self.terminal_counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","),
        );
        meta.insert("best_moving_avg".into(), self.best_moving_avg.map_or("none".into(), |v| f64s_to_text([v].into_iter())));
        meta.insert("recent_rewards".into(), f64s_to_text(self.moving.values()));
        meta.insert("rng.agent".into(), rng_to_text(&self.agent_rng));
        meta.insert("rng.curriculum".into(), rng_to_text(&self.curriculum_rng));
        meta.insert("rng.env".into(), rng_to_text(self.env.rng()));
        meta.insert("architecture".into(), self.cfg.network_architecture().to_string());
        let mut tensors = Vec::new();
        match &self.learner {
            Learner::Dqn { net, opt } => {
                tensors.extend(network_tensors(net, "q."));
                tensors.extend(adam_tensors(net, opt, "q.", &mut meta));
            }
            Learner::Ddqn { q1, q2, opt1, opt2 } => {
                tensors.extend(network_tensors(q1, "q1."));
                tensors.extend(network_tensors(q2, "q2."));
                tensors.extend(adam_tensors(q1, opt1, "q1.", &mut meta));
                tensors.extend(adam_tensors(q2, opt2, "q2.", &mut meta));
            }
            Learner::Tabular { table, .. } => {
                meta.insert("tabular.q".into(), f64s_to_text(table.values().iter().copied()));
            }
        }
        if !matches!(self.learner, Learner::Tabular { .. }) {
            tensors.extend(self.buffer_tensors(&mut meta));
        }
        meta.insert("tensor_count".into(), tensors.len().to_string());
        encode_checkpoint(&meta, &tensors)
    }

    /// Shared observations are stored once; transitions refer to them by row.
    fn buffer_tensors(&self, meta: &mut Metadata) -> Vec<Tensor> {
        let obs_len = self.cfg.env.camera.width * self.cfg.env.camera.height;
        let mut index: HashMap<*const f32, usize> = HashMap::new();
        let mut obs = Vec::new();
        let mut row = |o: &Arc<[f32]>, obs: &mut Vec<f32>| -> f32 {
            let next = index.len();
            let i = *index.entry(o.as_ptr()).or_insert_with(|| {
                obs.extend_from_slice(o);
                next
            });
            assert!(i < 1 << 24, "replay index exceeds f32 integer range");
            i as f32
        };
        let (mut s, mut s_next, mut a, mut r, mut done) = (vec![], vec![], vec![], vec![], vec![]);
        for t in self.buffer.iter() {
            s.push(row(&t.s, &mut obs));
            s_next.push(row(&t.s_next, &mut obs));
            a.push(t.a as f32);
            r.push(t.r);
            done.push(if t.done { 1.0 } else { 0.0 });
        }
        let n = self.buffer.len();
        meta.insert("replay.len".into(), n.to_string());
        meta.insert("replay.capacity".into(), self.buffer.capacity().to_string());
        vec![
            Tensor::new("replay.obs", vec![obs.len() / obs_len, obs_len], obs),
            Tensor::new("replay.s", vec![n], s),
            Tensor::new("replay.s_next", vec![n], s_next),
            Tensor::new("replay.a", vec![n], a),
            Tensor::new("replay.r", vec![n], r),
            Tensor::new("replay.done", vec![n], done),
        ]
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    /// Index of the next episode to run.
    pub fn episode(&self) -> usize {
        self.episode
    }

    pub fn global_step(&self) -> u64 {
        self.global_step
    }

    pub fn terminal_counts(&self) -> [usize; 5] {
        self.terminal_counts
    }

    pub fn best_moving_avg(&self) -> Option<f64> {
        self.best_moving_avg
    }

    /// Runs one training episode and returns its metrics row.
    pub fn run_episode(&mut self) -> Result<MetricsRow, TrainError> {
        let row = self.play(self.episode, self.episode, None, true)?;
        self.episode += 1;
        Ok(row)
    }

    /// Greedy episode without learning; `budget_episode` selects the step budget.
    pub fn run_eval_episode(&mut self, index: usize, budget_episode: usize) -> Result<MetricsRow, TrainError> {
        self.play(index, budget_episode, Some(0.0), false)
    }

    fn select_arena(&mut self) {
        if self.arenas.len() > 1 {
            self.current_arena = self.curriculum_rng.random_range(0..self.arenas.len());
            let arena = self.arenas[self.current_arena].clone();
            self.env.set_reward_mode(self.cfg.reward_mode.resolve(&arena));
            self.env.set_arena(arena);
        }
    }

    fn play(&mut self, index: usize, budget_episode: usize, eps_override: Option<f64>, learn: bool) -> Result<MetricsRow, TrainError> {
        self.select_arena();
        let first = self.env.reset(budget_episode);
        let epsilon_at_start = eps_override.unwrap_or_else(|| self.cfg.epsilon.at(self.global_step));
        let mut s: Arc<[f32]> = Arc::from(first.data);
        let actions = self.cfg.env.actions.len();
        let arena_idx = self.current_arena;
        let terminal = loop {
            let eps = eps_override.unwrap_or_else(|| self.cfg.epsilon.at(self.global_step));
            let tab_state = match &self.learner {
                Learner::Tabular { grid, .. } => {
                    Some(grid.state(arena_idx, self.env.arena(), self.env.state(), self.env.result().checkpoints_hit))
                }
                _ => None,
            };
            let a = {
                let learner = &self.learner;
                let obs = &s;
                select_action_with(actions, eps, &mut self.agent_rng, || greedy_values(learner, obs, tab_state))
            };
            let out = self.env.step(a)?;
            let bootstrap_cut = out.done && out.info.terminal != Some(Terminal::StepLimit);
            let s_next: Arc<[f32]> = Arc::from(out.observation.data);
            if learn {
                self.global_step += 1;
                match &mut self.learner {
                    Learner::Tabular { table, grid } => {
                        let next = grid.state(arena_idx, self.env.arena(), self.env.state(), self.env.result().checkpoints_hit);
                        let p = &self.cfg.learn;
                        tabular_q_update(table, tab_state.expect("tabular state"), a, out.reward, next, bootstrap_cut, p.alpha, p.gamma);
                    }
                    _ => {
                        self.buffer.push(Transition { s: s.clone(), a, r: out.reward as f32, s_next: s_next.clone(), done: bootstrap_cut });
                        let p = self.cfg.learn;
                        if self.buffer.len() >= p.warmup.max(p.batch_size) && self.global_step.is_multiple_of(p.train_every as u64) {
                            self.train_batch()?;
                        }
                    }
                }
            }
            s = s_next;
            if let Some(t) = out.info.terminal {
                break t;
            }
        };

        let result = *self.env.result();
        let mut moving_avg = None;
        if learn {
            self.terminal_counts[terminal_slot(terminal)] += 1;
            if terminal == Terminal::Collision {
                self.cumulative_collisions += 1;
            }
            let m = self.moving.push(result.total_reward);
            if self.best_moving_avg.is_none_or(|b| m > b) {
                self.best_moving_avg = Some(m);
            }
            moving_avg = Some(m);
        }
        Ok(MetricsRow {
            episode: index,
            steps: result.steps,
            total_reward: result.total_reward,
            moving_avg_reward: moving_avg.unwrap_or(result.total_reward),
            terminal,
            epsilon: epsilon_at_start,
            mean_abs_yaw_rate: result.mean_abs_yaw_rate(),
            mean_roll: result.mean_roll(),
            mean_pitch: result.mean_pitch(),
            checkpoints_hit: result.checkpoints_hit,
            cumulative_collisions: self.cumulative_collisions,
            components: result.reward_components,
        })
    }

    fn train_batch(&mut self) -> Result<(), TrainError> {
        let p = self.cfg.learn;
        let loss = LossSpec { huber_delta: p.huber_delta };
        let batch = self.buffer.sample(p.batch_size, &mut self.agent_rng)?;
        let numerical = |error| TrainError::Numerical { error, saved: None };
        match &mut self.learner {
            Learner::Dqn { net, opt } => {
                let targets = dqn_targets(&batch, net, p.gamma);
                let samples = train_samples(&batch, &targets);
                train_step(net, opt, &samples, loss).map_err(numerical)?;
            }
            Learner::Ddqn { q1, q2, opt1, opt2 } => {
                let coin = self.agent_rng.random_bool(0.5);
                let (which, targets) = double_dqn_targets(&batch, q1, q2, p.gamma, coin);
                let samples = train_samples(&batch, &targets);
                match which {
                    UpdateTarget::Q1 => train_step(q1, opt1, &samples, loss),
                    UpdateTarget::Q2 => train_step(q2, opt2, &samples, loss),
                }
                .map_err(numerical)?;
            }
            Learner::Tabular { .. } => unreachable!("tabular learner has no replay batches"),
        }
        Ok(())
    }
}

fn greedy_values(learner: &Learner, obs: &[f32], tab_state: Option<usize>) -> Vec<f64> {
    match learner {
        Learner::Dqn { net, .. } => net.forward(obs).expect("observation shape").into_iter().map(f64::from).collect(),
        Learner::Ddqn { q1, q2, .. } => {
            let a = q1.forward(obs).expect("observation shape");
            let b = q2.forward(obs).expect("observation shape");
            a.iter().zip(&b).map(|(x, y)| (*x + *y) as f64).collect()
        }
        Learner::Tabular { table, .. } => table.row(tab_state.expect("tabular state")).to_vec(),
    }
}

fn train_samples<'a>(batch: &[&'a Transition], targets: &[f64]) -> Vec<crate::nn::TrainSample<'a>> {
    batch
        .iter()
        .zip(targets)
        .map(|(t, &target)| crate::nn::TrainSample { obs: &t.s, action: t.a, target })
        .collect()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

/// Trains according to `cfg`, writing the config echo, metrics, reward
/// components and checkpoints into `out_dir`. With `resume`, the run continues
/// from the checkpoint and the metrics files start at its episode.
pub fn train(cfg: &RunConfig, out_dir: &Path, resume: Option<&Path>) -> Result<TrainingReport, TrainError> {
    let started = Instant::now();
    fs::create_dir_all(out_dir).map_err(io_err(format!("creating {}", out_dir.display())))?;
    fs::write(out_dir.join(CONFIG_ECHO_FILE), cfg.to_text()).map_err(io_err("writing config echo"))?;
    let mut trainer = match resume {
        Some(p) => {
            let bytes = fs::read(p).map_err(io_err(format!("reading {}", p.display())))?;
            Trainer::resume(cfg.clone(), &bytes)?
        }
        None => Trainer::new(cfg.clone())?,
    };
    let first_episode = trainer.episode();
    let open = |name: &str| -> Result<BufWriter<File>, TrainError> {
        let path = out_dir.join(name);
        Ok(BufWriter::new(File::create(&path).map_err(io_err(format!("creating {}", path.display())))?))
    };
    let ckpt_path = out_dir.join(CHECKPOINT_FILE);
    let mut writer = MetricsWriter::new(open(METRICS_FILE)?, open(COMPONENTS_FILE)?).map_err(io_err("writing metrics header"))?;

    while trainer.episode() < cfg.episodes {
        let row = match trainer.run_episode() {
            Ok(row) => row,
            Err(TrainError::Numerical { error, .. }) => {
                let path = out_dir.join(ABORT_CHECKPOINT_FILE);
                let saved = write_atomic(&path, &trainer.checkpoint_bytes()).ok().map(|_| path);
                return Err(TrainError::Numerical { error, saved });
            }
            Err(e) => return Err(e),
        };
        if let Err(e) = writer.write_row(&row) {
            let _ = write_atomic(&ckpt_path, &trainer.checkpoint_bytes());
            return Err(io_err("writing metrics row")(e));
        }
        let done = trainer.episode();
        if cfg.checkpoint_interval > 0 && done % cfg.checkpoint_interval == 0 && done < cfg.episodes {
            write_atomic(&ckpt_path, &trainer.checkpoint_bytes()).map_err(io_err("writing checkpoint"))?;
        }
    }
    write_atomic(&ckpt_path, &trainer.checkpoint_bytes()).map_err(io_err("writing checkpoint"))?;
    Ok(TrainingReport {
        episodes_run: trainer.episode() - first_episode,
        final_episode: trainer.episode(),
        terminal_counts: trainer.terminal_counts(),
        best_moving_avg_reward: trainer.best_moving_avg(),
        wall_time: started.elapsed(),
        checkpoint: Some(ckpt_path),
    })
}

/// Greedy evaluation of a checkpoint; never updates parameters or writes files.
pub fn evaluate(checkpoint: &[u8], arena: Option<ArenaSource>, episodes: usize, seed: u64) -> Result<EvalReport, TrainError> {
    let (meta, _) = decode_checkpoint(checkpoint)?;
    let text = meta.get("config").ok_or_else(|| CheckpointError::MissingKey("config".into()))?;
    let saved = RunConfig::parse(text)?;
    let trained_episode: usize = meta.get("episode").and_then(|v| v.parse().ok()).unwrap_or(0);
    let mut trainer = Trainer::resume(saved.clone(), checkpoint)?;
    if let Some(src) = arena {
        let eval_cfg = RunConfig { arena: src, ..saved };
        let arenas = eval_cfg.load_arenas()?;
        trainer.env.set_reward_mode(eval_cfg.reward_mode.resolve(&arenas[0]));
        trainer.env.set_arena(arenas[0].clone());
        if let Learner::Tabular { .. } = trainer.learner {
            if arenas.len() != trainer.arenas.len() {
                return Err(TrainError::Resume("tabular policies cannot change arena layout".into()));
            }
        }
        trainer.arenas = arenas;
        trainer.current_arena = 0;
    }
    *trainer.env.rng_mut() = stream_rng(seed, ENV_STREAM);
    trainer.agent_rng = stream_rng(seed, AGENT_STREAM);
    trainer.curriculum_rng = stream_rng(seed, CURRICULUM_STREAM);
    let mut rows = (0..episodes).map(|i| trainer.run_eval_episode(i, trained_episode)).collect::<Result<Vec<_>, _>>()?;
    let mut moving = MovingAverage::new(trainer.cfg.moving_average_window);
    let mut collisions = 0;
    for row in &mut rows {
        row.moving_avg_reward = moving.push(row.total_reward);
        collisions += usize::from(row.terminal == Terminal::Collision);
        row.cumulative_collisions = collisions;
    }
    Ok(EvalReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Architecture;

    fn tiny_config(algorithm: Algorithm) -> RunConfig {
        let mut cfg = RunConfig { algorithm, episodes: 6, seed: 3, checkpoint_interval: 0, ..Default::default() };
        cfg.env.camera.width = 12;
        cfg.env.camera.height = 12;
        cfg.env.vehicle.dt = 0.5;
        cfg.env.budget.base_steps = 20;
        cfg.learn.warmup = 16;
        cfg.learn.batch_size = 8;
        cfg.learn.buffer_capacity = 64;
        cfg.epsilon.decay_steps = 100;
        cfg.architecture = Some("12x12:c4k3s2,c4k3s1:d8:a5".parse::<Architecture>().unwrap());
        cfg
    }

    fn rows(cfg: &RunConfig, n: usize) -> Vec<MetricsRow> {
        let mut t = Trainer::new(cfg.clone()).unwrap();
        (0..n).map(|_| t.run_episode().unwrap()).collect()
    }

    #[test]
    fn rng_text_roundtrip() {
        let mut rng = stream_rng(5, 2);
        let _: u64 = rng.random();
        let _: u32 = rng.random();
        let mut back = rng_from_text(&rng_to_text(&rng)).unwrap();
        assert_eq!(rng.random::<u64>(), back.random::<u64>());
    }

    #[test]
    fn deterministic_per_algorithm() {
        for alg in [Algorithm::Dqn, Algorithm::Ddqn, Algorithm::TabularGrid] {
            let cfg = tiny_config(alg);
            assert_eq!(rows(&cfg, 4), rows(&cfg, 4), "{alg:?}");
        }
    }

    #[test]
    fn checkpoint_resume_matches_uninterrupted() {
        for alg in [Algorithm::Ddqn, Algorithm::Dqn, Algorithm::TabularGrid] {
            let cfg = tiny_config(alg);
            let full = rows(&cfg, 6);
            let mut t = Trainer::new(cfg.clone()).unwrap();
            for _ in 0..3 {
                t.run_episode().unwrap();
            }
            let bytes = t.checkpoint_bytes();
            drop(t);
            let mut resumed = Trainer::resume(cfg.clone(), &bytes).unwrap();
            assert_eq!(resumed.episode(), 3);
            let rest: Vec<MetricsRow> = (0..3).map(|_| resumed.run_episode().unwrap()).collect();
            assert_eq!(rest, full[3..], "{alg:?}");
            assert_eq!(resumed.checkpoint_bytes(), {
                let mut again = Trainer::resume(cfg.clone(), &bytes).unwrap();
                for _ in 0..3 {
                    again.run_episode().unwrap();
                }
                again.checkpoint_bytes()
            });
        }
    }

    #[test]
    fn resume_rejects_different_config() {
        let cfg = tiny_config(Algorithm::Ddqn);
        let bytes = Trainer::new(cfg.clone()).unwrap().checkpoint_bytes();
        let mut other = cfg.clone();
        other.learn.gamma = 0.5;
        assert!(matches!(Trainer::resume(other, &bytes), Err(TrainError::Resume(_))));
        let more = RunConfig { episodes: 99, ..cfg };
        assert!(Trainer::resume(more, &bytes).is_ok());
    }

    #[test]
    fn rows_are_consistent() {
        let cfg = tiny_config(Algorithm::Ddqn);
        for r in rows(&cfg, 5) {
            assert!((r.components.total() - r.total_reward).abs() < 1e-9);
            assert!(r.steps >= 1 && r.steps <= 25);
        }
    }

    #[test]
    fn random_zone_curriculum_runs() {
        let mut cfg = tiny_config(Algorithm::TabularGrid);
        cfg.arena = ArenaSource::WobblesRandom;
        let r = rows(&cfg, 8);
        assert_eq!(r.len(), 8);
    }

    #[test]
    fn eval_is_greedy_and_stateless() {
        let cfg = tiny_config(Algorithm::Ddqn);
        let mut t = Trainer::new(cfg).unwrap();
        t.run_episode().unwrap();
        let bytes = t.checkpoint_bytes();
        let a = evaluate(&bytes, None, 3, 1).unwrap();
        let b = evaluate(&bytes, None, 3, 1).unwrap();
        assert_eq!(a, b);
        assert!(a.rows.iter().all(|r| r.epsilon == 0.0));
        assert_eq!(a.rows.iter().map(|r| r.episode).collect::<Vec<_>>(), vec![0, 1, 2]);
    }
}
