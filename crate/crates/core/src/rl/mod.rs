//! Off-policy learning: replay buffer, exploration, DQN / Double-DQN targets,
//! the training loop, and tabular Q-learning with a value-iteration oracle.

mod buffer;
mod tabular;
mod targets;
mod trainer;

pub use buffer::{ReplayBuffer, Transition};
pub use tabular::{
    gridworld, q_learning_sweeps, tabular_q_update, value_iteration, FiniteMdp, Outcome, QTable,
};
pub use targets::{
    double_dqn_targets, double_estimate, dqn_targets, max_bias_trial, single_estimate, UpdateTarget,
};
pub use trainer::{
    evaluate, train, EvalReport, TrainError, Trainer, TrainingReport, ABORT_CHECKPOINT_FILE, CHECKPOINT_FILE,
    COMPONENTS_FILE, CONFIG_ECHO_FILE, METRICS_FILE,
};

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RlError {
    #[error("cannot sample {requested} transitions from a buffer of {size}")]
    BufferTooSmall { requested: usize, size: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningParams {
    /// Tabular learning rate.
    pub alpha: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub train_every: usize,
    pub warmup: usize,
    pub buffer_capacity: usize,
    pub huber_delta: f64,
}

impl Default for LearningParams {
    fn default() -> Self {
        Self { alpha: 0.1, gamma: 0.99, batch_size: 32, train_every: 4, warmup: 1000, buffer_capacity: 50_000, huber_delta: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self { start: 1.0, end: 0.05, decay_steps: 100_000 }
    }
}

impl EpsilonSchedule {
    pub fn at(&self, step: u64) -> f64 {
        if step >= self.decay_steps {
            return self.end;
        }
        self.start + (self.end - self.start) * step as f64 / self.decay_steps as f64
    }
}

/// Epsilon-greedy choice. One uniform draw decides exploration, and a second
/// picks the random action, so the stream consumption depends only on the outcome.
/// Greedy ties resolve to the lowest index.
pub fn select_action<T: PartialOrd + Copy, R: Rng + ?Sized>(qvalues: &[T], epsilon: f64, rng: &mut R) -> usize {
    select_action_with(qvalues.len(), epsilon, rng, || qvalues.to_vec())
}

/// As [`select_action`], evaluating the Q-values only when acting greedily.
pub fn select_action_with<T, R, F>(actions: usize, epsilon: f64, rng: &mut R, qvalues: F) -> usize
where
    T: PartialOrd + Copy,
    R: Rng + ?Sized,
    F: FnOnce() -> Vec<T>,
{
    assert!(actions > 0, "select_action needs at least one action");
    let u: f64 = rng.random();
    if u < epsilon {
        return rng.random_range(0..actions);
    }
    let q = qvalues();
    debug_assert_eq!(q.len(), actions);
    argmax(&q)
}

pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn greedy_and_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_action(&[0.1, 0.9, 0.3], 0.0, &mut rng), 1);
        assert_eq!(select_action(&[0.5, 0.5], 0.0, &mut rng), 0);
        assert_eq!(select_action(&[2.0f32, 7.0, 7.0], 0.0, &mut rng), 1);
    }

    #[test]
    fn uniform_exploration_chi_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            counts[select_action(&[0.0; 5], 1.0, &mut rng)] += 1;
        }
        let p = 0.2;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() <= 3.0 * sigma, "{counts:?}");
        }
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - 2000.0).powi(2) / 2000.0).sum();
        // 4 degrees of freedom, p = 0.001 critical value.
        assert!(chi2 < 18.47, "chi2 = {chi2}");
    }

    #[test]
    fn epsilon_schedule() {
        let s = EpsilonSchedule::default();
        assert_eq!(s.at(0), 1.0);
        assert_eq!(s.at(s.decay_steps), 0.05);
        assert_eq!(s.at(10 * s.decay_steps), 0.05);
        let lin = EpsilonSchedule { start: 1.0, end: 0.0, decay_steps: 100 };
        assert_eq!(lin.at(50), 0.5);
    }
}
