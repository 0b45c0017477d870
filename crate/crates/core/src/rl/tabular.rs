use rand::Rng;

/// Dense `(state, action) -> value` table.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    states: usize,
    actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(states: usize, actions: usize) -> Self {
        Self { states, actions, values: vec![0.0; states * actions] }
    }

    pub fn from_values(states: usize, actions: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), states * actions);
        Self { states, actions, values }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.values[s * self.actions + a] = v;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.actions..(s + 1) * self.actions]
    }

    pub fn max(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_distance(&self, other: &QTable) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// `Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a))`, with no
/// bootstrap on terminal transitions. Returns the new entry.
#[allow(clippy::too_many_arguments)]
pub fn tabular_q_update(
    table: &mut QTable,
    s: usize,
    a: usize,
    r: f64,
    s_next: usize,
    done: bool,
    alpha: f64,
    gamma: f64,
) -> f64 {
    let bootstrap = if done { 0.0 } else { table.max(s_next) };
    let target = r + gamma * bootstrap;
    let old = table.get(s, a);
    let new = old + alpha * (target - old);
    table.set(s, a, new);
    new
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub prob: f64,
    pub next: usize,
    pub reward: f64,
    pub done: bool,
}

/// Explicit finite MDP; `outcomes[s * actions + a]` lists the possible results of `a` in `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp {
    pub states: usize,
    pub actions: usize,
    pub outcomes: Vec<Vec<Outcome>>,
}

impl FiniteMdp {
    pub fn outcomes(&self, s: usize, a: usize) -> &[Outcome] {
        &self.outcomes[s * self.actions + a]
    }
}

/// Bellman optimality iteration until successive tables differ by at most `tolerance`.
pub fn value_iteration(mdp: &FiniteMdp, gamma: f64, tolerance: f64) -> QTable {
    let mut q = QTable::new(mdp.states, mdp.actions);
    loop {
        let mut next = QTable::new(mdp.states, mdp.actions);
        for s in 0..mdp.states {
            for a in 0..mdp.actions {
                let v = mdp
                    .outcomes(s, a)
                    .iter()
                    .map(|o| o.prob * (o.reward + if o.done { 0.0 } else { gamma * q.max(o.next) }))
                    .sum();
                next.set(s, a, v);
            }
        }
        let delta = next.sup_distance(&q);
        q = next;
        if delta <= tolerance {
            return q;
        }
    }
}

/// Asynchronous Q-learning: every sweep updates each `(s, a)` once from a sampled
/// outcome, with step size `1 / (1 + 0.01 k)` in sweep `k`.
pub fn q_learning_sweeps<R: Rng + ?Sized>(mdp: &FiniteMdp, gamma: f64, sweeps: usize, rng: &mut R) -> QTable {
    let mut q = QTable::new(mdp.states, mdp.actions);
    for k in 0..sweeps {
        let alpha = 1.0 / (1.0 + 0.01 * k as f64);
        for s in 0..mdp.states {
            for a in 0..mdp.actions {
                let o = sample_outcome(mdp.outcomes(s, a), rng);
                tabular_q_update(&mut q, s, a, o.reward, o.next, o.done, alpha, gamma);
            }
        }
    }
    q
}

fn sample_outcome<R: Rng + ?Sized>(outcomes: &[Outcome], rng: &mut R) -> Outcome {
    if outcomes.len() == 1 {
        return outcomes[0];
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for o in outcomes {
        acc += o.prob;
        if u < acc {
            return *o;
        }
    }
    *outcomes.last().expect("non-empty outcome list")
}

/// Deterministic `n x n` grid, actions up/down/left/right, bumping a border
/// leaves the agent in place. Entering `goal` pays 1 and ends the episode;
/// the goal cell itself is absorbing with zero reward.
pub fn gridworld(n: usize, goal: (usize, usize)) -> FiniteMdp {
    let idx = |r: usize, c: usize| r * n + c;
    let goal_idx = idx(goal.0, goal.1);
    let mut outcomes = Vec::with_capacity(n * n * 4);
    for r in 0..n {
        for c in 0..n {
            for a in 0..4 {
                let s = idx(r, c);
                if s == goal_idx {
                    outcomes.push(vec![Outcome { prob: 1.0, next: s, reward: 0.0, done: true }]);
                    continue;
                }
                let (nr, nc) = match a {
                    0 => (r.saturating_sub(1), c),
                    1 => ((r + 1).min(n - 1), c),
                    2 => (r, c.saturating_sub(1)),
                    _ => (r, (c + 1).min(n - 1)),
                };
                let next = idx(nr, nc);
                let hit = next == goal_idx;
                outcomes.push(vec![Outcome { prob: 1.0, next, reward: if hit { 1.0 } else { 0.0 }, done: hit }]);
            }
        }
    }
    FiniteMdp { states: n * n, actions: 4, outcomes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::VecDeque;

    #[test]
    fn update_examples() {
        let mut q = QTable::new(2, 2);
        q.set(1, 0, 2.0);
        assert_eq!(tabular_q_update(&mut q, 0, 0, 1.0, 1, false, 0.0, 0.9), 0.0);
        let new = tabular_q_update(&mut q, 0, 0, 1.0, 1, false, 0.5, 0.9);
        assert!((new - 1.4).abs() < 1e-12);
        q.set(0, 1, -7.0);
        assert_eq!(tabular_q_update(&mut q, 0, 1, 1.0, 1, true, 1.0, 0.9), 1.0);
    }

    #[test]
    fn self_loop_geometric_series() {
        let mdp = FiniteMdp { states: 1, actions: 1, outcomes: vec![vec![Outcome { prob: 1.0, next: 0, reward: 1.0, done: false }]] };
        let q = value_iteration(&mdp, 0.9, 1e-12);
        assert!((q.get(0, 0) - 10.0).abs() < 1e-9);
    }

    #[test]
    fn myopic_iteration_is_reward_table() {
        let mdp = gridworld(3, (2, 2));
        let q = value_iteration(&mdp, 0.0, 0.0);
        for s in 0..9 {
            for a in 0..4 {
                assert_eq!(q.get(s, a), mdp.outcomes(s, a)[0].reward);
            }
        }
    }

    /// Shortest-path distances by breadth-first search over the grid moves.
    fn bfs_distances(n: usize, goal: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; n * n];
        dist[goal] = 0;
        let mut queue = VecDeque::from([goal]);
        while let Some(s) = queue.pop_front() {
            let (r, c) = (s / n, s % n);
            let mut nbrs = Vec::new();
            if r > 0 {
                nbrs.push(s - n);
            }
            if r + 1 < n {
                nbrs.push(s + n);
            }
            if c > 0 {
                nbrs.push(s - 1);
            }
            if c + 1 < n {
                nbrs.push(s + 1);
            }
            for t in nbrs {
                if dist[t] == usize::MAX {
                    dist[t] = dist[s] + 1;
                    queue.push_back(t);
                }
            }
        }
        dist
    }

    #[test]
    fn gridworld_matches_path_lengths() {
        for n in [3, 5] {
            let goal = (n - 1, n - 1);
            let mdp = gridworld(n, goal);
            let q = value_iteration(&mdp, 0.9, 1e-13);
            let dist = bfs_distances(n, goal.0 * n + goal.1);
            for s in 0..n * n {
                if dist[s] == 0 {
                    continue;
                }
                for a in 0..4 {
                    let next = mdp.outcomes(s, a)[0].next;
                    // d counts the action just taken plus the remaining shortest path.
                    let d = 1 + dist[next];
                    let want = 0.9f64.powi(d as i32 - 1);
                    assert!((q.get(s, a) - want).abs() < 1e-10, "s={s} a={a}");
                }
            }
        }
    }

    #[test]
    fn q_learning_converges_to_oracle() {
        let mdp = gridworld(5, (4, 4));
        let oracle = value_iteration(&mdp, 0.9, 1e-14);
        let q = q_learning_sweeps(&mdp, 0.9, 400, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(q.sup_distance(&oracle) <= 1e-6, "gap {}", q.sup_distance(&oracle));
    }

    #[test]
    fn stochastic_outcomes_are_weighted() {
        let mdp = FiniteMdp {
            states: 2,
            actions: 1,
            outcomes: vec![
                vec![
                    Outcome { prob: 0.25, next: 1, reward: 4.0, done: true },
                    Outcome { prob: 0.75, next: 1, reward: 0.0, done: true },
                ],
                vec![Outcome { prob: 1.0, next: 1, reward: 0.0, done: true }],
            ],
        };
        assert!((value_iteration(&mdp, 0.9, 1e-12).get(0, 0) - 1.0).abs() < 1e-12);
    }
}
