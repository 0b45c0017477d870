use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{argmax, Transition};
use crate::nn::QNetwork;

/// Network whose parameters a Double-DQN step updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateTarget {
    Q1,
    Q2,
}

/// `r` for terminal samples, else `r + gamma * max_a Q(s', a)`.
pub fn dqn_targets(batch: &[&Transition], net: &QNetwork, gamma: f64) -> Vec<f64> {
    batch
        .iter()
        .map(|t| {
            if t.done {
                return t.r as f64;
            }
            let q = net.forward(&t.s_next).expect("observation shape");
            t.r as f64 + gamma * q[argmax(&q)] as f64
        })
        .collect()
}

/// `coin = true` updates Q1: the action is chosen by Q1 and evaluated by Q2.
/// `coin = false` swaps the roles.
pub fn double_dqn_targets(
    batch: &[&Transition],
    q1: &QNetwork,
    q2: &QNetwork,
    gamma: f64,
    coin: bool,
) -> (UpdateTarget, Vec<f64>) {
    let (select, evaluate, which) = if coin { (q1, q2, UpdateTarget::Q1) } else { (q2, q1, UpdateTarget::Q2) };
    let targets = batch
        .iter()
        .map(|t| {
            if t.done {
                return t.r as f64;
            }
            let a_star = argmax(&select.forward(&t.s_next).expect("observation shape"));
            t.r as f64 + gamma * evaluate.forward(&t.s_next).expect("observation shape")[a_star] as f64
        })
        .collect();
    (which, targets)
}

/// `max_a mean(samples[a])`.
pub fn single_estimate(samples: &[Vec<f64>]) -> f64 {
    means(samples).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Picks the action on set `a`, evaluates it on the independent set `b`.
pub fn double_estimate(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let ma = means(a);
    means(b)[argmax(&ma)]
}

fn means(samples: &[Vec<f64>]) -> Vec<f64> {
    samples.iter().map(|s| s.iter().sum::<f64>() / s.len() as f64).collect()
}

/// One trial of the single-state task: every action's reward is standard
/// normal (true value 0). Returns `(single, double)` estimates of max_a Q.
pub fn max_bias_trial<R: Rng + ?Sized>(rng: &mut R, actions: usize, samples_per_action: usize) -> (f64, f64) {
    let mut draw = || -> Vec<Vec<f64>> {
        (0..actions)
            .map(|_| (0..samples_per_action).map(|_| StandardNormal.sample(&mut *rng)).collect())
            .collect()
    };
    let a = draw();
    let b = draw();
    (single_estimate(&a), double_estimate(&a, &b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Architecture;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn constant_net(outputs: &[f32]) -> QNetwork {
        let arch = Architecture { input_height: 2, input_width: 2, convs: vec![], dense_hidden: vec![], outputs: outputs.len() };
        let mut net = QNetwork::zeros(arch).unwrap();
        net.layers_mut()[0].bias = outputs.to_vec();
        net
    }

    fn transition(r: f32, done: bool) -> Transition {
        let obs: Arc<[f32]> = Arc::from(vec![0.5f32; 4]);
        Transition { s: obs.clone(), a: 0, r, s_next: obs, done }
    }

    #[test]
    fn dqn_examples() {
        let net = constant_net(&[0.2, 1.0, -3.0]);
        let t = [transition(0.0, false), transition(2.0, true)];
        let batch: Vec<&Transition> = t.iter().collect();
        let y = dqn_targets(&batch, &net, 0.9);
        assert!((y[0] - 0.9).abs() < 1e-12);
        assert_eq!(y[1], 2.0);
        let myopic = dqn_targets(&batch, &net, 0.0);
        assert_eq!(myopic, vec![0.0, 2.0]);
    }

    #[test]
    fn double_example() {
        let q1 = constant_net(&[1.0, 3.0]);
        let q2 = constant_net(&[5.0, 2.0]);
        let t = [transition(1.0, false), transition(-1.0, true)];
        let batch: Vec<&Transition> = t.iter().collect();
        let (which, y) = double_dqn_targets(&batch, &q1, &q2, 0.5, true);
        assert_eq!(which, UpdateTarget::Q1);
        assert_eq!(y, vec![2.0, -1.0]);
        // Roles swapped: Q2 picks action 0, Q1 values it at 1.
        let (which, y) = double_dqn_targets(&batch, &q1, &q2, 0.5, false);
        assert_eq!(which, UpdateTarget::Q2);
        assert_eq!(y, vec![1.5, -1.0]);
    }

    #[test]
    fn identical_networks_reduce_to_dqn() {
        let arch = Architecture::dqn_default(52, 52, 5);
        let net = QNetwork::new(arch, 3).unwrap();
        let t: Vec<Transition> = (0..6)
            .map(|k| {
                let obs: Arc<[f32]> = (0..52 * 52).map(|i| ((i * (k + 3)) % 17) as f32 / 17.0).collect();
                Transition { s: obs.clone(), a: k % 5, r: k as f32 * 0.25, s_next: obs, done: k == 4 }
            })
            .collect();
        let batch: Vec<&Transition> = t.iter().collect();
        let single = dqn_targets(&batch, &net, 0.95);
        for coin in [true, false] {
            assert_eq!(double_dqn_targets(&batch, &net, &net, 0.95, coin).1, single);
        }
    }

    #[test]
    fn double_estimator_removes_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mut s, mut d) = (0.0, 0.0);
        let trials = 1000;
        for _ in 0..trials {
            let (a, b) = max_bias_trial(&mut rng, 10, 10);
            s += a;
            d += b;
        }
        s /= trials as f64;
        d /= trials as f64;
        assert!(s > d);
        assert!(d.abs() <= 0.05, "double mean {d}");
    }
}
