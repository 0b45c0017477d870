use super::network::{Gradients, QNetwork};
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { step_size: 1e-4, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Adam state; moment arrays mirror the network's per-layer weight and bias arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub m_weight: Vec<Vec<f32>>,
    pub m_bias: Vec<Vec<f32>>,
    pub v_weight: Vec<Vec<f32>>,
    pub v_bias: Vec<Vec<f32>>,
    pub step: u64,
}

impl Adam {
    pub fn new(net: &QNetwork, config: AdamConfig) -> Self {
        let zeros = net.zero_gradients();
        Self {
            config,
            m_weight: zeros.weight.clone(),
            m_bias: zeros.bias.clone(),
            v_weight: zeros.weight,
            v_bias: zeros.bias,
            step: 0,
        }
    }

    pub fn is_congruent(&self, net: &QNetwork) -> bool {
        let layers = net.layers();
        let same = |a: &[Vec<f32>], f: &dyn Fn(usize) -> usize| {
            a.len() == layers.len() && a.iter().enumerate().all(|(i, v)| v.len() == f(i))
        };
        let w = |i: usize| layers[i].weight.len();
        let b = |i: usize| layers[i].bias.len();
        same(&self.m_weight, &w) && same(&self.v_weight, &w) && same(&self.m_bias, &b) && same(&self.v_bias, &b)
    }

    pub fn apply(&mut self, net: &mut QNetwork, grads: &Gradients<f32>) {
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        let (b1, b2) = (c.beta1 as f32, c.beta2 as f32);
        let lr = (c.step_size * bc2.sqrt() / bc1) as f32;
        let eps = (c.epsilon * bc2.sqrt()) as f32;
        for (i, layer) in net.layers_mut().iter_mut().enumerate() {
            let groups = [
                (&mut layer.weight, &mut self.m_weight[i], &mut self.v_weight[i], &grads.weight[i]),
                (&mut layer.bias, &mut self.m_bias[i], &mut self.v_bias[i], &grads.bias[i]),
            ];
            for (p, m, v, g) in groups {
                for k in 0..p.len() {
                    m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                    v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                    p[k] -= lr * m[k] / (v[k].sqrt() + eps);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub huber_delta: f64,
}

impl Default for LossSpec {
    fn default() -> Self {
        Self { huber_delta: 1.0 }
    }
}

pub fn huber(r: f64, delta: f64) -> f64 {
    if r.abs() <= delta {
        0.5 * r * r
    } else {
        delta * (r.abs() - 0.5 * delta)
    }
}

pub fn huber_grad(r: f64, delta: f64) -> f64 {
    if r.abs() <= delta {
        r
    } else {
        delta * r.signum()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainSample<'a> {
    pub obs: &'a [f32],
    pub action: usize,
    pub target: f64,
}

/// One optimizer step on the mean Huber loss of the taken-action outputs.
/// Returns the loss before the update. On error the parameters are untouched.
pub fn train_step(net: &mut QNetwork, opt: &mut Adam, batch: &[TrainSample<'_>], loss: LossSpec) -> Result<f64, NnError> {
    if batch.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    let n = batch.len() as f64;
    let mut grads = net.zero_gradients();
    let mut total = 0.0;
    let mut grad_out = vec![0.0f32; net.output_len()];
    for (i, s) in batch.iter().enumerate() {
        if s.action >= net.output_len() {
            return Err(NnError::ActionIndex { index: s.action, outputs: net.output_len() });
        }
        if !s.target.is_finite() {
            return Err(NnError::NonFinite { what: "target", sample: Some(i), value: s.target });
        }
        let trace = net.forward_trace(s.obs)?;
        let q = trace.last().expect("output layer")[s.action] as f64;
        let r = q - s.target;
        let l = huber(r, loss.huber_delta);
        if !l.is_finite() {
            return Err(NnError::NonFinite { what: "loss", sample: Some(i), value: l });
        }
        total += l;
        grad_out.iter_mut().for_each(|g| *g = 0.0);
        grad_out[s.action] = (huber_grad(r, loss.huber_delta) / n) as f32;
        net.backward(&trace, &grad_out, &mut grads);
    }
    if let Some(v) = grads.first_non_finite() {
        return Err(NnError::NonFinite { what: "gradient", sample: None, value: v as f64 });
    }
    opt.apply(net, &grads);
    Ok(total / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Architecture, ConvSpec};

    fn small_net(seed: u64) -> QNetwork {
        let arch = Architecture {
            input_height: 8,
            input_width: 8,
            convs: vec![ConvSpec { out_channels: 4, kernel: 3, stride: 1 }, ConvSpec { out_channels: 4, kernel: 3, stride: 2 }],
            dense_hidden: vec![16],
            outputs: 3,
        };
        QNetwork::new(arch, seed).unwrap()
    }

    fn inputs() -> Vec<Vec<f32>> {
        (0..4).map(|k| (0..64).map(|i| (((i * 13 + k * 7) % 17) as f32) / 17.0).collect()).collect()
    }

    #[test]
    fn huber_gradient_matches_finite_difference() {
        for &r in &[-3.0, -1.2, -0.7, -0.1, 0.0, 0.4, 0.99, 1.5, 10.0] {
            let h = 1e-6;
            let fd = (huber(r + h, 1.0) - huber(r - h, 1.0)) / (2.0 * h);
            assert!((fd - huber_grad(r, 1.0)).abs() < 1e-6, "r = {r}");
        }
        assert_eq!(huber_grad(0.5, 1.0), 0.5);
        assert_eq!(huber_grad(-4.0, 1.0), -1.0);
        assert_eq!(huber(3.0, 1.0), 2.5);
    }

    #[test]
    fn exact_targets_leave_parameters_unchanged() {
        let mut net = small_net(3);
        let mut opt = Adam::new(&net, AdamConfig::default());
        let xs = inputs();
        let targets: Vec<f64> = xs.iter().map(|x| net.forward(x).unwrap()[1] as f64).collect();
        let batch: Vec<TrainSample> = xs.iter().zip(&targets).map(|(x, &t)| TrainSample { obs: x, action: 1, target: t }).collect();
        let before = net.clone();
        let loss = train_step(&mut net, &mut opt, &batch, LossSpec::default()).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(net, before);
    }

    #[test]
    fn loss_decreases_on_fixed_batch() {
        let mut net = small_net(5);
        let mut opt = Adam::new(&net, AdamConfig { step_size: 1e-3, ..Default::default() });
        let xs = inputs();
        let batch: Vec<TrainSample> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| TrainSample { obs: x, action: i % 3, target: 0.5 + i as f64 * 0.3 })
            .collect();
        let mut prev = f64::INFINITY;
        for _ in 0..10 {
            let l = train_step(&mut net, &mut opt, &batch, LossSpec::default()).unwrap();
            assert!(l < prev, "loss {l} did not decrease from {prev}");
            prev = l;
        }
    }

    #[test]
    fn errors_leave_network_untouched() {
        let mut net = small_net(1);
        let mut opt = Adam::new(&net, AdamConfig::default());
        let before = net.clone();
        let x = inputs().remove(0);
        assert_eq!(train_step(&mut net, &mut opt, &[], LossSpec::default()), Err(NnError::EmptyBatch));
        let bad = [TrainSample { obs: &x, action: 0, target: f64::NAN }];
        assert!(matches!(
            train_step(&mut net, &mut opt, &bad, LossSpec::default()),
            Err(NnError::NonFinite { what: "target", sample: Some(0), .. })
        ));
        let bad = [TrainSample { obs: &x, action: 7, target: 0.0 }];
        assert!(matches!(train_step(&mut net, &mut opt, &bad, LossSpec::default()), Err(NnError::ActionIndex { .. })));
        assert_eq!(net, before);
        assert_eq!(opt.step, 0);
    }

    #[test]
    fn moments_congruent() {
        let net = small_net(0);
        let opt = Adam::new(&net, AdamConfig::default());
        assert!(opt.is_congruent(&net));
        let other = QNetwork::new(Architecture::dqn_default(84, 84, 5), 0).unwrap();
        assert!(!opt.is_congruent(&other));
    }
}
