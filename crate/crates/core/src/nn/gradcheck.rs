use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::Network;
use super::Scalar;

const MIN_COORDINATES: usize = 256;
const SUBSET_SEED: u64 = 0x6772_6164;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckEntry {
    pub layer: usize,
    pub is_bias: bool,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub max_rel_error: f64,
}

pub fn gradient_check<T: Scalar>(net: &Network<T>, obs: &[T], action: usize, perturbation: f64) -> f64 {
    gradient_check_report(net, obs, action, perturbation).max_rel_error
}

/// Central differences of `Q(obs)[action]` against backprop, in f64.
/// Every parameter is checked when there are at most 256, otherwise a fixed
/// random subset of 256.
pub fn gradient_check_report<T: Scalar>(net: &Network<T>, obs: &[T], action: usize, perturbation: f64) -> GradCheckReport {
    assert!(perturbation > 0.0 && perturbation <= 1e-2, "perturbation must lie in (0, 1e-2]");
    let mut net: Network<f64> = net.cast();
    assert!(action < net.output_len(), "action index out of range");
    let x: Vec<f64> = obs.iter().map(|v| v.as_f64()).collect();

    let trace = net.forward_trace(&x).expect("observation shape");
    let mut one_hot = vec![0.0; net.output_len()];
    one_hot[action] = 1.0;
    let mut grads = net.zero_gradients();
    net.backward(&trace, &one_hot, &mut grads);

    let mut coords = Vec::new();
    for (l, layer) in net.layers().iter().enumerate() {
        coords.extend((0..layer.weight.len()).map(|i| (l, false, i)));
        coords.extend((0..layer.bias.len()).map(|i| (l, true, i)));
    }
    if coords.len() > MIN_COORDINATES {
        let mut rng = ChaCha8Rng::seed_from_u64(SUBSET_SEED);
        let mut picked = index::sample(&mut rng, coords.len(), MIN_COORDINATES).into_vec();
        picked.sort_unstable();
        coords = picked.into_iter().map(|i| coords[i]).collect();
    }

    let mut entries = Vec::with_capacity(coords.len());
    let mut max_rel_error: f64 = 0.0;
    for (l, is_bias, i) in coords {
        let analytic = if is_bias { grads.bias[l][i] } else { grads.weight[l][i] };
        let original = param(&mut net, l, is_bias, i);
        *param_mut(&mut net, l, is_bias, i) = original + perturbation;
        let plus = net.forward(&x).expect("shape")[action];
        *param_mut(&mut net, l, is_bias, i) = original - perturbation;
        let minus = net.forward(&x).expect("shape")[action];
        *param_mut(&mut net, l, is_bias, i) = original;
        let numeric = (plus - minus) / (2.0 * perturbation);
        let rel_error = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8);
        max_rel_error = max_rel_error.max(rel_error);
        entries.push(GradCheckEntry { layer: l, is_bias, index: i, analytic, numeric, rel_error });
    }
    GradCheckReport { entries, max_rel_error }
}

fn param(net: &mut Network<f64>, l: usize, is_bias: bool, i: usize) -> f64 {
    *param_mut(net, l, is_bias, i)
}

fn param_mut(net: &mut Network<f64>, l: usize, is_bias: bool, i: usize) -> &mut f64 {
    let layer = &mut net.layers_mut()[l];
    if is_bias {
        &mut layer.bias[i]
    } else {
        &mut layer.weight[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Architecture, ConvSpec};

    fn obs(n: usize) -> Vec<f64> {
        (0..n).map(|i| ((i as f64) * 0.731).sin() * 0.5 + 0.5).collect()
    }

    #[test]
    fn tiny_conv_net() {
        let arch = Architecture {
            input_height: 8,
            input_width: 8,
            convs: vec![ConvSpec { out_channels: 4, kernel: 3, stride: 1 }, ConvSpec { out_channels: 4, kernel: 3, stride: 2 }],
            dense_hidden: vec![],
            outputs: 5,
        };
        let net = Network::<f64>::new(arch, 17).unwrap();
        let report = gradient_check_report(&net, &obs(64), 2, 1e-5);
        assert!(report.entries.len() >= 200);
        assert!(report.max_rel_error <= 1e-4, "max rel error {}", report.max_rel_error);
    }

    #[test]
    fn linear_layer_is_exact() {
        let arch = Architecture { input_height: 4, input_width: 4, convs: vec![], dense_hidden: vec![], outputs: 3 };
        let net = Network::<f64>::new(arch, 2).unwrap();
        let report = gradient_check_report(&net, &obs(16), 1, 1e-3);
        assert_eq!(report.entries.len(), 51);
        assert!(report.max_rel_error <= 1e-7, "max rel error {}", report.max_rel_error);
    }

    #[test]
    fn zero_everything_bias_path() {
        let arch = Architecture {
            input_height: 8,
            input_width: 8,
            convs: vec![ConvSpec { out_channels: 2, kernel: 3, stride: 1 }],
            dense_hidden: vec![],
            outputs: 2,
        };
        let net = Network::<f64>::zeros(arch).unwrap();
        let report = gradient_check_report(&net, &vec![0.0; 64], 0, 1e-4);
        for e in report.entries.iter().filter(|e| e.is_bias && e.layer == 0) {
            assert_eq!(e.analytic, 0.0);
            assert!(e.numeric.abs() < 1e-12);
        }
        let out_bias = report.entries.iter().find(|e| e.is_bias && e.layer == 1 && e.index == 0).unwrap();
        assert_eq!(out_bias.analytic, 1.0);
    }
}
