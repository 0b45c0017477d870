use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NnError, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
}

/// Layer stack: convolutions (ReLU), hidden dense layers (ReLU), then a
/// linear output layer with one unit per action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub input_height: usize,
    pub input_width: usize,
    pub convs: Vec<ConvSpec>,
    pub dense_hidden: Vec<usize>,
    pub outputs: usize,
}

impl Architecture {
    /// Four convolutions and two dense layers, the usual depth-image DQN trunk.
    pub fn dqn_default(input_height: usize, input_width: usize, outputs: usize) -> Self {
        let conv = |out_channels, kernel, stride| ConvSpec { out_channels, kernel, stride };
        Self {
            input_height,
            input_width,
            convs: vec![conv(16, 8, 4), conv(32, 4, 2), conv(32, 3, 1), conv(32, 3, 1)],
            dense_hidden: vec![256],
            outputs,
        }
    }

    /// `(channels, height, width)` after each convolution.
    pub fn conv_shapes(&self) -> Result<Vec<(usize, usize, usize)>, NnError> {
        let mut shapes = Vec::with_capacity(self.convs.len());
        let (mut h, mut w) = (self.input_height, self.input_width);
        for (i, c) in self.convs.iter().enumerate() {
            if c.kernel == 0 || c.stride == 0 || c.out_channels == 0 {
                return Err(NnError::Architecture(format!("conv {i} has a zero parameter")));
            }
            if h < c.kernel || w < c.kernel {
                return Err(NnError::Architecture(format!(
                    "conv {i}: kernel {} larger than {h}x{w} input",
                    c.kernel
                )));
            }
            h = (h - c.kernel) / c.stride + 1;
            w = (w - c.kernel) / c.stride + 1;
            shapes.push((c.out_channels, h, w));
        }
        Ok(shapes)
    }

    pub fn parameter_count(&self) -> Result<usize, NnError> {
        let layers = build_layer_kinds(self)?;
        Ok(layers.iter().map(|k| k.weight_len() + k.bias_len()).sum())
    }
}

/// Compact text form, e.g. `21x21:c8k3s2,c16k3s1:d64:a5`.
impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}:", self.input_height, self.input_width)?;
        let convs: Vec<String> = self
            .convs
            .iter()
            .map(|c| format!("c{}k{}s{}", c.out_channels, c.kernel, c.stride))
            .collect();
        let dense: Vec<String> = self.dense_hidden.iter().map(|d| format!("d{d}")).collect();
        write!(f, "{}:{}:a{}", convs.join(","), dense.join(","), self.outputs)
    }
}

impl FromStr for Architecture {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NnError::Architecture(format!("cannot parse architecture `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        let [dims, convs, dense, outputs] = parts.as_slice() else {
            return Err(bad());
        };
        let (h, w) = dims.split_once('x').ok_or_else(bad)?;
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad());
        let convs = convs
            .split(',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                let t = t.strip_prefix('c').ok_or_else(bad)?;
                let (ch, rest) = t.split_once('k').ok_or_else(bad)?;
                let (k, st) = rest.split_once('s').ok_or_else(bad)?;
                Ok(ConvSpec { out_channels: num(ch)?, kernel: num(k)?, stride: num(st)? })
            })
            .collect::<Result<Vec<_>, NnError>>()?;
        let dense_hidden = dense
            .split(',')
            .filter(|t| !t.is_empty())
            .map(|t| num(t.strip_prefix('d').ok_or_else(bad)?))
            .collect::<Result<Vec<_>, NnError>>()?;
        Ok(Self {
            input_height: num(h)?,
            input_width: num(w)?,
            convs,
            dense_hidden,
            outputs: num(outputs.strip_prefix('a').ok_or_else(bad)?)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        in_h: usize,
        in_w: usize,
        out_h: usize,
        out_w: usize,
    },
    Dense {
        inputs: usize,
        outputs: usize,
    },
}

impl LayerKind {
    pub fn weight_len(&self) -> usize {
        match *self {
            LayerKind::Conv { in_channels, out_channels, kernel, .. } => out_channels * in_channels * kernel * kernel,
            LayerKind::Dense { inputs, outputs } => inputs * outputs,
        }
    }

    pub fn bias_len(&self) -> usize {
        match *self {
            LayerKind::Conv { out_channels, .. } => out_channels,
            LayerKind::Dense { outputs, .. } => outputs,
        }
    }

    pub fn input_len(&self) -> usize {
        match *self {
            LayerKind::Conv { in_channels, in_h, in_w, .. } => in_channels * in_h * in_w,
            LayerKind::Dense { inputs, .. } => inputs,
        }
    }

    pub fn output_len(&self) -> usize {
        match *self {
            LayerKind::Conv { out_channels, out_h, out_w, .. } => out_channels * out_h * out_w,
            LayerKind::Dense { outputs, .. } => outputs,
        }
    }

    /// Weight tensor dims as stored in checkpoints.
    pub fn weight_dims(&self) -> Vec<usize> {
        match *self {
            LayerKind::Conv { in_channels, out_channels, kernel, .. } => {
                vec![out_channels, in_channels, kernel, kernel]
            }
            LayerKind::Dense { inputs, outputs } => vec![outputs, inputs],
        }
    }

    fn fan_in(&self) -> usize {
        match *self {
            LayerKind::Conv { in_channels, kernel, .. } => in_channels * kernel * kernel,
            LayerKind::Dense { inputs, .. } => inputs,
        }
    }
}

fn build_layer_kinds(arch: &Architecture) -> Result<Vec<LayerKind>, NnError> {
    if arch.input_height == 0 || arch.input_width == 0 || arch.outputs == 0 {
        return Err(NnError::Architecture("input and output sizes must be positive".into()));
    }
    let shapes = arch.conv_shapes()?;
    let mut kinds = Vec::new();
    let (mut ch, mut h, mut w) = (1, arch.input_height, arch.input_width);
    for (spec, &(oc, oh, ow)) in arch.convs.iter().zip(&shapes) {
        kinds.push(LayerKind::Conv {
            in_channels: ch,
            out_channels: oc,
            kernel: spec.kernel,
            stride: spec.stride,
            in_h: h,
            in_w: w,
            out_h: oh,
            out_w: ow,
        });
        (ch, h, w) = (oc, oh, ow);
    }
    let mut width = ch * h * w;
    for &hidden in &arch.dense_hidden {
        if hidden == 0 {
            return Err(NnError::Architecture("dense layer width must be positive".into()));
        }
        kinds.push(LayerKind::Dense { inputs: width, outputs: hidden });
        width = hidden;
    }
    kinds.push(LayerKind::Dense { inputs: width, outputs: arch.outputs });
    Ok(kinds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub kind: LayerKind,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

/// Per-layer gradient buffers congruent with the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub weight: Vec<Vec<T>>,
    pub bias: Vec<Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn scale(&mut self, s: T) {
        for g in self.weight.iter_mut().chain(self.bias.iter_mut()) {
            for v in g.iter_mut() {
                *v = *v * s;
            }
        }
    }

    pub fn first_non_finite(&self) -> Option<T> {
        self.weight
            .iter()
            .chain(self.bias.iter())
            .flat_map(|g| g.iter())
            .find(|v| !v.is_finite())
            .copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    arch: Architecture,
    layers: Vec<Layer<T>>,
}

pub type QNetwork = Network<f32>;

impl<T: Scalar> Network<T> {
    /// He-uniform weights, zero biases; deterministic in `seed`.
    pub fn new(arch: Architecture, seed: u64) -> Result<Self, NnError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = build_layer_kinds(&arch)?
            .into_iter()
            .map(|kind| {
                let limit = (6.0 / kind.fan_in() as f64).sqrt();
                let weight = (0..kind.weight_len())
                    .map(|_| T::of_f64(rng.random_range(-limit..limit)))
                    .collect();
                Layer { kind, weight, bias: vec![T::zero(); kind.bias_len()] }
            })
            .collect();
        Ok(Self { arch, layers })
    }

    pub fn zeros(arch: Architecture) -> Result<Self, NnError> {
        let layers = build_layer_kinds(&arch)?
            .into_iter()
            .map(|kind| Layer { kind, weight: vec![T::zero(); kind.weight_len()], bias: vec![T::zero(); kind.bias_len()] })
            .collect();
        Ok(Self { arch, layers })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn input_len(&self) -> usize {
        self.arch.input_height * self.arch.input_width
    }

    pub fn output_len(&self) -> usize {
        self.arch.outputs
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            arch: self.arch.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    kind: l.kind,
                    weight: l.weight.iter().map(|v| U::of_f64(v.as_f64())).collect(),
                    bias: l.bias.iter().map(|v| U::of_f64(v.as_f64())).collect(),
                })
                .collect(),
        }
    }

    pub fn zero_gradients(&self) -> Gradients<T> {
        Gradients {
            weight: self.layers.iter().map(|l| vec![T::zero(); l.weight.len()]).collect(),
            bias: self.layers.iter().map(|l| vec![T::zero(); l.bias.len()]).collect(),
        }
    }

    pub fn forward(&self, input: &[T]) -> Result<Vec<T>, NnError> {
        Ok(self.forward_trace(input)?.pop().expect("at least one layer"))
    }

    /// Activations of every layer, input first. Hidden activations are post-ReLU.
    pub fn forward_trace(&self, input: &[T]) -> Result<Vec<Vec<T>>, NnError> {
        if input.len() != self.input_len() {
            return Err(NnError::InputShape { expected: self.input_len(), got: input.len() });
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = layer_forward(layer, acts.last().expect("non-empty"));
            if i != last {
                for v in out.iter_mut() {
                    if *v < T::zero() {
                        *v = T::zero();
                    }
                }
            }
            acts.push(out);
        }
        Ok(acts)
    }

    /// Adds d(sum_k grad_output[k] * out[k]) / d(params) into `grads`.
    pub fn backward(&self, trace: &[Vec<T>], grad_output: &[T], grads: &mut Gradients<T>) {
        let last = self.layers.len() - 1;
        let mut delta = grad_output.to_vec();
        for i in (0..self.layers.len()).rev() {
            if i != last {
                for (d, a) in delta.iter_mut().zip(&trace[i + 1]) {
                    if *a <= T::zero() {
                        *d = T::zero();
                    }
                }
            }
            let need_input = i > 0;
            delta = layer_backward(
                &self.layers[i],
                &trace[i],
                &delta,
                &mut grads.weight[i],
                &mut grads.bias[i],
                need_input,
            );
        }
    }
}

/// Unrolled so the accumulation vectorizes; the summation order is fixed.
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: T = ca.remainder().iter().zip(cb.remainder()).map(|(&x, &y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

fn axpy<T: Scalar>(y: &mut [T], a: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Unfolds the input into patch-major rows: row `p` holds the `c * k * k`
/// input values under output position `p`, in weight order.
fn im2col<T: Scalar>(kind: &LayerKind, input: &[T]) -> Vec<T> {
    let LayerKind::Conv { in_channels, kernel, stride, in_h, in_w, out_h, out_w, .. } = *kind else {
        unreachable!("im2col on a dense layer")
    };
    let k = in_channels * kernel * kernel;
    let mut col = vec![T::zero(); out_h * out_w * k];
    for (p, patch) in col.chunks_exact_mut(k).enumerate() {
        let (y, x) = (p / out_w, p % out_w);
        for c in 0..in_channels {
            for ky in 0..kernel {
                let src = c * in_h * in_w + (y * stride + ky) * in_w + x * stride;
                let dst = (c * kernel + ky) * kernel;
                patch[dst..dst + kernel].copy_from_slice(&input[src..src + kernel]);
            }
        }
    }
    col
}

fn layer_forward<T: Scalar>(layer: &Layer<T>, input: &[T]) -> Vec<T> {
    match layer.kind {
        LayerKind::Dense { inputs, outputs } => (0..outputs)
            .map(|j| layer.bias[j] + dot(&layer.weight[j * inputs..(j + 1) * inputs], input))
            .collect(),
        LayerKind::Conv { out_channels, out_h, out_w, .. } => {
            let p = out_h * out_w;
            let k = layer.kind.fan_in();
            let col = im2col(&layer.kind, input);
            let mut out = vec![T::zero(); out_channels * p];
            for o in 0..out_channels {
                let w = &layer.weight[o * k..(o + 1) * k];
                for (q, patch) in col.chunks_exact(k).enumerate() {
                    out[o * p + q] = layer.bias[o] + dot(w, patch);
                }
            }
            out
        }
    }
}

/// Accumulates parameter gradients and returns the gradient w.r.t. the layer input.
fn layer_backward<T: Scalar>(
    layer: &Layer<T>,
    input: &[T],
    delta: &[T],
    gw: &mut [T],
    gb: &mut [T],
    need_input: bool,
) -> Vec<T> {
    let mut gin = if need_input { vec![T::zero(); layer.kind.input_len()] } else { Vec::new() };
    match layer.kind {
        LayerKind::Dense { inputs, outputs } => {
            for j in 0..outputs {
                let d = delta[j];
                if d == T::zero() {
                    continue;
                }
                gb[j] += d;
                let row = j * inputs..(j + 1) * inputs;
                axpy(&mut gw[row.clone()], d, input);
                if need_input {
                    axpy(&mut gin, d, &layer.weight[row]);
                }
            }
        }
        LayerKind::Conv { in_channels, out_channels, kernel, stride, in_h, in_w, out_h, out_w } => {
            let p = out_h * out_w;
            let k = layer.kind.fan_in();
            let col = im2col(&layer.kind, input);
            let mut dcol = if need_input { vec![T::zero(); p * k] } else { Vec::new() };
            for o in 0..out_channels {
                let w = o * k..(o + 1) * k;
                for q in 0..p {
                    let d = delta[o * p + q];
                    if d == T::zero() {
                        continue;
                    }
                    gb[o] += d;
                    axpy(&mut gw[w.clone()], d, &col[q * k..(q + 1) * k]);
                    if need_input {
                        axpy(&mut dcol[q * k..(q + 1) * k], d, &layer.weight[w.clone()]);
                    }
                }
            }
            if need_input {
                for (q, patch) in dcol.chunks_exact(k).enumerate() {
                    let (y, x) = (q / out_w, q % out_w);
                    for c in 0..in_channels {
                        for ky in 0..kernel {
                            let dst = c * in_h * in_w + (y * stride + ky) * in_w + x * stride;
                            let src = (c * kernel + ky) * kernel;
                            axpy(&mut gin[dst..dst + kernel], T::one(), &patch[src..src + kernel]);
                        }
                    }
                }
            }
        }
    }
    gin
}
