//! Binary checkpoint: magic, length-prefixed metadata, then named f32 tensors.
//!
//! ```text
//! "DQNAV1\n"
//! u32 metadata_len, then metadata_len bytes of records: u32 key_len, key, u32 value_len, value
//! repeated: u32 name_len, name, u32 ndims, ndims x u32 dims, prod(dims) x f32
//! ```
//! All integers and reals are little-endian.

use std::collections::BTreeMap;

use thiserror::Error;

use super::network::{Architecture, QNetwork};
use super::optim::{Adam, AdamConfig};

pub const CHECKPOINT_MAGIC: &[u8; 7] = b"DQNAV1\n";
const MAGIC_STEM: &[u8] = b"DQNAV";

pub type Metadata = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(name: impl Into<String>, dims: Vec<usize>, data: Vec<f32>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        Self { name: name.into(), dims, data }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckpointError {
    #[error("not a checkpoint file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint version `{0}`")]
    UnsupportedVersion(String),
    #[error("truncated checkpoint: {0}")]
    Truncated(&'static str),
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error("missing tensor `{0}`")]
    MissingTensor(String),
    #[error("tensor `{name}` has shape {got:?}, expected {expected:?}")]
    ShapeMismatch { name: String, expected: Vec<usize>, got: Vec<usize> },
    #[error("missing metadata key `{0}`")]
    MissingKey(String),
}

pub fn encode_checkpoint(meta: &Metadata, tensors: &[Tensor]) -> Vec<u8> {
    let mut block = Vec::new();
    for (k, v) in meta {
        put_bytes(&mut block, k.as_bytes());
        put_bytes(&mut block, v.as_bytes());
    }
    let payload: usize = tensors.iter().map(|t| 8 + t.name.len() + 4 * (t.dims.len() + t.data.len())).sum();
    let mut out = Vec::with_capacity(CHECKPOINT_MAGIC.len() + 4 + block.len() + payload);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    put_bytes(&mut out, &block);
    for t in tensors {
        put_bytes(&mut out, t.name.as_bytes());
        put_u32(&mut out, t.dims.len());
        for &d in &t.dims {
            put_u32(&mut out, d);
        }
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(Metadata, Vec<Tensor>), CheckpointError> {
    if bytes.len() < CHECKPOINT_MAGIC.len() || &bytes[..CHECKPOINT_MAGIC.len()] != CHECKPOINT_MAGIC {
        if bytes.starts_with(MAGIC_STEM) {
            let end = bytes.iter().position(|&b| b == b'\n').unwrap_or(bytes.len().min(16));
            return Err(CheckpointError::UnsupportedVersion(String::from_utf8_lossy(&bytes[..end]).into_owned()));
        }
        return Err(CheckpointError::BadMagic);
    }
    let mut r = Reader { bytes, pos: CHECKPOINT_MAGIC.len() };
    let block = r.bytes("metadata block")?;
    let mut mr = Reader { bytes: block, pos: 0 };
    let mut meta = Metadata::new();
    while mr.pos < block.len() {
        let k = utf8(mr.bytes("metadata key")?)?;
        let v = utf8(mr.bytes("metadata value")?)?;
        meta.insert(k, v);
    }
    let mut tensors = Vec::new();
    while r.pos < bytes.len() {
        let name = utf8(r.bytes("tensor name")?)?;
        let ndims = r.u32("tensor rank")?;
        let dims = (0..ndims).map(|_| r.u32("tensor dims")).collect::<Result<Vec<_>, _>>()?;
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| CheckpointError::Malformed(format!("tensor `{name}` is too large")))?;
        let raw = r.take(count.checked_mul(4).ok_or(CheckpointError::Truncated("tensor data"))?, "tensor data")?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        tensors.push(Tensor { name, dims, data });
    }
    if let Some(n) = meta.get("tensor_count") {
        if n.parse::<usize>().ok() != Some(tensors.len()) {
            return Err(CheckpointError::Truncated("fewer tensors than declared"));
        }
    }
    Ok((meta, tensors))
}

/// Parameter tensors `<prefix>layer<i>.weight` / `.bias`.
pub fn network_tensors(net: &QNetwork, prefix: &str) -> Vec<Tensor> {
    let mut out = Vec::new();
    for (i, l) in net.layers().iter().enumerate() {
        out.push(Tensor::new(format!("{prefix}layer{i}.weight"), l.kind.weight_dims(), l.weight.clone()));
        out.push(Tensor::new(format!("{prefix}layer{i}.bias"), vec![l.kind.bias_len()], l.bias.clone()));
    }
    out
}

/// Rebuilds a network of architecture `arch` from tensors written by [`network_tensors`].
pub fn network_from_tensors(arch: Architecture, tensors: &TensorMap<'_>, prefix: &str) -> Result<QNetwork, CheckpointError> {
    let mut net = QNetwork::zeros(arch).map_err(|e| CheckpointError::Malformed(e.to_string()))?;
    for (i, l) in net.layers_mut().iter_mut().enumerate() {
        l.weight = tensors.take(&format!("{prefix}layer{i}.weight"), &l.kind.weight_dims())?;
        l.bias = tensors.take(&format!("{prefix}layer{i}.bias"), &[l.kind.bias_len()])?;
    }
    Ok(net)
}

pub fn adam_tensors(net: &QNetwork, opt: &Adam, prefix: &str, meta: &mut Metadata) -> Vec<Tensor> {
    let c = opt.config;
    meta.insert(format!("{prefix}adam.step_size"), c.step_size.to_string());
    meta.insert(format!("{prefix}adam.beta1"), c.beta1.to_string());
    meta.insert(format!("{prefix}adam.beta2"), c.beta2.to_string());
    meta.insert(format!("{prefix}adam.epsilon"), c.epsilon.to_string());
    meta.insert(format!("{prefix}adam.step"), opt.step.to_string());
    let mut out = Vec::new();
    for (i, l) in net.layers().iter().enumerate() {
        let wd = l.kind.weight_dims();
        let bd = vec![l.kind.bias_len()];
        out.push(Tensor::new(format!("{prefix}adam.m.layer{i}.weight"), wd.clone(), opt.m_weight[i].clone()));
        out.push(Tensor::new(format!("{prefix}adam.m.layer{i}.bias"), bd.clone(), opt.m_bias[i].clone()));
        out.push(Tensor::new(format!("{prefix}adam.v.layer{i}.weight"), wd, opt.v_weight[i].clone()));
        out.push(Tensor::new(format!("{prefix}adam.v.layer{i}.bias"), bd, opt.v_bias[i].clone()));
    }
    out
}

pub fn adam_from_tensors(net: &QNetwork, tensors: &TensorMap<'_>, prefix: &str, meta: &Metadata) -> Result<Adam, CheckpointError> {
    let key = |k: &str| {
        let full = format!("{prefix}adam.{k}");
        meta.get(&full).cloned().ok_or(CheckpointError::MissingKey(full))
    };
    let real = |k: &str| key(k)?.parse::<f64>().map_err(|_| CheckpointError::Malformed(format!("bad adam.{k}")));
    let config = AdamConfig { step_size: real("step_size")?, beta1: real("beta1")?, beta2: real("beta2")?, epsilon: real("epsilon")? };
    let mut opt = Adam::new(net, config);
    opt.step = key("step")?.parse().map_err(|_| CheckpointError::Malformed("bad adam.step".into()))?;
    for (i, l) in net.layers().iter().enumerate() {
        let wd = l.kind.weight_dims();
        let bd = [l.kind.bias_len()];
        opt.m_weight[i] = tensors.take(&format!("{prefix}adam.m.layer{i}.weight"), &wd)?;
        opt.m_bias[i] = tensors.take(&format!("{prefix}adam.m.layer{i}.bias"), &bd)?;
        opt.v_weight[i] = tensors.take(&format!("{prefix}adam.v.layer{i}.weight"), &wd)?;
        opt.v_bias[i] = tensors.take(&format!("{prefix}adam.v.layer{i}.bias"), &bd)?;
    }
    Ok(opt)
}

/// Name-indexed view over decoded tensors.
pub struct TensorMap<'a>(BTreeMap<&'a str, &'a Tensor>);

impl<'a> TensorMap<'a> {
    pub fn new(tensors: &'a [Tensor]) -> Self {
        Self(tensors.iter().map(|t| (t.name.as_str(), t)).collect())
    }

    pub fn get(&self, name: &str) -> Option<&'a Tensor> {
        self.0.get(name).copied()
    }

    pub fn take(&self, name: &str, dims: &[usize]) -> Result<Vec<f32>, CheckpointError> {
        let t = self.get(name).ok_or_else(|| CheckpointError::MissingTensor(name.to_string()))?;
        if t.dims != dims {
            return Err(CheckpointError::ShapeMismatch { name: name.to_string(), expected: dims.to_vec(), got: t.dims.clone() });
        }
        Ok(t.data.clone())
    }
}

/// Single network plus optimizer. `metadata` is stored alongside the
/// architecture and optimizer scalars.
pub fn save_checkpoint(net: &QNetwork, opt: &Adam, metadata: &Metadata) -> Vec<u8> {
    let mut meta = metadata.clone();
    meta.insert("architecture".into(), net.architecture().to_string());
    let mut tensors = network_tensors(net, "");
    tensors.extend(adam_tensors(net, opt, "", &mut meta));
    meta.insert("tensor_count".into(), tensors.len().to_string());
    encode_checkpoint(&meta, &tensors)
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<(QNetwork, Adam, Metadata), CheckpointError> {
    let (meta, tensors) = decode_checkpoint(bytes)?;
    let arch: Architecture = meta
        .get("architecture")
        .ok_or_else(|| CheckpointError::MissingKey("architecture".into()))?
        .parse()
        .map_err(|e: super::NnError| CheckpointError::Malformed(e.to_string()))?;
    let map = TensorMap::new(&tensors);
    let net = network_from_tensors(arch, &map, "")?;
    let opt = adam_from_tensors(&net, &map, "", &meta)?;
    Ok((net, opt, meta))
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    let v = u32::try_from(v).expect("checkpoint field exceeds u32");
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    put_u32(out, b.len());
    out.extend_from_slice(b);
}

fn utf8(b: &[u8]) -> Result<String, CheckpointError> {
    String::from_utf8(b.to_vec()).map_err(|_| CheckpointError::Malformed("non-utf8 string".into()))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(CheckpointError::Truncated(what))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &'static str) -> Result<usize, CheckpointError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn bytes(&mut self, what: &'static str) -> Result<&'a [u8], CheckpointError> {
        let n = self.u32(what)?;
        self.take(n, what)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{train_step, ConvSpec, LossSpec, TrainSample};

    fn trained() -> (QNetwork, Adam) {
        let arch = Architecture {
            input_height: 8,
            input_width: 8,
            convs: vec![ConvSpec { out_channels: 2, kernel: 3, stride: 2 }],
            dense_hidden: vec![6],
            outputs: 3,
        };
        let mut net = QNetwork::new(arch, 8).unwrap();
        let mut opt = Adam::new(&net, AdamConfig::default());
        let x: Vec<f32> = (0..64).map(|i| i as f32 / 64.0).collect();
        for _ in 0..3 {
            train_step(&mut net, &mut opt, &[TrainSample { obs: &x, action: 2, target: 1.5 }], LossSpec::default()).unwrap();
        }
        (net, opt)
    }

    fn bits(net: &QNetwork) -> Vec<u32> {
        net.layers().iter().flat_map(|l| l.weight.iter().chain(&l.bias)).map(|v| v.to_bits()).collect()
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let (net, opt) = trained();
        let mut meta = Metadata::new();
        meta.insert("episode".into(), "12".into());
        let bytes = save_checkpoint(&net, &opt, &meta);
        assert!(bytes.starts_with(CHECKPOINT_MAGIC));
        let (net2, opt2, meta2) = load_checkpoint(&bytes).unwrap();
        assert_eq!(bits(&net), bits(&net2));
        assert_eq!(opt, opt2);
        assert_eq!(meta2["episode"], "12");
        assert_eq!(save_checkpoint(&net2, &opt2, &meta), bytes);
    }

    #[test]
    fn corrupted_magic() {
        let (net, opt) = trained();
        let mut bytes = save_checkpoint(&net, &opt, &Metadata::new());
        bytes[0] = b'X';
        assert_eq!(load_checkpoint(&bytes).unwrap_err(), CheckpointError::BadMagic);
        let mut bytes = save_checkpoint(&net, &opt, &Metadata::new());
        bytes[5] = b'9';
        assert!(matches!(load_checkpoint(&bytes).unwrap_err(), CheckpointError::UnsupportedVersion(_)));
    }

    #[test]
    fn truncation_detected_everywhere() {
        let (net, opt) = trained();
        let bytes = save_checkpoint(&net, &opt, &Metadata::new());
        for cut in [3, 9, 20, bytes.len() / 2, bytes.len() - 1] {
            assert!(load_checkpoint(&bytes[..cut]).is_err(), "cut at {cut}");
        }
    }

    #[test]
    fn shape_mismatch_reported() {
        let (net, _) = trained();
        let tensors = network_tensors(&net, "");
        let map = TensorMap::new(&tensors);
        let mut other = net.architecture().clone();
        other.dense_hidden = vec![7];
        assert!(matches!(network_from_tensors(other, &map, ""), Err(CheckpointError::ShapeMismatch { .. })));
    }
}
