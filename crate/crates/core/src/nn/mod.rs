//! Convolutional Q-network written from scratch: forward/backward passes,
//! Adam, Huber loss, finite-difference gradient checking and a versioned
//! binary checkpoint format.

mod checkpoint;
mod gradcheck;
mod network;
mod optim;

pub use checkpoint::{
    adam_from_tensors, adam_tensors, decode_checkpoint, encode_checkpoint, load_checkpoint, network_from_tensors,
    network_tensors, save_checkpoint, CheckpointError, Metadata, Tensor, TensorMap, CHECKPOINT_MAGIC,
};
pub use gradcheck::{gradient_check, gradient_check_report, GradCheckEntry, GradCheckReport};
pub use network::{Architecture, ConvSpec, Gradients, Layer, LayerKind, Network, QNetwork};
pub use optim::{huber, huber_grad, train_step, Adam, AdamConfig, LossSpec, TrainSample};

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::Float;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("input has {got} values, network expects {expected}")]
    InputShape { expected: usize, got: usize },
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("empty training batch")]
    EmptyBatch,
    #[error("action index {index} out of range for {outputs} outputs")]
    ActionIndex { index: usize, outputs: usize },
    #[error("non-finite {what} in training step (sample {sample:?}, value {value})")]
    NonFinite { what: &'static str, sample: Option<usize>, value: f64 },
}

/// Floating-point element type of a network.
pub trait Scalar: Float + AddAssign + Sum + Debug + Send + Sync + 'static {
    fn of_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    fn of_f64(v: f64) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn of_f64(v: f64) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
}
