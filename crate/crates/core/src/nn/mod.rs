//! Hand-written layers with forward and reverse-mode passes.
//!
//! Every layer records what its backward pass needs during `forward` and
//! consumes that record in `backward`, accumulating parameter gradients.

mod activation;
mod conv;
mod dense;
mod gradcheck;
mod gru;
mod io;
mod mlp;
mod model;
mod rnn;
mod tcn;

use rand::Rng;

pub use activation::{softmax, Activation};
pub use conv::DilatedConvLayer;
pub use dense::Dense;
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport, ParamCheck};
pub use gru::{GruCell, GruLayer, GruStep};
pub(crate) use io::assign_params as io_assign;
pub use io::{load_params, read_tensors, save_params, write_tensors, FORMAT_VERSION};
pub use mlp::Mlp;
pub use model::{ForecastNet, ModelKind, NetSpec};
pub use rnn::{RnnCell, RnnLayer};
pub use tcn::{ResidualBlock, TcnConfig, TcnStack};

use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// A trainable tensor with its gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
}

impl<T: Scalar> Param<T> {
    pub fn new(name: impl Into<String>, value: Tensor<T>) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Self {
        Self::new(name, Tensor::zeros(shape))
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))` for a `rows × cols` matrix.
    pub fn glorot<R: Rng + ?Sized>(name: impl Into<String>, rows: usize, cols: usize, rng: &mut R) -> Self {
        Self::uniform(name, rows, cols, glorot_limit(cols, rows), rng)
    }

    pub fn uniform<R: Rng + ?Sized>(
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        limit: f64,
        rng: &mut R,
    ) -> Self {
        let value = Tensor::from_fn(rows, cols, |_, _| T::lit(rng.random_range(-limit..=limit)));
        Self::new(name, value)
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::zero());
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

/// A differentiable map with owned parameters.
pub trait Layer<T: Scalar> {
    /// Short name used in error messages.
    fn kind(&self) -> &'static str;

    /// Computes the output and records the state needed by [`Layer::backward`].
    fn forward(&mut self, input: &Tensor<T>) -> Result<Tensor<T>>;

    /// Consumes the recorded forward state, adds parameter gradients and
    /// returns the gradient with respect to the input.
    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>>;

    fn params(&self) -> Vec<&Param<T>>;

    fn params_mut(&mut self) -> Vec<&mut Param<T>>;

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// On/off state of every piecewise-linear unit in the last forward pass.
    /// Gradient checks use it to skip probes that straddle a kink.
    fn activation_pattern(&self) -> Vec<bool> {
        Vec::new()
    }
}

pub(crate) fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

pub(crate) fn prefixed(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}
