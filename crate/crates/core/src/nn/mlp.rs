use rand::Rng;

use super::{prefixed, Activation, Dense, Layer, Param};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Fully connected network. `widths[0]` is the input size, the last entry
/// the output size; hidden layers use `hidden_activation`, the output is linear.
pub struct Mlp<T> {
    pub layers: Vec<Dense<T>>,
}

impl<T: Scalar> Mlp<T> {
    pub fn new<R: Rng + ?Sized>(
        prefix: &str,
        widths: &[usize],
        hidden_activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::Config(format!(
                "mlp widths need at least two positive entries, got {widths:?}"
            )));
        }
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last {
                    Activation::Identity
                } else {
                    hidden_activation
                };
                Dense::new(&prefixed(prefix, &format!("layer{i}")), w[0], w[1], act, rng)
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].inputs()];
        w.extend(self.layers.iter().map(Dense::outputs));
        w
    }
}

impl<T: Scalar> Layer<T> for Mlp<T> {
    fn kind(&self) -> &'static str {
        "mlp"
    }

    fn forward(&mut self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let mut x = input.clone();
        for layer in &mut self.layers {
            x = layer.forward(&x)?;
        }
        Ok(x)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = grad_out.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    fn params(&self) -> Vec<&Param<T>> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    fn activation_pattern(&self) -> Vec<bool> {
        self.layers.iter().flat_map(|l| l.activation_pattern()).collect()
    }
}
