use rand::Rng;

use super::{prefixed, Activation, Layer, Param};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{gemv_acc, gemv_t_acc, outer_acc, Tensor};

struct DenseCache<T> {
    input: Tensor<T>,
    pre: Vec<T>,
    out: Vec<T>,
}

/// Affine map plus activation, applied to every row of its input.
///
/// A 1-D input of length `in` gives a 1-D output; a `rows × in` input gives
/// `rows × out`, which is how per-time-step projections are expressed.
pub struct Dense<T> {
    pub weight: Param<T>,
    pub bias: Param<T>,
    pub activation: Activation,
    cache: Option<DenseCache<T>>,
}

impl<T: Scalar> Dense<T> {
    pub fn new<R: Rng + ?Sized>(
        prefix: &str,
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        Self {
            weight: Param::glorot(prefixed(prefix, "weight"), outputs, inputs, rng),
            bias: Param::zeros(prefixed(prefix, "bias"), &[outputs]),
            activation,
            cache: None,
        }
    }

    pub fn from_parts(weight: Tensor<T>, bias: Vec<T>, activation: Activation) -> Result<Self> {
        if weight.shape().len() != 2 || weight.rows() != bias.len() {
            return Err(Error::shape("dense bias", &[weight.rows()], &[bias.len()]));
        }
        Ok(Self {
            weight: Param::new("weight", weight),
            bias: Param::new("bias", Tensor::vector(bias)),
            activation,
            cache: None,
        })
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.value.rows()
    }

    fn row_count(&self, input: &Tensor<T>) -> Result<usize> {
        let ok = match input.shape() {
            [n] => *n == self.inputs(),
            [_, n] => *n == self.inputs(),
            _ => false,
        };
        if !ok {
            return Err(Error::shape("dense input", &[self.inputs()], input.shape()));
        }
        Ok(if input.shape().len() == 1 { 1 } else { input.rows() })
    }
}

impl<T: Scalar> Layer<T> for Dense<T> {
    fn kind(&self) -> &'static str {
        "dense"
    }

    fn forward(&mut self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let rows = self.row_count(input)?;
        let (nin, nout) = (self.inputs(), self.outputs());
        let w = self.weight.value.data();
        let b = self.bias.value.data();
        let mut pre = Vec::with_capacity(rows * nout);
        for r in 0..rows {
            let x = &input.data()[r * nin..(r + 1) * nin];
            let start = pre.len();
            pre.extend_from_slice(b);
            gemv_acc(w, nin, x, &mut pre[start..]);
        }
        let out: Vec<T> = pre.iter().map(|&z| self.activation.apply(z)).collect();
        let shape: Vec<usize> = if input.shape().len() == 1 {
            vec![nout]
        } else {
            vec![rows, nout]
        };
        let result = Tensor::from_vec(&shape, out.clone())?;
        self.cache = Some(DenseCache {
            input: input.clone(),
            pre,
            out,
        });
        Ok(result)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let cache = self.cache.take().ok_or(Error::NoForward("dense"))?;
        if grad_out.len() != cache.out.len() {
            return Err(Error::shape("dense grad", &[cache.out.len()], grad_out.shape()));
        }
        let (nin, nout) = (self.inputs(), self.outputs());
        let rows = cache.out.len() / nout;
        let mut dx = Tensor::zeros(cache.input.shape());
        let mut dpre = vec![T::zero(); nout];
        for r in 0..rows {
            for k in 0..nout {
                let i = r * nout + k;
                dpre[k] = grad_out.data()[i] * self.activation.derivative(cache.pre[i], cache.out[i]);
            }
            let x = &cache.input.data()[r * nin..(r + 1) * nin];
            outer_acc(self.weight.grad.data_mut(), nin, &dpre, x);
            for (g, &d) in self.bias.grad.data_mut().iter_mut().zip(&dpre) {
                *g += d;
            }
            gemv_t_acc(
                self.weight.value.data(),
                nin,
                &dpre,
                &mut dx.data_mut()[r * nin..(r + 1) * nin],
            );
        }
        Ok(dx)
    }

    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.weight, &mut self.bias]
    }

    fn activation_pattern(&self) -> Vec<bool> {
        match (&self.cache, self.activation.is_piecewise_linear()) {
            (Some(c), true) => c.pre.iter().map(|&z| z > T::zero()).collect(),
            _ => Vec::new(),
        }
    }
}
