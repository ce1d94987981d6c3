use rand::Rng;

use super::{glorot_limit, prefixed, Activation, Layer, Param};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{gemv_acc, gemv_t_acc, outer_acc, Tensor};

struct ConvCache<T> {
    input: Tensor<T>,
    pre: Vec<T>,
    out: Vec<T>,
}

/// Two-tap dilated causal convolution over a `time × channels` sequence:
/// `out[t] = f(W1 · x[t - d] + W2 · x[t] + b)`, with `x[t - d] = 0` before the start.
pub struct DilatedConvLayer<T> {
    /// Tap at offset `-dilation`, `channels_out × channels_in`.
    pub w1: Param<T>,
    /// Tap at offset 0.
    pub w2: Param<T>,
    pub bias: Param<T>,
    pub dilation: usize,
    pub activation: Activation,
    cache: Option<ConvCache<T>>,
}

impl<T: Scalar> DilatedConvLayer<T> {
    pub fn new<R: Rng + ?Sized>(
        prefix: &str,
        channels_in: usize,
        channels_out: usize,
        dilation: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(dilation >= 1, "dilation must be at least 1");
        // Fan-in covers both taps.
        let limit = glorot_limit(2 * channels_in, channels_out);
        Self {
            w1: Param::uniform(prefixed(prefix, "w1"), channels_out, channels_in, limit, rng),
            w2: Param::uniform(prefixed(prefix, "w2"), channels_out, channels_in, limit, rng),
            bias: Param::zeros(prefixed(prefix, "bias"), &[channels_out]),
            dilation,
            activation,
            cache: None,
        }
    }

    pub fn from_parts(
        w1: Tensor<T>,
        w2: Tensor<T>,
        bias: Vec<T>,
        dilation: usize,
        activation: Activation,
    ) -> Result<Self> {
        if dilation == 0 {
            return Err(Error::Config("dilation must be at least 1".into()));
        }
        if w1.shape() != w2.shape() || w1.shape().len() != 2 {
            return Err(Error::shape("conv taps", w1.shape(), w2.shape()));
        }
        if bias.len() != w1.rows() {
            return Err(Error::shape("conv bias", &[w1.rows()], &[bias.len()]));
        }
        Ok(Self {
            w1: Param::new("w1", w1),
            w2: Param::new("w2", w2),
            bias: Param::new("bias", Tensor::vector(bias)),
            dilation,
            activation,
            cache: None,
        })
    }

    pub fn channels_in(&self) -> usize {
        self.w1.value.cols()
    }

    pub fn channels_out(&self) -> usize {
        self.w1.value.rows()
    }

    /// Extra past steps this layer can see.
    pub fn reach(&self) -> usize {
        self.dilation
    }
}

impl<T: Scalar> Layer<T> for DilatedConvLayer<T> {
    fn kind(&self) -> &'static str {
        "dilated conv"
    }

    fn forward(&mut self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let (cin, cout, d) = (self.channels_in(), self.channels_out(), self.dilation);
        if input.shape().len() != 2 || input.cols() != cin || input.rows() == 0 {
            return Err(Error::shape("conv input", &[input.rows().max(1), cin], input.shape()));
        }
        let steps = input.rows();
        let mut pre = Vec::with_capacity(steps * cout);
        for t in 0..steps {
            let start = pre.len();
            pre.extend_from_slice(self.bias.value.data());
            let acc = &mut pre[start..];
            gemv_acc(self.w2.value.data(), cin, input.row(t), acc);
            if t >= d {
                gemv_acc(self.w1.value.data(), cin, input.row(t - d), acc);
            }
        }
        let out: Vec<T> = pre.iter().map(|&z| self.activation.apply(z)).collect();
        let result = Tensor::from_vec(&[steps, cout], out.clone())?;
        self.cache = Some(ConvCache {
            input: input.clone(),
            pre,
            out,
        });
        Ok(result)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let cache = self.cache.take().ok_or(Error::NoForward("dilated conv"))?;
        let (cin, cout, d) = (self.channels_in(), self.channels_out(), self.dilation);
        let steps = cache.input.rows();
        grad_out.expect_shape("conv grad", &[steps, cout])?;
        let mut dx = Tensor::zeros(&[steps, cin]);
        let mut dpre = vec![T::zero(); cout];
        for t in 0..steps {
            for k in 0..cout {
                let i = t * cout + k;
                dpre[k] = grad_out.data()[i] * self.activation.derivative(cache.pre[i], cache.out[i]);
            }
            outer_acc(self.w2.grad.data_mut(), cin, &dpre, cache.input.row(t));
            gemv_t_acc(self.w2.value.data(), cin, &dpre, dx.row_mut(t));
            if t >= d {
                outer_acc(self.w1.grad.data_mut(), cin, &dpre, cache.input.row(t - d));
                gemv_t_acc(self.w1.value.data(), cin, &dpre, dx.row_mut(t - d));
            }
            for (g, &v) in self.bias.grad.data_mut().iter_mut().zip(&dpre) {
                *g += v;
            }
        }
        Ok(dx)
    }

    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.w1, &self.w2, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.w1, &mut self.w2, &mut self.bias]
    }

    fn activation_pattern(&self) -> Vec<bool> {
        match (&self.cache, self.activation.is_piecewise_linear()) {
            (Some(c), true) => c.pre.iter().map(|&z| z > T::zero()).collect(),
            _ => Vec::new(),
        }
    }
}
