//! Temporal convolutional feature extractor: residual blocks of dilated
//! causal convolutions, a ReLU over the skip sum of block outputs, and a
//! ReLU hidden projection applied at every time step.

use rand::Rng;

use super::{prefixed, Activation, Dense, DilatedConvLayer, Layer, Param};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{gemv_acc, gemv_t_acc, outer_acc, Tensor};

/// One dilated layer with its residual update `s' = s + V · conv(s) + e`.
pub struct ResidualUnit<T> {
    pub conv: DilatedConvLayer<T>,
    pub v: Param<T>,
    pub e: Param<T>,
    conv_out: Option<Tensor<T>>,
}

impl<T: Scalar> ResidualUnit<T> {
    pub fn from_parts(conv: DilatedConvLayer<T>, v: Tensor<T>, e: Vec<T>) -> Result<Self> {
        let c = conv.channels_out();
        if v.shape() != [e.len(), c] {
            return Err(Error::shape("residual projection", &[e.len(), c], v.shape()));
        }
        Ok(Self {
            conv,
            v: Param::new("v", v),
            e: Param::new("e", Tensor::vector(e)),
            conv_out: None,
        })
    }
}

/// A residual block. When the block input has fewer channels than the
/// residual stream, a bias-free 1×1 projection lifts it first.
pub struct ResidualBlock<T> {
    pub lift: Option<Param<T>>,
    pub units: Vec<ResidualUnit<T>>,
    input: Option<Tensor<T>>,
}

impl<T: Scalar> ResidualBlock<T> {
    pub fn new<R: Rng + ?Sized>(
        prefix: &str,
        channels_in: usize,
        channels: usize,
        dilations: &[usize],
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let lift =
            (channels_in != channels).then(|| Param::glorot(prefixed(prefix, "lift"), channels, channels_in, rng));
        let units = dilations
            .iter()
            .enumerate()
            .map(|(l, &d)| {
                let p = prefixed(prefix, &format!("layer{l}"));
                ResidualUnit {
                    conv: DilatedConvLayer::new(&prefixed(&p, "conv"), channels, channels, d, activation, rng),
                    v: Param::glorot(prefixed(&p, "v"), channels, channels, rng),
                    e: Param::zeros(prefixed(&p, "e"), &[channels]),
                    conv_out: None,
                }
            })
            .collect();
        Self {
            lift,
            units,
            input: None,
        }
    }

    pub fn from_parts(lift: Option<Tensor<T>>, units: Vec<ResidualUnit<T>>) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::Config("a residual block needs at least one layer".into()));
        }
        Ok(Self {
            lift: lift.map(|t| Param::new("lift", t)),
            units,
            input: None,
        })
    }

    pub fn channels(&self) -> usize {
        self.units[0].e.len()
    }

    pub fn channels_in(&self) -> usize {
        match &self.lift {
            Some(p) => p.value.cols(),
            None => self.channels(),
        }
    }

    /// `Σ (kernel - 1) · dilation` over the block's layers; the kernel has two taps.
    pub fn reach(&self) -> usize {
        self.units.iter().map(|u| u.conv.reach()).sum()
    }
}

impl<T: Scalar> Layer<T> for ResidualBlock<T> {
    fn kind(&self) -> &'static str {
        "residual block"
    }

    /// Returns the block output, which is also the state fed to the skip sum.
    fn forward(&mut self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let cin = self.channels_in();
        let c = self.channels();
        if input.shape().len() != 2 || input.cols() != cin || input.rows() == 0 {
            return Err(Error::shape(
                "residual block input",
                &[input.rows().max(1), cin],
                input.shape(),
            ));
        }
        let steps = input.rows();
        let mut state = match &self.lift {
            Some(p) => {
                let mut s = Tensor::zeros(&[steps, c]);
                for t in 0..steps {
                    gemv_acc(p.value.data(), cin, input.row(t), s.row_mut(t));
                }
                s
            }
            None => input.clone(),
        };
        for unit in &mut self.units {
            let conv_out = unit.conv.forward(&state)?;
            let cc = unit.conv.channels_out();
            for t in 0..steps {
                let row = state.row_mut(t);
                for (x, &e) in row.iter_mut().zip(unit.e.value.data()) {
                    *x += e;
                }
                gemv_acc(unit.v.value.data(), cc, conv_out.row(t), row);
            }
            unit.conv_out = Some(conv_out);
        }
        self.input = Some(input.clone());
        Ok(state)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let input = self.input.take().ok_or(Error::NoForward("residual block"))?;
        let steps = input.rows();
        grad_out.expect_shape("residual block grad", &[steps, self.channels()])?;
        let mut g = grad_out.clone();
        for unit in self.units.iter_mut().rev() {
            let conv_out = unit.conv_out.take().ok_or(Error::NoForward("residual block"))?;
            let cc = unit.conv.channels_out();
            let mut d_conv = Tensor::zeros(&[steps, cc]);
            for t in 0..steps {
                let gt = g.row(t);
                for (de, &x) in unit.e.grad.data_mut().iter_mut().zip(gt) {
                    *de += x;
                }
                outer_acc(unit.v.grad.data_mut(), cc, gt, conv_out.row(t));
                gemv_t_acc(unit.v.value.data(), cc, gt, d_conv.row_mut(t));
            }
            let through_conv = unit.conv.backward(&d_conv)?;
            for (a, &b) in g.data_mut().iter_mut().zip(through_conv.data()) {
                *a += b;
            }
        }
        match &mut self.lift {
            Some(p) => {
                let cin = p.value.cols();
                let mut dx = Tensor::zeros(&[steps, cin]);
                for t in 0..steps {
                    outer_acc(p.grad.data_mut(), cin, g.row(t), input.row(t));
                    gemv_t_acc(p.value.data(), cin, g.row(t), dx.row_mut(t));
                }
                Ok(dx)
            }
            None => Ok(g),
        }
    }

    fn params(&self) -> Vec<&Param<T>> {
        let mut out: Vec<&Param<T>> = self.lift.iter().collect();
        for u in &self.units {
            out.extend(u.conv.params());
            out.push(&u.v);
            out.push(&u.e);
        }
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut out: Vec<&mut Param<T>> = self.lift.iter_mut().collect();
        for u in &mut self.units {
            out.extend(u.conv.params_mut());
            out.push(&mut u.v);
            out.push(&mut u.e);
        }
        out
    }

    fn activation_pattern(&self) -> Vec<bool> {
        self.units.iter().flat_map(|u| u.conv.activation_pattern()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcnConfig {
    pub channels_in: usize,
    /// Only two-tap kernels are supported.
    pub kernel_size: usize,
    /// Filters per dilated layer, also the residual stream width.
    pub channels: usize,
    pub dilations: Vec<usize>,
    pub blocks: usize,
    /// Width of the ReLU hidden layer that produces the features.
    pub hidden: usize,
}

impl Default for TcnConfig {
    fn default() -> Self {
        Self {
            channels_in: 1,
            kernel_size: 2,
            channels: 10,
            dilations: vec![1, 2, 4],
            blocks: 1,
            hidden: 10,
        }
    }
}

impl TcnConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.channels_in == 0 || self.channels == 0 || self.hidden == 0 {
            return bad("tcn channel counts must be positive");
        }
        if self.kernel_size != 2 {
            return Err(Error::Config(format!(
                "tcn kernel size must be 2, got {}",
                self.kernel_size
            )));
        }
        if self.blocks == 0 {
            return bad("tcn needs at least one residual block");
        }
        if self.dilations.is_empty() || self.dilations.contains(&0) {
            return bad("tcn dilations must be a non-empty list of positive integers");
        }
        Ok(())
    }

    pub fn receptive_field(&self) -> usize {
        1 + self.blocks * self.dilations.iter().sum::<usize>()
    }
}

/// Residual blocks chained in sequence; their outputs are summed, passed
/// through ReLU and then through a per-step ReLU hidden layer.
pub struct TcnStack<T> {
    pub blocks: Vec<ResidualBlock<T>>,
    pub hidden: Dense<T>,
    skip_sum: Option<Tensor<T>>,
}

impl<T: Scalar> TcnStack<T> {
    pub fn new<R: Rng + ?Sized>(prefix: &str, cfg: &TcnConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let blocks = (0..cfg.blocks)
            .map(|j| {
                let cin = if j == 0 { cfg.channels_in } else { cfg.channels };
                ResidualBlock::new(
                    &prefixed(prefix, &format!("block{j}")),
                    cin,
                    cfg.channels,
                    &cfg.dilations,
                    Activation::Relu,
                    rng,
                )
            })
            .collect();
        let hidden = Dense::new(
            &prefixed(prefix, "hidden"),
            cfg.channels,
            cfg.hidden,
            Activation::Relu,
            rng,
        );
        Ok(Self {
            blocks,
            hidden,
            skip_sum: None,
        })
    }

    pub fn from_parts(blocks: Vec<ResidualBlock<T>>, hidden: Dense<T>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Config("tcn needs at least one residual block".into()));
        }
        Ok(Self {
            blocks,
            hidden,
            skip_sum: None,
        })
    }

    pub fn receptive_field(&self) -> usize {
        1 + self.blocks.iter().map(ResidualBlock::reach).sum::<usize>()
    }

    pub fn features(&self) -> usize {
        self.hidden.outputs()
    }
}

impl<T: Scalar> Layer<T> for TcnStack<T> {
    fn kind(&self) -> &'static str {
        "tcn"
    }

    fn forward(&mut self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let mut x = input.clone();
        let mut sum: Option<Tensor<T>> = None;
        for block in &mut self.blocks {
            x = block.forward(&x)?;
            match &mut sum {
                Some(s) => s.data_mut().iter_mut().zip(x.data()).for_each(|(a, &b)| *a += b),
                None => sum = Some(x.clone()),
            }
        }
        let sum = sum.expect("at least one block");
        let z0 = sum.map(|v| v.max(T::zero()));
        let z1 = self.hidden.forward(&z0)?;
        self.skip_sum = Some(sum);
        Ok(z1)
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let sum = self.skip_sum.take().ok_or(Error::NoForward("tcn"))?;
        let dz0 = self.hidden.backward(grad_out)?;
        let mut dsum = dz0;
        for (d, &s) in dsum.data_mut().iter_mut().zip(sum.data()) {
            if s <= T::zero() {
                *d = T::zero();
            }
        }
        let mut g = dsum.clone();
        for (j, block) in self.blocks.iter_mut().enumerate().rev() {
            let gx = block.backward(&g)?;
            if j == 0 {
                return Ok(gx);
            }
            g = dsum.clone();
            g.data_mut().iter_mut().zip(gx.data()).for_each(|(a, &b)| *a += b);
        }
        unreachable!("at least one block")
    }

    fn params(&self) -> Vec<&Param<T>> {
        let mut out: Vec<&Param<T>> = self.blocks.iter().flat_map(|b| b.params()).collect();
        out.extend(self.hidden.params());
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut out: Vec<&mut Param<T>> = self.blocks.iter_mut().flat_map(|b| b.params_mut()).collect();
        out.extend(self.hidden.params_mut());
        out
    }

    fn activation_pattern(&self) -> Vec<bool> {
        let mut out: Vec<bool> = self.blocks.iter().flat_map(|b| b.activation_pattern()).collect();
        if let Some(s) = &self.skip_sum {
            out.extend(s.data().iter().map(|&v| v > T::zero()));
        }
        out.extend(self.hidden.activation_pattern());
        out
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn scalar(v: f64) -> Tensor<f64> {
        Tensor::from_vec(&[1, 1], vec![v]).unwrap()
    }

    fn unit_block(w: f64, v: f64) -> ResidualBlock<f64> {
        let conv = DilatedConvLayer::from_parts(scalar(w), scalar(w), vec![0.0], 1, Activation::Identity).unwrap();
        let unit = ResidualUnit::from_parts(conv, scalar(v), vec![0.0]).unwrap();
        ResidualBlock::from_parts(None, vec![unit]).unwrap()
    }

    #[test]
    fn residual_adds_projected_conv() {
        let mut b = unit_block(1.0, 1.0);
        let y = b.forward(&Tensor::column(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(y.data(), &[2.0, 5.0, 8.0]);
    }

    #[test]
    fn zero_weights_pass_through() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut b = ResidualBlock::<f64>::new("b", 4, 4, &[1, 2, 4], Activation::Relu, &mut rng);
        for p in b.params_mut() {
            p.value.fill(0.0);
        }
        let x = Tensor::from_fn(9, 4, |i, j| (i as f64 - 3.0) * 0.5 + j as f64);
        assert_eq!(b.forward(&x).unwrap(), x);
    }

    #[test]
    fn receptive_field_of_default_stack() {
        let cfg = TcnConfig::default();
        assert_eq!(cfg.receptive_field(), 8);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let stack = TcnStack::<f64>::new("tcn", &cfg, &mut rng).unwrap();
        assert_eq!(stack.receptive_field(), 8);
        assert_eq!(stack.features(), 10);
    }

    #[test]
    fn zero_stack_outputs_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut stack = TcnStack::<f64>::new("tcn", &TcnConfig::default(), &mut rng).unwrap();
        for p in stack.params_mut() {
            p.value.fill(0.0);
        }
        let x = Tensor::column(&(0..20).map(|i| (i as f64).cos()).collect::<Vec<_>>());
        let y = stack.forward(&x).unwrap();
        assert_eq!(y.shape(), &[20, 10]);
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shift_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut stack = TcnStack::<f64>::new("tcn", &TcnConfig::default(), &mut rng).unwrap();
        let x: Vec<f64> = (0..20).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.4).collect();
        let s = 3;
        let mut shifted = vec![0.0; 20];
        shifted[s..].copy_from_slice(&x[..20 - s]);
        // Biases start at zero, so a zero prefix keeps every state at zero.
        let b = stack.forward(&Tensor::column(&shifted)).unwrap();
        let c = stack.forward(&Tensor::column(&x)).unwrap();
        for t in 0..s {
            assert!(b.row(t).iter().all(|&v| v == 0.0));
        }
        for t in s..20 {
            assert_eq!(b.row(t), c.row(t - s));
        }
    }
}
