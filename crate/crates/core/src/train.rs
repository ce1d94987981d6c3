//! Mean-squared-error loss, Adam, and the seeded mini-batch training loop.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{Layer, Param};
use crate::scalar::Scalar;
use crate::series::WindowedDataset;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 60,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.epochs == 0 {
            return fail("train.epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return fail("train.batch_size must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!(
                "train.learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return fail(format!("train.{name} must lie in [0, 1), got {b}"));
            }
        }
        if !(self.epsilon > 0.0) {
            return fail(format!("train.epsilon must be positive, got {}", self.epsilon));
        }
        Ok(())
    }
}

/// `(1/n) Σ (pred - target)²` and its gradient `(2/n)(pred - target)`.
pub fn mse_loss<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<(T, Tensor<T>)> {
    if pred.shape() != target.shape() || pred.is_empty() {
        return Err(Error::shape("mse", target.shape(), pred.shape()));
    }
    let n = T::from_usize_lossy(pred.len());
    let diff: Vec<T> = pred.data().iter().zip(target.data()).map(|(&p, &t)| p - t).collect();
    let loss = diff.iter().map(|&d| d * d).sum::<T>() / n;
    let grad = diff.into_iter().map(|d| T::lit(2.0) * d / n).collect();
    Ok((loss, Tensor::from_vec(pred.shape(), grad)?))
}

/// First and second moment estimates, one pair per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<Tensor<T>>,
    pub v: Vec<Tensor<T>>,
    pub step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &[&mut Param<T>]) -> Self {
        Self {
            m: params.iter().map(|p| Tensor::zeros(p.value.shape())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.value.shape())).collect(),
            step: 0,
        }
    }
}

/// Bias-corrected Adam update, then clears the gradients.
pub fn adam_step<T: Scalar>(params: &mut [&mut Param<T>], state: &mut AdamState<T>, cfg: &TrainConfig) -> Result<()> {
    if state.m.len() != params.len() {
        return Err(Error::shape("adam state", &[params.len()], &[state.m.len()]));
    }
    state.step = state.step.checked_add(1).ok_or(Error::StepOverflow)?;
    let t = i32::try_from(state.step).map_err(|_| Error::StepOverflow)?;
    let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
    let bc1 = T::one() - b1.powi(t);
    let bc2 = T::one() - b2.powi(t);
    let (lr, eps) = (T::lit(cfg.learning_rate), T::lit(cfg.epsilon));
    for ((p, m), v) in params.iter_mut().zip(&mut state.m).zip(&mut state.v) {
        let Param { value, grad, .. } = &mut **p;
        for (((w, &g), mi), vi) in value
            .data_mut()
            .iter_mut()
            .zip(grad.data())
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            *mi = b1 * *mi + (T::one() - b1) * g;
            *vi = b2 * *vi + (T::one() - b2) * g * g;
            let m_hat = *mi / bc1;
            let v_hat = *vi / bc2;
            *w -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        grad.fill(T::zero());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    /// Mean per-sample squared error of each epoch, in training order.
    pub epoch_losses: Vec<f64>,
    pub wall_time: Duration,
    pub seed: u64,
}

impl TrainTrace {
    pub fn final_loss(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }

    /// `epoch,loss` rows, epochs numbered from 1.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epoch,loss")?;
        for (i, l) in self.epoch_losses.iter().enumerate() {
            writeln!(w, "{},{}", i + 1, l)?;
        }
        w.flush()
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
            .map_err(|e| Error::io(path, e))
    }
}

/// Sample order of `epoch`; depends only on the seed and the epoch index.
pub fn epoch_order(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    idx
}

/// Trains `model` on a single-target dataset. The last partial batch is kept;
/// batch gradients are averaged over the batch.
pub fn fit<T: Scalar, M: Layer<T> + ?Sized>(
    model: &mut M,
    dataset: &WindowedDataset<T>,
    cfg: &TrainConfig,
) -> Result<TrainTrace> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::Config("training dataset is empty".into()));
    }
    if dataset.horizons.len() != 1 {
        return Err(Error::Config(format!(
            "fit expects one target column, dataset has {}",
            dataset.horizons.len()
        )));
    }
    let started = Instant::now();
    let n = dataset.num_samples();
    model.zero_grad();
    let mut state = AdamState::new(&model.params_mut());
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let order = epoch_order(n, cfg.seed, epoch);
        let mut total = 0.0;
        for (bi, batch) in order.chunks(cfg.batch_size).enumerate() {
            let scale = T::one() / T::from_usize_lossy(batch.len());
            let mut batch_loss = T::zero();
            for &i in batch {
                let pred = model.forward(&Tensor::column(dataset.input(i)))?;
                let target = Tensor::from_vec(pred.shape(), vec![dataset.target(i, 0)])?;
                let (loss, grad) = mse_loss(&pred, &target)?;
                batch_loss += loss;
                model.backward(&grad.map(|g| g * scale))?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch: epoch + 1,
                    batch: bi + 1,
                });
            }
            total += batch_loss.to_f64_lossy();
            adam_step(&mut model.params_mut(), &mut state, cfg)?;
        }
        epoch_losses.push(total / n as f64);
    }
    Ok(TrainTrace {
        epoch_losses,
        wall_time: started.elapsed(),
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        let p = Tensor::vector(vec![2.0, 4.0]);
        let t = Tensor::vector(vec![1.0, 2.0]);
        let (l, g) = mse_loss(&p, &t).unwrap();
        assert_eq!(l, 2.5);
        assert_eq!(g.data(), &[1.0, 2.0]);
        let (l, g) = mse_loss(&Tensor::vector(vec![3.0]), &Tensor::vector(vec![0.0])).unwrap();
        assert_eq!((l, g.data()[0]), (9.0, 6.0));
        let (l, g) = mse_loss(&p, &p).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.data().iter().all(|&x| x == 0.0));
        assert!(mse_loss(&p, &Tensor::vector(vec![1.0])).is_err());
    }

    #[test]
    fn mse_gradient_matches_differences() {
        let p: Vec<f64> = vec![0.3, -1.2, 2.5, 0.01];
        let t = Tensor::vector(vec![0.0, 1.0, 2.0, -0.5]);
        let (_, g) = mse_loss(&Tensor::vector(p.clone()), &t).unwrap();
        let h = 1e-6;
        for k in 0..p.len() {
            let mut a = p.clone();
            a[k] += h;
            let mut b = p.clone();
            b[k] -= h;
            let num =
                (mse_loss(&Tensor::vector(a), &t).unwrap().0 - mse_loss(&Tensor::vector(b), &t).unwrap().0) / (2.0 * h);
            assert!((num - g.data()[k]).abs() <= 1e-8 * g.data()[k].abs().max(1.0));
        }
    }

    #[test]
    fn adam_first_step_closed_form() {
        let cfg = TrainConfig::default();
        for &g in &[1e-3, -0.5, 7.0] {
            let mut p = Param::new("w", Tensor::vector(vec![1.0f64]));
            p.grad.data_mut()[0] = g;
            let mut params = [&mut p];
            let mut st = AdamState::new(&params);
            adam_step(&mut params, &mut st, &cfg).unwrap();
            let step = 1.0 - p.value.data()[0];
            let expected = cfg.learning_rate * g / (g.abs() + cfg.epsilon);
            assert!((step - expected).abs() <= 1e-12 * expected.abs());
            assert!((step.abs() - cfg.learning_rate).abs() <= 1e-5 * cfg.learning_rate);
            assert_eq!(p.grad.data()[0], 0.0);
        }
    }

    #[test]
    fn adam_zero_gradient_is_a_no_op() {
        let mut p = Param::new("w", Tensor::vector(vec![0.25f64, -3.0]));
        let mut params = [&mut p];
        let mut st = AdamState::new(&params);
        for _ in 0..5 {
            adam_step(&mut params, &mut st, &TrainConfig::default()).unwrap();
        }
        assert_eq!(p.value.data(), &[0.25, -3.0]);
        assert!(st.m[0].data().iter().chain(st.v[0].data()).all(|&x| x == 0.0));
    }

    #[test]
    fn adam_overflow_is_reported() {
        let mut p = Param::new("w", Tensor::vector(vec![0.0f64]));
        let mut params = [&mut p];
        let mut st = AdamState::new(&params);
        st.step = u64::MAX;
        assert!(matches!(
            adam_step(&mut params, &mut st, &TrainConfig::default()),
            Err(Error::StepOverflow)
        ));
    }

    #[test]
    fn epoch_order_depends_on_seed_and_epoch() {
        assert_eq!(epoch_order(50, 7, 3), epoch_order(50, 7, 3));
        assert_ne!(epoch_order(50, 7, 3), epoch_order(50, 7, 4));
        assert_ne!(epoch_order(50, 7, 3), epoch_order(50, 8, 3));
        let mut o = epoch_order(50, 1, 0);
        o.sort_unstable();
        assert_eq!(o, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
